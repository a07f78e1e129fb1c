#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "nldiff/evolution.hpp"
#include "nldiff/stationary.hpp"

namespace nldiff::testing {

inline FiniteRandomWalkSpace edges(std::size_t n, const std::vector<Triplet>& e) {
    return FiniteRandomWalkSpace::from_edges(n, e);
}

inline FiniteRandomWalkSpace single_edge(double w = 1.0) { return edges(2, {{0, 1, w}}); }
inline FiniteRandomWalkSpace path3(double w12 = 1.0, double w23 = 1.0) { return edges(3, {{0, 1, w12}, {1, 2, w23}}); }
inline FiniteRandomWalkSpace triangle() { return edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}); }
inline FiniteRandomWalkSpace self_loop() { return edges(1, {{0, 0, 1.0}}); }

inline std::shared_ptr<const FiniteRandomWalkSpace> share(FiniteRandomWalkSpace s) {
    return std::make_shared<const FiniteRandomWalkSpace>(std::move(s));
}

// Connected random graph: a random spanning tree plus extra edges.
inline FiniteRandomWalkSpace random_space(std::mt19937_64& rng, std::size_t n, double extra = 0.3) {
    std::uniform_real_distribution<double> w(0.2, 2.0), u(0.0, 1.0);
    std::vector<Triplet> e;
    std::vector<char> linked(n * n, 0);
    for (std::size_t x = 1; x < n; ++x) {
        std::size_t y = std::uniform_int_distribution<std::size_t>(0, x - 1)(rng);
        e.push_back({x, y, w(rng)});
        linked[x * n + y] = linked[y * n + x] = 1;
    }
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = x + 1; y < n; ++y)
            if (!linked[x * n + y] && u(rng) < extra) e.push_back({x, y, w(rng)});
    if (n == 1) e.push_back({0, 0, 1.0});
    return edges(n, e);
}

inline MonotoneGraph random_graph(std::mt19937_64& rng) {
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0: return MonotoneGraph::identity();
    case 1: return MonotoneGraph::stefan(1.0);
    case 2: return MonotoneGraph::hele_shaw();
    case 3: return MonotoneGraph::power(2.0);
    default: return MonotoneGraph::obstacle(-1.0, 1.0, MonotoneGraph::identity());
    }
}

inline double random_p(std::mt19937_64& rng) {
    const double ps[] = {1.5, 2.0, 3.0};
    return ps[std::uniform_int_distribution<int>(0, 2)(rng)];
}

// Omega1 nonempty and Omega2 possibly empty, together covering all nodes.
inline DomainPartition random_partition(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::size_t> a, b;
    std::bernoulli_distribution coin(0.6);
    for (std::size_t x = 0; x < n; ++x) (x == 0 || coin(rng) ? a : b).push_back(x);
    return DomainPartition(NodeSet(a), NodeSet(b));
}

// Shift phi so its mass sits strictly inside the range interval.
inline void make_feasible(const StationaryProblem& p, Vec& phi, std::mt19937_64& rng) {
    const auto& space = *p.space;
    double total = space.measure(p.omega());
    auto [g0, g1] = p.gamma.range_bounds();
    auto [b0, b1] = p.beta.range_bounds();
    double m1 = space.measure(p.partition.omega1), m2 = space.measure(p.partition.omega2);
    double lo = (m1 > 0 ? m1 * g0 : 0.0) + (m2 > 0 ? m2 * b0 : 0.0);
    double hi = (m1 > 0 ? m1 * g1 : 0.0) + (m2 > 0 ? m2 * b1 : 0.0);
    std::uniform_real_distribution<double> frac(0.15, 0.85);
    double mass = 0.0;
    for (auto x : p.omega()) mass += space.nu(x) * phi[x];
    double target = mass;
    if (std::isfinite(lo) && std::isfinite(hi)) target = lo + frac(rng) * (hi - lo);
    else if (std::isfinite(lo)) target = std::max(mass, lo + frac(rng) * total);
    else if (std::isfinite(hi)) target = std::min(mass, hi - frac(rng) * total);
    for (auto x : p.omega()) phi[x] += (target - mass) / total;
}

inline StationaryProblem random_problem(std::mt19937_64& rng, std::size_t n) {
    StationaryProblem p;
    p.space = share(random_space(rng, n));
    p.partition = random_partition(rng, n);
    p.flux = LerayLionsFlux::p_laplacian(random_p(rng));
    p.gamma = random_graph(rng);
    p.beta = random_graph(rng);
    std::normal_distribution<double> g(0.0, 1.0);
    p.phi.assign(n, 0.0);
    for (auto& v : p.phi) v = g(rng);
    make_feasible(p, p.phi, rng);
    return p;
}

inline double sup_diff(const Vec& a, const Vec& b, const NodeSet& on) {
    double d = 0.0;
    for (auto x : on) d = std::max(d, std::abs(a[x] - b[x]));
    return d;
}

inline double mass(const FiniteRandomWalkSpace& s, const Vec& v, const NodeSet& on) {
    double m = 0.0;
    for (auto x : on) m += s.nu(x) * v[x];
    return m;
}

}
