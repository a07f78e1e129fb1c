#include "nldiff/flux.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace nldiff {

namespace {

constexpr double kSlopeFloor = 1e-9;

double power_flux(double p, double r) {
    if (r == 0.0) return 0.0;
    if (p == 2.0) return r;
    return std::copysign(std::pow(std::abs(r), p - 1.0), r);
}

double power_slope(double p, double r) {
    if (p == 2.0) return 1.0;
    double a = std::abs(r);
    if (p < 2.0) a = std::max(a, kSlopeFloor);
    return (p - 1.0) * std::pow(a, p - 2.0);
}

void check_p(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidExponent, "p must satisfy 1 < p < inf");
}

void check_u(std::span<const double> u, std::size_t n, const NodeSet& need) {
    if (u.size() != n) throw Error(ErrorKind::MissingValues, "u must have one entry per node");
    for (auto x : need)
        if (!std::isfinite(u[x])) throw Error(ErrorKind::MissingValues, "u undefined at node " + std::to_string(x));
}

Vec boundary_flux(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
                  const NodeSet& w, const NodeSet& targets) {
    auto bdry = m_boundary(space, w);
    check_u(u, space.node_count(), bdry.unite(targets));
    auto in = targets.mask(space.node_count());
    Vec out;
    out.reserve(bdry.size());
    for (auto x : bdry) {
        double s = 0.0;
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (in[y]) s += mxy * flux.value(x, y, u[y] - u[x]);
        });
        out.push_back(-s);
    }
    return out;
}

}

LerayLionsFlux LerayLionsFlux::p_laplacian(double p) {
    check_p(p);
    LerayLionsFlux f;
    f.p_ = p;
    return f;
}

LerayLionsFlux LerayLionsFlux::weighted(double p, Vec phi) {
    check_p(p);
    if (phi.empty()) throw Error(ErrorKind::WeightOutOfRange, "phi is empty");
    for (double v : phi)
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::WeightOutOfRange, "phi must be positive and finite");
    LerayLionsFlux f;
    f.p_ = p;
    f.kind_ = Kind::Weighted;
    f.c_p_ = *std::min_element(phi.begin(), phi.end());
    f.C_p_ = *std::max_element(phi.begin(), phi.end());
    f.phi_ = std::move(phi);
    return f;
}

LerayLionsFlux LerayLionsFlux::custom(double p, Evaluator a, double c_p, double C_p, std::size_t node_count,
                                      Evaluator derivative, std::uint64_t seed) {
    check_p(p);
    if (!a || node_count == 0) throw Error(ErrorKind::InvalidParameter, "custom flux needs an evaluator");
    if (!(c_p > 0.0) || !(C_p > 0.0)) throw Error(ErrorKind::InvalidParameter, "growth constants must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> node(0, node_count - 1);
    std::uniform_real_distribution<double> expo(-4.0, 2.0), coin(0.0, 1.0);
    auto sample = [&] {
        double r = std::pow(10.0, expo(rng));
        return coin(rng) < 0.5 ? -r : r;
    };
    for (int t = 0; t < 1000; ++t) {
        auto x = node(rng), y = node(rng);
        double r = sample(), s = sample();
        double ar = a(x, y, r), as = a(x, y, s);
        double scale = 1e-12 * (1.0 + std::abs(ar));
        auto fail = [&](const char* what) {
            throw Error(ErrorKind::InvalidParameter, std::string("custom flux violates ") + what);
        };
        if (!std::isfinite(ar)) fail("finiteness");
        if (std::abs(ar + a(y, x, -r)) > scale) fail("antisymmetry");
        if (r != s && !((ar - as) * (r - s) > 0.0)) fail("strict monotonicity");
        if (std::abs(ar) > C_p * (1.0 + std::pow(std::abs(r), p - 1.0)) * (1 + 1e-12)) fail("growth");
        if (ar * r < c_p * std::pow(std::abs(r), p) * (1 - 1e-12)) fail("coercivity");
        if (std::abs(a(x, y, 0.0)) > 0.0) fail("a(x,y,0) = 0");
    }
    LerayLionsFlux f;
    f.p_ = p;
    f.kind_ = Kind::Custom;
    f.c_p_ = c_p;
    f.C_p_ = C_p;
    f.eval_ = std::move(a);
    f.deriv_ = std::move(derivative);
    return f;
}

double LerayLionsFlux::value(std::size_t x, std::size_t y, double r) const {
    switch (kind_) {
    case Kind::PLaplacian: return power_flux(p_, r);
    case Kind::Weighted: return 0.5 * (phi_[x] + phi_[y]) * power_flux(p_, r);
    case Kind::Custom: return eval_(x, y, r);
    }
    return 0.0;
}

double LerayLionsFlux::slope(std::size_t x, std::size_t y, double r) const {
    switch (kind_) {
    case Kind::PLaplacian: return power_slope(p_, r);
    case Kind::Weighted: return 0.5 * (phi_[x] + phi_[y]) * power_slope(p_, r);
    case Kind::Custom: {
        if (deriv_) return deriv_(x, y, r);
        double h = 1e-6 * std::max(std::abs(r), 1e-3);
        return (eval_(x, y, r + h) - eval_(x, y, r - h)) / (2 * h);
    }
    }
    return 0.0;
}

Vec divergence(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
               const NodeSet& omega, const CouplingSet& q) {
    const auto n = space.node_count();
    omega.check_range(n);
    check_u(u, n, omega);
    auto in = omega.mask(n);
    auto in2 = q.omega2_mask(n);
    Vec out(n, 0.0);
    for (auto x : omega) {
        double s = 0.0;
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (in[y] && !(q.is_q2() && in2[x] && in2[y])) s += mxy * flux.value(x, y, u[y] - u[x]);
        });
        out[x] = s;
    }
    return out;
}

Vec neumann_n1(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
               const NodeSet& w) {
    return boundary_flux(space, flux, u, w, m_closure(space, w));
}

Vec neumann_n2(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
               const NodeSet& w) {
    return boundary_flux(space, flux, u, w, w);
}

double flux_pairing(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
                    std::span<const double> w, const NodeSet& omega, const CouplingSet& q) {
    const auto n = space.node_count();
    check_u(u, n, omega);
    check_u(w, n, omega);
    auto in = omega.mask(n);
    auto in2 = q.omega2_mask(n);
    double rhs = 0.0;
    for (auto x : omega)
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (in[y] && !(q.is_q2() && in2[x] && in2[y]))
                rhs += space.nu(x) * mxy * flux.value(x, y, u[y] - u[x]) * (w[y] - w[x]);
        });
    return 0.5 * rhs;
}

std::pair<double, double> pairing_identity(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux,
                                           std::span<const double> u, std::span<const double> w,
                                           const NodeSet& omega, const CouplingSet& q) {
    auto div = divergence(space, flux, u, omega, q);
    check_u(w, space.node_count(), omega);
    double lhs = 0.0;
    for (auto x : omega) lhs -= space.nu(x) * div[x] * w[x];
    return {lhs, flux_pairing(space, flux, u, w, omega, q)};
}

}
