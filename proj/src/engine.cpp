#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace nldiff::detail {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kDenseLimit = 300;

struct Residual {
    Vec f;
    double worst = 0.0;   // max |f|
    double scaled = 0.0;  // max |f| / allowance
};

}

Network::Network(const FiniteRandomWalkSpace& s, const LerayLionsFlux& f, const NodeSet& omega,
                 const CouplingSet& q, double lam)
    : space(&s), flux(&f), lambda(lam), nodes(omega.ids()), adj(s.node_count()) {
    auto in = omega.mask(s.node_count());
    auto in2 = q.omega2_mask(s.node_count());
    for (auto x : nodes)
        s.for_each_neighbor(x, [&](std::size_t y, double m) {
            if (y != x && in[y] && m > 0.0 && !(q.is_q2() && in2[x] && in2[y])) adj[x].push_back({y, m});
        });
}

double rounding_floor(const Network& net, std::size_t x, const Vec& u) {
    double s = 0.0;
    for (const auto& c : net.adj[x]) {
        double r = u[c.y] - u[x], h = 4.0 * kEps * (std::abs(u[x]) + std::abs(u[c.y]));
        s += c.m * std::abs(net.flux->value(x, c.y, r + h) - net.flux->value(x, c.y, r - h));
    }
    return net.lambda * s;
}

double Network::div(std::size_t x, const Vec& u) const {
    double s = 0.0;
    for (const auto& c : adj[x]) s += c.m * flux->value(x, c.y, u[c.y] - u[x]);
    return s;
}

namespace {

void evaluate(const Network& net, const std::vector<std::size_t>& free, const Vec& u, const Law& law,
              const Vec& rhs, double tol, Residual& out) {
    out.f.resize(free.size());
    out.worst = 0.0;
    out.scaled = 0.0;
    for (std::size_t i = 0; i < free.size(); ++i) {
        auto x = free[i];
        double val, sl;
        law(x, u[x], val, sl);
        double d = 0.0, mag = std::abs(val) + std::abs(sl * u[x]) + std::abs(rhs[x]);
        for (const auto& c : net.adj[x]) {
            double r = u[c.y] - u[x];
            double a = net.flux->value(x, c.y, r);
            d += c.m * a;
            mag += net.lambda * c.m * (std::abs(a) + std::abs(net.flux->slope(x, c.y, r)) * (std::abs(u[x]) + std::abs(u[c.y])));
        }
        double f = val - net.lambda * d - rhs[x];
        out.f[i] = f;
        double allow = std::max(tol, 64.0 * kEps * mag + rounding_floor(net, x, u));
        out.worst = std::max(out.worst, std::abs(f));
        out.scaled = std::max(out.scaled, std::abs(f) / allow);
        if (!std::isfinite(f)) out.scaled = out.worst = std::numeric_limits<double>::infinity();
    }
}

bool solve_step(const Network& net, const std::vector<std::size_t>& free, const std::vector<long>& pos,
                const Vec& u, const Law& law, const Residual& res, double reg_scale, bool secant, Vec& d) {
    const auto nf = free.size();
    const auto dim = static_cast<Eigen::Index>(nf);
    Eigen::VectorXd diag(dim), g(dim);
    std::vector<Eigen::Triplet<double>> off;
    for (std::size_t i = 0; i < nf; ++i) {
        auto x = free[i];
        double val, sl;
        law(x, u[x], val, sl);
        double nu = net.space->nu(x);
        double h = nu * sl;
        for (const auto& c : net.adj[x]) {
            double r = u[c.y] - u[x];
            double sl_e = net.flux->slope(x, c.y, r);
            if (secant && r != 0.0) sl_e = std::max(sl_e, net.flux->value(x, c.y, r) / r);
            double a = net.lambda * nu * c.m * sl_e;
            h += a;
            if (pos[c.y] >= 0) off.emplace_back(long(i), long(pos[c.y]), -a);
        }
        diag[long(i)] = h;
        g[long(i)] = nu * res.f[i];
    }
    double dmax = diag.cwiseAbs().maxCoeff();
    Eigen::VectorXd step;
    for (std::size_t i = 0; i < nf; ++i)
        diag[long(i)] += reg_scale * (1e-13 * dmax + 1e-13 * net.space->nu(free[i]));
    if (nf <= kDenseLimit) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        for (const auto& t : off) h(t.row(), t.col()) += t.value();
        h.diagonal() += diag;
        step = h.ldlt().solve(-g);
    } else {
        for (std::size_t i = 0; i < nf; ++i) off.emplace_back(long(i), long(i), diag[long(i)]);
        Eigen::SparseMatrix<double> h(dim, dim);
        h.setFromTriplets(off.begin(), off.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(h);
        if (ldlt.info() != Eigen::Success) return false;
        step = ldlt.solve(-g);
    }
    d.assign(step.data(), step.data() + nf);
    return std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); });
}

double directional(const Network& net, const std::vector<std::size_t>& free, const Residual& r, const Vec& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < free.size(); ++i) s += net.space->nu(free[i]) * r.f[i] * d[i];
    return s;
}

}

Outcome newton(const Network& net, const std::vector<std::size_t>& free, Vec& u, const Law& law, const Vec& rhs,
               double tol, int max_iter) {
    Outcome out;
    if (free.empty()) {
        out.converged = true;
        return out;
    }
    std::vector<long> pos(net.space->node_count(), -1);
    for (std::size_t i = 0; i < free.size(); ++i) pos[free[i]] = long(i);

    Residual res, trial_res;
    evaluate(net, free, u, law, rhs, tol, res);
    Vec d, trial = u;
    int stall = 0;
    bool secant = false;
    for (int it = 0; it < max_iter; ++it) {
        out.residual = res.worst;
        if (res.scaled <= 1.0) {
            out.converged = true;
            return out;
        }
        out.iterations = it + 1;
        bool ok = false;
        for (double reg = 1.0; reg <= 1e9 && !ok; reg *= 1e3) ok = solve_step(net, free, pos, u, law, res, reg, secant, d);
        if (!ok) break;
        double d0 = directional(net, free, res, d);
        if (!(d0 < 0.0)) {
            for (std::size_t i = 0; i < free.size(); ++i) d[i] = -res.f[i];
            d0 = directional(net, free, res, d);
            if (!(d0 < 0.0)) break;
        }
        auto at = [&](double t) {
            trial = u;
            for (std::size_t i = 0; i < free.size(); ++i) trial[free[i]] = u[free[i]] + t * d[i];
            evaluate(net, free, trial, law, rhs, tol, trial_res);
            return directional(net, free, trial_res, d);
        };
        double t = 1.0;
        double g1 = at(1.0);
        if (!(g1 <= 0.0) && !(trial_res.worst <= 0.5 * res.worst)) {
            // bracket [a, b] with phi'(a) < 0 < phi'(b); Illinois iteration
            double a = 0.0, ga = d0, b = 1.0, gb = std::isfinite(g1) ? g1 : std::numeric_limits<double>::infinity();
            int side = 0;
            double best_t = 0.0;
            for (int ls = 0; ls < 100; ++ls) {
                double c = std::isfinite(gb) ? (a * gb - b * ga) / (gb - ga) : 0.5 * (a + b);
                if (!(c > a && c < b)) c = 0.5 * (a + b);
                double gc = at(c);
                if (!std::isfinite(gc)) {
                    b = c;
                    gb = std::numeric_limits<double>::infinity();
                    continue;
                }
                if (gc <= 0.0) {
                    a = c;
                    ga = gc;
                    best_t = c;
                    if (side == -1) gb *= 0.5;
                    side = -1;
                    if (gc >= -0.1 * std::abs(d0)) break;
                } else {
                    b = c;
                    gb = gc;
                    if (side == 1) ga *= 0.5;
                    side = 1;
                }
                if (b - a <= 1e-15 * b) break;
            }
            t = best_t;
            if (t == 0.0) break;
            at(t);
        }
        double moved = 0.0, size = 0.0;
        for (std::size_t i = 0; i < free.size(); ++i) {
            moved = std::max(moved, std::abs(t * d[i]));
            size = std::max(size, std::abs(u[free[i]]));
        }
        secant = !(trial_res.worst <= 0.5 * res.worst);
        u.swap(trial);
        std::swap(res, trial_res);
        if (moved <= 4 * kEps * (1.0 + size)) {
            if (++stall >= 3) break;
        } else {
            stall = 0;
        }
    }
    out.residual = res.worst;
    out.converged = res.scaled <= 1.0;
    return out;
}

namespace {

// Root of a nondecreasing scalar function, starting from z.
double scalar_root(const std::function<double(double)>& h, double z) {
    double hz = h(z);
    if (hz == 0.0) return z;
    double step = std::max(1.0, std::abs(z)) * 1e-3;
    double lo = z, hi = z;
    bool found = false;
    for (int e = 0; e < 2000 && !found; ++e) {
        double cand = hz > 0 ? z - step : z + step;
        double hc = h(cand);
        if (hz > 0 ? hc <= 0.0 : hc >= 0.0) {
            lo = std::min(z, cand);
            hi = std::max(z, cand);
            found = true;
        }
        step *= 2.0;
        if (!std::isfinite(cand)) break;
    }
    if (!found) return z;
    for (int b = 0; b < 200; ++b) {
        double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        (h(m) > 0.0 ? hi : lo) = m;
    }
    return std::abs(h(lo)) < std::abs(h(hi)) ? lo : hi;
}

}

Outcome gauss_seidel(const Network& net, const std::vector<std::size_t>& free, Vec& u, const Law& law,
                     const Vec& rhs, double tol, int max_sweeps) {
    Outcome out;
    Residual res;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        evaluate(net, free, u, law, rhs, tol, res);
        out.residual = res.worst;
        out.iterations = sweep;
        if (res.scaled <= 1.0) {
            out.converged = true;
            return out;
        }
        for (auto x : free) {
            auto h = [&](double z) {
                double val, sl;
                law(x, z, val, sl);
                double d = 0.0;
                for (const auto& c : net.adj[x]) d += c.m * net.flux->value(x, c.y, u[c.y] - z);
                return val - net.lambda * d - rhs[x];
            };
            u[x] = scalar_root(h, u[x]);
        }
    }
    evaluate(net, free, u, law, rhs, tol, res);
    out.residual = res.worst;
    out.converged = res.scaled <= 1.0;
    return out;
}

}
