#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace nldiff::oracle {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double a_p(const LerayLionsFlux& f, std::size_t x, std::size_t y, double r) {
    double w = f.kind() == LerayLionsFlux::Kind::Weighted ? 0.5 * (f.phi()[x] + f.phi()[y]) : 1.0;
    if (f.kind() == LerayLionsFlux::Kind::Custom) return f.value(x, y, r);
    if (r == 0.0) return 0.0;
    return w * std::copysign(std::pow(std::abs(r), f.p() - 1.0), r);
}

double da_p(const LerayLionsFlux& f, std::size_t x, std::size_t y, double r) {
    double w = f.kind() == LerayLionsFlux::Kind::Weighted ? 0.5 * (f.phi()[x] + f.phi()[y]) : 1.0;
    double a = std::max(std::abs(r), 1e-12);
    return w * (f.p() - 1.0) * std::pow(a, f.p() - 2.0);
}

struct Sys {
    const DenseInstance& inst;
    const StationaryProblem& p;
    std::vector<std::size_t> nodes;
    std::vector<std::vector<char>> pair;

    Sys(const DenseInstance& i, const StationaryProblem& pr) : inst(i), p(pr), nodes(pr.omega().ids()) {
        auto in2 = pr.partition.omega2.mask(i.n);
        bool q2 = pr.integration_set == IntegrationSet::Q2;
        pair.assign(i.n, std::vector<char>(i.n, 0));
        for (auto x : nodes)
            for (auto y : nodes) pair[x][y] = x != y && !(q2 && in2[x] && in2[y]);
    }

    double div(std::size_t x, const Vec& u) const {
        double s = 0.0;
        for (auto y : nodes)
            if (pair[x][y]) s += inst.m(long(x), long(y)) * a_p(p.flux, x, y, u[y] - u[x]);
        return s;
    }

    // subdifferential of the energy in coordinate x, divided by nu_x
    Interval sub(std::size_t x, const Vec& u) const {
        const auto& g = p.partition.omega1.contains(x) ? p.gamma : p.beta;
        auto [lo, hi] = g.domain();
        Interval val;
        if (u[x] < lo) val = {-inf, -inf};
        else if (u[x] > hi) val = {inf, inf};
        else val = g.values(u[x]);
        double shift = -p.phi[x] - p.lambda_scale * div(x, u);
        return {val.lo + shift, val.hi + shift};
    }
};

// sign of the subdifferential: -1 below the minimizer, +1 above, 0 inside
int side(const Interval& s) { return s.lo > 0 ? 1 : (s.hi < 0 ? -1 : 0); }

void nested(const Sys& sys, std::size_t level, Vec& u, int resolution) {
    const auto x = sys.nodes[level];
    auto eval = [&](double z) {
        u[x] = z;
        if (level + 1 < sys.nodes.size()) nested(sys, level + 1, u, resolution);
        return side(sys.sub(x, u));
    };
    const auto& g = sys.p.partition.omega1.contains(x) ? sys.p.gamma : sys.p.beta;
    for (const auto& seg : g.segments())
        if (seg.is_point() && eval(seg.at()) == 0) return;
    auto [dlo, dhi] = g.domain();
    // coarse scan for a bracket, widening geometrically
    double lo = std::isfinite(dlo) ? dlo : -1.0, hi = std::isfinite(dhi) ? dhi : 1.0;
    int slo = eval(lo), shi = eval(hi);
    for (int e = 0; e < 200 && slo > 0 && !std::isfinite(dlo); ++e) {
        hi = lo;
        lo *= 2.0;
        slo = eval(lo);
    }
    for (int e = 0; e < 200 && shi < 0 && !std::isfinite(dhi); ++e) {
        lo = hi;
        hi *= 2.0;
        shi = eval(hi);
    }
    if (slo == 0) {
        eval(lo);
        return;
    }
    if (shi == 0) {
        eval(hi);
        return;
    }
    double step = (hi - lo) / resolution;
    for (int i = 1; i < resolution; ++i) {
        double z = lo + step * i;
        int sz = eval(z);
        if (sz == 0) return;
        if (sz > 0) {
            hi = z;
            break;
        }
        lo = z;
    }
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi || hi - lo <= 1e-13 * (1.0 + std::abs(m))) break;
        int sm = eval(m);
        if (sm == 0) return;
        (sm > 0 ? hi : lo) = m;
    }
    eval(0.5 * (lo + hi));
}

double graph_value(const MonotoneGraph& g, double r, double& slope) {
    const auto& s = g.segments().front();
    slope = s.slope(r);
    return s.eval(r);
}

}

DenseInstance DenseInstance::from(const FiniteRandomWalkSpace& space) {
    DenseInstance d;
    d.n = space.node_count();
    d.m = Eigen::MatrixXd(space.kernel());
    d.nu = Eigen::Map<const Eigen::VectorXd>(space.nu().data(), long(d.n));
    return d;
}

SolutionPair dense_gp_oracle(const DenseInstance& inst, const StationaryProblem& p, int grid_resolution,
                             std::uint64_t seed) {
    if (inst.n > 8) throw Error(ErrorKind::TooLarge, "dense oracle handles at most 8 nodes");
    Sys sys(inst, p);
    const auto k = sys.nodes.size();
    Vec u(inst.n, 0.0);
    SolutionPair out;
    if (k <= 3) {
        nested(sys, 0, u, grid_resolution);
        out.method = "nested-bisection";
    } else {
        bool smooth = p.gamma.is_strictly_increasing_surjective() &&
                      (p.partition.omega2.empty() || p.beta.is_strictly_increasing_surjective());
        if (!smooth) throw Error(ErrorKind::TooLarge, "more than three unknowns need strictly increasing graphs");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> start(-2.0, 2.0);
        double best = inf;
        Vec best_u = u;
        for (int s = 0; s < 16; ++s) {
            Vec w(inst.n, 0.0);
            for (auto x : sys.nodes) w[x] = s == 0 ? 0.0 : start(rng);
            auto resid = [&](const Vec& z, Eigen::VectorXd& f) {
                f.resize(long(k));
                for (std::size_t i = 0; i < k; ++i) {
                    auto x = sys.nodes[i];
                    double sl;
                    f[long(i)] = graph_value(p.graph_at(x), z[x], sl) - p.lambda_scale * sys.div(x, z) - p.phi[x];
                }
                return f.cwiseAbs().maxCoeff();
            };
            Eigen::VectorXd f;
            double r = resid(w, f);
            for (int it = 0; it < 200 && r > 1e-14 * (1.0 + std::abs(p.phi[sys.nodes[0]])); ++it) {
                Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(long(k), long(k));
                for (std::size_t i = 0; i < k; ++i) {
                    auto x = sys.nodes[i];
                    double sl;
                    graph_value(p.graph_at(x), w[x], sl);
                    jac(long(i), long(i)) += sl;
                    for (std::size_t j = 0; j < k; ++j) {
                        auto y = sys.nodes[j];
                        if (!sys.pair[x][y]) continue;
                        double d = p.lambda_scale * inst.m(long(x), long(y)) * da_p(p.flux, x, y, w[y] - w[x]);
                        jac(long(i), long(i)) += d;
                        jac(long(i), long(j)) -= d;
                    }
                }
                Eigen::VectorXd step = jac.fullPivLu().solve(-f);
                double t = 1.0;
                Vec trial = w;
                Eigen::VectorXd ft;
                double rt = inf;
                for (int b = 0; b < 60; ++b, t *= 0.5) {
                    for (std::size_t i = 0; i < k; ++i) trial[sys.nodes[i]] = w[sys.nodes[i]] + t * step[long(i)];
                    rt = resid(trial, ft);
                    if (rt < r) break;
                }
                if (!(rt < r)) break;
                w = trial;
                f = ft;
                r = rt;
            }
            if (r < best) {
                best = r;
                best_u = w;
            }
        }
        u = best_u;
        out.method = "multistart-newton";
    }
    out.u = u;
    out.v.assign(inst.n, 0.0);
    for (auto x : sys.nodes) {
        double v = p.phi[x] + p.lambda_scale * sys.div(x, u);
        auto vals = p.graph_at(x).values(u[x]);
        out.v[x] = vals.empty() ? v : vals.clamp(v);
        out.residual_inf = std::max(out.residual_inf, std::abs(out.v[x] - v));
    }
    return out;
}

Trajectory linear_ode(const Eigen::VectorXd& nu, const Eigen::MatrixXd& a, const Eigen::VectorXd& v0,
                      const Eigen::VectorXd& f, const std::vector<double>& times) {
    Eigen::VectorXd s = nu.cwiseSqrt(), si = s.cwiseInverse();
    Eigen::MatrixXd sym = si.asDiagonal() * a * si.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
    const auto& q = es.eigenvectors();
    const auto& lam = es.eigenvalues();
    Eigen::VectorXd c0 = q.transpose() * (s.asDiagonal() * v0);
    Eigen::VectorXd cf = q.transpose() * (s.asDiagonal() * f);
    Trajectory tr;
    for (double t : times) {
        Eigen::VectorXd c(c0.size());
        for (long i = 0; i < c.size(); ++i) {
            double l = lam[i];
            double growth = std::exp(l * t);
            double integ = std::abs(l * t) < 1e-12 ? t : std::expm1(l * t) / l;
            c[i] = growth * c0[i] + integ * cf[i];
        }
        Eigen::VectorXd v = si.asDiagonal() * (q * c);
        tr.times.push_back(t);
        tr.states.emplace_back(v.data(), v.data() + v.size());
    }
    return tr;
}

Trajectory linear_evolution_oracle(const DenseInstance& inst, const EvolutionProblem& e,
                                   const std::vector<double>& times) {
    auto is_identity = [](const MonotoneGraph& g) {
        const auto& s = g.segments();
        return s.size() == 1 && !s[0].is_point() && s[0].offset == 0.0 && s[0].coef == 1.0 && s[0].expo == 1.0;
    };
    if (e.flux.p() != 2.0 || e.flux.kind() == LerayLionsFlux::Kind::Custom)
        throw Error(ErrorKind::NonlinearCase, "flux is not linear");
    if (e.mode != EvolutionMode::Dynamical) throw Error(ErrorKind::NonlinearCase, "only the dynamical mode is linear ODE");
    if ((!e.partition.omega1.empty() && !is_identity(e.gamma)) || (!e.partition.omega2.empty() && !is_identity(e.beta)))
        throw Error(ErrorKind::NonlinearCase, "graphs must be the identity");
    auto f0 = e.source.at(0.0);
    for (double t : {0.25, 0.5, 1.0, 2.0})
        if (e.source.at(t * e.horizon) != f0) throw Error(ErrorKind::NonlinearCase, "source must be constant in time");
    auto nodes = e.partition.omega().ids();
    const long k = long(nodes.size());
    auto in2 = e.partition.omega2.mask(inst.n);
    bool q2 = e.integration_set == IntegrationSet::Q2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd nu(k), v0(k), f(k);
    for (long i = 0; i < k; ++i) {
        auto x = nodes[std::size_t(i)];
        nu[i] = inst.nu[long(x)];
        v0[i] = e.partition.omega1.contains(x) ? e.v0[x] : e.w0[x];
        f[i] = f0[x];
        for (long j = 0; j < k; ++j) {
            auto y = nodes[std::size_t(j)];
            if (x == y || (q2 && in2[x] && in2[y])) continue;
            double w = inst.nu[long(x)] * inst.m(long(x), long(y));
            if (e.flux.kind() == LerayLionsFlux::Kind::Weighted) w *= 0.5 * (e.flux.phi()[x] + e.flux.phi()[y]);
            a(i, j) += w;
            a(i, i) -= w;
        }
    }
    auto local = linear_ode(nu, a, v0, f, times);
    Trajectory tr;
    tr.times = local.times;
    for (const auto& s : local.states) {
        Vec full(inst.n, 0.0);
        for (long i = 0; i < k; ++i) full[nodes[std::size_t(i)]] = s[std::size_t(i)];
        tr.states.push_back(std::move(full));
    }
    return tr;
}

Eigen::MatrixXd schur_dtn_oracle(const DenseInstance& inst, const NodeSet& w) {
    std::vector<std::size_t> bdry;
    for (std::size_t x = 0; x < inst.n; ++x) {
        if (w.contains(x)) continue;
        double mass = 0.0;
        for (auto y : w) mass += inst.m(long(x), long(y));
        if (mass > 0.0) bdry.push_back(x);
    }
    std::vector<std::size_t> closure(w.begin(), w.end());
    closure.insert(closure.end(), bdry.begin(), bdry.end());
    const long ni = long(w.size()), nb = long(bdry.size()), nc = ni + nb;
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nc, nc);
    for (long i = 0; i < nc; ++i)
        for (long j = 0; j < nc; ++j) {
            if (i == j) continue;
            auto x = closure[std::size_t(i)], y = closure[std::size_t(j)];
            double wxy = inst.nu[long(x)] * inst.m(long(x), long(y));
            lap(i, j) -= wxy;
            lap(i, i) += wxy;
        }
    Eigen::MatrixXd lbb = lap.bottomRightCorner(nb, nb);
    if (ni == 0) return lbb;
    Eigen::MatrixXd lww = lap.topLeftCorner(ni, ni);
    Eigen::MatrixXd lwb = lap.topRightCorner(ni, nb);
    Eigen::MatrixXd lbw = lap.bottomLeftCorner(nb, ni);
    return lbb - lbw * lww.fullPivLu().solve(lwb);
}

}
