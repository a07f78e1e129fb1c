#include "nldiff/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "engine.hpp"

namespace nldiff {

namespace {

double max_abs_on(const Vec& v, const NodeSet& s) {
    double m = 0.0;
    for (auto x : s) m = std::max(m, std::abs(v[x]));
    return m;
}

// nu(A) * bound, with the empty set contributing nothing
double weighted_bound(double measure, double bound) { return measure == 0.0 ? 0.0 : measure * bound; }

struct Splits {
    MonotoneGraph plus;
    MonotoneGraph minus;
};

struct Context {
    const StationaryProblem& problem;
    NodeSet omega;
    std::vector<char> in1;
    detail::Network net;
    Splits s1, s2;
    double phi_scale;

    explicit Context(const StationaryProblem& p)
        : problem(p),
          omega(p.omega()),
          in1(p.partition.omega1.mask(p.space->node_count())),
          net(*p.space, p.flux, omega, p.coupling(), p.lambda_scale),
          s1{p.gamma.split_plus(), p.gamma.split_minus()},
          s2{p.beta.split_plus(), p.beta.split_minus()},
          phi_scale(1.0 + max_abs_on(p.phi, omega)) {}

    const MonotoneGraph& graph(std::size_t x) const { return in1[x] ? problem.gamma : problem.beta; }
    const Splits& splits(std::size_t x) const { return in1[x] ? s1 : s2; }
};

void check_connected(const StationaryProblem& p) {
    const auto& s = *p.space;
    if (p.integration_set == IntegrationSet::Q1) {
        if (!is_m_connected(s, p.omega())) throw Error(ErrorKind::NotConnected, "Omega is not m-connected");
        return;
    }
    const auto& o1 = p.partition.omega1;
    if (o1.empty() || !is_m_connected(s, o1))
        throw Error(ErrorKind::NotConnected, "Q2 variant needs an m-connected omega1");
    for (auto x : p.partition.omega2)
        if (interaction(s, NodeSet{x}, o1) <= 0.0)
            throw Error(ErrorKind::NotConnected, "node " + std::to_string(x) + " of omega2 does not see omega1");
}

double penalty(double u, double p, long n, long k, double& slope) {
    if (u == 0.0) {
        slope = p < 2.0 ? 1e9 : (p == 2.0 ? 1.0 / double(std::min(n, k)) : 0.0);
        return 0.0;
    }
    double c = u > 0 ? 1.0 / double(n) : 1.0 / double(k);
    double a = std::abs(u);
    slope = c * (p - 1.0) * std::pow(std::max(a, 1e-9), p - 2.0);
    if (p == 2.0) return c * u;
    return std::copysign(c * std::pow(a, p - 1.0), u);
}

double truncate(double y, double& slope, double K) {
    if (y > K) {
        slope = 0.0;
        return K;
    }
    if (y < -K) {
        slope = 0.0;
        return -K;
    }
    return y;
}

detail::Law approximate_law(const Context& c, long n, long k, double K) {
    const double p = c.problem.flux.p();
    return [&c, n, k, K, p](std::size_t x, double u, double& val, double& slope) {
        const auto& s = c.splits(x);
        double sp = s.plus.yosida_slope(double(k), u);
        double yp = truncate(s.plus.yosida(double(k), u), sp, K);
        double sm = s.minus.yosida_slope(double(n), u);
        double ym = truncate(s.minus.yosida(double(n), u), sm, K);
        double spen;
        double pen = penalty(u, p, n, k, spen);
        val = yp + ym + pen;
        slope = sp + sm + spen;
    };
}

Vec clamped_phi(const StationaryProblem& p, const NodeSet& omega, long n, long k) {
    Vec f(p.space->node_count(), 0.0);
    for (auto x : omega) f[x] = std::clamp(p.phi[x], -double(k), double(n));
    return f;
}

Vec run_approximate(const Context& c, long n, long k, double K, Vec u, int& iters) {
    auto phi = clamped_phi(c.problem, c.omega, n, k);
    auto law = approximate_law(c, n, k, K);
    double tol = 1e-11 * (1.0 + max_abs_on(phi, c.omega));
    auto o = detail::newton(c.net, c.omega.ids(), u, law, phi, tol, 80);
    iters += o.iterations;
    if (!o.converged) {
        auto g = detail::gauss_seidel(c.net, c.omega.ids(), u, law, phi, tol, 3000);
        iters += g.iterations;
        if (!g.converged)
            throw Error(ErrorKind::SolverDiverged, "approximate problem n=" + std::to_string(n) + " k=" +
                                                       std::to_string(k) + " stalled at residual " +
                                                       detail::sci(std::min(o.residual, g.residual)) + " (tol " + detail::sci(tol) + ")");
    }
    return u;
}

// Active-set solve of the limit system.  Each node is pinned at a
// breakpoint (u fixed, v read off the equation) or free on a piece.
bool polish(const Context& c, std::vector<std::size_t> seg, Vec u, double tol, SolutionPair& out, int& iters) {
    const auto& p = c.problem;
    const auto n = p.space->node_count();
    std::set<std::vector<std::size_t>> seen;
    Vec v(n, 0.0);
    const double inner = std::max(1e-3 * tol, 1e-14) * c.phi_scale;
    for (int round = 0; round < 60; ++round) {
        if (!seen.insert(seg).second) return false;
        std::vector<std::size_t> free;
        for (auto x : c.omega) {
            const auto& s = c.graph(x).segments()[seg[x]];
            if (s.is_point()) {
                u[x] = s.at();
            } else {
                free.push_back(x);
                if (!std::isfinite(u[x])) u[x] = 0.0;
                u[x] = std::clamp(u[x], s.lo, s.hi);
            }
        }
        auto law = [&c, &seg](std::size_t x, double r, double& val, double& slope) {
            const auto& s = c.graph(x).segments()[seg[x]];
            val = s.eval(r);
            slope = std::min(s.slope(r), 1e10);
        };
        auto o = detail::newton(c.net, free, u, law, p.phi, inner, 80);
        iters += o.iterations;
        bool changed = false;
        for (auto x : c.omega) {
            const auto& segs = c.graph(x).segments();
            const auto& s = segs[seg[x]];
            double dv = 0.01 * tol;
            if (s.is_point()) {
                v[x] = p.phi[x] + p.lambda_scale * c.net.div(x, u);
                if (v[x] > s.vhi + dv * (1 + std::abs(v[x])) && seg[x] + 1 < segs.size()) {
                    seg[x] += 1;
                    changed = true;
                } else if (v[x] < s.vlo - dv * (1 + std::abs(v[x])) && seg[x] > 0) {
                    seg[x] -= 1;
                    changed = true;
                }
            } else {
                v[x] = s.eval(u[x]);
                double du = dv * (1 + std::abs(u[x]));
                auto degenerate = [&](std::size_t i) {
                    return segs[i].is_point() && segs[i].vlo == segs[i].vhi;
                };
                if (u[x] > s.hi + du) {
                    seg[x] += 1;
                    if (degenerate(seg[x]) && seg[x] + 1 < segs.size()) seg[x] += 1;
                    changed = true;
                } else if (u[x] < s.lo - du) {
                    seg[x] -= 1;
                    if (degenerate(seg[x]) && seg[x] > 0) seg[x] -= 1;
                    changed = true;
                }
            }
        }
        if (changed) continue;
        if (!o.converged) return false;
        for (auto x : c.omega) {
            const auto& s = c.graph(x).segments()[seg[x]];
            if (s.is_point()) v[x] = std::clamp(v[x], s.vlo, s.vhi);
        }
        out.u = u;
        out.v = v;
        return true;
    }
    return false;
}

std::vector<std::size_t> classify(const Context& c, const Vec& u, double mu) {
    std::vector<std::size_t> seg(c.problem.space->node_count(), 0);
    for (auto x : c.omega) {
        const auto& g = c.graph(x);
        long at = mu > 0.0 ? -1 : g.locate(u[x]);
        seg[x] = at >= 0 ? std::size_t(at) : g.resolvent_segment(mu > 0.0 ? mu : 1e-12, u[x]);
    }
    return seg;
}

double residual_inf(const Context& c, const Vec& u, const Vec& v) {
    double r = 0.0;
    for (auto x : c.omega)
        r = std::max(r, std::abs(v[x] - c.problem.lambda_scale * c.net.div(x, u) - c.problem.phi[x]));
    return r;
}

}

CouplingSet StationaryProblem::coupling() const {
    return integration_set == IntegrationSet::Q2 ? CouplingSet::q2(partition.omega2) : CouplingSet::q1();
}

const MonotoneGraph& StationaryProblem::graph_at(std::size_t x) const {
    return partition.omega1.contains(x) ? gamma : beta;
}

void StationaryProblem::validate() const {
    if (!space) throw Error(ErrorKind::InvalidParameter, "problem has no space");
    const auto n = space->node_count();
    partition.omega1.check_range(n);
    partition.omega2.check_range(n);
    if (phi.size() != n) throw Error(ErrorKind::MissingValues, "phi must have one entry per node");
    for (auto x : omega())
        if (!std::isfinite(phi[x])) throw Error(ErrorKind::InvalidParameter, "phi must be finite on Omega");
    if (!(lambda_scale > 0.0) || !std::isfinite(lambda_scale))
        throw Error(ErrorKind::InvalidParameter, "lambda_scale must be positive");
}

RangeReport check_range(const StationaryProblem& p) {
    p.validate();
    RangeReport r;
    const auto& s = *p.space;
    double m1 = s.measure(p.partition.omega1), m2 = s.measure(p.partition.omega2);
    auto [g0, g1] = p.gamma.range_bounds();
    auto [b0, b1] = p.beta.range_bounds();
    r.r_minus = weighted_bound(m1, g0) + weighted_bound(m2, b0);
    r.r_plus = weighted_bound(m1, g1) + weighted_bound(m2, b1);
    for (auto x : p.omega()) r.integral_phi += s.nu(x) * p.phi[x];
    double eps = 1e-10 * (1.0 + std::abs(r.integral_phi));
    r.margin = std::min(r.integral_phi - r.r_minus, r.r_plus - r.integral_phi);
    r.feasible = r.margin >= eps;
    return r;
}

double truncation_level(const StationaryProblem& p, long n, long k) {
    auto omega = p.omega();
    auto phi = clamped_phi(p, omega, n, k);
    double M = std::pow(double(k + n) * max_abs_on(phi, omega), 1.0 / (p.flux.p() - 1.0));
    double top = M;
    for (const auto* g : {&p.gamma, &p.beta}) {
        top = std::max(top, std::abs(g->split_plus().yosida(double(k), M)));
        top = std::max(top, std::abs(g->split_minus().yosida(double(n), -M)));
    }
    return std::max(2.0 * top, 1.0);
}

Vec solve_approximate(const StationaryProblem& p, long n, long k, double K, const Vec& start, int* iterations) {
    p.validate();
    if (n < 1 || k < 1) throw Error(ErrorKind::InvalidParameter, "n and k must be at least 1");
    auto omega = p.omega();
    auto phi = clamped_phi(p, omega, n, k);
    double M = std::pow(double(k + n) * max_abs_on(phi, omega), 1.0 / (p.flux.p() - 1.0));
    if (!(K > M)) throw Error(ErrorKind::InvalidParameter, "truncation level K must exceed the a priori bound");
    if (max_abs_on(phi, omega) == 0.0) {
        if (iterations) *iterations = 0;
        return Vec(p.space->node_count(), 0.0);
    }
    Context c(p);
    Vec u = start.size() == p.space->node_count() ? start : Vec(p.space->node_count(), 0.0);
    int it = 0;
    u = run_approximate(c, n, k, K, std::move(u), it);
    if (iterations) *iterations = it;
    return u;
}

SolutionPair solve_gp(const StationaryProblem& p, const SolverOptions& opt) {
    auto range = check_range(p);
    if (!range.feasible)
        throw Error(ErrorKind::RangeInfeasible, "integral of phi " + std::to_string(range.integral_phi) +
                                                    " not strictly inside (" + std::to_string(range.r_minus) + ", " +
                                                    std::to_string(range.r_plus) + ")");
    check_connected(p);
    Context c(p);
    const auto n = p.space->node_count();
    const double tol = opt.tol;
    SolutionPair out;
    int iters = 0;
    auto accept = [&](SolutionPair& cand, const std::string& method) {
        cand.residual_inf = residual_inf(c, cand.u, cand.v);
        cand.method = method;
        cand.iterations = iters;
        cand.schedule_trace = out.schedule_trace;
        return verify_solution(p, cand, tol).passed();
    };

    Vec u(n, 0.0);
    if (opt.start && opt.start->size() == n) u = *opt.start;
    for (std::size_t x = 0; x < n; ++x)
        if (!std::isfinite(u[x])) u[x] = 0.0;

    if (opt.polish && opt.start) {
        SolutionPair cand;
        if (polish(c, classify(c, u, 0.0), u, tol, cand, iters) && accept(cand, "active-set")) return cand;
    }
    bool fast = p.gamma.is_strictly_increasing_surjective() &&
                (p.partition.omega2.empty() || p.beta.is_strictly_increasing_surjective());
    if (fast && p.partition.omega1.empty()) fast = p.beta.is_strictly_increasing_surjective();
    if (fast) {
        SolutionPair cand;
        if (polish(c, std::vector<std::size_t>(n, 0), u, tol, cand, iters) && accept(cand, "direct")) return cand;
    }

    std::vector<std::size_t> last_tried;
    Vec prev;
    for (int j = 0; j <= opt.max_stages; ++j) {
        long nk = 1L << j;
        double K = truncation_level(p, nk, nk);
        u = run_approximate(c, nk, nk, K, u, iters);
        double change = prev.empty() ? kInf : 0.0;
        if (!prev.empty())
            for (auto x : c.omega) change = std::max(change, std::abs(u[x] - prev[x]));
        out.schedule_trace.push_back({nk, nk, change});
        prev = u;
        if (opt.polish) {
            auto seg = classify(c, u, 1.0 / double(nk));
            if (seg != last_tried) {
                last_tried = seg;
                SolutionPair cand;
                if (polish(c, seg, u, tol, cand, iters) && accept(cand, "active-set")) return cand;
            }
        }
        if (change <= tol) {
            SolutionPair cand;
            cand.u = u;
            cand.v.assign(n, 0.0);
            for (auto x : c.omega) {
                auto [lo, hi] = c.graph(x).range_bounds();
                cand.v[x] = std::clamp(p.phi[x] + p.lambda_scale * c.net.div(x, u), lo, hi);
            }
            if (accept(cand, "schedule")) return cand;
        }
    }
    throw Error(ErrorKind::SolverDiverged, "schedule exhausted without a verified solution");
}

VerifyReport verify_solution(const StationaryProblem& p, const SolutionPair& pair, double tol) {
    p.validate();
    VerifyReport r;
    const auto n = p.space->node_count();
    if (pair.u.size() != n || pair.v.size() != n) throw Error(ErrorKind::MissingValues, "pair has wrong length");
    auto omega = p.omega();
    auto div = divergence(*p.space, p.flux, pair.u, omega, p.coupling());
    detail::Network net(*p.space, p.flux, omega, p.coupling(), p.lambda_scale);
    double scale = 1.0 + max_abs_on(p.phi, omega);
    double mass_v = 0.0, mass_phi = 0.0, mass_abs = 0.0, floor_mass = 0.0;
    r.residual_ok = true;
    for (auto x : omega) {
        double inc = p.graph_at(x).distance(pair.u[x], pair.v[x]);
        if (inc > r.inclusion) {
            r.inclusion = inc;
            r.worst_inclusion_node = x;
        }
        double res = std::abs(pair.v[x] - p.lambda_scale * div[x] - p.phi[x]);
        if (res > r.residual) {
            r.residual = res;
            r.worst_residual_node = x;
        }
        double fl = 8.0 * detail::rounding_floor(net, x, pair.u);
        if (!(res <= tol * scale + fl)) r.residual_ok = false;
        floor_mass += p.space->nu(x) * fl;
        mass_v += p.space->nu(x) * pair.v[x];
        mass_phi += p.space->nu(x) * p.phi[x];
        mass_abs += p.space->nu(x) * std::abs(p.phi[x]);
    }
    r.conservation = std::abs(mass_v - mass_phi);
    r.inclusion_ok = r.inclusion <= tol * scale;
    r.conservation_ok =
        r.conservation <= tol * scale * (1.0 + p.space->measure(omega)) + 1e-14 * mass_abs + floor_mass;
    return r;
}

std::pair<double, double> contraction_gap(const StationaryProblem& p1, const StationaryProblem& p2,
                                          const SolutionPair& s1, const SolutionPair& s2) {
    double a = 0.0, b = 0.0;
    for (auto x : p1.omega()) {
        double nu = p1.space->nu(x);
        a += nu * std::max(s1.v[x] - s2.v[x], 0.0);
        b += nu * std::max(p1.phi[x] - p2.phi[x], 0.0);
    }
    return {a, b};
}

EnergyReport energy_report(const StationaryProblem& p, const SolutionPair& pair, int probes, std::uint64_t seed) {
    EnergyReport e;
    const auto& s = *p.space;
    const double pp = p.flux.p(), pc = pp / (pp - 1.0);
    auto omega = p.omega();
    auto q = p.coupling();
    auto in = omega.mask(s.node_count());
    auto in2 = q.omega2_mask(s.node_count());
    double g = 0.0;
    for (auto x : omega)
        s.for_each_neighbor(x, [&](std::size_t y, double m) {
            if (in[y] && !(q.is_q2() && in2[x] && in2[y])) g += s.nu(x) * m * std::pow(std::abs(pair.u[y] - pair.u[x]), pp);
        });
    e.gradient_energy = std::pow(g, 1.0 / pc);
    double norm_pc = 0.0, norm_1 = 0.0;
    for (auto x : omega) {
        norm_pc += s.nu(x) * std::pow(std::abs(p.phi[x]), pc);
        norm_1 += s.nu(x) * std::abs(p.phi[x]);
    }
    norm_pc = std::pow(norm_pc, 1.0 / pc);
    double m1 = s.measure(p.partition.omega1), m2 = s.measure(p.partition.omega2);
    double first = m1 > 0.0 ? m1 : m2;
    e.lambda1 = estimate_poincare_constant(s, omega, q, pp, first, probes, seed);
    e.lambda2 = (m1 > 0.0 && m2 > 0.0) ? estimate_poincare_constant(s, omega, q, pp, m2, probes, seed) : 0.0;
    double cp = p.flux.c_p() * p.lambda_scale;
    e.bound = (2.0 / cp) * (e.lambda1 * norm_pc + (e.lambda1 + e.lambda2) / std::pow(s.measure(omega), 1.0 / pp) * norm_1);
    return e;
}

}
