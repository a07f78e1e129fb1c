#include "nldiff/evolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>

#include "engine.hpp"

namespace nldiff {

namespace {

void axpy(Vec& y, double a, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double nu_sum(const FiniteRandomWalkSpace& s, const NodeSet& a, const Vec& v) {
    double m = 0.0;
    for (auto x : a) m += s.nu(x) * v[x];
    return m;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

StationaryProblem base_problem(const EvolutionProblem& e) {
    StationaryProblem p;
    p.space = e.space;
    p.partition = e.partition;
    p.flux = e.flux;
    p.gamma = e.gamma;
    p.beta = e.beta;
    p.integration_set = e.integration_set;
    return p;
}

}

Source Source::zero(std::size_t n) { return constant(Vec(n, 0.0)); }

Source Source::constant(Vec values) {
    Source s;
    s.n_ = values.size();
    s.times_ = {0.0, 1.0};
    s.values_ = {std::move(values)};
    return s;
}

Source Source::table(std::vector<double> times, std::vector<Vec> values) {
    if (values.empty() || times.size() != values.size() + 1)
        throw Error(ErrorKind::InvalidParameter, "source table needs one more time than value rows");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw Error(ErrorKind::InvalidParameter, "source times must increase");
    Source s;
    s.n_ = values.front().size();
    for (const auto& row : values) {
        if (row.size() != s.n_) throw Error(ErrorKind::InvalidParameter, "source rows differ in length");
        for (double v : row)
            if (!std::isfinite(v)) throw Error(ErrorKind::InvalidParameter, "source values must be finite");
    }
    s.times_ = std::move(times);
    s.values_ = std::move(values);
    return s;
}

Source Source::callable(Fn f, std::size_t n) {
    if (!f) throw Error(ErrorKind::InvalidParameter, "empty source callable");
    Source s;
    s.n_ = n;
    s.fn_ = std::move(f);
    return s;
}

Source Source::masked(const std::vector<char>& keep) const {
    if (keep.size() != n_) throw Error(ErrorKind::InvalidParameter, "mask length differs from source length");
    if (fn_) {
        auto f = fn_;
        return callable([f, keep](double t) {
            auto v = f(t);
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!keep[i]) v[i] = 0.0;
            return v;
        }, n_);
    }
    Source s = *this;
    for (auto& row : s.values_)
        for (std::size_t i = 0; i < n_; ++i)
            if (!keep[i]) row[i] = 0.0;
    return s;
}

Source Source::plus(const Source& o) const {
    if (o.n_ != n_) throw Error(ErrorKind::InvalidParameter, "sources differ in length");
    if (fn_ || o.fn_) {
        auto a = *this, b = o;
        return callable([a, b](double t) {
            auto v = a.at(t);
            axpy(v, 1.0, b.at(t));
            return v;
        }, n_);
    }
    std::vector<double> times(times_);
    times.insert(times.end(), o.times_.begin(), o.times_.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<Vec> rows;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        double mid = 0.5 * (times[k] + times[k + 1]);
        auto v = at(mid);
        axpy(v, 1.0, o.at(mid));
        rows.push_back(std::move(v));
    }
    return table(std::move(times), std::move(rows));
}

Vec Source::at(double t) const {
    if (fn_) return fn_(t);
    auto it = std::lower_bound(times_.begin() + 1, times_.end() - 1, t);
    return values_[std::size_t(it - (times_.begin() + 1))];
}

Vec Source::integral(double a, double b) const {
    Vec out(n_, 0.0);
    if (!(b > a)) return out;
    if (fn_) {
        static const std::array<double, 4> xs{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                              0.8611363115940526};
        static const std::array<double, 4> ws{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                              0.3478548451374538};
        double h = 0.5 * (b - a), c = 0.5 * (a + b);
        for (int q = 0; q < 4; ++q) {
            auto f = fn_(c + h * xs[q]);
            if (f.size() != n_) throw Error(ErrorKind::InvalidParameter, "source callable returned wrong length");
            axpy(out, h * ws[q], f);
        }
        return out;
    }
    const std::size_t m = values_.size();
    for (std::size_t k = 0; k < m; ++k) {
        double lo = k == 0 ? -kInf : times_[k];
        double hi = k + 1 == m ? kInf : times_[k + 1];
        double len = std::min(b, hi) - std::max(a, lo);
        if (len > 0.0) axpy(out, len, values_[k]);
    }
    return out;
}

Vec Source::average(double a, double b) const {
    auto v = integral(a, b);
    for (auto& x : v) x /= (b - a);
    return v;
}

void EvolutionProblem::validate() const {
    if (!space) throw Error(ErrorKind::InvalidParameter, "problem has no space");
    const auto n = space->node_count();
    partition.omega1.check_range(n);
    partition.omega2.check_range(n);
    if (v0.size() != n) throw Error(ErrorKind::MissingValues, "v0 must have one entry per node");
    if (mode == EvolutionMode::Dynamical && !partition.omega2.empty() && w0.size() != n)
        throw Error(ErrorKind::MissingValues, "w0 must have one entry per node");
    if (source.size() != n) throw Error(ErrorKind::MissingValues, "source must have one entry per node");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorKind::InvalidParameter, "horizon must be positive");
    if (mode == EvolutionMode::StaticBoundary && partition.omega1.empty())
        throw Error(ErrorKind::InvalidParameter, "static-boundary mode needs a nonempty omega1");
}

Vec stacked_state(const EvolutionProblem& e, const StepState& s) {
    Vec out(e.space->node_count(), 0.0);
    for (auto x : e.partition.omega1) out[x] = s.v[x];
    if (e.mode == EvolutionMode::Dynamical)
        for (auto x : e.partition.omega2) out[x] = s.w[x];
    return out;
}

SolutionPair resolvent_dynamical(const EvolutionProblem& e, double lambda, const Vec& psi, const SolverOptions& opt) {
    auto p = base_problem(e);
    p.lambda_scale = lambda;
    p.phi = psi;
    return solve_gp(p, opt);
}

StaticStep resolvent_static_boundary(const EvolutionProblem& e, double lambda, const Vec& psi,
                                     const SolverOptions& opt) {
    auto p = base_problem(e);
    p.lambda_scale = lambda;
    p.beta = e.beta.scaled(lambda);
    p.phi.assign(e.space->node_count(), 0.0);
    for (auto x : e.partition.omega1) p.phi[x] = psi[x];
    StaticStep out;
    out.pair = solve_gp(p, opt);
    const auto n = e.space->node_count();
    out.u = out.pair.u;
    out.v.assign(n, 0.0);
    out.w.assign(n, 0.0);
    for (auto x : e.partition.omega1) out.v[x] = out.pair.v[x];
    for (auto x : e.partition.omega2) out.w[x] = out.pair.v[x] / lambda;
    return out;
}

CompatibilityReport compatibility_check(const EvolutionProblem& e, int n_probe) {
    e.validate();
    if (n_probe < 1) throw Error(ErrorKind::InvalidParameter, "need at least one probe");
    CompatibilityReport rep;
    const auto& s = *e.space;
    const auto& o1 = e.partition.omega1;
    const auto& o2 = e.partition.omega2;
    auto [g0, g1] = e.gamma.range_bounds();
    auto [b0, b1] = e.beta.range_bounds();
    auto fail = [&](double t, std::string msg) {
        if (rep.passed) {
            rep.passed = false;
            rep.first_violation_time = t;
            rep.message = std::move(msg);
        }
    };
    for (auto x : o1)
        if (!(e.v0[x] >= g0 && e.v0[x] <= g1)) fail(0.0, "v0 at node " + std::to_string(x) + " outside the closure of Ran(gamma)");
    if (e.mode == EvolutionMode::Dynamical)
        for (auto x : o2)
            if (!(e.w0[x] >= b0 && e.w0[x] <= b1)) fail(0.0, "w0 at node " + std::to_string(x) + " outside the closure of Ran(beta)");
    if (!rep.passed) return rep;

    double m1 = s.measure(o1), m2 = s.measure(o2);
    auto scaled = [](double m, double b) { return m == 0.0 ? 0.0 : m * b; };
    const double T = e.horizon;
    if (e.mode == EvolutionMode::Dynamical) {
        double rm = scaled(m1, g0) + scaled(m2, b0), rp = scaled(m1, g1) + scaled(m2, b1);
        auto omega = e.partition.omega();
        double mass = nu_sum(s, o1, e.v0) + nu_sum(s, o2, e.w0);
        double prev_t = 0.0, prev_margin = 0.0;
        for (int k = 0; k <= n_probe; ++k) {
            double t = T * k / n_probe;
            if (k > 0) mass += nu_sum(s, omega, e.source.integral(T * (k - 1) / n_probe, t));
            double lo = mass - rm, hi = rp - mass;
            double margin = std::min(lo, hi);
            rep.min_margin = std::min(rep.min_margin, margin);
            double eps = 1e-10 * (1.0 + std::abs(mass));
            if (!(margin >= eps) && rep.passed) {
                double tc = t;
                if (k > 0 && prev_margin > 0.0 && std::isfinite(margin))
                    tc = prev_t + (t - prev_t) * prev_margin / (prev_margin - margin);
                fail(tc, "mass " + num(mass) + " at t=" + num(t) + " leaves (" + num(rm) + ", " + num(rp) + ")");
            }
            prev_t = t;
            prev_margin = margin;
        }
        return rep;
    }
    double rp = scaled(m1, g1) + scaled(m2, b1), rm = scaled(m1, g0) + scaled(m2, b0);
    for (int k = 1; k <= n_probe; ++k) {
        double a = T * (k - 1) / n_probe, b = T * k / n_probe;
        double fm = nu_sum(s, o1, e.source.average(a, b));
        double eps = 1e-12 * (1.0 + std::abs(fm));
        if (std::isfinite(rp)) {
            double cap = scaled(m2, b1);
            rep.min_margin = std::min(rep.min_margin, cap - fm);
            if (fm > cap + eps) fail(a, "source mass " + num(fm) + " on omega1 exceeds nu(omega2) sup Ran(beta) = " + num(cap));
        }
        if (std::isfinite(rm)) {
            double cap = scaled(m2, b0);
            rep.min_margin = std::min(rep.min_margin, fm - cap);
            if (fm < cap - eps) fail(a, "source mass " + num(fm) + " on omega1 below nu(omega2) inf Ran(beta) = " + num(cap));
        }
    }
    return rep;
}

MildSolution mild_solve(const EvolutionProblem& e, int n_steps, double tol) {
    e.validate();
    if (n_steps < 1) throw Error(ErrorKind::InvalidParameter, "n_steps must be positive");
    auto rep = compatibility_check(e, n_steps);
    if (!rep.passed) throw Error(ErrorKind::CompatibilityViolated, rep.message);

    const auto& s = *e.space;
    const auto n = s.node_count();
    const auto& o1 = e.partition.omega1;
    const auto& o2 = e.partition.omega2;
    const bool dyn = e.mode == EvolutionMode::Dynamical;
    const double lam = e.horizon / n_steps;
    auto omega = e.partition.omega();
    const NodeSet& fed = dyn ? omega : o1;

    MildSolution out;
    out.n = n_steps;
    out.horizon = e.horizon;
    for (int i = 1; i <= n_steps; ++i) out.f_averages.push_back(e.source.average(lam * (i - 1), lam * i));

    if (dyn) {
        double fmax = 0.0;
        for (const auto& f : out.f_averages)
            for (auto x : omega) fmax = std::max(fmax, std::abs(f[x]));
        double need = 2.0 * lam * fmax * s.measure(omega);
        if (rep.min_margin < need)
            throw Error(ErrorKind::CompatibilityViolated,
                        "compatibility margin " + num(rep.min_margin) + " is below the discretization margin " +
                            num(need) + " for n_steps=" + std::to_string(n_steps));
    }

    StepState st;
    st.u.assign(n, 0.0);
    st.v.assign(n, 0.0);
    st.w.assign(n, 0.0);
    for (auto x : o1) st.v[x] = e.v0[x];
    if (dyn)
        for (auto x : o2) st.w[x] = e.w0[x];
    out.times.push_back(0.0);
    out.states.push_back(st);
    double src = 0.0;
    out.mass_series.push_back({0.0, nu_sum(s, o1, st.v), nu_sum(s, o2, st.w), 0.0});

    SolverOptions opt;
    opt.tol = tol;
    for (int i = 1; i <= n_steps; ++i) {
        const auto& f = out.f_averages[std::size_t(i - 1)];
        auto prev = stacked_state(e, st);
        Vec psi(n, 0.0);
        for (auto x : fed) psi[x] = lam * f[x] + prev[x];
        if (i > 1) opt.start = st.u;
        StepState next;
        next.t = lam * i;
        try {
            if (dyn) {
                auto pair = resolvent_dynamical(e, lam, psi, opt);
                next.u = pair.u;
                next.v.assign(n, 0.0);
                next.w.assign(n, 0.0);
                for (auto x : o1) next.v[x] = pair.v[x];
                for (auto x : o2) next.w[x] = pair.v[x];
                out.residuals.push_back(pair.residual_inf);
                out.methods.push_back(pair.method);
            } else {
                auto r = resolvent_static_boundary(e, lam, psi, opt);
                next.u = r.u;
                next.v = r.v;
                next.w = r.w;
                out.residuals.push_back(r.pair.residual_inf);
                out.methods.push_back(r.pair.method);
            }
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::RangeInfeasible)
                throw Error(ErrorKind::CompatibilityViolated, "step " + std::to_string(i) +
                                                                  " violates the range condition; the compatibility "
                                                                  "margin was insufficient: " + err.what());
            throw;
        }
        src += lam * nu_sum(s, fed, f);
        st = std::move(next);
        out.times.push_back(st.t);
        out.mass_series.push_back({st.t, nu_sum(s, o1, st.v), nu_sum(s, o2, st.w), src});
        out.states.push_back(st);
    }
    return out;
}

std::vector<std::pair<int, double>> refine_and_compare(const EvolutionProblem& e, int n_start, int doublings) {
    if (n_start < 1 || doublings < 1) throw Error(ErrorKind::InvalidParameter, "need n_start >= 1 and doublings >= 1");
    std::map<int, MildSolution> cache;
    auto get = [&](int n) -> const MildSolution& {
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, mild_solve(e, n)).first;
        return it->second;
    };
    std::vector<std::pair<int, double>> out;
    const auto& s = *e.space;
    auto omega = e.mode == EvolutionMode::Dynamical ? e.partition.omega() : e.partition.omega1;
    for (int d = 0; d < doublings; ++d) {
        int n = n_start << d;
        double dist = 0.0;
        for (int i = 1; i <= n; ++i) {
            auto a = stacked_state(e, get(n).states[std::size_t(i)]);
            auto b = stacked_state(e, get(2 * n).states[std::size_t(2 * i)]);
            double l1 = 0.0;
            for (auto x : omega) l1 += s.nu(x) * std::abs(a[x] - b[x]);
            dist = std::max(dist, l1);
        }
        out.emplace_back(n, dist);
    }
    return out;
}

LedgerReport strong_residual(const EvolutionProblem& e, const MildSolution& sol) {
    e.validate();
    const auto& s = *e.space;
    const auto& o1 = e.partition.omega1;
    const auto& o2 = e.partition.omega2;
    const bool dyn = e.mode == EvolutionMode::Dynamical;
    auto omega = e.partition.omega();
    auto q = e.integration_set == IntegrationSet::Q2 ? CouplingSet::q2(o2) : CouplingSet::q1();
    const double lam = sol.horizon / sol.n;
    auto jstar_g = e.gamma.inverse();
    auto jstar_b = e.beta.inverse();
    auto energy = [&](const StepState& st) {
        double E = 0.0;
        for (auto x : o1) E += s.nu(x) * jstar_g.primitive(st.v[x]);
        if (dyn)
            for (auto x : o2) E += s.nu(x) * jstar_b.primitive(st.w[x]);
        return E;
    };
    LedgerReport rep;
    rep.energy_initial = energy(sol.states.front());
    if (!std::isfinite(rep.energy_initial))
        throw Error(ErrorKind::InvalidParameter, "initial data outside the domain of the conjugate energy");
    rep.energy_series.push_back(rep.energy_initial);
    for (int i = 1; i <= sol.n; ++i) {
        const auto& st = sol.states[std::size_t(i)];
        const auto& pv = sol.states[std::size_t(i - 1)];
        const auto& f = sol.f_averages[std::size_t(i - 1)];
        auto div = divergence(s, e.flux, st.u, omega, q);
        double worst = 0.0;
        for (auto x : o1) worst = std::max(worst, std::abs((st.v[x] - pv.v[x]) / lam - div[x] - f[x]));
        for (auto x : o2) {
            double r = dyn ? (st.w[x] - pv.w[x]) / lam - div[x] - f[x] : st.w[x] - div[x];
            worst = std::max(worst, std::abs(r));
        }
        rep.step_residuals.push_back(worst);
        double diss = flux_pairing(s, e.flux, st.u, st.u, omega, q);
        if (!dyn)
            for (auto x : o2) diss += s.nu(x) * st.w[x] * st.u[x];
        rep.dissipation += lam * diss;
        for (auto x : dyn ? omega : o1) rep.source_work += lam * s.nu(x) * f[x] * st.u[x];
        rep.energy_series.push_back(energy(st));
    }
    rep.energy_final = rep.energy_series.back();
    rep.gap = rep.energy_initial + rep.source_work - rep.energy_final - rep.dissipation;
    double scale = 1.0 + std::abs(rep.energy_initial) + std::abs(rep.source_work) + std::abs(rep.dissipation);
    rep.holds = rep.gap >= -1e-8 * scale;
    return rep;
}

Vec dtn_apply(const FiniteRandomWalkSpace& space, const NodeSet& w, const LerayLionsFlux& flux,
              const Vec& f_boundary) {
    w.check_range(space.node_count());
    auto bdry = m_boundary(space, w);
    if (f_boundary.size() != bdry.size())
        throw Error(ErrorKind::MissingValues, "boundary data must have one value per m-boundary node");
    if (w.empty()) return {};
    auto closure = w.unite(bdry);
    if (!is_m_connected(space, closure)) throw Error(ErrorKind::NotConnected, "m-closure of W is not m-connected");
    const auto n = space.node_count();
    Vec u(n, 0.0), rhs(n, 0.0);
    double mean = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < bdry.size(); ++i) {
        u[bdry.ids()[i]] = f_boundary[i];
        mean += f_boundary[i] / double(bdry.size());
        scale = std::max(scale, 1.0 + std::abs(f_boundary[i]));
    }
    for (auto x : w) u[x] = bdry.empty() ? 0.0 : mean;
    detail::Network net(space, flux, closure, CouplingSet::q1(), 1.0);
    auto law = [](std::size_t, double, double& val, double& slope) {
        val = 0.0;
        slope = 0.0;
    };
    double tol = 1e-13 * scale;
    auto o = detail::newton(net, w.ids(), u, law, rhs, tol, 200);
    if (!o.converged) {
        auto g = detail::gauss_seidel(net, w.ids(), u, law, rhs, tol, 20000);
        if (!g.converged) throw Error(ErrorKind::SolverDiverged, "a_p-harmonic lifting did not converge");
    }
    return neumann_n1(space, flux, u, w);
}

EvolutionProblem dtn_problem(std::shared_ptr<const FiniteRandomWalkSpace> space, const NodeSet& w,
                             const LerayLionsFlux& flux, const Source& g, const Vec& w0, double horizon) {
    EvolutionProblem e;
    auto bdry = m_boundary(*space, w);
    e.partition = DomainPartition(w, bdry);
    e.space = std::move(space);
    e.flux = flux;
    e.gamma = MonotoneGraph::zero();
    e.beta = MonotoneGraph::identity();
    e.mode = EvolutionMode::Dynamical;
    e.v0.assign(e.space->node_count(), 0.0);
    e.w0 = w0;
    e.source = g.masked(bdry.mask(e.space->node_count()));
    e.horizon = horizon;
    return e;
}

MildSolution dtn_evolve(std::shared_ptr<const FiniteRandomWalkSpace> space, const NodeSet& w,
                        const LerayLionsFlux& flux, const Source& g, const Vec& w0, double horizon, int n_steps) {
    auto e = dtn_problem(std::move(space), w, flux, g, w0, horizon);
    return mild_solve(e, n_steps);
}

}
