#include <doctest.h>

#include <random>

#include "nldiff/evolution.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace nldiff;
using namespace nldiff::testing;

namespace {

EvolutionProblem single(double v0, double f, double T) {
    EvolutionProblem e;
    e.space = share(self_loop());
    e.partition = DomainPartition({0}, {});
    e.gamma = MonotoneGraph::identity();
    e.v0 = {v0};
    e.source = Source::constant({f});
    e.horizon = T;
    return e;
}

EvolutionProblem pair_problem(EvolutionMode mode) {
    EvolutionProblem e;
    e.space = share(single_edge());
    e.partition = mode == EvolutionMode::Dynamical ? DomainPartition({0, 1}, {}) : DomainPartition({0}, {1});
    e.gamma = e.beta = MonotoneGraph::identity();
    e.mode = mode;
    e.v0 = {1.0, 0.0};
    e.w0 = {0.0, 0.0};
    e.source = Source::zero(2);
    e.horizon = 1.0;
    return e;
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::ConfigError;
}

}

TEST_CASE("sources") {
    auto t = Source::table({0.0, 1.0, 3.0}, {{1.0}, {4.0}});
    CHECK(t.at(0.5)[0] == 1.0);
    CHECK(t.at(1.0)[0] == 1.0);
    CHECK(t.at(2.0)[0] == 4.0);
    CHECK(t.average(0.5, 1.5)[0] == doctest::Approx(2.5));
    CHECK(t.integral(0.0, 3.0)[0] == doctest::Approx(9.0));
    auto c = Source::callable([](double s) { return Vec{s * s}; }, 1);
    CHECK(c.average(0.0, 2.0)[0] == doctest::Approx(4.0 / 3.0));
    auto m = Source::constant({1.0, 2.0}).masked({0, 1});
    CHECK(m.at(0.3) == Vec{0.0, 2.0});
}

TEST_CASE("resolvents") {
    auto e = pair_problem(EvolutionMode::Dynamical);
    auto z = resolvent_dynamical(e, 1.0, {0.0, 0.0});
    CHECK(z.v == Vec{0.0, 0.0});
    auto s = resolvent_dynamical(e, 1.0, {1.0, 0.0});
    CHECK(s.v[0] == doctest::Approx(2.0 / 3));
    CHECK(s.v[1] == doctest::Approx(1.0 / 3));
    auto tiny = resolvent_dynamical(e, 1e-6, {1.0, 0.0});
    CHECK(std::abs(tiny.v[0] - 1.0) <= 1e-4);
    CHECK(std::abs(tiny.v[1]) <= 1e-4);

    auto st = pair_problem(EvolutionMode::StaticBoundary);
    auto r = resolvent_static_boundary(st, 1.0, {1.0, 0.0});
    CHECK(r.u[0] == doctest::Approx(2.0 / 3));
    CHECK(r.u[1] == doctest::Approx(1.0 / 3));
    CHECK(r.v[0] == doctest::Approx(2.0 / 3));
    CHECK(r.w[1] == doctest::Approx(1.0 / 3));
    auto r0 = resolvent_static_boundary(st, 1.0, {0.0, 0.0});
    CHECK(r0.u == Vec{0.0, 0.0});
    CHECK(r0.w[1] == 0.0);

    st.gamma = st.beta = MonotoneGraph::hele_shaw();
    CHECK(kind_of([&] { resolvent_static_boundary(st, 1.0, {5.0, 0.0}); }) == ErrorKind::RangeInfeasible);
    CHECK_NOTHROW(resolvent_static_boundary(st, 10.0, {5.0, 0.0}));
}

TEST_CASE("zero diffusion steps") {
    auto e = single(0.7, 0.0, 2.0);
    auto sol = mild_solve(e, 8);
    for (const auto& st : sol.states) CHECK(st.v[0] == doctest::Approx(0.7));
    auto g = single(0.7, 1.0, 1.0);
    auto run = mild_solve(g, 10);
    CHECK(run.states.back().v[0] == doctest::Approx(1.7).epsilon(1e-12));
    auto tab = refine_and_compare(g, 4, 3);
    REQUIRE(tab.size() == 3);
    for (auto& [n, d] : tab) CHECK(d <= 1e-12);
}

TEST_CASE("two-node relaxation to the mean") {
    auto e = pair_problem(EvolutionMode::Dynamical);
    e.horizon = 5.0;
    auto sol = mild_solve(e, 256);
    CHECK(std::abs(sol.states.back().v[0] - 0.5) <= 1e-3);
    CHECK(std::abs(sol.states.back().v[1] - 0.5) <= 1e-3);
    auto led = strong_residual(e, sol);
    CHECK(led.holds);
    CHECK(led.gap > 0.0);
    for (double r : led.step_residuals) CHECK(r <= 1e-8);
}

TEST_CASE("compatibility") {
    EvolutionProblem e;
    e.space = share(path3());
    e.partition = DomainPartition({0, 1, 2}, {});
    e.gamma = MonotoneGraph::hele_shaw();
    e.v0 = {0.5, 0.5, 0.5};
    e.source = Source::zero(3);
    e.horizon = 2.0;
    CHECK(compatibility_check(e, 50).passed);
    e.source = Source::constant({0.25, 0.25, 0.25});
    auto rep = compatibility_check(e, 200);
    CHECK_FALSE(rep.passed);
    double nu = 4.0, expect = (nu - 0.5 * nu) / (0.25 * nu);
    CHECK(rep.first_violation_time == doctest::Approx(expect).epsilon(0.02));
    CHECK(kind_of([&] { mild_solve(e, 16); }) == ErrorKind::CompatibilityViolated);

    auto id = pair_problem(EvolutionMode::Dynamical);
    id.source = Source::constant({100.0, 0.0});
    CHECK(compatibility_check(id, 20).passed);

    auto sb = pair_problem(EvolutionMode::StaticBoundary);
    sb.gamma = sb.beta = MonotoneGraph::hele_shaw();
    sb.source = Source::constant({1.0, 0.0});
    sb.v0 = {0.0, 0.0};
    CHECK(compatibility_check(sb, 20).passed);
    sb.source = Source::constant({1.5, 0.0});
    CHECK_FALSE(compatibility_check(sb, 20).passed);
}

TEST_CASE("mass balance both modes") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (int t = 0; t < 10; ++t) {
        for (auto mode : {EvolutionMode::Dynamical, EvolutionMode::StaticBoundary}) {
            EvolutionProblem e;
            e.space = share(random_space(rng, 6));
            e.partition = DomainPartition({0, 1, 2, 3}, {4, 5});
            e.gamma = MonotoneGraph::stefan(1.0);
            e.beta = MonotoneGraph::identity();
            e.mode = mode;
            e.v0.assign(6, 0.0);
            e.w0.assign(6, 0.0);
            Vec f(6);
            for (auto& x : f) x = d(rng);
            for (auto x : {0, 1, 2, 3}) e.v0[x] = d(rng);
            e.source = Source::constant(f);
            e.horizon = 1.0;
            auto sol = mild_solve(e, 20);
            const bool dyn = mode == EvolutionMode::Dynamical;
            const auto& first = sol.mass_series.front();
            double initial = first.mass_omega1 + (dyn ? first.mass_omega2 : 0.0), held = 0.0;
            for (std::size_t i = 1; i < sol.mass_series.size(); ++i) {
                const auto& m = sol.mass_series[i];
                if (!dyn) held += (e.horizon / 20) * m.mass_omega2;
                double lhs = m.mass_omega1 + (dyn ? m.mass_omega2 : held);
                double rhs = initial + m.source_integral;
                double scale = 1.0 + std::abs(lhs) + std::abs(rhs);
                CHECK(std::abs(lhs - rhs) <= 1e-9 * scale);
            }
        }
    }
}

TEST_CASE("linear case against the eigendecomposition") {
    auto e = pair_problem(EvolutionMode::Dynamical);
    e.source = Source::constant({0.3, -0.1});
    e.horizon = 1.0;
    auto inst = oracle::DenseInstance::from(*e.space);
    auto sol = mild_solve(e, 200);
    auto exact = oracle::linear_evolution_oracle(inst, e, sol.times);
    double err = 0.0;
    for (std::size_t i = 0; i < sol.times.size(); ++i)
        err = std::max(err, std::abs(sol.states[i].v[0] - exact.states[i][0]) +
                                std::abs(sol.states[i].v[1] - exact.states[i][1]));
    CHECK(err <= 1.0 / 200);
    auto tab = refine_and_compare(e, 16, 3);
    for (std::size_t i = 1; i < tab.size(); ++i) {
        double ratio = tab[i].second / tab[i - 1].second;
        CHECK(ratio >= 0.4);
        CHECK(ratio <= 0.6);
    }
}

TEST_CASE("refinement for Stefan data decreases") {
    EvolutionProblem e;
    e.space = share(path3());
    e.partition = DomainPartition({0, 1, 2}, {});
    e.gamma = MonotoneGraph::stefan(1.0);
    e.v0 = {2.0, 0.2, -1.0};
    e.source = Source::zero(3);
    e.horizon = 1.0;
    auto tab = refine_and_compare(e, 8, 3);
    for (std::size_t i = 1; i < tab.size(); ++i) CHECK(tab[i].second < tab[i - 1].second);
}

TEST_CASE("energy ledger special cases") {
    auto e = pair_problem(EvolutionMode::Dynamical);
    e.v0 = {0.0, 0.0};
    auto s = mild_solve(e, 10);
    auto led = strong_residual(e, s);
    CHECK(led.energy_initial == 0.0);
    CHECK(led.energy_final == 0.0);
    CHECK(led.dissipation == 0.0);
    CHECK(led.source_work == 0.0);

    EvolutionProblem h;
    h.space = share(path3());
    h.partition = DomainPartition({0, 1, 2}, {});
    h.gamma = MonotoneGraph::hele_shaw();
    h.v0 = {0.9, 0.1, 0.4};
    h.source = Source::constant({0.1, 0.0, 0.0});
    h.horizon = 1.0;
    auto hs = mild_solve(h, 20);
    auto hl = strong_residual(h, hs);
    for (double en : hl.energy_series) CHECK(en == 0.0);
    CHECK(hl.dissipation <= hl.source_work + 1e-8);
    for (const auto& st : hs.states)
        for (auto x : {0, 1, 2}) {
            CHECK(st.v[x] >= -1e-10);
            CHECK(st.v[x] <= 1.0 + 1e-10);
        }

    auto bad = hs;
    bad.states.front().v[0] = 1.5;
    CHECK_THROWS_AS(strong_residual(h, bad), Error);
    h.v0 = {1.5, 0.0, 0.0};
    CHECK(kind_of([&] { mild_solve(h, 4); }) == ErrorKind::CompatibilityViolated);
}

TEST_CASE("L1 contraction of trajectories") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        EvolutionProblem a;
        a.space = share(random_space(rng, 5));
        a.partition = DomainPartition({0, 1, 2, 3, 4}, {});
        a.gamma = MonotoneGraph::stefan(1.0);
        a.flux = LerayLionsFlux::p_laplacian(random_p(rng));
        a.v0.assign(5, 0.0);
        for (auto& x : a.v0) x = d(rng);
        a.source = Source::zero(5);
        auto b = a;
        for (auto& x : b.v0) x += d(rng);
        b.source = Source::constant({0.2, 0.0, -0.1, 0.0, 0.3});
        const int n = 16;
        auto sa = mild_solve(a, n), sb = mild_solve(b, n);
        for (int i = 0; i <= n; ++i) {
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t x = 0; x < 5; ++x) {
                lhs += a.space->nu(x) * std::max(sa.states[i].v[x] - sb.states[i].v[x], 0.0);
                rhs += a.space->nu(x) * std::max(a.v0[x] - b.v0[x], 0.0);
            }
            for (int j = 0; j < i; ++j)
                for (std::size_t x = 0; x < 5; ++x)
                    if (sa.states[j + 1].v[x] > sb.states[j + 1].v[x])
                        rhs += a.space->nu(x) * (1.0 / n) * (sa.f_averages[j][x] - sb.f_averages[j][x]);
            CHECK(lhs <= rhs + n * 1e-9);
        }
    }
}

TEST_CASE("Dirichlet-to-Neumann") {
    auto p = path3();
    auto f = LerayLionsFlux::p_laplacian(2.0);
    auto c = dtn_apply(p, {1}, f, {2.0, 2.0});
    CHECK(std::abs(c[0]) <= 1e-12);
    CHECK(std::abs(c[1]) <= 1e-12);
    auto inst = oracle::DenseInstance::from(p);
    auto s = oracle::schur_dtn_oracle(inst, {1});
    Vec fb{1.0, -2.0};
    auto out = dtn_apply(p, {1}, f, fb);
    Eigen::Vector2d ref = s * Eigen::Vector2d(fb[0], fb[1]);
    CHECK(out[0] == doctest::Approx(ref[0] / p.nu(0)));
    CHECK(out[1] == doctest::Approx(ref[1] / p.nu(2)));
    CHECK(p.nu(0) * out[0] + p.nu(2) * out[1] == doctest::Approx(0.0));

    std::mt19937_64 rng(9);
    auto r = random_space(rng, 8);
    NodeSet w{1, 2, 5};
    auto bd = m_boundary(r, w).ids();
    Vec g(bd.size());
    for (auto& x : g) x = std::uniform_real_distribution<double>(-1, 1)(rng);
    auto f3 = LerayLionsFlux::p_laplacian(3.0);
    auto o3 = dtn_apply(r, w, f3, g);
    double m = 0.0;
    for (std::size_t i = 0; i < bd.size(); ++i) m += r.nu(bd[i]) * o3[i];
    CHECK(std::abs(m) <= 1e-10);
}

TEST_CASE("boundary dynamics") {
    auto space = share(path3());
    auto f = LerayLionsFlux::p_laplacian(2.0);
    auto still = dtn_evolve(space, {1}, f, Source::zero(3), {1.5, 0.0, 1.5}, 1.0, 8);
    for (const auto& st : still.states) {
        CHECK(st.w[0] == doctest::Approx(1.5));
        CHECK(st.w[2] == doctest::Approx(1.5));
    }

    Vec w0{1.0, 0.0, -0.5};
    const int n = 400;
    auto sol = dtn_evolve(space, {1}, f, Source::zero(3), w0, 1.0, n);
    auto s = oracle::schur_dtn_oracle(oracle::DenseInstance::from(*space), {1});
    Eigen::Vector2d nu(space->nu(0), space->nu(2));
    auto tr = oracle::linear_ode(nu, -s, Eigen::Vector2d(w0[0], w0[2]), Eigen::Vector2d::Zero(), {1.0});
    CHECK(sol.states.back().w[0] == doctest::Approx(tr.states[0][0]).epsilon(2.0 / n));
    CHECK(sol.states.back().w[2] == doctest::Approx(tr.states[0][1]).epsilon(2.0 / n));

    auto src = Source::constant({0.0, 0.0, 0.4});
    auto fed = dtn_evolve(space, {1}, f, src, w0, 1.0, 10);
    double m0 = space->nu(0) * w0[0] + space->nu(2) * w0[2];
    double m1 = space->nu(0) * fed.states.back().w[0] + space->nu(2) * fed.states.back().w[2];
    CHECK(m1 == doctest::Approx(m0 + space->nu(2) * 0.4));
}
