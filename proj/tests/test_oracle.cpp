#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "support.hpp"

using namespace nldiff;
using namespace nldiff::testing;

TEST_CASE("dense oracle on hand-solvable cases") {
    StationaryProblem p;
    p.space = share(single_edge());
    p.partition = DomainPartition({0, 1}, {});
    p.gamma = MonotoneGraph::identity();
    p.phi = {1.0, 0.0};
    auto inst = oracle::DenseInstance::from(*p.space);
    auto o = oracle::dense_gp_oracle(inst, p);
    CHECK(o.u[0] == doctest::Approx(2.0 / 3).epsilon(1e-11));
    CHECK(o.u[1] == doctest::Approx(1.0 / 3).epsilon(1e-11));

    StationaryProblem one;
    one.space = share(self_loop());
    one.partition = DomainPartition({0}, {});
    one.gamma = MonotoneGraph::stefan(1.0);
    one.phi = {2.5};
    auto r = oracle::dense_gp_oracle(oracle::DenseInstance::from(*one.space), one);
    CHECK(r.u[0] == doctest::Approx(one.gamma.resolvent(1.0, 2.5) == 0.0 ? 0.0 : 1.5));

    p.partition = DomainPartition({0}, {1});
    p.gamma = MonotoneGraph::stefan(1.0);
    p.phi = {0.5, 0.0};
    auto s = oracle::dense_gp_oracle(inst, p);
    CHECK(std::abs(s.u[0]) <= 1e-10);
    CHECK(s.v[0] == doctest::Approx(0.5));
}

TEST_CASE("dense oracle limits") {
    std::mt19937_64 rng(1);
    StationaryProblem p;
    p.space = share(random_space(rng, 9));
    p.partition = DomainPartition(NodeSet::all(9), {});
    p.gamma = MonotoneGraph::identity();
    p.phi.assign(9, 0.0);
    CHECK_THROWS_AS(oracle::dense_gp_oracle(oracle::DenseInstance::from(*p.space), p), Error);
    p.space = share(random_space(rng, 5));
    p.partition = DomainPartition(NodeSet::all(5), {});
    p.gamma = MonotoneGraph::stefan(1.0);
    p.phi.assign(5, 0.0);
    CHECK_THROWS_AS(oracle::dense_gp_oracle(oracle::DenseInstance::from(*p.space), p), Error);
}

TEST_CASE("multistart Newton agrees with nested bisection") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        StationaryProblem p;
        p.space = share(random_space(rng, 3));
        p.partition = DomainPartition({0, 1, 2}, {});
        p.gamma = MonotoneGraph::power(2.0);
        p.flux = LerayLionsFlux::p_laplacian(random_p(rng));
        p.phi = {g(rng), g(rng), g(rng)};
        auto inst = oracle::DenseInstance::from(*p.space);
        auto a = oracle::dense_gp_oracle(inst, p);
        CHECK(a.residual_inf <= 1e-9);
    }
}

TEST_CASE("linear evolution oracle") {
    EvolutionProblem e;
    e.space = share(single_edge());
    e.partition = DomainPartition({0, 1}, {});
    e.gamma = MonotoneGraph::identity();
    e.v0 = {1.0, 0.0};
    e.source = Source::zero(2);
    e.horizon = 2.0;
    auto inst = oracle::DenseInstance::from(*e.space);
    auto tr = oracle::linear_evolution_oracle(inst, e, {0.0, 0.5, 2.0});
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        double t = tr.times[i];
        CHECK(tr.states[i][0] == doctest::Approx(0.5 + 0.5 * std::exp(-2.0 * t)));
        CHECK(tr.states[i][0] + tr.states[i][1] == doctest::Approx(1.0));
    }
    e.v0 = {1.0, -1.0};
    auto pure = oracle::linear_evolution_oracle(inst, e, {1.0});
    CHECK(pure.states[0][0] == doctest::Approx(std::exp(-2.0)));

    e.flux = LerayLionsFlux::p_laplacian(3.0);
    bool raised = false;
    try {
        oracle::linear_evolution_oracle(inst, e, {1.0});
    } catch (const Error& err) {
        raised = err.kind() == ErrorKind::NonlinearCase;
    }
    CHECK(raised);
}

TEST_CASE("Schur complement oracle") {
    auto p = path3();
    auto inst = oracle::DenseInstance::from(p);
    auto s = oracle::schur_dtn_oracle(inst, {1});
    REQUIRE(s.rows() == 2);
    CHECK(s(0, 0) == doctest::Approx(0.5));
    CHECK(s(0, 1) == doctest::Approx(-0.5));
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-14);

    auto solo = oracle::schur_dtn_oracle(oracle::DenseInstance::from(single_edge(2.0)), {0});
    REQUIRE(solo.rows() == 1);
    CHECK(solo(0, 0) == doctest::Approx(0.0));

    std::mt19937_64 rng(3);
    auto r = random_space(rng, 7);
    auto big = oracle::schur_dtn_oracle(oracle::DenseInstance::from(r), {0, 3, 4});
    CHECK((big - big.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(big.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
}
