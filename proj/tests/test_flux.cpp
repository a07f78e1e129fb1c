#include <doctest.h>

#include <random>

#include "nldiff/flux.hpp"
#include "support.hpp"

using namespace nldiff;
using namespace nldiff::testing;

TEST_CASE("p-Laplacian flux values") {
    CHECK(LerayLionsFlux::p_laplacian(2.0).value(0, 1, -3.0) == doctest::Approx(-3.0));
    CHECK(LerayLionsFlux::p_laplacian(3.0).value(0, 1, 2.0) == doctest::Approx(4.0));
    CHECK(LerayLionsFlux::p_laplacian(1.5).value(0, 1, 4.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(LerayLionsFlux::p_laplacian(1.0), Error);
    CHECK_THROWS_AS(LerayLionsFlux::p_laplacian(0.5), Error);
}

TEST_CASE("weighted flux") {
    auto two = LerayLionsFlux::weighted(3.0, {2.0, 2.0});
    auto pl = LerayLionsFlux::p_laplacian(3.0);
    CHECK(two.value(0, 1, 1.5) == doctest::Approx(2.0 * pl.value(0, 1, 1.5)));
    CHECK(LerayLionsFlux::weighted(2.0, {1.0, 1.0}).value(0, 1, 1.0) == doctest::Approx(1.0));
    auto w = LerayLionsFlux::weighted(2.0, {1.0, 3.0});
    CHECK(w.value(0, 1, 2.0) == doctest::Approx(4.0));
    CHECK(w.c_p() == 1.0);
    CHECK(w.C_p() == 3.0);
    bool raised = false;
    try {
        LerayLionsFlux::weighted(2.0, {1.0, 0.0});
    } catch (const Error& e) {
        raised = e.kind() == ErrorKind::WeightOutOfRange;
    }
    CHECK(raised);
}

TEST_CASE("custom flux validation") {
    auto ok = LerayLionsFlux::custom(
        2.0, [](std::size_t, std::size_t, double r) { return r + r * r * r / (1.0 + r * r); }, 1.0, 2.0, 3);
    CHECK(ok.value(0, 1, 1.0) == doctest::Approx(1.5));
    CHECK(ok.slope(0, 1, 0.0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK_THROWS_AS(LerayLionsFlux::custom(
                        2.0, [](std::size_t, std::size_t, double r) { return -r; }, 1.0, 1.0, 3),
                    Error);
    CHECK_THROWS_AS(LerayLionsFlux::custom(
                        2.0, [](std::size_t x, std::size_t, double r) { return x == 0 ? r : 2.0 * r; }, 1.0, 2.0, 3),
                    Error);
}

TEST_CASE("invariants sampled") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-10.0, 10.0);
    for (double p : {1.5, 2.0, 3.0}) {
        for (const auto& f : {LerayLionsFlux::p_laplacian(p), LerayLionsFlux::weighted(p, {0.5, 1.0, 2.0})}) {
            CHECK(f.value(0, 1, 0.0) == 0.0);
            for (int i = 0; i < 500; ++i) {
                double r = d(rng), s = d(rng);
                std::size_t x = i % 3, y = (i + 1) % 3;
                CHECK(f.value(x, y, r) == doctest::Approx(-f.value(y, x, -r)));
                if (r != s) CHECK((f.value(x, y, r) - f.value(x, y, s)) * (r - s) > 0.0);
                CHECK(std::abs(f.value(x, y, r)) <= f.C_p() * (1.0 + std::pow(std::abs(r), p - 1.0)) * (1 + 1e-12));
                CHECK(f.value(x, y, r) * r >= f.c_p() * std::pow(std::abs(r), p) * (1 - 1e-12));
            }
        }
    }
}

TEST_CASE("divergence examples") {
    auto e = single_edge();
    auto all2 = NodeSet::all(2);
    auto d = divergence(e, LerayLionsFlux::p_laplacian(2.0), Vec{0.0, 1.0}, all2);
    CHECK(d[0] == doctest::Approx(1.0));
    CHECK(d[1] == doctest::Approx(-1.0));
    auto c = divergence(triangle(), LerayLionsFlux::p_laplacian(2.0), Vec{4.0, 4.0, 4.0}, NodeSet::all(3));
    CHECK(c == Vec{0.0, 0.0, 0.0});
    auto t = divergence(triangle(), LerayLionsFlux::p_laplacian(3.0), Vec{0.0, 1.0, 2.0}, NodeSet::all(3));
    CHECK(t[0] == doctest::Approx(2.5));
    CHECK_THROWS_AS(divergence(e, LerayLionsFlux::p_laplacian(2.0), Vec{0.0}, all2), Error);
}

TEST_CASE("Neumann operators") {
    auto p = path3();
    auto f = LerayLionsFlux::p_laplacian(2.0);
    Vec u{0.0, 1.0, 5.0};
    // the closure of {0} is {0,1}: node 2 does not enter the sum
    auto n1 = neumann_n1(p, f, u, {0});
    REQUIRE(n1.size() == 1);
    CHECK(n1[0] == doctest::Approx(0.5));
    auto n2 = neumann_n2(p, f, u, {0});
    REQUIRE(n2.size() == 1);
    CHECK(n2[0] == doctest::Approx(0.5));
    // W = {0,2} has boundary {1}, whose whole row lies in the closure
    auto n1b = neumann_n1(p, f, u, {0, 2});
    CHECK(n1b[0] == doctest::Approx(-1.5));
    CHECK(neumann_n1(p, f, Vec{2, 2, 2}, {0})[0] == 0.0);
    CHECK(neumann_n2(p, f, Vec{2, 2, 2}, {0})[0] == 0.0);
    CHECK(neumann_n1(p, f, u, NodeSet::all(3)).empty());
    CHECK(neumann_n2(p, f, u, {}).empty());
}

TEST_CASE("integration by parts") {
    auto e = single_edge();
    auto f = LerayLionsFlux::p_laplacian(2.0);
    Vec u{0.3, 1.1};
    auto [l, r] = pairing_identity(e, f, u, u, NodeSet::all(2));
    CHECK(l == doctest::Approx(0.64));
    CHECK(r == doctest::Approx(0.64));

    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        auto s = random_space(rng, 10);
        auto part = random_partition(rng, 10);
        auto flux = LerayLionsFlux::p_laplacian(random_p(rng));
        Vec a(10), b(10), ones(10, 1.0);
        for (int i = 0; i < 10; ++i) a[i] = g(rng), b[i] = g(rng);
        for (const auto& q : {CouplingSet::q1(), CouplingSet::q2(part.omega2)}) {
            auto [lhs, rhs] = pairing_identity(s, flux, a, b, part.omega(), q);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
            auto [l1, r1] = pairing_identity(s, flux, a, ones, part.omega(), q);
            CHECK(std::abs(l1) <= 1e-10);
            CHECK(r1 == 0.0);
        }
    }
}

TEST_CASE("homogeneity and monotone pairing") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        auto s = random_space(rng, 7);
        auto all = NodeSet::all(7);
        double p = random_p(rng);
        auto f = LerayLionsFlux::p_laplacian(p);
        Vec a(7), b(7), ca(7);
        for (int i = 0; i < 7; ++i) a[i] = g(rng), b[i] = g(rng), ca[i] = 2.5 * a[i];
        auto da = divergence(s, f, a, all), dca = divergence(s, f, ca, all), db = divergence(s, f, b, all);
        for (int i = 0; i < 7; ++i)
            CHECK(dca[i] == doctest::Approx(std::pow(2.5, p - 1.0) * da[i]).epsilon(1e-10));
        auto id = [](double r) { return r; };
        auto pos = [](double r) { return std::max(r, 0.0); };
        auto clp = [](double r) { return std::clamp(r, -0.5, 0.5); };
        for (const std::function<double(double)>& tf : {std::function<double(double)>(id), {pos}, {clp}}) {
            double sum = 0.0;
            for (std::size_t i = 0; i < 7; ++i) sum += s.nu(i) * (da[i] - db[i]) * tf(a[i] - b[i]);
            CHECK(sum <= 1e-12);
        }
    }
}
