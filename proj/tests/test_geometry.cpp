#include <doctest.h>

#include "aniso/exponents.hpp"
#include "aniso/geometry.hpp"
#include "aniso/grid.hpp"
#include "aniso/rng.hpp"
#include "oracles.hpp"

using namespace aniso;

TEST_CASE("quasi-norm examples") {
    Anisotropy iso({1.0, 1.0});
    CHECK(quasi_norm(iso, {3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-12));

    Anisotropy a12({1.0, 2.0});
    CHECK(quasi_norm(a12, {0.0, 4.0}) == doctest::Approx(2.0).epsilon(1e-12));

    // t^4 - 9 t^2 - 16 = 0, t^2 = (9 + sqrt(145))/2
    const double closed = std::sqrt((9.0 + std::sqrt(145.0)) / 2.0);
    const double qn = quasi_norm(a12, {3.0, 4.0});
    CHECK(qn == doctest::Approx(closed).epsilon(1e-12));
    CHECK(qn == doctest::Approx(oracle::quasi_norm_bisect({1.0, 2.0}, {3.0, 4.0})).epsilon(1e-12));

    CHECK(quasi_norm(a12, {0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(quasi_norm(a12, {std::nan(""), 1.0}), std::domain_error);
}

TEST_CASE("quasi-norm matches the bisection oracle on random input") {
    Rng rng(11);
    for (int it = 0; it < 200; ++it) {
        const int n = 1 + static_cast<int>(rng.integer(3));
        std::vector<double> a(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
        for (double& v : a) v = rng.uniform(1.0, 3.0);
        for (double& v : x) v = rng.uniform(-5.0, 5.0);
        Anisotropy an(a);
        const double got = quasi_norm(an, x);
        const double want = oracle::quasi_norm_bisect(a, x);
        CHECK(got == doctest::Approx(want).epsilon(1e-11));
    }
}

TEST_CASE("bracket examples") {
    Anisotropy a12({1.0, 2.0});
    CHECK(bracket(a12, {0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    Anisotropy iso({1.0, 1.0});
    CHECK(bracket(iso, {3.0, 4.0}) == doctest::Approx(std::sqrt(26.0)).epsilon(1e-12));
    Anisotropy a2({2.0});
    CHECK(bracket(a2, {1.0}) == doctest::Approx(std::sqrt((1.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-12));
    // cross-check vs the quasi-norm oracle on the lifted point
    CHECK(bracket(iso, {3.0, 4.0}) ==
          doctest::Approx(oracle::quasi_norm_bisect({1.0, 1.0, 1.0}, {1.0, 3.0, 4.0})).epsilon(1e-12));
}

TEST_CASE("dilate") {
    Anisotropy a12({1.0, 2.0});
    std::vector<double> x = {1.0, 1.0};
    CHECK(dilate(a12, 1.0, x) == std::vector<double>{1.0, 1.0});
    CHECK(dilate(a12, 2.0, x) == std::vector<double>{2.0, 4.0});
    CHECK(dilate(a12, 0.0, x) == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(dilate(a12, -1.0, x), std::domain_error);
}

TEST_CASE("ball volume") {
    Anisotropy a12({1.0, 2.0});
    CHECK(ball_volume(a12, 1.0) == doctest::Approx(kPi).epsilon(1e-12));
    // quadrature cross-check of nu_n
    CHECK(a12.unit_ball_volume() ==
          doctest::Approx(oracle::unit_ball_volume_quadrature({1.0, 2.0})).epsilon(1e-3));
    // homogeneity |B| = nu_n r^nu against the Monte-Carlo oracle
    CHECK(ball_volume(a12, 2.0) == doctest::Approx(8.0 * kPi).epsilon(1e-12));
    CHECK(ball_volume(a12, 2.0) == doctest::Approx(oracle::ball_volume_mc({1.0, 2.0}, 2.0, 99)).epsilon(0.02));
    Anisotropy a1({1.0});
    CHECK(ball_volume(a1, 3.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK_THROWS_AS(ball_volume(a12, 0.0), std::domain_error);
}

TEST_CASE("cube measure") {
    Anisotropy a12({1.0, 2.0});
    AnisoCube q{{0.0, 0.0}, 2.0};
    CHECK(q.measure(a12) == doctest::Approx(4.0 * 8.0).epsilon(1e-12));
}

TEST_CASE("grand maximal and moment orders") {
    Anisotropy iso({1.0, 1.0}), a12({1.0, 2.0});
    CHECK(grand_maximal_order(iso, ExponentVector({1.0, 1.0})) == 9);
    CHECK(grand_maximal_order(a12, ExponentVector({0.5, 1.0})) == 26);
    CHECK(grand_maximal_order(iso, ExponentVector({2.0, 2.0})) == 9);  // p_- caps at 1

    CHECK(min_moment_order(a12, ExponentVector({0.5, 1.0})) == 3);
    CHECK(min_moment_order(iso, ExponentVector({1.0, 1.0})) == 0);
    CHECK(min_moment_order(iso, ExponentVector({2.0 / 3.0, 2.0 / 3.0})) == 1);
}

TEST_CASE("quasi-norm laws sample") {
    Rng rng(21);
    for (int it = 0; it < 500; ++it) {
        const int n = 2;
        std::vector<double> a = {rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0)};
        Anisotropy an(a);
        std::vector<double> x = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        std::vector<double> y = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        const double t = std::exp(rng.uniform(-2.0, 2.0));
        const double qx = quasi_norm(an, x), qy = quasi_norm(an, y);
        CHECK(quasi_norm(an, dilate(an, t, x)) == doctest::Approx(t * qx).epsilon(1e-10));
        std::vector<double> xy = {x[0] + y[0], x[1] + y[1]};
        CHECK(quasi_norm(an, xy) <= qx + qy + 1e-10);
        const double m = std::max(std::pow(std::abs(x[0]), 1.0 / a[0]), std::pow(std::abs(x[1]), 1.0 / a[1]));
        const double sum = std::pow(std::abs(x[0]), 1.0 / a[0]) + std::pow(std::abs(x[1]), 1.0 / a[1]);
        CHECK(m <= qx + 1e-12);
        CHECK(qx <= sum + 1e-12);
        const double bx = bracket(an, x), by = bracket(an, y);
        CHECK(bx <= 1.0 + qx + 1e-12);
        CHECK(1.0 + qx <= 2.0 * bx + 1e-12);
        CHECK(bracket(an, xy) <= 4.0 * bx * by + 1e-10);
    }
}

TEST_CASE("polar identity for radial-in-quasi-norm integrand") {
    // int exp(-|x|_a) dx = nu nu_n Gamma(nu), Gamma by 1-d quadrature oracle
    Anisotropy an({1.0, 2.0});
    RealGrid g({512, 512}, {24.0, 24.0});
    g.fill_from([&](std::span<const double> x) {
        std::vector<double> xx(x.begin(), x.end());
        return std::exp(-quasi_norm(an, xx));
    });
    double integral = 0.0;
    for (double v : g.values()) integral += v;
    integral *= g.cell_volume();
    const double nu = an.nu();
    const double gamma_nu = oracle::simpson(
        [&](double u) { return std::exp(nu * u - std::exp(u)); }, -30.0, 8.0, 1 << 14);
    const double want = nu * an.unit_ball_volume() * gamma_nu;
    CHECK(integral == doctest::Approx(want).epsilon(0.01));
}

TEST_CASE("anisotropy validation") {
    CHECK_THROWS_AS(Anisotropy(std::vector<double>{0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Anisotropy(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(ExponentVector(std::vector<double>{0.0, 1.0}), std::invalid_argument);
}
