#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "disdel/specfun.hpp"
#include "quadrature_oracle.hpp"

using namespace disdel;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

TEST_CASE("gamma_fn matches known values", "[specfun]")
{
    CHECK_THAT(specfun::gamma_fn(0.5), WithinRel(1.7724538509055160, 1e-14));
    CHECK_THAT(specfun::gamma_fn(1.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(specfun::gamma_fn(1.5), WithinRel(0.8862269254527580, 1e-14));
    for (double x : {0.036, 0.1, 0.54, 2.5, 7.25, 33.3})
        CHECK_THAT(specfun::gamma_fn(x), WithinRel(std::tgamma(x), 1e-13));
    CHECK_THROWS_AS(specfun::gamma_fn(0.0), DomainError);
    CHECK_THROWS_AS(specfun::gamma_fn(-1.5), DomainError);
}

TEST_CASE("gamma recurrence holds on random arguments", "[specfun][property]")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.1, 10.0);
    for (int i = 0; i < 1000; ++i)
    {
        const double x = dist(rng);
        CHECK_THAT(specfun::gamma_fn(x + 1.0), WithinRel(x * specfun::gamma_fn(x), 1e-12));
        CHECK_THAT(specfun::log_gamma(x), WithinAbs(std::lgamma(x), 1e-13 * std::max(1.0, std::abs(std::lgamma(x)))));
    }
}

TEST_CASE("upper incomplete gamma", "[specfun]")
{
    for (double x : {0.0, 0.3, 1.0, 4.0, 20.0})
        CHECK_THAT(specfun::upper_incomplete_gamma(1.0, x), WithinRel(std::exp(-x), 1e-13));
    CHECK_THAT(specfun::upper_incomplete_gamma(0.5, 0.0), WithinRel(std::sqrt(std::numbers::pi), 1e-14));
    // Gamma(1/2, x) = sqrt(pi) erfc(sqrt(x))
    CHECK_THAT(specfun::upper_incomplete_gamma(0.5, 2.0),
               WithinRel(std::sqrt(std::numbers::pi) * std::erfc(std::sqrt(2.0)), 1e-12));
    CHECK_THROWS_AS(specfun::upper_incomplete_gamma(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(specfun::upper_incomplete_gamma(1.0, -1.0), DomainError);

    double prev = specfun::upper_incomplete_gamma(0.7, 0.0);
    for (double x = 0.05; x < 30.0; x += 0.05)
    {
        const double v = specfun::upper_incomplete_gamma(0.7, x);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("incomplete gamma splits Gamma(a) with a quadrature lower part", "[specfun][property]")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> da(0.2, 4.0), dx(0.05, 8.0);
    for (int i = 0; i < 40; ++i)
    {
        const double a     = da(rng);
        const double x     = dx(rng);
        const double lower = test_oracle::lower_gamma_by_quadrature(a, x);
        CHECK_THAT(specfun::upper_incomplete_gamma(a, x) + lower, WithinRel(specfun::gamma_fn(a), 1e-10));
    }
}

TEST_CASE("erf values and branch agreement", "[specfun]")
{
    CHECK(specfun::erf(0.0) == 0.0);
    CHECK_THAT(specfun::erf(1.0), WithinRel(0.8427007929497149, 1e-14));
    CHECK_THAT(specfun::erf(1.0), WithinRel(test_oracle::erf_by_quadrature(1.0), 1e-13));
    CHECK_THAT(specfun::erf(40.0), WithinAbs(1.0, 1e-15));
    for (double x : {-3.0, -0.7, 0.2, 1.3, 2.2, 3.7, 5.5})
    {
        CHECK_THAT(specfun::erf(x), WithinAbs(std::erf(x), 1e-15));
        CHECK(specfun::erf(-x) == -specfun::erf(x));
        CHECK(std::abs(specfun::erf(x)) < 1.0);
    }
    const double x0 = specfun::detail::erf_crossover;
    const double series = specfun::detail::erf_series(x0);
    const double cf     = 1.0 - specfun::detail::erfc_cf(x0);
    CHECK_THAT(series, WithinRel(cf, 1e-13));
    CHECK_THAT(specfun::erfc(3.0), WithinRel(std::erfc(3.0), 1e-13));
}

TEST_CASE("bracketing root finder", "[specfun]")
{
    CHECK_THAT(specfun::solve_scalar_root([](double x) { return x - 2.0; }, 0.0, 5.0, 1e-14), WithinAbs(2.0, 1e-12));
    CHECK_THAT(specfun::solve_scalar_root([](double x) { return x * x * x - 8.0; }, 0.0, 10.0, 1e-13),
               WithinAbs(2.0, 1e-12));
    CHECK_THROWS_AS(specfun::solve_scalar_root([](double x) { return x + 1.0; }, 0.0, 5.0, 1e-12), NumericalFailure);

    // Tail condition for the gamma kernel parameters (alpha=0.5, kappa=0.25, eps=1e-8).
    auto tail = [](double t) {
        return -0.5 * std::log(0.25 * t) - 0.25 * t - std::lgamma(0.5) - std::log(1e-8);
    };
    CHECK_THAT(specfun::solve_scalar_root(tail, 1.0, 200.0, 1e-13), WithinAbs(65.793, 5e-4));
}
