#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "disdel/kernel_approx.hpp"

using namespace disdel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct GammaRow
{
    double eps, h, t;
    int m, n;
};

// alpha = 0.5, kappa = 0.25, t_f = 50
const GammaRow gamma_rows[] = {
    {1e-4, 0.84, 30.49, -27, 24},  {1e-5, 0.70, 39.20, -39, 35},   {1e-6, 0.60, 48.00, -54, 49},
    {1e-7, 0.52, 50.00, -70, 65},  {1e-8, 0.46, 50.00, -89, 84},   {1e-9, 0.42, 50.00, -110, 104},
    {1e-10, 0.38, 50.00, -133, 127}, {1e-11, 0.35, 50.00, -158, 152},
};

struct ParetoRow
{
    double eps, h;
    int m, n;
};

// alpha = 0.5, beta = 1, t_f = 10
const ParetoRow pareto_rows[] = {
    {1e-1, 1.662, -3, 1},  {1e-2, 1.116, -6, 2},  {1e-3, 0.851, -11, 3},  {1e-4, 0.692, -17, 4},
    {1e-5, 0.586, -24, 5}, {1e-6, 0.509, -32, 6}, {1e-7, 0.451, -41, 7},  {1e-8, 0.405, -51, 8},
    {1e-9, 0.368, -62, 9}, {1e-10, 0.337, -75, 10}, {1e-11, 0.311, -88, 11},
};

double sup_relative_error(const ExponentialSumKernel& sum, const KernelSpec& exact, double lo, double hi,
                          std::size_t n)
{
    double worst = 0.0;
    for (double t : log_grid(lo, hi, n))
        worst = std::max(worst, std::abs(sum.evaluate_density(t) / density(exact, t) - 1.0));
    return worst;
}

} // namespace

TEST_CASE("trapezoidal step size", "[kernel]")
{
    CHECK_THAT(trapezoid_step_and_angle(0.5, 1e-8).h_quad, WithinAbs(0.4638, 5e-5));
    CHECK_THAT(trapezoid_step_and_angle(0.5, 1e-5).h_quad, WithinAbs(0.70, 5e-3));
    CHECK_THAT(trapezoid_step_and_angle(1.5, 1e-8).h_quad, WithinAbs(0.405, 5e-4));
    const auto s = trapezoid_step_and_angle(0.3, 1e-6);
    CHECK(s.angle_a > 0.0);
    CHECK(s.angle_a < std::numbers::pi / 2);
    CHECK_THROWS_AS(trapezoid_step_and_angle(0.5, 1.0), DomainError);
    CHECK_THROWS_AS(trapezoid_step_and_angle(2.5, 1e-3), DomainError);
}

TEST_CASE("gamma parameters reproduce the published ladder", "[kernel]")
{
    for (const auto& row : gamma_rows)
    {
        CAPTURE(row.eps);
        const auto p = gamma_params(0.5, 0.25, row.eps, 0.0, 50.0);
        CHECK_THAT(p.h_quad, WithinAbs(row.h, 0.01));
        CHECK_THAT(p.t_max, WithinRel(row.t, 0.005));
        CHECK(std::abs(p.m_lo - row.m) <= 1);
        CHECK(std::abs(p.n_hi - row.n) <= 1);
    }
    const auto p8 = gamma_params(0.5, 0.25, 1e-8, 0.0, 50.0);
    CHECK(p8.m_lo == -89);
    CHECK(p8.n_hi == 84);
    CHECK_THAT(p8.delta, WithinRel(std::numbers::pi * 1e-16, 1e-10));
    const auto p4 = gamma_params(0.5, 0.25, 1e-4, 0.0, 50.0);
    CHECK_THAT(p4.t_max, WithinAbs(30.49, 0.01));
    CHECK(p4.m_lo == -27);
    CHECK(p4.n_hi == 24);
    CHECK(gamma_params(0.5, 0.25, 1e-8, 1e-10, 50.0).delta == 1e-10);
    CHECK_THROWS_AS(gamma_params(0.5, 0.25, 1.0, 0.0, 50.0), DomainError);
    CHECK_THROWS_AS(gamma_params(1.2, 0.25, 1e-3, 0.0, 50.0), DomainError);
}

TEST_CASE("gamma parameters are monotone in eps", "[kernel][property]")
{
    int prev_m = 0, prev_n = -1000;
    for (double eps = 1e-2; eps > 1e-12; eps *= 0.1)
    {
        const auto p = gamma_params(0.5, 0.25, eps, 0.0, 50.0);
        CHECK(p.m_lo < prev_m);
        CHECK(p.n_hi > prev_n);
        prev_m = p.m_lo;
        prev_n = p.n_hi;
    }
}

TEST_CASE("gamma parameters for the chemotherapy kernels", "[kernel]")
{
    const auto p1 = gamma_params(0.036, 0.964 / 47.5, 1e-6, 0.0, 100.0);
    CHECK(std::abs(p1.m_lo + 582) <= 1);
    CHECK(std::abs(p1.n_hi - 20) <= 1);
    const int set2_m[] = {-17, -38, -67, -105};
    const int set2_n[] = {13, 35, 67, 108};
    const double set2_eps[] = {1e-3, 1e-5, 1e-7, 1e-9};
    for (int i = 0; i < 4; ++i)
    {
        CAPTURE(set2_eps[i]);
        const auto p = gamma_params(0.54, 1.46 / 55.6, set2_eps[i], 0.0, 100.0);
        CHECK(std::abs(p.m_lo - set2_m[i]) <= 1);
        CHECK(std::abs(p.n_hi - set2_n[i]) <= 1);
    }
}

TEST_CASE("pareto parameters reproduce the published ladder", "[kernel]")
{
    for (const auto& row : pareto_rows)
    {
        CAPTURE(row.eps);
        const auto p = pareto_params(0.5, 1.0, row.eps, 10.0);
        CHECK_THAT(p.h_quad, WithinAbs(row.h, 0.002));
        CHECK(std::abs(p.m_lo - row.m) <= 1);
        CHECK(std::abs(p.n_hi - row.n) <= 1);
        CHECK(p.t_max == 10.0);
        CHECK(p.delta == 1.0);
    }
    const auto p = pareto_params(0.5, 1.0, 1e-8, 10.0);
    CHECK(p.m_lo == -51);
    CHECK(p.n_hi == 8);
    CHECK_THAT(pareto_params(0.5, 1.0, 1e-8, 1e20).t_max, WithinRel(1e16, 1e-12));
}

TEST_CASE("power-law sum structure and accuracy", "[kernel]")
{
    const auto p   = gamma_params(0.5, 0.25, 1e-5, 0.0, 50.0);
    const auto sum = build_power_law_sum(0.5, p);
    CHECK(static_cast<int>(sum.size()) == p.n_hi - p.m_lo);
    CHECK(sum.max_degree() == 0);
    CHECK(sum.has_distinct_exponents());
    CHECK(power_law_relative_error(0.5, sum, 1.0) <= 3e-5);
    double worst = 0.0;
    for (double t : log_grid(p.delta, p.t_max, 10000))
        worst = std::max(worst, power_law_relative_error(0.5, sum, t));
    CHECK(worst <= 3e-5);
}

TEST_CASE("measured power-law error does not grow as eps shrinks", "[kernel][property]")
{
    double prev = 1.0;
    for (const auto& row : gamma_rows)
    {
        const auto p   = gamma_params(0.5, 0.25, row.eps, 0.0, 50.0);
        const auto sum = build_power_law_sum(0.5, p);
        double worst   = 0.0;
        for (double t : log_grid(p.delta, p.t_max, 2000))
            worst = std::max(worst, power_law_relative_error(0.5, sum, t));
        CHECK(worst <= 3.0 * row.eps);
        CHECK(worst <= prev);
        prev = worst;
    }
}

TEST_CASE("gamma kernel sum against the exact density", "[kernel]")
{
    const GammaDistribution g{0.25, 0.5};
    const auto p   = gamma_params(0.5, 0.25, 1e-8, 0.0, 50.0);
    const auto sum = build_gamma_kernel_sum(g, p);
    const auto pl  = build_power_law_sum(0.5, p);
    for (std::size_t i = 0; i < sum.size(); ++i)
    {
        CHECK_THAT(sum.terms()[i].exponent, WithinRel(pl.terms()[i].exponent + 0.25, 1e-15));
        CHECK(sum.terms()[i].coeffs[0] > 0.0);
    }
    CHECK(sup_relative_error(sum, g, p.delta, p.t_max, 10000) <= 3e-8);
}

TEST_CASE("negative exponent gamma kernels", "[kernel]")
{
    const GammaDistribution g{1.46 / 55.6, -0.46};
    const auto approx = approximate_kernel(g, 1e-5, 100.0);
    CHECK(approx.approximated_exponent == Catch::Approx(0.54));
    CHECK(approx.kernel.max_degree() == 1);
    CHECK(approx.kernel.evaluate(0.0) == 0.0);
    for (const auto& term : approx.kernel.terms())
        CHECK(term.coeffs[0] == 0.0);
    CHECK(sup_relative_error(approx.kernel, g, approx.params.delta, approx.params.t_max, 5000) <= 3e-5);
    for (double t : log_grid(1e-6, 100.0, 500))
        CHECK(approx.kernel.evaluate(t) >= 0.0);

    const auto p3 = gamma_params(0.54, 1.46 / 55.6, 1e-3, 0.0, 100.0);
    CHECK(p3.m_lo == -17);
    CHECK(p3.n_hi == 13);

    const GammaDistribution g2{0.5, -1.3};
    const auto a2 = approximate_kernel(g2, 1e-6, 20.0);
    CHECK(a2.kernel.max_degree() == 2);
    CHECK(sup_relative_error(a2.kernel, g2, a2.params.delta, a2.params.t_max, 2000) <= 3e-6);
    CHECK_THROWS_AS(build_gamma_kernel_negative_alpha(GammaDistribution{0.5, 0.5}, a2.params), DomainError);
}

TEST_CASE("pareto kernel sum", "[kernel]")
{
    const ParetoTypeI spec{0.5, 1.0};
    const auto p   = pareto_params(0.5, 1.0, 1e-5, 1e3);
    const auto sum = build_pareto_kernel_sum(spec, p);
    CHECK(sum.delay() == 1.0);
    CHECK(sum.evaluate_density(0.5) == 0.0);
    CHECK_THAT(sum.evaluate_density(1.0), WithinRel(0.5, 3e-5));
    CHECK(sup_relative_error(sum, spec, 1.0, p.t_max, 10000) <= 3e-5);
    for (std::size_t i = 1; i < sum.size(); ++i)
        CHECK_THAT(sum.terms()[i].exponent / sum.terms()[i - 1].exponent, WithinRel(std::exp(p.h_quad), 1e-12));
}

TEST_CASE("overflow guard", "[kernel]")
{
    ApproximationParams p;
    p.eps    = 1e-3;
    p.h_quad = 1.0;
    p.m_lo   = 0;
    p.n_hi   = 2000;
    p.delta  = 1e-3;
    p.t_max  = 1.0;
    CHECK_THROWS_AS(build_power_law_sum(0.9, p), NumericalFailure);
}

TEST_CASE("error report bounds dominate the measured error", "[kernel]")
{
    const auto p    = gamma_params(0.5, 0.25, 1e-6, 0.0, 50.0);
    const auto grid = log_grid(p.delta, p.t_max, 400);
    for (const auto& s : error_report(0.5, p, grid))
    {
        CAPTURE(s.t);
        CHECK(s.measured <= s.bound_total() * (1.0 + 1e-6) + 1e-15);
        CHECK(s.measured <= 3e-6);
    }
    // The a-priori estimate is conservative: it admits h = 0.70 where the
    // measured error first reaches 1e-5 near h = 0.78.
    const auto step = trapezoid_step_and_angle(0.5, 1e-5);
    CHECK_THAT(trapezoid_error_bound(0.5, step.h_quad, step.angle_a), WithinRel(1e-5, 1e-9));
    CHECK(trapezoid_relative_error(0.5, 0.78) <= 1e-5);
}

TEST_CASE("untruncated trapezoidal error and truncation scans", "[kernel]")
{
    CHECK(trapezoid_relative_error(0.5, 0.70) <= 1e-5);
    CHECK(trapezoid_relative_error(0.5, 0.90) > 1e-5);
    // Exact identity for the low truncation at a single point.
    const double t = 10.0, h = 0.78;
    const int m    = -20;
    const double measured = truncation_low_error(0.5, h, m, t);
    CHECK(measured > 0.0);
    CHECK(measured <= 1.0 - specfun::upper_incomplete_gamma(0.5, t * std::exp(m * h)) / specfun::gamma_fn(0.5) + 1e-5);
    CHECK(truncation_high_error(0.5, h, 10, 1e-10) > truncation_high_error(0.5, h, 10, 1e2) * 0.0);
}
