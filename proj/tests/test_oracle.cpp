#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "disdel/kernel_approx.hpp"
#include "disdel/oracle.hpp"

using namespace disdel;
using namespace disdel::oracle;

TEST_CASE("gauss-legendre rule integrates polynomials exactly", "[oracle]")
{
    const auto [x, w] = gauss_legendre(8);
    for (int k = 0; k < 16; ++k)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += w[i] * std::pow(x[i], k);
        const double exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
        CHECK(s == Catch::Approx(exact).margin(1e-14));
    }
}

TEST_CASE("direct convolution of simple kernels", "[oracle]")
{
    const auto one = [](double) { return 1.0; };
    for (double t : {0.1, 1.0, 7.0})
        CHECK(convolve_direct([](double u) { return std::exp(-u); }, one, t) ==
              Catch::Approx(1.0 - std::exp(-t)).epsilon(1e-13));
    CHECK(convolve_direct(one, one, 0.0) == 0.0);
}

TEST_CASE("direct convolution reproduces the example-1 integral", "[oracle]")
{
    const KernelSpec k = GammaDistribution{0.25, 0.5};
    for (double t : {0.01, 0.5, 3.0, 20.0, 50.0})
    {
        const double v = convolve_direct([&](double u) { return density(k, u); }, [](double s) { return s / 2.0; }, t);
        CHECK(v == Catch::Approx(closed_form("example1_integral")(t)).epsilon(1e-11));
    }
    CHECK(closed_form("example1_integral")(1e-300) == Catch::Approx(0.0).margin(1e-150));
}

TEST_CASE("pareto convolution is independent of the quadrature settings", "[oracle]")
{
    const KernelSpec k = ParetoTypeI{0.5, 1.0};
    const auto kern    = [&](double u) { return density(k, u); };
    const auto g       = [](double s) { return s; };
    const double a     = convolve_direct(kern, g, 2.0, {4, 0.15, 8}, 1.0);
    const double b     = convolve_direct(kern, g, 2.0, {3, 0.3, 12}, 1.0);
    CHECK(a == Catch::Approx(b).epsilon(1e-10));
    // int_0^1 (1/2)(2 - s)^{-3/2} s ds in closed form.
    const double exact = 3.0 - 2.0 * std::sqrt(2.0);
    CHECK(a == Catch::Approx(exact).epsilon(1e-12));
    CHECK(convolve_direct(kern, g, 0.5, {}, 1.0) == 0.0);
}

TEST_CASE("quadrature self-consistency on random tuples", "[oracle][property]")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ua(0.05, 0.95), uk(0.05, 2.0), ut(0.05, 30.0), uw(0.1, 3.0);
    for (int i = 0; i < 20; ++i)
    {
        const KernelSpec k = GammaDistribution{uk(rng), ua(rng)};
        const double w     = uw(rng);
        const double t     = ut(rng);
        const auto kern    = [&](double u) { return density(k, u); };
        const auto g       = [&](double s) { return std::cos(w * s) + 1.5; };
        const double a     = convolve_direct(kern, g, t, {4, 0.15, 8});
        const double b     = convolve_direct(kern, g, t, {8, 0.15, 8});
        CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
    }
}

TEST_CASE("exponential sums against the exact density under convolution", "[oracle]")
{
    for (double alpha : {0.3, 0.5, 0.9})
        for (double eps : {1e-4, 1e-6})
        {
            const KernelSpec k  = GammaDistribution{0.25, alpha};
            const auto approx   = approximate_kernel(k, eps, 50.0);
            const auto& p       = approx.params;
            const auto one      = [](double) { return 1.0; };
            for (double t : {10.0 * p.delta, p.t_max / 10.0, p.t_max})
            {
                const double exact = convolve_direct([&](double u) { return density(k, u); }, one, t);
                const double sum   = convolve_direct([&](double u) { return approx.kernel.evaluate_density(u); }, one, t);
                // Below delta the sum is not an approximation; near delta the
                // error is measured against the unit total mass.
                const double scale = t > 1e3 * p.delta ? std::abs(exact) : 1.0;
                CHECK(std::abs(sum - exact) <= 5.0 * eps * scale);
            }
        }
}

TEST_CASE("closed forms", "[oracle]")
{
    CHECK(closed_form("example1_solution")(50.0) == 25.0);
    CHECK(closed_form("example2_reference")(10.0) == 0.570525788119);
    CHECK(closed_form("chemo_A_of_t")(0.0) == Catch::Approx(127.0));
    CHECK_THROWS_AS(closed_form("nope"), DomainError);
}

TEST_CASE("theta recursion obeys its bounds", "[oracle]")
{
    for (double theta : {0.5, 0.51, 1.0})
        for (double gamma : {1.0, 1e3, 1e6, 1e9, 1e12})
            for (int m : {0, 1, 2})
            {
                const auto r = theta_recursion_bound_check(theta, gamma, 0.1, m, 400);
                CHECK(r.pass);
            }
    // Implicit Euler: |z_0| <= G/gamma.
    const auto r = theta_recursion_bound_check(1.0, 1e6, 0.1, 0, 100);
    CHECK(r.max_magnitude[0] <= 1e-6 * (1.0 + 1e-12));
    CHECK_THROWS_AS(theta_recursion_bound_check(0.3, 1e3, 0.1, 0, 10), DomainError);
}

TEST_CASE("theta recursion decay exponents", "[oracle]")
{
    const std::vector<double> gammas{1e2, 1e3, 1e4, 1e5};
    for (double theta : {0.51, 1.0})
        for (int l = 0; l <= 2; ++l)
            CHECK(theta_decay_exponent(theta, gammas, 0.1, 2, l) == Catch::Approx(-(l + 1.0)).margin(0.3));
}

TEST_CASE("theta recursion with varying samples", "[oracle]")
{
    const std::vector<double> g{1.0, -0.5, 0.25, 0.8};
    const auto r = theta_recursion_bound_check(0.51, 1e3, 0.1, 2, 300, g);
    CHECK(r.pass);
}
