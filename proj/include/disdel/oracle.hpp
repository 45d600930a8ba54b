///
/// \file oracle.hpp
///
/// Brute-force references: direct quadrature of convolution integrals,
/// closed-form solutions of the test problems, and the theta-method
/// recursion for the auxiliary chains with its a-priori bounds.
///
#ifndef DISDEL_ORACLE_HPP
#define DISDEL_ORACLE_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "disdel/builtin_problems.hpp"
#include "disdel/error.hpp"

namespace disdel::oracle {

// ---------------------------------------------------------------------------
// Direct quadrature
// ---------------------------------------------------------------------------

struct QuadratureSpec
{
    int panels          = 4;    ///< sub-panels per geometric layer and unit length
    double grading_ratio = 0.15; ///< geometric layer ratio toward the singular end
    int gauss_order     = 8;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
{
    disdel::detail::require(n >= 2, "gauss_legendre: order must be at least 2");
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i)
    {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k)
            {
                const double p2 = p1;
                p1              = p0;
                p0              = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp            = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
        x[a] = -z;
        x[b] = z;
        w[a] = w[b] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

namespace detail {

// int_{u0}^{t} k(u) g(t - u) du over layers [u0 + L r^{j+1}, u0 + L r^j],
// L = t - u0, until three consecutive layers are below roundoff.
inline double graded_sum(const std::function<double(double)>& k, const std::function<double(double)>& g, double t,
                         double u0, const QuadratureSpec& spec, const std::vector<double>& x,
                         const std::vector<double>& w)
{
    double sum   = 0.0;
    double hi    = t - u0;
    int quiet    = 0;
    for (int j = 0; j < 20000 && quiet < 3; ++j)
    {
        const double lo    = hi * spec.grading_ratio;
        // Panels no wider than 1/spec.panels in absolute time.
        const int count    = spec.panels * static_cast<int>(std::max(1.0, std::ceil(hi - lo)));
        const double width = (hi - lo) / count;
        double layer       = 0.0;
        for (int p = 0; p < count; ++p)
        {
            const double c = lo + (p + 0.5) * width;
            for (std::size_t q = 0; q < x.size(); ++q)
            {
                const double u = u0 + c + 0.5 * width * x[q];
                layer += 0.5 * width * w[q] * k(u) * g(t - u);
            }
        }
        sum += layer;
        quiet = std::abs(layer) <= 1e-17 * std::abs(sum) ? quiet + 1 : 0;
        hi    = lo;
    }
    return sum;
}

} // namespace detail

/// int_0^t k(t - s) g(s) ds by composite Gauss-Legendre on a geometric mesh
/// clustered at s = t - support_start (the kernel singularity or onset).
/// Doubling the panels must change the value by < 1e-10 relative.
inline double convolve_direct(const std::function<double(double)>& kernel, const std::function<double(double)>& g,
                              double t, const QuadratureSpec& spec = {}, double support_start = 0.0)
{
    disdel::detail::require(spec.panels >= 1 && spec.gauss_order >= 2, "convolve_direct: invalid quadrature spec");
    disdel::detail::require(spec.grading_ratio > 0.0 && spec.grading_ratio < 1.0,
                            "convolve_direct: grading ratio must lie in (0, 1)");
    disdel::detail::require(support_start >= 0.0, "convolve_direct: support start must be nonnegative");
    if (t <= support_start)
        return 0.0;
    const auto [x, w] = gauss_legendre(spec.gauss_order);
    const double coarse = detail::graded_sum(kernel, g, t, support_start, spec, x, w);
    QuadratureSpec fine = spec;
    fine.panels *= 2;
    const double value = detail::graded_sum(kernel, g, t, support_start, fine, x, w);
    if (std::abs(value - coarse) > 1e-10 * std::abs(value) + 1e-300)
        throw NumericalFailure("convolve_direct: panel doubling changed the result by " +
                               std::to_string(std::abs(value - coarse) / std::abs(value)));
    return value;
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Exact or reference evaluators: example1_solution, example1_integral,
/// example2_reference (constant value at t = 10), chemo_A_of_t (set 1).
inline std::function<double(double)> closed_form(const std::string& name, int chemo_set = 1)
{
    if (name == "example1_solution")
        return example1_solution;
    if (name == "example1_integral")
        return example1_integral;
    if (name == "example2_reference")
        return [](double) { return example2_reference; };
    if (name == "chemo_A_of_t")
    {
        const auto c = chemo_params(chemo_set);
        return [c](double t) { return solve_algebraic_chemo(c.a0, c.km, c.v, c.vmax, t, 0.0); };
    }
    throw DomainError("closed_form: unknown name '" + name + "'");
}

// ---------------------------------------------------------------------------
// Theta-method recursion on one auxiliary chain
// ---------------------------------------------------------------------------

struct ThetaBoundResult
{
    std::vector<double> max_magnitude; ///< max_k |z^k_l|, l = 0..m
    std::vector<double> bound;         ///< a-priori bound per component
    bool pass = false;
};

inline double theta_R(double theta, double mu) { return (1.0 + (1.0 - theta) * mu) / (1.0 - theta * mu); }
inline double theta_S(double theta, double mu) { return 1.0 / (1.0 - theta * mu); }

/// Runs z^{k+1} = R(dt J) z^k + dt S(dt J) e_0 g^{k+1} with J lower
/// bidiagonal (diagonal -gamma, subdiagonal 1..m) and checks
///   l = 0: |z_0| <= dt |S| G (1 - |R|^{k+1})/(1 - |R|),
///   l = 1: |z_1| <= dt^2 (|R' S| sum j |R|^{j-1} + |S'| sum |R|^j) G,
///   l >= 2: |z_l| <= dt G sum_j |(R^j S e_0)_l| (triangle inequality).
/// g_samples is cycled; its sup is G.
inline ThetaBoundResult theta_recursion_bound_check(double theta, double gamma, double dt, int m, int steps,
                                                    const std::vector<double>& g_samples = {1.0})
{
    disdel::detail::require(theta > 0.0 && theta <= 1.0, "theta harness: theta must lie in (0, 1]");
    disdel::detail::require(gamma > 0.0 && dt > 0.0, "theta harness: gamma and dt must be positive");
    disdel::detail::require(m >= 0 && m <= 8 && steps >= 1, "theta harness: need 0 <= m <= 8, steps >= 1");
    disdel::detail::require(!g_samples.empty(), "theta harness: empty g samples");
    const double mu = -gamma * dt;
    const double r  = theta_R(theta, mu);
    if (!(std::abs(r) < 1.0))
        throw DomainError("theta harness: |R(mu)| >= 1");
    double big_g = 0.0;
    for (double g : g_samples)
        big_g = std::max(big_g, std::abs(g));

    const std::size_t n = static_cast<std::size_t>(m) + 1;
    const double diag   = 1.0 + theta * gamma * dt;          // I - theta dt J
    const double expl   = 1.0 - (1.0 - theta) * gamma * dt;  // I + (1 - theta) dt J, diagonal
    // (I - theta dt J) x = b  by forward substitution.
    auto solve = [&](std::vector<double>& b) {
        for (std::size_t l = 0; l < n; ++l)
        {
            const double sub = l == 0 ? 0.0 : theta * dt * static_cast<double>(l) * b[l - 1];
            b[l]             = (b[l] + sub) / diag;
        }
    };
    auto apply_explicit = [&](const std::vector<double>& z) {
        std::vector<double> out(n);
        for (std::size_t l = 0; l < n; ++l)
            out[l] = expl * z[l] + (l == 0 ? 0.0 : (1.0 - theta) * dt * static_cast<double>(l) * z[l - 1]);
        return out;
    };

    ThetaBoundResult res;
    res.max_magnitude.assign(n, 0.0);
    std::vector<double> z(n, 0.0);
    for (int k = 0; k < steps; ++k)
    {
        std::vector<double> b = apply_explicit(z);
        b[0] += dt * g_samples[static_cast<std::size_t>(k) % g_samples.size()];
        solve(b);
        z = std::move(b);
        for (std::size_t l = 0; l < n; ++l)
            res.max_magnitude[l] = std::max(res.max_magnitude[l], std::abs(z[l]));
    }

    // Bounds.
    const double ar = std::abs(r);
    const double s  = theta_S(theta, mu);
    const double dr = 1.0 / ((1.0 - theta * mu) * (1.0 - theta * mu));
    const double ds = theta / ((1.0 - theta * mu) * (1.0 - theta * mu));
    double geo = 0.0, dgeo = 0.0, pw = 1.0;
    for (int j = 0; j < steps; ++j)
    {
        geo += pw;
        if (j + 1 < steps)
            dgeo += (j + 1) * pw;
        pw *= ar;
    }
    res.bound.assign(n, 0.0);
    res.bound[0] = dt * std::abs(s) * geo * big_g;
    if (n > 1)
        res.bound[1] = dt * dt * (std::abs(dr * s) * dgeo + std::abs(ds) * geo) * big_g;
    if (n > 2)
    {
        // w_j = R^j S e_0, accumulated in absolute value.
        std::vector<double> wv(n, 0.0);
        wv[0] = 1.0;
        solve(wv);
        std::vector<double> acc(n, 0.0);
        for (int j = 0; j < steps; ++j)
        {
            for (std::size_t l = 0; l < n; ++l)
                acc[l] += std::abs(wv[l]);
            auto next = apply_explicit(wv);
            solve(next);
            wv = std::move(next);
        }
        for (std::size_t l = 2; l < n; ++l)
            res.bound[l] = dt * acc[l] * big_g;
    }
    res.pass = true;
    for (std::size_t l = 0; l < n; ++l)
        if (res.max_magnitude[l] > res.bound[l] * (1.0 + 1e-10))
            res.pass = false;
    return res;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    disdel::detail::require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Fitted exponent of max |z_l| against gamma.
inline double theta_decay_exponent(double theta, const std::vector<double>& gammas, double dt, int m, int l,
                                   int steps = 200)
{
    std::vector<double> mags;
    for (double g : gammas)
        mags.push_back(theta_recursion_bound_check(theta, g, dt, m, steps).max_magnitude[static_cast<std::size_t>(l)]);
    return loglog_slope(gammas, mags);
}

} // namespace disdel::oracle

#endif // DISDEL_ORACLE_HPP
