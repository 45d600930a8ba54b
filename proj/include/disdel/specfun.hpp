///
/// \file specfun.hpp
///
/// Scalar special functions used by the kernel-approximation formulas:
/// Gamma, incomplete Gamma, the error function, and a bracketing root finder.
///
#ifndef DISDEL_SPECFUN_HPP
#define DISDEL_SPECFUN_HPP

#include <array>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>

#include "disdel/error.hpp"

namespace disdel::specfun {

namespace detail {

// Lanczos approximation, g = 7, n = 9.
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_coeffs = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

template <std::floating_point T>
T lanczos_series(T xm1)
{
    T sum = T(lanczos_coeffs[0]);
    for (std::size_t k = 1; k < lanczos_coeffs.size(); ++k)
        sum += T(lanczos_coeffs[k]) / (xm1 + T(k));
    return sum;
}

template <std::floating_point T>
constexpr T eps_of()
{
    return std::numeric_limits<T>::epsilon();
}

//
// Lower incomplete gamma by the positive-term series
//   gamma(a,x) = x^a e^{-x} sum_n x^n / (a (a+1) ... (a+n)).
// Returns the series sum only (without the prefactor).
//
template <std::floating_point T>
T lower_gamma_series_sum(T a, T x)
{
    T term = T(1) / a;
    T sum  = term;
    for (int n = 1; n < 100000; ++n)
    {
        term *= x / (a + T(n));
        sum += term;
        if (std::abs(term) < std::abs(sum) * eps_of<T>())
            return sum;
    }
    throw NumericalFailure("lower incomplete gamma series did not converge");
}

//
// Continued fraction for Gamma(a,x) e^{x} x^{-a} (modified Lentz).
//
template <std::floating_point T>
T upper_gamma_cf(T a, T x)
{
    const T tiny = std::numeric_limits<T>::min() / eps_of<T>();
    T b = x + T(1) - a;
    T c = T(1) / tiny;
    T d = T(1) / b;
    T h = d;
    for (int i = 1; i < 100000; ++i)
    {
        const T an = -T(i) * (T(i) - a);
        b += T(2);
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d         = T(1) / d;
        const T del = d * c;
        h *= del;
        if (std::abs(del - T(1)) < eps_of<T>())
            return h;
    }
    throw NumericalFailure("incomplete gamma continued fraction did not converge");
}

} // namespace detail

/// Gamma function for x > 0 (Lanczos approximation).
template <std::floating_point T>
T gamma_fn(T x)
{
    disdel::detail::require(x > T(0), "gamma_fn: argument must be positive");
    if (x < T(0.5))
    {
        // Reflection keeps the Lanczos series in its accurate range.
        const T pi = std::numbers::pi_v<T>;
        return pi / (std::sin(pi * x) * gamma_fn(T(1) - x));
    }
    const T xm1 = x - T(1);
    const T t   = xm1 + T(detail::lanczos_g) + T(0.5);
    return std::sqrt(T(2) * std::numbers::pi_v<T>) * std::pow(t, xm1 + T(0.5)) *
           std::exp(-t) * detail::lanczos_series(xm1);
}

/// log Gamma(x) for x > 0; finite where gamma_fn overflows.
template <std::floating_point T>
T log_gamma(T x)
{
    disdel::detail::require(x > T(0), "log_gamma: argument must be positive");
    if (x < T(0.5))
    {
        const T pi = std::numbers::pi_v<T>;
        return std::log(pi / std::sin(pi * x)) - log_gamma(T(1) - x);
    }
    const T xm1 = x - T(1);
    const T t   = xm1 + T(detail::lanczos_g) + T(0.5);
    return T(0.5) * std::log(T(2) * std::numbers::pi_v<T>) + (xm1 + T(0.5)) * std::log(t) - t +
           std::log(detail::lanczos_series(xm1));
}

/// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
template <std::floating_point T>
T regularized_lower_gamma(T a, T x)
{
    disdel::detail::require(a > T(0) && x >= T(0), "regularized_lower_gamma: need a > 0, x >= 0");
    if (x == T(0))
        return T(0);
    const T log_prefactor = a * std::log(x) - x - log_gamma(a);
    if (x < a + T(1))
        return std::exp(log_prefactor) * detail::lower_gamma_series_sum(a, x);
    return T(1) - std::exp(log_prefactor) * detail::upper_gamma_cf(a, x);
}

/// Regularized upper incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
template <std::floating_point T>
T regularized_upper_gamma(T a, T x)
{
    disdel::detail::require(a > T(0) && x >= T(0), "regularized_upper_gamma: need a > 0, x >= 0");
    if (x == T(0))
        return T(1);
    const T log_prefactor = a * std::log(x) - x - log_gamma(a);
    if (x < a + T(1))
        return T(1) - std::exp(log_prefactor) * detail::lower_gamma_series_sum(a, x);
    return std::exp(log_prefactor) * detail::upper_gamma_cf(a, x);
}

/// Upper incomplete gamma Gamma(a,x) = int_x^inf e^{-s} s^{a-1} ds.
///
/// Taylor series of the lower function for x < a+1, continued fraction
/// otherwise.
template <std::floating_point T>
T upper_incomplete_gamma(T a, T x)
{
    disdel::detail::require(a > T(0), "upper_incomplete_gamma: a must be positive");
    disdel::detail::require(x >= T(0), "upper_incomplete_gamma: x must be nonnegative");
    if (x == T(0))
        return gamma_fn(a);
    if (x < a + T(1))
    {
        const T lower = std::exp(a * std::log(x) - x) * detail::lower_gamma_series_sum(a, x);
        return gamma_fn(a) - lower;
    }
    return std::exp(a * std::log(x) - x) * detail::upper_gamma_cf(a, x);
}

namespace detail {

// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (1*3*...*(2n+1)); all
// terms positive, used for |x| < 2.
template <std::floating_point T>
T erf_series(T x)
{
    const T x2 = x * x;
    T term     = x;
    T sum      = x;
    for (int n = 1; n < 10000; ++n)
    {
        term *= T(2) * x2 / T(2 * n + 1);
        sum += term;
        if (std::abs(term) < std::abs(sum) * eps_of<T>())
            break;
    }
    return T(2) / std::sqrt(std::numbers::pi_v<T>) * std::exp(-x2) * sum;
}

// erfc(x) for x > 0 from the continued fraction
//   erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
template <std::floating_point T>
T erfc_cf(T x)
{
    const T tiny = std::numeric_limits<T>::min() / eps_of<T>();
    T f          = x;
    T c          = x;
    T d          = T(0);
    for (int k = 1; k < 100000; ++k)
    {
        const T ak = T(k) / T(2);
        d          = x + ak * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = x + ak / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d           = T(1) / d;
        const T del = c * d;
        f *= del;
        if (std::abs(del - T(1)) < eps_of<T>())
            return std::exp(-x * x) / (std::sqrt(std::numbers::pi_v<T>) * f);
    }
    throw NumericalFailure("erfc continued fraction did not converge");
}

inline constexpr double erf_crossover = 2.0;

} // namespace detail

/// Error function. Series for |x| < 2, continued fraction for erfc beyond.
template <std::floating_point T>
T erf(T x)
{
    if (std::isnan(x))
        return x;
    const T ax = std::abs(x);
    T value;
    if (ax < T(detail::erf_crossover))
        value = detail::erf_series(ax);
    else if (ax > T(27))
        value = T(1);
    else
        value = T(1) - detail::erfc_cf(ax);
    return x < T(0) ? -value : value;
}

/// Complementary error function.
template <std::floating_point T>
T erfc(T x)
{
    if (x < T(detail::erf_crossover))
        return T(1) - erf(x);
    if (x > T(27))
        return T(0);
    return detail::erfc_cf(x);
}

/// Root of a monotone function on a sign-changing bracket [lo, hi].
///
/// Secant steps are taken inside the bracket and fall back to bisection
/// whenever they leave it or stall. Returns x with |fn(x)| <= tol or a
/// bracket narrower than tol * max(1, |x|).
template <std::floating_point T, class Fn>
    requires std::invocable<Fn&, T>
T solve_scalar_root(Fn&& fn, T lo, T hi, T tol)
{
    disdel::detail::require(lo < hi, "solve_scalar_root: need lo < hi");
    disdel::detail::require(tol > T(0), "solve_scalar_root: tol must be positive");
    T flo = fn(lo);
    T fhi = fn(hi);
    if (flo == T(0))
        return lo;
    if (fhi == T(0))
        return hi;
    if ((flo > T(0)) == (fhi > T(0)))
        throw NumericalFailure("solve_scalar_root: no sign change on bracket");

    T x  = lo;
    T fx = flo;
    for (int it = 0; it < 500; ++it)
    {
        // Secant through the bracket ends; bisect when it is unhelpful.
        T candidate = hi - fhi * (hi - lo) / (fhi - flo);
        const T width = hi - lo;
        if (!(candidate > lo + T(0.01) * width && candidate < hi - T(0.01) * width) || it % 4 == 3)
            candidate = lo + T(0.5) * width;
        x  = candidate;
        fx = fn(x);
        if (std::abs(fx) <= tol)
            return x;
        if ((fx > T(0)) == (flo > T(0)))
        {
            lo  = x;
            flo = fx;
        }
        else
        {
            hi  = x;
            fhi = fx;
        }
        if (hi - lo <= tol * std::max(T(1), std::abs(x)))
            return std::abs(flo) < std::abs(fhi) ? lo : hi;
    }
    throw NumericalFailure("solve_scalar_root: iteration limit reached");
}

} // namespace disdel::specfun

#endif // DISDEL_SPECFUN_HPP
