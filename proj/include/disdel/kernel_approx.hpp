///
/// \file kernel_approx.hpp
///
/// Approximation of t^{-alpha}-type convolution kernels (power law, gamma
/// density, type I Pareto density) by sums of exponentials times
/// polynomials, built from the trapezoidal discretization of
///
///   t^{-alpha} = 1/Gamma(alpha) * int_R exp(-t e^s) e^{alpha s} ds,
///
/// truncated to n = M, ..., N-1. Parameter selection (h, M, N, delta, T)
/// follows the a-priori error estimates so that the relative error on
/// [delta, T] stays below 3 eps.
///
#ifndef DISDEL_KERNEL_APPROX_HPP
#define DISDEL_KERNEL_APPROX_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "disdel/error.hpp"
#include "disdel/specfun.hpp"

namespace disdel {

/// Parameters of a truncated trapezoidal exponential sum.
struct ApproximationParams
{
    double eps     = 0.0; ///< target relative accuracy
    double h_quad  = 0.0; ///< trapezoidal step
    int m_lo       = 0;   ///< first index M (inclusive)
    int n_hi       = 0;   ///< last index N (exclusive)
    double delta   = 0.0; ///< left end of the validity interval
    double t_max   = 0.0; ///< right end of the validity interval
    double angle_a = 0.0; ///< strip half-width used in the step-size estimate

    int term_count() const { return n_hi - m_lo; }
};

/// One summand p(t) e^{-exponent t}, p(t) = sum_j coeffs[j] t^j.
struct ExponentialTerm
{
    double exponent = 0.0;
    std::vector<double> coeffs;

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// k(u) ~ sum_i p_i(u) e^{-gamma_i u}.
///
/// `delay` is nonzero for kernels supported on [delay, inf) (Pareto): the
/// sum then approximates k(delay + u) and the original density at t is
/// recovered as evaluate(t - delay) for t >= delay.
class ExponentialSumKernel
{
public:
    ExponentialSumKernel() = default;
    explicit ExponentialSumKernel(std::vector<ExponentialTerm> terms, double delay = 0.0)
        : terms_(std::move(terms)), delay_(delay)
    {
        detail::require(delay_ >= 0.0, "ExponentialSumKernel: delay must be nonnegative");
        for (const auto& term : terms_)
        {
            detail::require(std::isfinite(term.exponent), "ExponentialSumKernel: non-finite exponent");
            detail::require(!term.coeffs.empty(), "ExponentialSumKernel: empty polynomial");
            for (double c : term.coeffs)
                detail::require(std::isfinite(c), "ExponentialSumKernel: non-finite coefficient");
        }
    }

    const std::vector<ExponentialTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    double delay() const { return delay_; }

    /// Number of auxiliary states sum_i (m_i + 1).
    std::size_t state_count() const
    {
        std::size_t n = 0;
        for (const auto& term : terms_)
            n += term.coeffs.size();
        return n;
    }

    int max_degree() const
    {
        int m = 0;
        for (const auto& term : terms_)
            m = std::max(m, term.degree());
        return m;
    }

    bool has_distinct_exponents() const
    {
        std::set<double> seen;
        for (const auto& term : terms_)
            if (!seen.insert(term.exponent).second)
                return false;
        return true;
    }

    /// sum_i p_i(u) e^{-gamma_i u}
    double evaluate(double u) const
    {
        double sum = 0.0;
        for (const auto& term : terms_)
        {
            const double e = std::exp(-term.exponent * u);
            if (e == 0.0)
                continue;
            double p = 0.0;
            for (auto it = term.coeffs.rbegin(); it != term.coeffs.rend(); ++it)
                p = p * u + *it;
            sum += p * e;
        }
        return sum;
    }

    /// Approximation of the original density at t (zero before the delay).
    double evaluate_density(double t) const
    {
        if (t < delay_)
            return 0.0;
        return evaluate(t - delay_);
    }

private:
    std::vector<ExponentialTerm> terms_;
    double delay_ = 0.0;
};

/// kappa^{1-alpha}/Gamma(1-alpha) t^{-alpha} e^{-kappa t}; alpha in (-2, 1).
struct GammaDistribution
{
    double kappa = 0.0;
    double alpha = 0.0;
};

/// alpha beta^alpha t^{-alpha-1} for t >= beta, zero before.
struct ParetoTypeI
{
    double alpha = 0.0;
    double beta  = 0.0;
};

/// t^{-alpha}, alpha in (0, 1).
struct RawPowerLaw
{
    double alpha = 0.0;
};

using KernelSpec = std::variant<GammaDistribution, ParetoTypeI, RawPowerLaw>;

inline void validate(const KernelSpec& spec)
{
    std::visit(
        [](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, GammaDistribution>)
            {
                detail::require(k.kappa > 0.0, "GammaDistribution: kappa must be positive");
                detail::require(k.alpha > -2.0 && k.alpha < 1.0,
                                "GammaDistribution: alpha must lie in (-2, 1)");
                detail::require(k.alpha != 0.0 && k.alpha != -1.0,
                                "GammaDistribution: integer alpha is not supported");
            }
            else if constexpr (std::is_same_v<K, ParetoTypeI>)
            {
                detail::require(k.alpha > 0.0 && k.beta > 0.0,
                                "ParetoTypeI: alpha and beta must be positive");
            }
            else
            {
                detail::require(k.alpha > 0.0 && k.alpha < 1.0, "RawPowerLaw: alpha must lie in (0, 1)");
            }
        },
        spec);
}

/// Exact kernel value at t > 0.
inline double density(const KernelSpec& spec, double t)
{
    return std::visit(
        [t](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, GammaDistribution>)
            {
                const double log_norm =
                    (1.0 - k.alpha) * std::log(k.kappa) - specfun::log_gamma(1.0 - k.alpha);
                return std::exp(log_norm - k.alpha * std::log(t) - k.kappa * t);
            }
            else if constexpr (std::is_same_v<K, ParetoTypeI>)
            {
                if (t < k.beta)
                    return 0.0;
                return k.alpha * std::pow(k.beta, k.alpha) * std::pow(t, -k.alpha - 1.0);
            }
            else
            {
                return std::pow(t, -k.alpha);
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Parameter selection
// ---------------------------------------------------------------------------

struct StepAndAngle
{
    double h_quad  = 0.0;
    double angle_a = 0.0;
};

/// Near-maximal trapezoidal step h (and strip half-width a) with a-priori
/// relative error 2 (cos a)^{-alpha} / (e^{2 pi a/h} - 1) <= eps.
inline StepAndAngle trapezoid_step_and_angle(double alpha, double eps)
{
    detail::require(alpha > 0.0 && alpha < 2.0, "trapezoid_step_and_angle: alpha must lie in (0, 2)");
    detail::require(eps > 0.0 && eps < 1.0, "trapezoid_step_and_angle: eps must lie in (0, 1)");
    const double pi = std::numbers::pi;
    const double a  = 0.5 * pi * (1.0 - alpha / ((alpha + 1.0) * std::log(1.0 / eps)));
    const double h  = 2.0 * pi * a / std::log1p(2.0 / eps * std::pow(std::cos(a), -alpha));
    return {h, a};
}

/// A-priori trapezoidal relative error bound for given (alpha, h, a).
inline double trapezoid_error_bound(double alpha, double h, double a)
{
    return 2.0 * std::pow(std::cos(a), -alpha) / std::expm1(2.0 * std::numbers::pi * a / h);
}

namespace detail {

inline int lower_index(double log_x_lower, double t_max, double h)
{
    return static_cast<int>(std::floor((log_x_lower - std::log(t_max)) / h));
}

inline int upper_index(double x_upper, double delta, double h)
{
    return static_cast<int>(std::ceil((std::log(x_upper) - std::log(delta)) / h));
}

} // namespace detail

/// Parameters for the gamma density with alpha in (0, 1).
///
/// T solves (kappa T)^{-alpha} e^{-kappa T} / Gamma(1-alpha) = eps and is
/// clipped to t_f; delta solves (kappa delta)^{1-alpha}/Gamma(2-alpha) = eps
/// and is raised to delta_min; M = floor, N = ceil of the defining
/// equalities T e^{Mh} = x_*, delta e^{Nh} = x^*.
inline ApproximationParams gamma_params(double alpha, double kappa, double eps, double delta_min,
                                        double t_f)
{
    detail::require(alpha > 0.0 && alpha < 1.0, "gamma_params: alpha must lie in (0, 1)");
    detail::require(kappa > 0.0, "gamma_params: kappa must be positive");
    detail::require(eps > 0.0 && eps < 1.0, "gamma_params: eps must lie in (0, 1)");
    detail::require(delta_min >= 0.0, "gamma_params: delta_min must be nonnegative");
    detail::require(t_f > 0.0, "gamma_params: t_f must be positive");

    ApproximationParams p;
    p.eps            = eps;
    const auto step  = trapezoid_step_and_angle(alpha, eps);
    p.h_quad         = step.h_quad;
    p.angle_a        = step.angle_a;

    // Tail condition in log form, strictly decreasing in T.
    const double log_eps   = std::log(eps);
    const double lg1ma     = specfun::log_gamma(1.0 - alpha);
    auto tail = [&](double t) { return -alpha * std::log(kappa * t) - kappa * t - lg1ma - log_eps; };
    double lo = 1e-300 / kappa;
    double hi = 1.0 / kappa;
    int guard = 0;
    while (tail(hi) > 0.0)
    {
        lo = hi;
        hi *= 2.0;
        if (++guard > 2000)
            throw NumericalFailure("gamma_params: cannot bracket T");
    }
    const double t_tail = specfun::solve_scalar_root(tail, lo, hi, 1e-13);
    p.t_max = std::min(t_f, t_tail);

    const double log_x_lower = (specfun::log_gamma(alpha + 1.0) + log_eps) / alpha;
    const double x_upper     = -std::log(specfun::gamma_fn(alpha) * eps);
    p.m_lo                   = detail::lower_index(log_x_lower, p.t_max, p.h_quad);

    const double log_delta =
        (log_eps + specfun::log_gamma(2.0 - alpha)) / (1.0 - alpha) - std::log(kappa);
    p.delta = std::max(std::exp(log_delta), delta_min);
    p.n_hi  = detail::upper_index(x_upper, p.delta, p.h_quad);
    return p;
}

/// Parameters for the type I Pareto density (approximating t^{-alpha-1}
/// on [beta, T]); delta = beta independent of eps.
inline ApproximationParams pareto_params(double alpha, double beta, double eps, double t_f)
{
    detail::require(alpha > 0.0 && beta > 0.0, "pareto_params: alpha and beta must be positive");
    detail::require(eps > 0.0 && eps < 1.0, "pareto_params: eps must lie in (0, 1)");
    detail::require(t_f > 0.0, "pareto_params: t_f must be positive");

    ApproximationParams p;
    p.eps = eps;
    // beta eps^{-1/alpha} overflows for small alpha; compare in logs.
    const double log_t_tail = std::log(beta) - std::log(eps) / alpha;
    p.t_max                 = log_t_tail < std::log(t_f) ? std::exp(log_t_tail) : t_f;

    const double pi = std::numbers::pi;
    p.angle_a       = 0.5 * pi * (1.0 - (alpha + 1.0) / ((alpha + 2.0) * std::log(1.0 / eps)));
    p.h_quad = 2.0 * pi * p.angle_a / std::log1p(2.0 / eps * std::pow(std::cos(p.angle_a), -(alpha + 1.0)));

    const double log_x_lower = specfun::log_gamma(alpha + 2.0) + std::log(eps);
    const double x_upper     = -std::log(specfun::gamma_fn(alpha + 1.0) * eps);
    p.m_lo                   = detail::lower_index(log_x_lower, p.t_max, p.h_quad);
    p.delta                  = beta;
    p.n_hi                   = detail::upper_index(x_upper, beta, p.h_quad);
    return p;
}

/// Parameters for the bare power law t^{-alpha} on a caller-chosen
/// interval [delta, t_max], alpha in (0, 2).
inline ApproximationParams power_law_params(double alpha, double eps, double delta, double t_max)
{
    detail::require(alpha > 0.0 && alpha < 2.0, "power_law_params: alpha must lie in (0, 2)");
    detail::require(eps > 0.0 && eps < 1.0, "power_law_params: eps must lie in (0, 1)");
    detail::require(delta > 0.0 && delta < t_max, "power_law_params: need 0 < delta < t_max");
    ApproximationParams p;
    p.eps           = eps;
    const auto step = trapezoid_step_and_angle(alpha, eps);
    p.h_quad        = step.h_quad;
    p.angle_a       = step.angle_a;
    p.delta         = delta;
    p.t_max         = t_max;
    const double log_x_lower = (specfun::log_gamma(alpha + 1.0) + std::log(eps)) / alpha;
    // x^* must be at least 1 for the tail estimate Gamma(a,x) <= x^{a-1} e^{-x}.
    const double x_upper = std::max(1.0, -std::log(specfun::gamma_fn(alpha) * eps));
    p.m_lo               = detail::lower_index(log_x_lower, t_max, p.h_quad);
    p.n_hi               = detail::upper_index(x_upper, delta, p.h_quad);
    return p;
}

// ---------------------------------------------------------------------------
// Exponential-sum construction
// ---------------------------------------------------------------------------

namespace detail {

inline void check_params(const ApproximationParams& p)
{
    require(p.h_quad > 0.0, "ApproximationParams: h_quad must be positive");
    require(p.m_lo < p.n_hi, "ApproximationParams: need M < N");
}

// Coefficients are formed in log space; alpha n h beyond half the overflow
// threshold would leave no room for the compensating structure.
inline void check_growth(double alpha, int n, double h)
{
    static const double limit = 0.5 * std::log(std::numeric_limits<double>::max());
    if (alpha * n * h > limit)
        throw NumericalFailure("exponential sum: coefficient e^{alpha n h} too large (alpha n h = " +
                               std::to_string(alpha * n * h) + ")");
}

// Terms h/Gamma(alpha) e^{alpha n h} t^degree e^{-(e^{nh} + shift) t},
// scaled by exp(log_scale).
inline std::vector<ExponentialTerm> power_law_terms(double alpha, const ApproximationParams& p,
                                                    double log_scale, double exponent_shift,
                                                    int degree)
{
    check_params(p);
    std::vector<ExponentialTerm> terms;
    terms.reserve(static_cast<std::size_t>(p.term_count()));
    const double log_base = std::log(p.h_quad) - specfun::log_gamma(alpha) + log_scale;
    for (int n = p.m_lo; n < p.n_hi; ++n)
    {
        check_growth(alpha, n, p.h_quad);
        ExponentialTerm term;
        term.exponent = std::exp(n * p.h_quad) + exponent_shift;
        term.coeffs.assign(static_cast<std::size_t>(degree) + 1, 0.0);
        term.coeffs[static_cast<std::size_t>(degree)] = std::exp(log_base + alpha * n * p.h_quad);
        terms.push_back(std::move(term));
    }
    return terms;
}

} // namespace detail

/// T_M^N(t,h) = h/Gamma(alpha) sum_{n=M}^{N-1} e^{alpha n h} e^{-e^{nh} t}.
inline ExponentialSumKernel build_power_law_sum(double alpha, const ApproximationParams& params)
{
    detail::require(alpha > 0.0 && alpha < 2.0, "build_power_law_sum: alpha must lie in (0, 2)");
    return ExponentialSumKernel(detail::power_law_terms(alpha, params, 0.0, 0.0, 0));
}

/// Gamma density with alpha in (0, 1); exponents e^{nh} + kappa.
inline ExponentialSumKernel build_gamma_kernel_sum(const GammaDistribution& spec,
                                                   const ApproximationParams& params)
{
    validate(spec);
    detail::require(spec.alpha > 0.0, "build_gamma_kernel_sum: alpha must lie in (0, 1)");
    const double log_norm = (1.0 - spec.alpha) * std::log(spec.kappa) - specfun::log_gamma(1.0 - spec.alpha);
    return ExponentialSumKernel(detail::power_law_terms(spec.alpha, params, log_norm, spec.kappa, 0));
}

/// Gamma density with alpha in (-1, 0) or (-2, -1): t^{-alpha} is split as
/// t * t^{-(alpha+1)} or t^2 * t^{-(alpha+2)}, giving degree-1 or degree-2
/// polynomial factors. `params` must be computed for the shifted exponent.
inline ExponentialSumKernel build_gamma_kernel_negative_alpha(const GammaDistribution& spec,
                                                              const ApproximationParams& params)
{
    validate(spec);
    detail::require(spec.alpha < 0.0, "build_gamma_kernel_negative_alpha: alpha must be negative");
    const int degree      = spec.alpha > -1.0 ? 1 : 2;
    const double shifted  = spec.alpha + degree;
    const double log_norm = (1.0 - spec.alpha) * std::log(spec.kappa) - specfun::log_gamma(1.0 - spec.alpha);
    return ExponentialSumKernel(detail::power_law_terms(shifted, params, log_norm, spec.kappa, degree));
}

/// Type I Pareto density, delayed form: term n carries
/// alpha beta^alpha h/Gamma(alpha+1) e^{(alpha+1) n h} e^{-gamma_n beta}
/// with gamma_n = e^{nh}, so that evaluate(t - beta) ~ k(t) for t >= beta.
inline ExponentialSumKernel build_pareto_kernel_sum(const ParetoTypeI& spec, const ApproximationParams& params)
{
    validate(spec);
    detail::check_params(params);
    const double exponent = spec.alpha + 1.0;
    const double log_base = std::log(spec.alpha) + spec.alpha * std::log(spec.beta) + std::log(params.h_quad) -
                            specfun::log_gamma(exponent);
    std::vector<ExponentialTerm> terms;
    for (int n = params.m_lo; n < params.n_hi; ++n)
    {
        detail::check_growth(exponent, n, params.h_quad);
        const double gamma_n = std::exp(n * params.h_quad);
        ExponentialTerm term;
        term.exponent = gamma_n;
        term.coeffs   = {std::exp(log_base + exponent * n * params.h_quad - gamma_n * spec.beta)};
        terms.push_back(std::move(term));
    }
    return ExponentialSumKernel(std::move(terms), spec.beta);
}

/// Parameters and exponential sum for a kernel spec, dispatching to the
/// gamma (including negative alpha), Pareto, or power-law constructions.
struct KernelApproximation
{
    ApproximationParams params;
    ExponentialSumKernel kernel;
    double approximated_exponent = 0.0; ///< exponent of the t^{-a} factor that was discretized
};

inline KernelApproximation approximate_kernel(const KernelSpec& spec, double eps, double t_f,
                                              double delta_min = 0.0)
{
    validate(spec);
    return std::visit(
        [&](const auto& k) -> KernelApproximation {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, GammaDistribution>)
            {
                if (k.alpha > 0.0)
                {
                    auto p = gamma_params(k.alpha, k.kappa, eps, delta_min, t_f);
                    return {p, build_gamma_kernel_sum(k, p), k.alpha};
                }
                const double shifted = k.alpha > -1.0 ? k.alpha + 1.0 : k.alpha + 2.0;
                if (shifted >= 1.0)
                    throw DomainError("approximate_kernel: shifted exponent must lie in (0, 1)");
                auto p = gamma_params(shifted, k.kappa, eps, delta_min, t_f);
                return {p, build_gamma_kernel_negative_alpha(k, p), shifted};
            }
            else if constexpr (std::is_same_v<K, ParetoTypeI>)
            {
                auto p = pareto_params(k.alpha, k.beta, eps, t_f);
                return {p, build_pareto_kernel_sum(k, p), k.alpha + 1.0};
            }
            else
            {
                const double delta = std::max(delta_min, std::pow(eps, 1.0 / (1.0 - k.alpha)));
                auto p             = power_law_params(k.alpha, eps, delta, t_f);
                return {p, build_power_law_sum(k.alpha, p), k.alpha};
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Error analysis
// ---------------------------------------------------------------------------

/// Logarithmically uniform grid of n points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t n)
{
    detail::require(lo > 0.0 && hi > lo && n >= 2, "log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> grid(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    grid.front() = lo;
    grid.back()  = hi;
    return grid;
}

/// Relative error |t^{-alpha} - T_M^N(t,h)| t^{alpha}.
inline double power_law_relative_error(double alpha, const ExponentialSumKernel& sum, double t)
{
    return std::abs(sum.evaluate(t) * std::pow(t, alpha) - 1.0);
}

/// t^{alpha} * h/Gamma(alpha) * sum_{n=lo}^{hi-1} e^{alpha n h - e^{nh} t}, each
/// term evaluated in the scaled variable s = nh + ln t.
inline double scaled_trapezoid_sum(double alpha, double h, double t, long lo, long hi)
{
    const double log_t = std::log(t);
    double sum         = 0.0;
    for (long n = lo; n < hi; ++n)
    {
        const double s = static_cast<double>(n) * h + log_t;
        sum += std::exp(alpha * s - std::exp(s));
    }
    return h * sum / specfun::gamma_fn(alpha);
}

namespace detail {

// Index window outside of which the summand e^{alpha s - e^s} is negligible.
inline std::pair<long, long> effective_window(double alpha, double h, double t)
{
    const double log_t = std::log(t);
    const double s_lo  = std::log(std::numeric_limits<double>::epsilon() * 1e-4) / alpha;
    const double s_hi  = 6.0;
    return {static_cast<long>(std::floor((s_lo - log_t) / h)), static_cast<long>(std::ceil((s_hi - log_t) / h)) + 1};
}

} // namespace detail

/// Sup over t of the relative error of the untruncated trapezoidal sum.
/// The error is periodic in ln t with period h, so one period is sampled.
inline double trapezoid_relative_error(double alpha, double h, int samples_per_period = 64)
{
    detail::require(alpha > 0.0 && h > 0.0, "trapezoid_relative_error: need alpha > 0, h > 0");
    double worst = 0.0;
    for (int k = 0; k < samples_per_period; ++k)
    {
        const double t = std::exp(h * k / samples_per_period);
        const auto [lo, hi] = detail::effective_window(alpha, h, t);
        worst = std::max(worst, std::abs(scaled_trapezoid_sum(alpha, h, t, lo, hi) - 1.0));
    }
    return worst;
}

/// Largest h with trapezoid_relative_error <= threshold: scan the grid
/// h_min, h_min + h_step, ... up to h_max, then bisect the first bracket.
inline double trapezoid_step_crossing(double alpha, double threshold, double h_min = 0.05, double h_max = 1.5,
                                      double h_step = 0.01)
{
    detail::require(threshold > 0.0 && threshold < 1.0, "trapezoid_step_crossing: threshold must lie in (0, 1)");
    detail::require(h_min > 0.0 && h_max > h_min && h_step > 0.0,
                    "trapezoid_step_crossing: need 0 < h_min < h_max and h_step > 0");
    if (trapezoid_relative_error(alpha, h_min) > threshold)
        throw DomainError("trapezoid_step_crossing: threshold already exceeded at h_min");
    double lo = h_min;
    for (int k = 1;; ++k)
    {
        const double h = std::min(h_max, h_min + k * h_step);
        if (trapezoid_relative_error(alpha, h) > threshold)
        {
            double hi = h;
            for (int it = 0; it < 50; ++it)
            {
                const double mid = 0.5 * (lo + hi);
                (trapezoid_relative_error(alpha, mid) > threshold ? hi : lo) = mid;
            }
            return lo;
        }
        if (h >= h_max)
            throw DomainError("trapezoid_step_crossing: threshold not exceeded up to h_max");
        lo = h;
    }
}

/// Measured relative truncation error at -inf, E_M(t,h) t^alpha.
inline double truncation_low_error(double alpha, double h, int m_lo, double t)
{
    const auto [lo, hi] = detail::effective_window(alpha, h, t);
    if (m_lo <= lo)
        return 0.0;
    return scaled_trapezoid_sum(alpha, h, t, lo, std::min<long>(m_lo, hi));
}

/// Measured relative truncation error at +inf, E^N(t,h) t^alpha.
inline double truncation_high_error(double alpha, double h, int n_hi, double t)
{
    const auto [lo, hi] = detail::effective_window(alpha, h, t);
    if (n_hi >= hi)
        return 0.0;
    return scaled_trapezoid_sum(alpha, h, t, std::max<long>(n_hi, lo), hi);
}

/// A-priori bounds and measured error at one point.
struct ErrorSample
{
    double t                = 0.0;
    double trapezoidal      = 0.0; ///< c_alpha from the strip estimate
    double truncation_low   = 0.0; ///< 1 - Gamma(alpha, t e^{Mh})/Gamma(alpha)
    double truncation_high  = 0.0; ///< Gamma(alpha, t e^{Nh})/Gamma(alpha)
    double measured         = 0.0; ///< |t^{-alpha} - T_M^N(t,h)| t^alpha

    double bound_total() const { return trapezoidal + truncation_low + truncation_high; }
};

inline std::vector<ErrorSample> error_report(double alpha, const ApproximationParams& params,
                                             const std::vector<double>& grid)
{
    detail::require(alpha > 0.0 && alpha < 2.0, "error_report: alpha must lie in (0, 2)");
    const auto sum       = build_power_law_sum(alpha, params);
    const double c_alpha = trapezoid_error_bound(alpha, params.h_quad, params.angle_a);
    std::vector<ErrorSample> out;
    out.reserve(grid.size());
    for (double t : grid)
    {
        detail::require(t > 0.0, "error_report: grid points must be positive");
        ErrorSample s;
        s.t               = t;
        s.trapezoidal     = c_alpha;
        s.truncation_low  = specfun::regularized_lower_gamma(alpha, t * std::exp(params.m_lo * params.h_quad));
        s.truncation_high = specfun::regularized_upper_gamma(alpha, t * std::exp(params.n_hi * params.h_quad));
        s.measured        = power_law_relative_error(alpha, sum, t);
        out.push_back(s);
    }
    return out;
}

} // namespace disdel

#endif // DISDEL_KERNEL_APPROX_HPP
