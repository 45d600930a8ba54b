///
/// \file builtin_problems.hpp
///
/// The three test problems: a scalar equation with a gamma kernel and a
/// known solution, a delay equation with a Pareto kernel and a discrete
/// lag, and the chemotherapy myelosuppression model (ODE and DAE forms).
///
#ifndef DISDEL_BUILTIN_PROBLEMS_HPP
#define DISDEL_BUILTIN_PROBLEMS_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "disdel/error.hpp"
#include "disdel/problem.hpp"
#include "disdel/specfun.hpp"

namespace disdel {

enum class Formulation
{
    ode,
    dae
};

inline Formulation parse_formulation(const std::string& s)
{
    if (s == "ode")
        return Formulation::ode;
    if (s == "dae")
        return Formulation::dae;
    throw DomainError("unknown formulation '" + s + "' (expected ode or dae)");
}

inline const char* to_string(Formulation f) { return f == Formulation::ode ? "ode" : "dae"; }

// ---------------------------------------------------------------------------
// Example 1
// ---------------------------------------------------------------------------

/// y' = (1 - y) erf(sqrt(t)/2) - e^{-t/4} sqrt(t/pi) + I + 1/2 with a
/// gamma kernel (kappa = 1/4, alpha = 1/2); exact solution y = t/2.
inline DistributedDelayProblem example1(double t_final = 50.0)
{
    DistributedDelayProblem p;
    p.name   = "example1";
    p.dim    = 1;
    p.kernel = GammaDistribution{0.25, 0.5};
    p.y0     = VectorXd::Zero(1);
    p.t0     = 0.0;
    p.tf     = t_final;
    p.rhs    = [](double t, const VectorXd& y, std::span<const VectorXd>, double integral,
               Eigen::Ref<VectorXd> out) {
        const double rt = std::sqrt(t);
        out[0] = (1.0 - y[0]) * specfun::erf(rt / 2.0) - std::exp(-t / 4.0) * rt / std::sqrt(std::numbers::pi) +
                 integral + 0.5;
    };
    p.g     = [](double, const VectorXd& y) { return y[0]; };
    p.jac_y = [](double t, const VectorXd&, std::span<const VectorXd>, double, Eigen::Ref<MatrixXd> out) {
        out(0, 0) = -specfun::erf(std::sqrt(t) / 2.0);
    };
    p.jac_i = [](double, const VectorXd&, std::span<const VectorXd>, double, Eigen::Ref<VectorXd> out) {
        out[0] = 1.0;
    };
    p.g_y = [](double, const VectorXd&, Eigen::Ref<VectorXd> out) { out[0] = 1.0; };
    return p;
}

inline double example1_solution(double t) { return t / 2.0; }

/// int_0^t k(t - s) s/2 ds for the example-1 kernel.
inline double example1_integral(double t)
{
    if (t <= 0.0)
        return 0.0;
    const double rt = std::sqrt(t);
    return (t - 2.0) / 2.0 * specfun::erf(rt / 2.0) + std::exp(-t / 4.0) * rt / std::sqrt(std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Example 2
// ---------------------------------------------------------------------------

inline constexpr double example2_reference = 0.570525788119;

/// y' = -5 I(t) - (y(t - tau) - 2)/(y + 1), tau = pi/4, Pareto kernel
/// (alpha = 1/2, beta = 1), y(t) = t for t <= 0.
inline DistributedDelayProblem example2(double t_final = 10.0)
{
    DistributedDelayProblem p;
    p.name    = "example2";
    p.dim     = 1;
    p.kernel  = ParetoTypeI{0.5, 1.0};
    p.delays  = {std::numbers::pi / 4.0};
    p.y0      = VectorXd::Zero(1);
    p.t0      = 0.0;
    p.tf      = t_final;
    p.history = [](double t, Eigen::Ref<VectorXd> out) { out[0] = t; };
    p.rhs     = [](double, const VectorXd& y, std::span<const VectorXd> delayed, double integral,
               Eigen::Ref<VectorXd> out) { out[0] = -5.0 * integral - (delayed[0][0] - 2.0) / (y[0] + 1.0); };
    p.g       = [](double, const VectorXd& y) { return y[0]; };
    p.jac_y   = [](double, const VectorXd& y, std::span<const VectorXd> delayed, double, Eigen::Ref<MatrixXd> out) {
        const double d = y[0] + 1.0;
        out(0, 0)      = (delayed[0][0] - 2.0) / (d * d);
    };
    p.jac_i = [](double, const VectorXd&, std::span<const VectorXd>, double, Eigen::Ref<VectorXd> out) {
        out[0] = -5.0;
    };
    p.g_y = [](double, const VectorXd&, Eigen::Ref<VectorXd> out) { out[0] = 1.0; };
    return p;
}

// ---------------------------------------------------------------------------
// Example 3: chemotherapy-induced myelosuppression
// ---------------------------------------------------------------------------

struct ChemoParams
{
    double nu;    ///< 1 - alpha
    double kappa;
    double w0;
    double gamma;
    double ks;
    double vmax;
    double km;
    double v;
    double a0 = 127.0;

    double alpha() const { return 1.0 - nu; }
};

inline ChemoParams chemo_params(int set)
{
    if (set == 1)
        return {0.964, 0.964 / 47.5, 14.4, 0.664, 0.0328, 77.2, 16.9, 1.35};
    if (set == 2)
        return {1.46, 1.46 / 55.6, 14.4, 0.507, 0.0213, 100.0, 22.0, 1.03};
    throw DomainError("chemo parameter set must be 1 or 2");
}

/// Drug amount A(t) from the algebraic relation
/// A = A0 exp(-(A - A0)/(Km V) - Vmax (t - t0)/Km), solved for u = ln A
/// by Newton's method inside a sign-changing bracket.
inline double solve_algebraic_chemo(double a0, double km, double v, double vmax, double t, double t0,
                                    double guess = 0.0)
{
    detail::require(a0 > 0.0 && km > 0.0 && v > 0.0 && vmax > 0.0, "solve_algebraic_chemo: parameters must be positive");
    detail::require(t >= t0, "solve_algebraic_chemo: need t >= t0");
    const double kv   = km * v;
    const double la0  = std::log(a0);
    const double decay = vmax * (t - t0) / km;
    auto g = [&](double u) { return u - la0 + (std::exp(u) - a0) / kv + decay; };

    double hi = la0 + a0 / kv - decay;
    double lo = hi - a0 / kv;
    if (g(lo) >= 0.0)
        return std::exp(lo);
    double u = guess > 0.0 ? std::log(guess) : 0.5 * (lo + hi);
    if (!(u > lo && u < hi))
        u = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it)
    {
        const double gu = g(u);
        if (gu > 0.0)
            hi = u;
        else
            lo = u;
        const double step = gu / (1.0 + std::exp(u) / kv);
        double next       = u - step;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - u) <= 1e-15 * std::max(1.0, std::abs(u)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(u)))
            return std::exp(next);
        u = next;
    }
    throw NumericalFailure("solve_algebraic_chemo: no convergence");
}

/// States (y, w, A); y feeds the gamma-kernel integral.
inline DistributedDelayProblem example3(int set, Formulation form, double t_final = 100.0)
{
    const ChemoParams c = chemo_params(set);
    DistributedDelayProblem p;
    p.name   = std::string("example3-") + to_string(form) + "-set" + std::to_string(set);
    p.dim    = 3;
    p.kernel = GammaDistribution{c.kappa, c.alpha()};
    p.y0     = Eigen::Vector3d(c.w0, c.w0, c.a0);
    p.t0     = 0.0;
    p.tf     = t_final;
    if (form == Formulation::dae)
        p.mass = Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal();

    const double t0 = p.t0;
    p.rhs = [c, form, t0](double t, const VectorXd& x, std::span<const VectorXd>, double integral,
                          Eigen::Ref<VectorXd> out) {
        const double y = x[0], w = x[1], a = x[2];
        out[0]         = (c.kappa * std::pow(c.w0 / w, c.gamma) - c.ks * a / c.v - c.kappa) * y;
        out[1]         = -c.kappa * w + c.kappa * integral;
        if (form == Formulation::ode)
            out[2] = -c.vmax * a / (c.km + a / c.v);
        else
            out[2] = c.a0 * std::exp(-(a - c.a0) / (c.km * c.v) - c.vmax * (t - t0) / c.km) - a;
    };
    p.g     = [](double, const VectorXd& x) { return x[0]; };
    p.jac_y = [c, form, t0](double t, const VectorXd& x, std::span<const VectorXd>, double,
                            Eigen::Ref<MatrixXd> out) {
        const double y = x[0], w = x[1], a = x[2];
        const double r = std::pow(c.w0 / w, c.gamma);
        out.setZero();
        out(0, 0) = c.kappa * r - c.ks * a / c.v - c.kappa;
        out(0, 1) = -c.kappa * c.gamma * r * y / w;
        out(0, 2) = -c.ks * y / c.v;
        out(1, 1) = -c.kappa;
        if (form == Formulation::ode)
        {
            const double den = c.km + a / c.v;
            out(2, 2)        = -c.vmax * c.km / (den * den);
        }
        else
        {
            const double e = c.a0 * std::exp(-(a - c.a0) / (c.km * c.v) - c.vmax * (t - t0) / c.km);
            out(2, 2)      = -e / (c.km * c.v) - 1.0;
        }
    };
    p.jac_i = [c](double, const VectorXd&, std::span<const VectorXd>, double, Eigen::Ref<VectorXd> out) {
        out.setZero();
        out[1] = c.kappa;
    };
    p.g_y = [](double, const VectorXd&, Eigen::Ref<VectorXd> out) {
        out.setZero();
        out[0] = 1.0;
    };
    return p;
}

// ---------------------------------------------------------------------------
// Lookup
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& builtin_problem_names()
{
    static const std::vector<std::string> names{"example1", "example2", "example3"};
    return names;
}

/// Built-in problem by name; `set` and `form` apply to example3 only.
inline DistributedDelayProblem builtin_problem(const std::string& name, int set = 2,
                                              Formulation form = Formulation::ode)
{
    if (name == "example1")
        return example1();
    if (name == "example2")
        return example2();
    if (name == "example3")
        return example3(set, form);
    throw DomainError("unknown problem '" + name + "'");
}

} // namespace disdel

#endif // DISDEL_BUILTIN_PROBLEMS_HPP
