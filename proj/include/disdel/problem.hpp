///
/// \file problem.hpp
///
/// Distributed-delay problems
///
///   M y'(t) = f(t, y(t), y(t - tau_1), ..., I(t)),
///   I(t)    = int_0^t k(t - s) g(s, y(s)) ds,
///
/// and their augmentation by the auxiliary chains of an exponential-sum
/// kernel approximation. State layout of the augmented system:
///
///   [ y (d) | y_aux (1) | z_{1,0} .. z_{1,m_1} | z_{2,0} .. | ... ]
///
/// with y_aux an algebraic variable carrying sum_{i,j} c_{i,j} z_{i,j}.
///
#ifndef DISDEL_PROBLEM_HPP
#define DISDEL_PROBLEM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "disdel/error.hpp"
#include "disdel/kernel_approx.hpp"
#include "disdel/structured_linalg.hpp"

namespace disdel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Source of past state values for delayed arguments.
class DelayedStateSource
{
public:
    virtual ~DelayedStateSource() = default;

    /// Components [first, first + count) of the state at time t.
    virtual void eval(double t, Index first, Index count, Eigen::Ref<VectorXd> out) const = 0;
};

/// History that is never consulted (problems without delays).
class NoHistory final : public DelayedStateSource
{
public:
    void eval(double, Index, Index, Eigen::Ref<VectorXd>) const override
    {
        throw DomainError("delayed value requested from a problem without history");
    }
};

using RhsFn   = std::function<void(double t, const VectorXd& y, std::span<const VectorXd> delayed,
                                   double integral, Eigen::Ref<VectorXd> out)>;
using JacYFn  = std::function<void(double t, const VectorXd& y, std::span<const VectorXd> delayed,
                                   double integral, Eigen::Ref<MatrixXd> out)>;
using JacIFn  = std::function<void(double t, const VectorXd& y, std::span<const VectorXd> delayed,
                                   double integral, Eigen::Ref<VectorXd> out)>;
using GFn     = std::function<double(double t, const VectorXd& y)>;
using GradFn  = std::function<void(double t, const VectorXd& y, Eigen::Ref<VectorXd> out)>;
using HistFn  = std::function<void(double t, Eigen::Ref<VectorXd> out)>;

/// A user problem. Jacobian callbacks are optional; missing ones are
/// replaced by forward differences. All callbacks must be pure.
struct DistributedDelayProblem
{
    std::string name;
    Index dim = 0;
    MatrixXd mass;              ///< empty means identity
    RhsFn rhs;
    GFn g;
    std::vector<double> delays; ///< discrete lags tau_k > 0
    std::optional<KernelSpec> kernel;
    std::optional<ExponentialSumKernel> kernel_sum; ///< takes precedence over `kernel`
    HistFn history;             ///< y(t) for t < t0
    VectorXd y0;
    double t0 = 0.0;
    double tf = 1.0;
    JacYFn jac_y;
    JacIFn jac_i;
    GradFn g_y;

    MatrixXd mass_matrix() const { return mass.size() == 0 ? MatrixXd::Identity(dim, dim) : mass; }

    /// Lag of the integral argument: beta for Pareto kernels, else 0.
    double integral_lag() const
    {
        if (kernel_sum)
            return kernel_sum->delay();
        if (kernel)
            if (const auto* p = std::get_if<ParetoTypeI>(&*kernel))
                return p->beta;
        return 0.0;
    }

    void validate() const
    {
        detail::require(dim >= 1, "problem: dim must be at least 1");
        detail::require(t0 < tf, "problem: need t0 < tf");
        detail::require(y0.size() == dim, "problem: y0 has wrong size");
        detail::require(static_cast<bool>(rhs), "problem: rhs missing");
        detail::require(static_cast<bool>(g), "problem: integrand g missing");
        detail::require(kernel.has_value() || kernel_sum.has_value(), "problem: kernel missing");
        detail::require(mass.size() == 0 || (mass.rows() == dim && mass.cols() == dim),
                        "problem: mass matrix has wrong size");
        for (double tau : delays)
            detail::require(tau > 0.0 && std::isfinite(tau), "problem: delays must be positive");
        if (!delays.empty() || integral_lag() > 0.0)
            detail::require(static_cast<bool>(history) || delays.empty(),
                            "problem: history required for discrete delays");
        if (kernel)
            validate(*kernel);
    }

private:
    static void validate(const KernelSpec& k) { disdel::validate(k); }
};

// ---------------------------------------------------------------------------
// Breaking points
// ---------------------------------------------------------------------------

/// Smallest `max_count` values of { sum_k i_k lag_k > 0 } within (0, t_f],
/// ascending, duplicates (to relative 1e-12) merged. Zero lags are ignored.
inline std::vector<double> breaking_points(const std::vector<double>& lags, double t_f, std::size_t max_count)
{
    std::vector<double> positive;
    for (double l : lags)
    {
        detail::require(l >= 0.0, "breaking_points: lags must be nonnegative");
        if (l > 0.0)
            positive.push_back(l);
    }
    std::vector<double> out;
    if (positive.empty() || max_count == 0)
        return out;

    auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
    std::priority_queue<double, std::vector<double>, std::greater<>> heap;
    for (double l : positive)
        heap.push(l);
    while (!heap.empty() && out.size() < max_count)
    {
        const double v = heap.top();
        heap.pop();
        if (v > t_f * (1.0 + 1e-14))
            break;
        if (!out.empty() && same(out.back(), v))
            continue;
        out.push_back(v);
        for (double l : positive)
            heap.push(v + l);
    }
    return out;
}

inline std::vector<double> breaking_points(double tau, double beta, double t_f, std::size_t max_count)
{
    return breaking_points(std::vector<double>{tau, beta}, t_f, max_count);
}

// ---------------------------------------------------------------------------
// Augmented system
// ---------------------------------------------------------------------------

enum class LinearAlgebra
{
    structured,
    dense
};

/// Jacobian of the augmented system in structured form; the dense mode
/// additionally carries the assembled matrices.
struct AugmentedJacobian
{
    StructuredOperator op;
    std::optional<AssembledOperator> full;
};

template <class Scalar>
class AugmentedFactorization
{
public:
    explicit AugmentedFactorization(StructuredFactorization<Scalar> f) : impl_(std::move(f)) {}
    explicit AugmentedFactorization(DenseFactorization<Scalar> f) : impl_(std::move(f)) {}

    void solve_in_place(Eigen::Ref<VectorX<Scalar>> a) const
    {
        std::visit([&](const auto& f) { f.solve_in_place(a); }, impl_);
    }

private:
    std::variant<StructuredFactorization<Scalar>, DenseFactorization<Scalar>> impl_;
};

struct AugmentOptions
{
    LinearAlgebra linear_algebra   = LinearAlgebra::structured;
    std::size_t breaking_point_cap = 10;
    double delta_min               = 0.0;
};

class AugmentedSystem
{
public:
    using Jacobian = AugmentedJacobian;
    template <class Scalar>
    using Factorization = AugmentedFactorization<Scalar>;

    AugmentedSystem(DistributedDelayProblem problem, ExponentialSumKernel kernel, AugmentOptions options = {})
        : problem_(std::make_shared<const DistributedDelayProblem>(std::move(problem))),
          kernel_(std::move(kernel)),
          options_(options)
    {
        problem_->validate();
        detail::require(!kernel_.empty(), "augment: empty kernel");
        blocks_ = std::make_shared<ChainBlocks>(ChainBlocks::from_kernel(kernel_));
        d_      = problem_->dim;
        n_      = d_ + 1 + static_cast<Index>(blocks_->state_count());
        lag_    = kernel_.delay();
        mass_   = problem_->mass_matrix();

        std::vector<double> lags = problem_->delays;
        lags.push_back(lag_);
        breaking_points_ = disdel::breaking_points(lags, problem_->tf - problem_->t0, options_.breaking_point_cap);
        for (double& b : breaking_points_)
            b += problem_->t0;
    }

    // -- layout ------------------------------------------------------------
    Index size() const { return n_; }
    Index dim() const { return d_; }
    Index aux_index() const { return d_; }
    Index z_begin() const { return d_ + 1; }
    Index z_count() const { return static_cast<Index>(blocks_->state_count()); }
    const DistributedDelayProblem& problem() const { return *problem_; }
    const ExponentialSumKernel& kernel() const { return kernel_; }
    const ChainBlocks& blocks() const { return *blocks_; }
    double integral_lag() const { return lag_; }
    LinearAlgebra linear_algebra() const { return options_.linear_algebra; }
    void set_linear_algebra(LinearAlgebra mode) { options_.linear_algebra = mode; }

    // -- integrator interface ----------------------------------------------
    double t0() const { return problem_->t0; }
    double t_final() const { return problem_->tf; }
    const std::vector<double>& breaking_points() const { return breaking_points_; }

    double max_lag() const
    {
        double m = lag_;
        for (double tau : problem_->delays)
            m = std::max(m, tau);
        return m;
    }

    /// y0, then y_aux = 0 and z = 0 (empty integrals at t0).
    VectorXd initial_state() const
    {
        VectorXd x = VectorXd::Zero(n_);
        x.head(d_) = problem_->y0;
        return x;
    }

    /// Values before t0: history for y, zero for y_aux and z.
    void prehistory(double t, Index first, Index count, Eigen::Ref<VectorXd> out) const
    {
        out.setZero();
        if (first >= d_)
            return;
        VectorXd eta(d_);
        if (problem_->history)
            problem_->history(t, eta);
        else
            eta = problem_->y0;
        const Index k = std::min(count, d_ - first);
        out.head(k)   = eta.segment(first, k);
    }

    void apply_mass(const VectorXd& x, Eigen::Ref<VectorXd> out) const
    {
        out.head(d_)  = mass_ * x.head(d_);
        out[d_]       = 0.0;
        out.tail(n_ - d_ - 1) = x.tail(n_ - d_ - 1);
    }

    void rhs(double t, const VectorXd& x, const DelayedStateSource& hist, Eigen::Ref<VectorXd> out) const
    {
        const VectorXd y = x.head(d_);
        std::vector<VectorXd> delayed = delayed_values(t, hist);
        const double integral         = integral_value(t, x, hist);
        problem_->rhs(t, y, delayed, integral, out.head(d_));

        const double gval = problem_->g(t, y);
        const auto& b     = *blocks_;
        const Index z0    = d_ + 1;
        double acc        = 0.0;
        for (std::size_t i = 0; i < b.count(); ++i)
        {
            const double gamma = b.gamma[i];
            double prev        = 0.0;
            for (std::size_t k = b.offset[i], j = 0; k < b.offset[i + 1]; ++k, ++j)
            {
                const double zk = x[z0 + static_cast<Index>(k)];
                acc += b.coeff[k] * zk;
                out[z0 + static_cast<Index>(k)] = -gamma * zk + (j == 0 ? gval : static_cast<double>(j) * prev);
                prev = zk;
            }
        }
        out[d_] = acc - x[d_];
    }

    Jacobian jacobian(double t, const VectorXd& x, const DelayedStateSource& hist) const
    {
        const VectorXd y              = x.head(d_);
        std::vector<VectorXd> delayed = delayed_values(t, hist);
        const double integral         = integral_value(t, x, hist);

        Jacobian jac;
        auto& op = jac.op;
        op.blocks = blocks_;
        op.mass   = MatrixXd::Zero(d_ + 1, d_ + 1);
        op.mass.topLeftCorner(d_, d_) = mass_;
        op.jac = MatrixXd::Zero(d_ + 1, d_ + 1);
        op.jac(d_, d_) = -1.0;
        op.f_i = VectorXd::Unit(d_ + 1, d_);
        op.g_y = VectorXd::Zero(d_ + 1);

        auto fy = op.jac.topLeftCorner(d_, d_);
        if (problem_->jac_y)
        {
            MatrixXd tmp(d_, d_);
            problem_->jac_y(t, y, delayed, integral, tmp);
            fy = tmp;
        }
        else
        {
            VectorXd f0(d_), f1(d_);
            problem_->rhs(t, y, delayed, integral, f0);
            VectorXd yp = y;
            for (Index j = 0; j < d_; ++j)
            {
                const double dj = fd_increment(y[j]);
                yp[j]           = y[j] + dj;
                problem_->rhs(t, yp, delayed, integral, f1);
                fy.col(j) = (f1 - f0) / dj;
                yp[j]     = y[j];
            }
        }
        // The integral enters f through the current y_aux only for
        // undelayed kernels; the delayed coupling is not part of the
        // simplified Newton matrix.
        if (lag_ == 0.0)
        {
            VectorXd fi(d_);
            if (problem_->jac_i)
                problem_->jac_i(t, y, delayed, integral, fi);
            else
            {
                VectorXd f0(d_), f1(d_);
                problem_->rhs(t, y, delayed, integral, f0);
                const double di = fd_increment(integral);
                problem_->rhs(t, y, delayed, integral + di, f1);
                fi = (f1 - f0) / di;
            }
            op.jac.col(d_).head(d_) = fi;
        }
        if (problem_->g_y)
        {
            VectorXd gy(d_);
            problem_->g_y(t, y, gy);
            op.g_y.head(d_) = gy;
        }
        else
        {
            const double g0 = problem_->g(t, y);
            VectorXd yp     = y;
            for (Index j = 0; j < d_; ++j)
            {
                const double dj = fd_increment(y[j]);
                yp[j]           = y[j] + dj;
                op.g_y[j]       = (problem_->g(t, yp) - g0) / dj;
                yp[j]           = y[j];
            }
        }
        if (options_.linear_algebra == LinearAlgebra::dense)
            jac.full = assemble_dense(op);
        return jac;
    }

    template <class Scalar>
    Factorization<Scalar> factor(const Jacobian& jac, Scalar shift) const
    {
        if (jac.full)
            return Factorization<Scalar>(DenseFactorization<Scalar>(*jac.full, shift));
        return Factorization<Scalar>(StructuredFactorization<Scalar>(jac.op, shift));
    }

private:
    static double fd_increment(double v)
    {
        return std::sqrt(std::numeric_limits<double>::epsilon() * std::max(1e-5, std::abs(v)));
    }

    std::vector<VectorXd> delayed_values(double t, const DelayedStateSource& hist) const
    {
        std::vector<VectorXd> out;
        out.reserve(problem_->delays.size());
        for (double tau : problem_->delays)
        {
            VectorXd v(d_);
            hist.eval(t - tau, 0, d_, v);
            out.push_back(std::move(v));
        }
        return out;
    }

    double integral_value(double t, const VectorXd& x, const DelayedStateSource& hist) const
    {
        if (lag_ == 0.0)
            return x[d_];
        const double ta = t - lag_;
        if (ta <= problem_->t0)
            return 0.0;
        Eigen::Matrix<double, 1, 1> v;
        hist.eval(ta, d_, 1, v);
        return v[0];
    }

    std::shared_ptr<const DistributedDelayProblem> problem_;
    ExponentialSumKernel kernel_;
    AugmentOptions options_;
    std::shared_ptr<const ChainBlocks> blocks_;
    Index d_ = 0;
    Index n_ = 0;
    double lag_ = 0.0;
    MatrixXd mass_;
    std::vector<double> breaking_points_;
};

/// Augment with an explicit exponential-sum kernel.
inline AugmentedSystem augment(const DistributedDelayProblem& problem, const ExponentialSumKernel& kernel,
                               AugmentOptions options = {})
{
    return AugmentedSystem(problem, kernel, options);
}

/// Augment, building the kernel approximation to accuracy eps.
inline AugmentedSystem augment(const DistributedDelayProblem& problem, double eps, AugmentOptions options = {})
{
    problem.validate();
    if (problem.kernel_sum)
        return AugmentedSystem(problem, *problem.kernel_sum, options);
    const auto approx = approximate_kernel(*problem.kernel, eps, problem.tf - problem.t0, options.delta_min);
    return AugmentedSystem(problem, approx.kernel, options);
}

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

struct ToleranceLedger
{
    double tol       = 0.0;
    double omega     = 1.0;
    double aux_scale = 1.0;
    VectorXd atol;
    VectorXd rtol;
};

/// atol = rtol = tol on y, aux_scale * tol on y_aux, omega * tol on z.
inline ToleranceLedger tolerance_ledger(const AugmentedSystem& sys, double tol, double omega = 1.0,
                                        double aux_scale = 1.0)
{
    detail::require(tol > 0.0, "tolerance_ledger: tol must be positive");
    detail::require(omega >= 1.0, "tolerance_ledger: omega must be at least 1");
    detail::require(aux_scale > 0.0, "tolerance_ledger: aux_scale must be positive");
    ToleranceLedger l{tol, omega, aux_scale, VectorXd(sys.size()), VectorXd(sys.size())};
    l.atol.head(sys.dim()).setConstant(tol);
    l.atol[sys.aux_index()] = aux_scale * tol;
    l.atol.tail(sys.z_count()).setConstant(omega * tol);
    l.rtol = l.atol;
    return l;
}

// ---------------------------------------------------------------------------
// Pareto exponent lift
// ---------------------------------------------------------------------------

namespace detail {

inline DistributedDelayProblem pareto_lift_once(const DistributedDelayProblem& p)
{
    require(p.kernel.has_value() && std::holds_alternative<ParetoTypeI>(*p.kernel) && !p.kernel_sum,
            "pareto_alpha_lift: problem must carry a Pareto kernel spec");
    const auto [alpha, beta] = std::get<ParetoTypeI>(*p.kernel);
    const Index d            = p.dim;
    const std::size_t slot   = p.delays.size();
    const double t0          = p.t0;

    DistributedDelayProblem q = p;
    q.name   = p.name + "+lift";
    q.dim    = d + 1;
    q.kernel = ParetoTypeI{alpha + 1.0, beta};
    q.delays.push_back(beta);
    MatrixXd mass                 = MatrixXd::Identity(d + 1, d + 1);
    mass.topLeftCorner(d, d)      = p.mass_matrix();
    q.mass                        = mass;
    q.y0                          = VectorXd::Zero(d + 1);
    q.y0.head(d)                  = p.y0;

    const auto f = p.rhs;
    const auto g = p.g;
    q.rhs = [=](double t, const VectorXd& Y, std::span<const VectorXd> delayed, double next_integral,
                Eigen::Ref<VectorXd> out) {
        const VectorXd y = Y.head(d);
        std::vector<VectorXd> own;
        own.reserve(slot);
        for (std::size_t k = 0; k < slot; ++k)
            own.push_back(delayed[k].head(d));
        f(t, y, own, Y[d], out.head(d));
        const double gb = t - beta >= t0 ? g(t - beta, VectorXd(delayed[slot].head(d))) : 0.0;
        out[d]          = alpha / beta * (gb - next_integral);
    };
    q.g = [g, d](double t, const VectorXd& Y) { return g(t, VectorXd(Y.head(d))); };
    if (p.history)
    {
        const auto h = p.history;
        q.history    = [h, d](double t, Eigen::Ref<VectorXd> out) {
            h(t, out.head(d));
            out[d] = 0.0;
        };
    }
    else
    {
        const VectorXd y0 = p.y0;
        q.history         = [y0, d](double, Eigen::Ref<VectorXd> out) {
            out.head(d) = y0;
            out[d]      = 0.0;
        };
    }
    if (p.jac_y && p.jac_i)
    {
        const auto jy = p.jac_y;
        const auto ji = p.jac_i;
        q.jac_y = [=](double t, const VectorXd& Y, std::span<const VectorXd> delayed, double,
                      Eigen::Ref<MatrixXd> out) {
            const VectorXd y = Y.head(d);
            std::vector<VectorXd> own;
            for (std::size_t k = 0; k < slot; ++k)
                own.push_back(delayed[k].head(d));
            out.setZero();
            MatrixXd a(d, d);
            jy(t, y, own, Y[d], a);
            VectorXd c(d);
            ji(t, y, own, Y[d], c);
            out.topLeftCorner(d, d) = a;
            out.col(d).head(d)      = c;
        };
    }
    else
    {
        q.jac_y = nullptr;
    }
    q.jac_i = [d, alpha, beta](double, const VectorXd&, std::span<const VectorXd>, double, Eigen::Ref<VectorXd> out) {
        out.setZero();
        out[d] = -alpha / beta;
    };
    if (p.g_y)
    {
        const auto gy = p.g_y;
        q.g_y         = [gy, d](double t, const VectorXd& Y, Eigen::Ref<VectorXd> out) {
            gy(t, Y.head(d), out.head(d));
            out[d] = 0.0;
        };
    }
    else
    {
        q.g_y = nullptr;
    }
    return q;
}

} // namespace detail

/// Replace I(t) by a new state y_{d+1} whose derivative
/// (alpha/beta) (g(t - beta, y(t - beta)) - I'(t)) involves a Pareto
/// integral I' with exponent alpha + 1; repeated `levels` times.
inline DistributedDelayProblem pareto_alpha_lift(const DistributedDelayProblem& problem, int levels)
{
    detail::require(levels >= 1, "pareto_alpha_lift: levels must be at least 1");
    DistributedDelayProblem p = problem;
    for (int l = 0; l < levels; ++l)
        p = detail::pareto_lift_once(p);
    return p;
}

} // namespace disdel

#endif // DISDEL_PROBLEM_HPP
