///
/// \file dense_system.hpp
///
/// Integrator adapter for plain ODE/DAE systems M x' = F(t, x) with a
/// dense Jacobian (no delays, no kernel).
///
#ifndef DISDEL_DENSE_SYSTEM_HPP
#define DISDEL_DENSE_SYSTEM_HPP

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "disdel/problem.hpp"
#include "disdel/structured_linalg.hpp"

namespace disdel {

class DenseOdeSystem
{
public:
    using Jacobian = AssembledOperator;
    template <class Scalar>
    using Factorization = DenseFactorization<Scalar>;

    using Rhs = std::function<void(double t, const VectorXd& x, Eigen::Ref<VectorXd> out)>;
    using Jac = std::function<void(double t, const VectorXd& x, Eigen::Ref<MatrixXd> out)>;

    DenseOdeSystem(Rhs rhs, VectorXd x0, double t0, double tf, MatrixXd mass = {}, Jac jac = {})
        : rhs_(std::move(rhs)), jac_(std::move(jac)), x0_(std::move(x0)), t0_(t0), tf_(tf)
    {
        detail::require(static_cast<bool>(rhs_), "DenseOdeSystem: rhs missing");
        detail::require(x0_.size() >= 1 && t0_ < tf_, "DenseOdeSystem: need a state and t0 < tf");
        const Index n = x0_.size();
        mass_         = mass.size() == 0 ? MatrixXd::Identity(n, n) : std::move(mass);
        detail::require(mass_.rows() == n && mass_.cols() == n, "DenseOdeSystem: mass has wrong size");
    }

    Index size() const { return x0_.size(); }
    double t0() const { return t0_; }
    double t_final() const { return tf_; }
    double max_lag() const { return 0.0; }
    const std::vector<double>& breaking_points() const { return none_; }
    VectorXd initial_state() const { return x0_; }

    void prehistory(double, Index first, Index count, Eigen::Ref<VectorXd> out) const
    {
        out = x0_.segment(first, count);
    }

    void apply_mass(const VectorXd& x, Eigen::Ref<VectorXd> out) const { out = mass_ * x; }

    void rhs(double t, const VectorXd& x, const DelayedStateSource&, Eigen::Ref<VectorXd> out) const
    {
        rhs_(t, x, out);
    }

    Jacobian jacobian(double t, const VectorXd& x, const DelayedStateSource&) const
    {
        const Index n = size();
        Jacobian j{mass_, MatrixXd(n, n)};
        if (jac_)
        {
            jac_(t, x, j.jac);
            return j;
        }
        VectorXd f0(n), f1(n), xp = x;
        rhs_(t, x, f0);
        for (Index c = 0; c < n; ++c)
        {
            const double d = std::sqrt(std::numeric_limits<double>::epsilon() * std::max(1e-5, std::abs(x[c])));
            xp[c]          = x[c] + d;
            rhs_(t, xp, f1);
            j.jac.col(c) = (f1 - f0) / d;
            xp[c]        = x[c];
        }
        return j;
    }

    template <class Scalar>
    Factorization<Scalar> factor(const Jacobian& j, Scalar shift) const
    {
        return Factorization<Scalar>(j, shift);
    }

private:
    Rhs rhs_;
    Jac jac_;
    VectorXd x0_;
    double t0_, tf_;
    MatrixXd mass_;
    std::vector<double> none_;
};

} // namespace disdel

#endif // DISDEL_DENSE_SYSTEM_HPP
