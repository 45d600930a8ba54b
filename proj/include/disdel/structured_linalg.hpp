///
/// \file structured_linalg.hpp
///
/// Solver for (shift * Mass - Jac) u = a where the augmented Jacobian has
/// a dense leading block of size d_y, rank-one couplings f_I c_i^T and
/// e_i g_y^T to a set of lower-bidiagonal chains
///
///   J_i = [-gamma_i                 ]
///         [    1   -gamma_i         ]
///         [          2   -gamma_i   ]   (size m_i + 1)
///
/// and identity mass on the chains. Each chain is eliminated by forward
/// substitution, which leaves one dense d_y x d_y factorization.
///
#ifndef DISDEL_STRUCTURED_LINALG_HPP
#define DISDEL_STRUCTURED_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "disdel/error.hpp"
#include "disdel/kernel_approx.hpp"

namespace disdel {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when an iteration matrix is numerically singular.
struct SingularMatrix : NumericalFailure
{
    using NumericalFailure::NumericalFailure;
};

/// Flat storage of the chains: chain i occupies z indices
/// [offset[i], offset[i+1]) and carries coefficients coeff[...] there.
struct ChainBlocks
{
    std::vector<double> gamma;
    std::vector<std::size_t> offset{0};
    std::vector<double> coeff;

    static constexpr int max_degree = 2;

    static ChainBlocks from_kernel(const ExponentialSumKernel& kernel)
    {
        ChainBlocks b;
        b.gamma.reserve(kernel.size());
        b.offset.reserve(kernel.size() + 1);
        for (const auto& term : kernel.terms())
            b.add(term.exponent, term.coeffs);
        return b;
    }

    void add(double g, const std::vector<double>& c)
    {
        detail::require(!c.empty(), "ChainBlocks: empty coefficient vector");
        detail::require(static_cast<int>(c.size()) - 1 <= max_degree, "ChainBlocks: degree above 2");
        gamma.push_back(g);
        coeff.insert(coeff.end(), c.begin(), c.end());
        offset.push_back(coeff.size());
    }

    std::size_t count() const { return gamma.size(); }
    std::size_t state_count() const { return coeff.size(); }
    int degree(std::size_t i) const { return static_cast<int>(offset[i + 1] - offset[i]) - 1; }
};

/// Everything in the structured system except the shift.
struct StructuredOperator
{
    Eigen::MatrixXd mass; ///< d_y x d_y
    Eigen::MatrixXd jac;  ///< d_y x d_y
    Eigen::VectorXd f_i;  ///< coupling of the chains into the dense rows
    Eigen::VectorXd g_y;  ///< coupling of the dense variables into the chains
    std::shared_ptr<const ChainBlocks> blocks = std::make_shared<ChainBlocks>();

    Eigen::Index dense_size() const { return jac.rows(); }
    Eigen::Index size() const { return jac.rows() + static_cast<Eigen::Index>(blocks->state_count()); }

    void validate() const
    {
        const auto d = jac.rows();
        detail::require(d >= 1 && jac.cols() == d, "StructuredOperator: jac must be square");
        detail::require(mass.rows() == d && mass.cols() == d, "StructuredOperator: mass size mismatch");
        detail::require(f_i.size() == d && g_y.size() == d, "StructuredOperator: coupling size mismatch");
        detail::require(blocks != nullptr, "StructuredOperator: missing blocks");
    }
};

namespace detail {

// (shift + gamma) w_0 = a_0,  (shift + gamma) w_j = a_j + j w_{j-1}.
template <class Scalar, class In, class Out>
inline void bidiagonal_forward(Scalar inv_diag, const In& a, Out& w, std::size_t begin, std::size_t end)
{
    Scalar prev = Scalar(0);
    for (std::size_t k = begin, j = 0; k < end; ++k, ++j)
    {
        prev = (a[k] + static_cast<double>(j) * prev) * inv_diag;
        w[k] = prev;
    }
}

template <class Scalar>
bool finite_scalar(const Scalar& x)
{
    if constexpr (std::is_same_v<Scalar, double>)
        return std::isfinite(x);
    else
        return std::isfinite(x.real()) && std::isfinite(x.imag());
}

template <class Scalar>
void check_lu(const Eigen::PartialPivLU<MatrixX<Scalar>>& lu)
{
    const auto& m = lu.matrixLU();
    double largest = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        if (!finite_scalar(m(i, i)))
            throw SingularMatrix("LU factorization produced a non-finite pivot");
        largest = std::max(largest, std::abs(m(i, i)));
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (std::abs(m(i, i)) <= largest * 1e-15 || m(i, i) == Scalar(0))
            throw SingularMatrix("iteration matrix is singular to working precision");
}

} // namespace detail

/// Factorization of (shift * Mass - Jac) for one shift.
///
/// Stores v_i = (shift I - J_i)^{-1} e_i, s = sum_i c_i^T v_i and the
/// dense LU of shift M - (J + f_I g_y^T s).
template <class Scalar>
class StructuredFactorization
{
public:
    StructuredFactorization(const StructuredOperator& op, Scalar shift)
        : blocks_(op.blocks), f_i_(op.f_i), g_y_(op.g_y), shift_(shift)
    {
        op.validate();
        const auto& b = *blocks_;
        inv_diag_.resize(b.count());
        v_.resize(b.state_count());
        Scalar s = Scalar(0);
        for (std::size_t i = 0; i < b.count(); ++i)
        {
            const Scalar diag = shift + b.gamma[i];
            if (diag == Scalar(0))
                throw SingularMatrix("chain block is singular (shift = -gamma)");
            inv_diag_[i] = Scalar(1) / diag;
            // e_i is the first unit vector of the chain.
            Scalar prev = inv_diag_[i];
            v_[b.offset[i]] = prev;
            for (std::size_t k = b.offset[i] + 1, j = 1; k < b.offset[i + 1]; ++k, ++j)
            {
                prev = static_cast<double>(j) * prev * inv_diag_[i];
                v_[k] = prev;
            }
            for (std::size_t k = b.offset[i]; k < b.offset[i + 1]; ++k)
                s += b.coeff[k] * v_[k];
        }
        coupling_sum_ = s;

        MatrixX<Scalar> a = shift * op.mass.template cast<Scalar>() - op.jac.template cast<Scalar>();
        a -= (op.f_i.template cast<Scalar>() * op.g_y.template cast<Scalar>().transpose()) * s;
        lu_.compute(a);
        detail::check_lu(lu_);
    }

    Scalar shift() const { return shift_; }
    Scalar coupling_sum() const { return coupling_sum_; }
    const std::vector<Scalar>& chain_response() const { return v_; }
    Eigen::Index size() const { return f_i_.size() + static_cast<Eigen::Index>(blocks_->state_count()); }

    /// u = (shift M - Jac)^{-1} a, in place.
    void solve_in_place(Eigen::Ref<VectorX<Scalar>> a) const
    {
        const auto& b  = *blocks_;
        const auto d   = f_i_.size();
        detail::require(a.size() == size(), "StructuredFactorization::solve: size mismatch");
        auto chains = a.tail(static_cast<Eigen::Index>(b.state_count()));

        Scalar acc = Scalar(0);
        for (std::size_t i = 0; i < b.count(); ++i)
        {
            detail::bidiagonal_forward(inv_diag_[i], chains, chains, b.offset[i], b.offset[i + 1]);
            for (std::size_t k = b.offset[i]; k < b.offset[i + 1]; ++k)
                acc += b.coeff[k] * chains[static_cast<Eigen::Index>(k)];
        }
        VectorX<Scalar> rhs = a.head(d) + f_i_.template cast<Scalar>() * acc;
        VectorX<Scalar> u0  = lu_.solve(rhs);
        a.head(d)           = u0;
        const Scalar proj   = g_y_.template cast<Scalar>().dot(u0);
        if (proj != Scalar(0))
            for (std::size_t k = 0; k < b.state_count(); ++k)
                chains[static_cast<Eigen::Index>(k)] += v_[k] * proj;
    }

    VectorX<Scalar> solve(const VectorX<Scalar>& a) const
    {
        VectorX<Scalar> u = a;
        solve_in_place(u);
        return u;
    }

private:
    std::shared_ptr<const ChainBlocks> blocks_;
    Eigen::VectorXd f_i_;
    Eigen::VectorXd g_y_;
    Scalar shift_;
    Scalar coupling_sum_ = Scalar(0);
    std::vector<Scalar> inv_diag_;
    std::vector<Scalar> v_;
    Eigen::PartialPivLU<MatrixX<Scalar>> lu_;
};

template <class Scalar>
StructuredFactorization<Scalar> factor(const StructuredOperator& op, Scalar shift)
{
    return StructuredFactorization<Scalar>(op, shift);
}

/// Full (d_y + N_z) mass and Jacobian matrices of a structured operator.
struct AssembledOperator
{
    Eigen::MatrixXd mass;
    Eigen::MatrixXd jac;
};

inline AssembledOperator assemble_dense(const StructuredOperator& op)
{
    op.validate();
    const auto d = op.dense_size();
    const auto n = op.size();
    const auto& b = *op.blocks;
    AssembledOperator out;
    out.mass = Eigen::MatrixXd::Zero(n, n);
    out.jac  = Eigen::MatrixXd::Zero(n, n);
    out.mass.topLeftCorner(d, d) = op.mass;
    out.jac.topLeftCorner(d, d)  = op.jac;
    for (std::size_t i = 0; i < b.count(); ++i)
    {
        for (std::size_t k = b.offset[i], j = 0; k < b.offset[i + 1]; ++k, ++j)
        {
            const auto r           = d + static_cast<Eigen::Index>(k);
            out.mass(r, r)         = 1.0;
            out.jac(r, r)          = -b.gamma[i];
            if (j > 0)
                out.jac(r, r - 1) = static_cast<double>(j);
            out.jac.col(r).head(d) += op.f_i * b.coeff[k];
        }
        out.jac.row(d + static_cast<Eigen::Index>(b.offset[i])).head(d) += op.g_y.transpose();
    }
    return out;
}

/// Dense comparator: LU of the fully assembled matrix.
template <class Scalar>
class DenseFactorization
{
public:
    DenseFactorization(const AssembledOperator& full, Scalar shift) : shift_(shift)
    {
        lu_.compute(shift * full.mass.template cast<Scalar>() - full.jac.template cast<Scalar>());
        detail::check_lu(lu_);
    }

    Eigen::Index size() const { return lu_.rows(); }
    Scalar shift() const { return shift_; }

    void solve_in_place(Eigen::Ref<VectorX<Scalar>> a) const { a = lu_.solve(a).eval(); }

    VectorX<Scalar> solve(const VectorX<Scalar>& a) const { return lu_.solve(a); }

private:
    Scalar shift_;
    Eigen::PartialPivLU<MatrixX<Scalar>> lu_;
};

/// Operation-count model of the structured and dense paths.
struct CostModel
{
    std::int64_t factor_flops = 0;
    std::int64_t solve_flops  = 0;
};

inline CostModel cost_model(std::int64_t d_y, std::int64_t n_z)
{
    CostModel c;
    c.factor_flops = (2 * d_y * d_y * d_y) / 3 + 2 * d_y * d_y + 4 * n_z;
    c.solve_flops  = 2 * d_y * d_y + 6 * n_z;
    return c;
}

} // namespace disdel

#endif // DISDEL_STRUCTURED_LINALG_HPP
