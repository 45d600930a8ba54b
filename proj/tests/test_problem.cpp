#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "disdel/builtin_problems.hpp"
#include "disdel/problem.hpp"

using namespace disdel;

namespace {

// Zero history for undelayed systems.
struct ZeroHistory final : DelayedStateSource
{
    void eval(double, Index, Index, Eigen::Ref<VectorXd> out) const override { out.setZero(); }
};

MatrixXd fd_jacobian(const AugmentedSystem& sys, double t, const VectorXd& x)
{
    ZeroHistory h;
    const Index n = sys.size();
    MatrixXd j(n, n);
    VectorXd f0(n), f1(n), xp = x;
    sys.rhs(t, x, h, f0);
    for (Index c = 0; c < n; ++c)
    {
        const double d = 1e-7 * std::max(1.0, std::abs(x[c]));
        xp[c]          = x[c] + d;
        sys.rhs(t, xp, h, f1);
        j.col(c) = (f1 - f0) / d;
        xp[c]    = x[c];
    }
    return j;
}

} // namespace

TEST_CASE("augmented dimension for example 1", "[problem]")
{
    const auto sys = augment(example1(), 1e-8);
    // y, y_aux and one chain state per term (N - M = 84 + 89 = 173).
    CHECK(sys.size() == 1 + 1 + 173);
    CHECK(sys.z_count() == 173);
    CHECK(sys.integral_lag() == 0.0);
    CHECK(sys.breaking_points().empty());
}

TEST_CASE("breaking points of two lags", "[problem]")
{
    const double tau = std::numbers::pi / 4.0;
    const auto b     = breaking_points(tau, 1.0, 10.0, 10);
    const std::vector<double> expected{tau, 1.0, 2 * tau, tau + 1.0, 2.0, 3 * tau, 2 * tau + 1.0, tau + 2.0, 3.0,
                                       4 * tau};
    REQUIRE(b.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(b[i] == Catch::Approx(expected[i]).epsilon(1e-14));
    CHECK(breaking_points(std::vector<double>{0.5, 1.0}, 2.0, 100) == std::vector<double>{0.5, 1.0, 1.5, 2.0});
    CHECK(breaking_points(std::vector<double>{0.0}, 5.0, 3).empty());
}

TEST_CASE("example 2 system schedules the combined breaking points", "[problem]")
{
    const auto sys = augment(example2(), 1e-8);
    CHECK(sys.integral_lag() == 1.0);
    CHECK(sys.breaking_points().size() == 10);
    CHECK(sys.max_lag() == 1.0);
    VectorXd out(1);
    sys.prehistory(-0.3, 0, 1, out);
    CHECK(out[0] == -0.3);
    sys.prehistory(-0.3, 1, 1, out);
    CHECK(out[0] == 0.0);
}

TEST_CASE("tolerance ledger layout", "[problem]")
{
    const auto sys = augment(example1(), 1e-4);
    const auto l   = tolerance_ledger(sys, 1e-6, 100.0, 1e-2);
    CHECK(l.atol[0] == 1e-6);
    CHECK(l.atol[sys.aux_index()] == Catch::Approx(1e-8));
    CHECK(l.atol[sys.z_begin()] == Catch::Approx(1e-4));
    CHECK(l.rtol == l.atol);
    CHECK_THROWS_AS(tolerance_ledger(sys, 1e-6, 0.5), DomainError);
}

TEST_CASE("analytic Jacobian agrees with finite differences", "[problem]")
{
    for (auto form : {Formulation::ode, Formulation::dae})
    {
        const auto sys = augment(example3(2, form), 1e-4);
        VectorXd x     = sys.initial_state();
        for (Index i = sys.z_begin(); i < sys.size(); ++i)
            x[i] = 0.1 * std::sin(static_cast<double>(i));
        x[sys.aux_index()] = 3.0;
        ZeroHistory h;
        const auto jac  = sys.jacobian(2.0, x, h);
        const auto full = assemble_dense(jac.op);
        const MatrixXd fd = fd_jacobian(sys, 2.0, x);
        CHECK((full.jac - fd).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
        VectorXd mx(sys.size());
        sys.apply_mass(VectorXd::Ones(sys.size()), mx);
        CHECK((full.mass * VectorXd::Ones(sys.size()) - mx).norm() == 0.0);
    }
}

TEST_CASE("finite-difference fallback matches the analytic Jacobian", "[problem]")
{
    auto p        = example1();
    const auto a  = augment(p, 1e-4);
    p.jac_y       = nullptr;
    p.jac_i       = nullptr;
    p.g_y         = nullptr;
    const auto b  = augment(p, 1e-4);
    ZeroHistory h;
    VectorXd x = a.initial_state();
    x[0]       = 0.7;
    const auto ja = assemble_dense(a.jacobian(1.3, x, h).op).jac;
    const auto jb = assemble_dense(b.jacobian(1.3, x, h).op).jac;
    CHECK((ja - jb).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("chemo algebraic relation", "[problem]")
{
    const auto c = chemo_params(1);
    CHECK(solve_algebraic_chemo(c.a0, c.km, c.v, c.vmax, 0.0, 0.0) == Catch::Approx(127.0).epsilon(1e-14));
    double prev = 127.0;
    for (double t : {0.01, 0.1, 0.5, 1.0, 5.0, 100.0})
    {
        const double a = solve_algebraic_chemo(c.a0, c.km, c.v, c.vmax, t, 0.0);
        CHECK(a < prev);
        const double rhs = c.a0 * std::exp(-(a - c.a0) / (c.km * c.v) - c.vmax * t / c.km);
        CHECK(std::abs(rhs - a) <= 1e-12 * a);
        prev = a;
    }
}

TEST_CASE("pareto exponent lift", "[problem]")
{
    const auto p = example2();
    const auto q = pareto_alpha_lift(p, 1);
    CHECK(q.dim == 2);
    CHECK(q.delays.size() == 2);
    CHECK(std::get<ParetoTypeI>(*q.kernel).alpha == 1.5);
    const auto sys = augment(q, 1e-6);
    CHECK(sys.size() > 3);
    CHECK(sys.max_lag() == 1.0);
}

TEST_CASE("problem validation", "[problem]")
{
    auto p = example1();
    p.y0   = VectorXd::Zero(2);
    CHECK_THROWS_AS(p.validate(), DomainError);
    auto q   = example2();
    q.delays = {-1.0};
    CHECK_THROWS_AS(q.validate(), DomainError);
    CHECK_THROWS_AS(builtin_problem("nope"), DomainError);
}
