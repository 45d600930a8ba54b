#include <catch_amalgamated.hpp>

#include <cmath>

#include "disdel/builtin_problems.hpp"
#include "disdel/dense_system.hpp"
#include "disdel/radau.hpp"

using namespace disdel;

namespace {

IntegratorConfig scalar_config(double tol, std::size_t n = 1)
{
    IntegratorConfig c;
    c.atol   = VectorXd::Constant(static_cast<Index>(n), tol);
    c.rtol   = c.atol;
    c.h_init = 1e-3;
    return c;
}

DenseOdeSystem decay(double tf = 1.0)
{
    return DenseOdeSystem([](double, const VectorXd& x, Eigen::Ref<VectorXd> out) { out = -x; }, VectorXd::Ones(1),
                          0.0, tf);
}

} // namespace

TEST_CASE("tableau transformation and order conditions", "[radau]")
{
    const Eigen::Matrix3d a  = radau::butcher_a();
    const Eigen::Vector3d c  = radau::nodes();
    const Eigen::Matrix3d t  = radau::transform_t();
    const Eigen::Matrix3d ti = radau::transform_ti();
    CHECK((t * ti - Eigen::Matrix3d::Identity()).norm() < 1e-14);
    Eigen::Matrix3d lambda;
    lambda << radau::u1, 0, 0, 0, radau::alph, -radau::beta, 0, radau::beta, radau::alph;
    CHECK((t * lambda * ti - a.inverse()).norm() < 1e-12);
    // C(3): sum_j a_ij c_j^{k-1} = c_i^k / k.
    for (int k = 1; k <= 3; ++k)
        for (int i = 0; i < 3; ++i)
        {
            double s = 0.0;
            for (int j = 0; j < 3; ++j)
                s += a(i, j) * std::pow(c[j], k - 1);
            CHECK(s == Catch::Approx(std::pow(c[i], k) / k).epsilon(1e-14));
        }
    // B(5) with b = last row of A.
    for (int k = 1; k <= 5; ++k)
    {
        double s = 0.0;
        for (int j = 0; j < 3; ++j)
            s += a(2, j) * std::pow(c[j], k - 1);
        CHECK(s == Catch::Approx(1.0 / k).epsilon(1e-14));
    }
}

TEST_CASE("linear decay to tight tolerance", "[radau]")
{
    const auto rep = integrate(decay(), scalar_config(1e-10));
    CHECK(rep.t_end == 1.0);
    CHECK(std::abs(rep.y_end[0] - std::exp(-1.0)) < 1e-9);
    const auto& s = rep.stats;
    CHECK(s.n_steps > 0);
    CHECK(s.n_lu <= s.n_steps + s.n_rejected);
    CHECK(s.n_solves >= 3 * s.n_newton);
}

TEST_CASE("fixed-step global error is fifth order", "[radau]")
{
    std::vector<double> errs;
    for (double h : {0.1, 0.05, 0.025})
    {
        auto cfg       = scalar_config(1e-14);
        cfg.fixed_step = h;
        const auto rep = integrate(decay(), cfg);
        CHECK(rep.stats.n_steps == static_cast<long>(std::lround(1.0 / h)));
        errs.push_back(std::abs(rep.y_end[0] - std::exp(-1.0)));
    }
    CHECK(errs[0] / errs[1] == Catch::Approx(32.0).epsilon(0.2));
    CHECK(errs[1] / errs[2] == Catch::Approx(32.0).epsilon(0.2));
}

TEST_CASE("dense output reproduces cubic solutions", "[radau]")
{
    DenseOdeSystem sys([](double t, const VectorXd&, Eigen::Ref<VectorXd> out) { out[0] = 3.0 * t * t; },
                       VectorXd::Zero(1), 0.0, 2.0);
    auto cfg              = scalar_config(1e-8);
    cfg.keep_dense_output = true;
    const auto rep        = integrate(sys, cfg);
    REQUIRE(rep.dense.has_value());
    const auto& d = *rep.dense;
    for (std::size_t i = 0; i < d.size(); ++i)
    {
        const auto& seg  = d.segment(i);
        const double mid = seg.t_left + 0.37 * seg.h;
        CHECK(dense_eval(d, mid, 0) == Catch::Approx(mid * mid * mid).margin(1e-12));
        CHECK(dense_eval(d, seg.t_right(), 0) == Catch::Approx(std::pow(seg.t_right(), 3)).margin(1e-12));
    }
    CHECK_THROWS_AS(dense_eval(d, 2.5, 0), DomainError);
}

TEST_CASE("dense output endpoints and fourth-order interpolation", "[radau]")
{
    std::vector<double> errs;
    for (double h : {0.2, 0.1})
    {
        auto cfg              = scalar_config(1e-14);
        cfg.fixed_step        = h;
        cfg.keep_dense_output = true;
        const auto rep        = integrate(decay(), cfg);
        const auto& d         = *rep.dense;
        CHECK(dense_eval(d, 0.0, 0) == Catch::Approx(1.0).epsilon(1e-14));
        for (std::size_t i = 0; i + 1 < d.size(); ++i)
            CHECK(d.segment(i).eval(d.segment(i).t_right(), 0) ==
                  Catch::Approx(d.segment(i + 1).eval(d.segment(i + 1).t_left, 0)).epsilon(1e-13));
        // Midpoint of a step.
        const double t = 0.5 + 0.3 * h;
        errs.push_back(std::abs(dense_eval(d, t, 0) - std::exp(-t)));
    }
    CHECK(errs[0] / errs[1] > 14.0);
}

TEST_CASE("stiff DAE with a singular mass matrix", "[radau]")
{
    // x' = -x + y, 0 = y - sin(t) on [0, 2].
    MatrixXd m = MatrixXd::Zero(2, 2);
    m(0, 0)    = 1.0;
    DenseOdeSystem sys(
        [](double t, const VectorXd& x, Eigen::Ref<VectorXd> out) {
            out[0] = -x[0] + x[1];
            out[1] = x[1] - std::sin(t);
        },
        VectorXd::Zero(2), 0.0, 2.0, m);
    const auto rep  = integrate(sys, scalar_config(1e-9, 2));
    const double t  = 2.0;
    const double ex = 0.5 * (std::sin(t) - std::cos(t) + std::exp(-t));
    CHECK(std::abs(rep.y_end[0] - ex) < 1e-8);
    CHECK(std::abs(rep.y_end[1] - std::sin(t)) < 1e-8);
}

TEST_CASE("constant delay equation with overlapping steps", "[radau]")
{
    // y' = -y(t - 1), y = 1 for t <= 0: y = 1 - t on [0, 1], 1 - t + (t - 1)^2/2 on [1, 2].
    DistributedDelayProblem p;
    p.name    = "dde";
    p.dim     = 1;
    p.kernel_sum = ExponentialSumKernel({ExponentialTerm{1.0, {0.0}}});
    p.delays  = {1.0};
    p.history = [](double, Eigen::Ref<VectorXd> out) { out[0] = 1.0; };
    p.y0      = VectorXd::Ones(1);
    p.tf      = 2.0;
    p.rhs     = [](double, const VectorXd&, std::span<const VectorXd> d, double, Eigen::Ref<VectorXd> out) {
        out[0] = -d[0][0];
    };
    p.g            = [](double, const VectorXd& y) { return y[0]; };
    const auto sys = augment(p, 1e-6);
    IntegratorConfig cfg;
    cfg.atol         = VectorXd::Constant(sys.size(), 1e-10);
    cfg.rtol         = cfg.atol;
    cfg.h_init       = 1e-3;
    cfg.sample_times = {0.5, 1.0, 1.5};
    const auto rep   = integrate(sys, cfg);
    CHECK(std::abs(rep.y_end[0] + 0.5) < 1e-9);
    REQUIRE(rep.samples.size() == 3);
    CHECK(rep.samples[0].values[0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(rep.samples[1].values[0] == Catch::Approx(0.0).margin(1e-9));
    CHECK(rep.samples[2].values[0] == Catch::Approx(-0.375).margin(1e-9));
    // t = 1 is a breaking point and must be a mesh point.
    CHECK(std::find(rep.mesh.begin(), rep.mesh.end(), 1.0) != rep.mesh.end());
}

TEST_CASE("step limit is reported", "[radau]")
{
    auto cfg      = scalar_config(1e-12);
    cfg.max_steps = 3;
    CHECK_THROWS_AS(integrate(decay(10.0), cfg), NumericalFailure);
}

TEST_CASE("invalid configuration", "[radau]")
{
    auto cfg = scalar_config(1e-6);
    cfg.atol = VectorXd::Constant(2, 1e-6);
    CHECK_THROWS_AS(integrate(decay(), cfg), DomainError);
}
