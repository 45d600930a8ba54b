///
/// \file radau.hpp
///
/// Three-stage Radau IIA integrator (order 5) for M x' = F(t, x, x(t - lag))
/// with possibly singular M. The stage equations are solved by simplified
/// Newton iteration in the eigenbasis of the inverse coefficient matrix
/// (one real and one complex linear system per iteration). Step sizes
/// come from the embedded error estimate with a predictive controller.
/// Accepted steps keep their collocation polynomial for dense output and
/// for delayed arguments.
///
/// A System provides
///
///   Index size(); double t0(); double t_final(); VectorXd initial_state();
///   double max_lag(); const std::vector<double>& breaking_points();
///   void prehistory(t, first, count, out);
///   void apply_mass(x, out);
///   void rhs(t, x, const DelayedStateSource&, out);
///   Jacobian jacobian(t, x, const DelayedStateSource&);
///   Factorization<S> factor(const Jacobian&, S shift);   // S = double, complex<double>
///
/// where Factorization<S>::solve_in_place solves (shift M - J) u = a.
///
#ifndef DISDEL_RADAU_HPP
#define DISDEL_RADAU_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "disdel/error.hpp"
#include "disdel/problem.hpp"

namespace disdel {

namespace radau {

// Nodes.
inline const double sq6 = std::sqrt(6.0);
inline const double c1  = (4.0 - sq6) / 10.0;
inline const double c2  = (4.0 + sq6) / 10.0;
inline const double c1m1 = c1 - 1.0;
inline const double c2m1 = c2 - 1.0;
inline const double c1mc2 = c1 - c2;

// Error-estimate weights.
inline const double dd1 = -(13.0 + 7.0 * sq6) / 3.0;
inline const double dd2 = (-13.0 + 7.0 * sq6) / 3.0;
inline const double dd3 = -1.0 / 3.0;

// Eigenvalues of the inverse Butcher matrix: u1 (real), alph +- i beta.
inline constexpr double u1   = 3.6378342527444957;
inline constexpr double alph = 2.6810828736277521;
inline constexpr double beta = 3.0504301992474105;

// A^{-1} = T diag(u1, [alph -beta; beta alph]) T^{-1}.
inline constexpr double T11 = 9.1232394870892942792e-02;
inline constexpr double T12 = -0.14125529502095420843;
inline constexpr double T13 = -3.0029194105147424492e-02;
inline constexpr double T21 = 0.24171793270710701896;
inline constexpr double T22 = 0.20412935229379993199;
inline constexpr double T23 = 0.38294211275726193779;
inline constexpr double T31 = 0.96604818261509293619;

inline constexpr double TI11 = 4.3255798900631553510;
inline constexpr double TI12 = 0.33919925181580986954;
inline constexpr double TI13 = 0.54177053993587487119;
inline constexpr double TI21 = -4.1787185915519047273;
inline constexpr double TI22 = -0.32768282076106238708;
inline constexpr double TI23 = 0.47662355450055045196;
inline constexpr double TI31 = -0.50287263494578687595;
inline constexpr double TI32 = 2.5719269498556054292;
inline constexpr double TI33 = -0.59603920482822492497;

/// Butcher matrix A of the 3-stage Radau IIA method.
inline Eigen::Matrix3d butcher_a()
{
    Eigen::Matrix3d a;
    a << (88.0 - 7.0 * sq6) / 360.0, (296.0 - 169.0 * sq6) / 1800.0, (-2.0 + 3.0 * sq6) / 225.0,
        (296.0 + 169.0 * sq6) / 1800.0, (88.0 + 7.0 * sq6) / 360.0, (-2.0 - 3.0 * sq6) / 225.0,
        (16.0 - sq6) / 36.0, (16.0 + sq6) / 36.0, 1.0 / 9.0;
    return a;
}

inline Eigen::Vector3d nodes() { return {c1, c2, 1.0}; }

inline Eigen::Matrix3d transform_t()
{
    Eigen::Matrix3d t;
    t << T11, T12, T13, T21, T22, T23, T31, 1.0, 0.0;
    return t;
}

inline Eigen::Matrix3d transform_ti()
{
    Eigen::Matrix3d t;
    t << TI11, TI12, TI13, TI21, TI22, TI23, TI31, TI32, TI33;
    return t;
}

} // namespace radau

// ---------------------------------------------------------------------------
// Dense output
// ---------------------------------------------------------------------------

/// Collocation polynomial of one accepted step on [t_left, t_left + h]:
/// x(t) = y_right + s (C1 + (s - c2 + 1)(C2 + (s - c1 + 1) C3)),
/// s = (t - t_left - h)/h.
struct DenseSegment
{
    double t_left = 0.0;
    double h      = 0.0;
    VectorXd y_right, cont1, cont2, cont3;

    double t_right() const { return t_left + h; }

    double eval(double t, Index i) const
    {
        const double s = (t - t_right()) / h;
        return y_right[i] +
               s * (cont1[i] + (s - radau::c2m1) * (cont2[i] + (s - radau::c1m1) * cont3[i]));
    }

    void eval(double t, Index first, Index count, Eigen::Ref<VectorXd> out) const
    {
        const double s  = (t - t_right()) / h;
        const double a  = s - radau::c2m1;
        const double b  = s - radau::c1m1;
        out = y_right.segment(first, count) +
              s * (cont1.segment(first, count) +
                   a * (cont2.segment(first, count) + b * cont3.segment(first, count)));
    }

    /// Coefficients from the stage increments Z_i = x(t_left + c_i h) - y_left.
    static DenseSegment from_stages(double t_left, double h, const VectorXd& y_left, const VectorXd& z1,
                                    const VectorXd& z2, const VectorXd& z3)
    {
        DenseSegment s;
        s.t_left         = t_left;
        s.h              = h;
        s.y_right        = y_left + z3;
        s.cont1          = (z2 - z3) / radau::c2m1;
        const VectorXd ak = (z1 - z2) / radau::c1mc2;
        const VectorXd acont3 = (ak - z1 / radau::c1) / radau::c2;
        s.cont2 = (ak - s.cont1) / radau::c1m1;
        s.cont3 = s.cont2 - acont3;
        return s;
    }
};

/// Piecewise collocation polynomial over a run.
class DenseOutput
{
public:
    void push(DenseSegment seg) { segs_.push_back(std::move(seg)); }
    bool empty() const { return segs_.empty(); }
    std::size_t size() const { return segs_.size(); }
    const DenseSegment& segment(std::size_t i) const { return segs_[i]; }
    double t_begin() const { return segs_.front().t_left; }
    double t_end() const { return segs_.back().t_right(); }

    void prune_before(double t)
    {
        while (segs_.size() > 1 && segs_.front().t_right() < t)
            segs_.pop_front();
    }

    const DenseSegment* find(double t) const
    {
        if (segs_.empty())
            return nullptr;
        const double slack = 1e-12 * std::max(1.0, std::abs(t));
        if (t < segs_.front().t_left - slack || t > segs_.back().t_right() + slack)
            return nullptr;
        auto it = std::upper_bound(segs_.begin(), segs_.end(), t,
                                   [](double v, const DenseSegment& s) { return v < s.t_left; });
        if (it != segs_.begin())
            --it;
        return &*it;
    }

    double eval(double t, Index component) const
    {
        const auto* s = find(t);
        if (s == nullptr)
            throw DomainError("dense output: t = " + std::to_string(t) + " outside the covered range");
        return s->eval(t, component);
    }

    VectorXd eval(double t) const
    {
        const auto* s = find(t);
        if (s == nullptr)
            throw DomainError("dense output: t = " + std::to_string(t) + " outside the covered range");
        VectorXd out(s->y_right.size());
        s->eval(t, 0, s->y_right.size(), out);
        return out;
    }

private:
    std::deque<DenseSegment> segs_;
};

inline double dense_eval(const DenseOutput& output, double t, Index component)
{
    return output.eval(t, component);
}

// ---------------------------------------------------------------------------
// Configuration and report
// ---------------------------------------------------------------------------

struct IntegratorConfig
{
    VectorXd atol;
    VectorXd rtol;
    double h_init                = 1e-6;
    double h_max                 = 0.0;   ///< 0: whole interval
    long max_steps               = 100000;
    int newton_max_iters         = 7;
    double newton_tol_factor     = 0.0;   ///< 0: max(10u/rtol, min(0.03, sqrt(rtol)))
    double safety                = 0.9;
    double growth_min            = 0.2;   ///< lower bound of h_new / h
    double growth_max            = 8.0;   ///< upper bound of h_new / h
    double jacobian_reuse_theta  = 0.001; ///< keep the Jacobian if the contraction rate is below
    bool predictive_controller   = true;
    double fixed_step            = 0.0;   ///< > 0: constant steps, no error control
    std::vector<double> sample_times;
    std::vector<Index> sample_components; ///< empty: all components
    bool keep_dense_output       = false;

    static IntegratorConfig from_ledger(const ToleranceLedger& ledger, double h_init)
    {
        IntegratorConfig c;
        c.atol   = ledger.atol;
        c.rtol   = ledger.rtol;
        c.h_init = h_init;
        return c;
    }

    void validate(Index n) const
    {
        detail::require(atol.size() == n && rtol.size() == n, "IntegratorConfig: tolerance vectors have wrong size");
        detail::require((atol.array() > 0.0).all() && (rtol.array() > 0.0).all(),
                        "IntegratorConfig: tolerances must be positive");
        detail::require(h_init > 0.0 && h_max >= 0.0, "IntegratorConfig: step sizes must be positive");
        detail::require(max_steps > 0 && newton_max_iters >= 1, "IntegratorConfig: limits must be positive");
        detail::require(safety > 0.0 && safety < 1.0, "IntegratorConfig: safety must lie in (0, 1)");
        detail::require(growth_min > 0.0 && growth_min < 1.0 && growth_max > 1.0,
                        "IntegratorConfig: need growth_min < 1 < growth_max");
    }
};

struct IntegrationStats
{
    long n_steps    = 0; ///< accepted steps
    long n_rejected = 0; ///< failed attempts (error test, Newton, singular matrix)
    long n_fevals   = 0;
    long n_jac      = 0;
    long n_lu       = 0; ///< real + complex factorization pairs
    long n_solves   = 0; ///< real solves + 2 per complex solve
    long n_newton   = 0; ///< Newton iterations
};

struct Sample
{
    double t = 0.0;
    VectorXd values;
};

struct IntegrationReport
{
    double t_end = 0.0;
    VectorXd y_end;
    std::vector<Sample> samples;
    std::vector<double> mesh;
    IntegrationStats stats;
    std::optional<DenseOutput> dense;
};

// ---------------------------------------------------------------------------
// History seen by the right-hand side
// ---------------------------------------------------------------------------

/// Delayed values: prehistory before t0, accepted steps, and inside the
/// step being computed the collocation polynomial of the current Newton
/// iterate.
template <class System>
class StepHistory final : public DelayedStateSource
{
public:
    StepHistory(const System& sys, const DenseOutput& accepted) : sys_(sys), accepted_(accepted) {}

    void set_current(double x, double h, const VectorXd* y, const VectorXd* z1, const VectorXd* z2,
                     const VectorXd* z3)
    {
        x_  = x;
        h_  = h;
        y_  = y;
        z1_ = z1;
        z2_ = z2;
        z3_ = z3;
    }

    void clear_current() { y_ = nullptr; }

    void eval(double t, Index first, Index count, Eigen::Ref<VectorXd> out) const override
    {
        if (t < sys_.t0())
        {
            sys_.prehistory(t, first, count, out);
            return;
        }
        if (y_ != nullptr && t >= x_)
        {
            // Collocation polynomial through y and y + Z_i at c_i.
            const double s = (t - x_ - h_) / h_;
            for (Index k = 0; k < count; ++k)
            {
                const Index i    = first + k;
                const double zi1 = (*z1_)[i], zi2 = (*z2_)[i], zi3 = (*z3_)[i];
                const double a1  = (zi2 - zi3) / radau::c2m1;
                const double ak  = (zi1 - zi2) / radau::c1mc2;
                const double a3  = (ak - zi1 / radau::c1) / radau::c2;
                const double a2  = (ak - a1) / radau::c1m1;
                const double b3  = a2 - a3;
                out[k] = (*y_)[i] + zi3 + s * (a1 + (s - radau::c2m1) * (a2 + (s - radau::c1m1) * b3));
            }
            return;
        }
        const auto* seg = accepted_.find(t);
        if (seg == nullptr)
        {
            if (accepted_.empty() && y_ != nullptr)
            {
                out = y_->segment(first, count);
                return;
            }
            throw DomainError("delayed argument t = " + std::to_string(t) + " not covered by stored history");
        }
        seg->eval(t, first, count, out);
    }

private:
    const System& sys_;
    const DenseOutput& accepted_;
    double x_ = 0.0, h_ = 0.0;
    const VectorXd* y_  = nullptr;
    const VectorXd* z1_ = nullptr;
    const VectorXd* z2_ = nullptr;
    const VectorXd* z3_ = nullptr;
};

// ---------------------------------------------------------------------------
// Integrator
// ---------------------------------------------------------------------------

template <class System>
IntegrationReport integrate(const System& sys, const IntegratorConfig& cfg)
{
    using cplx           = std::complex<double>;
    const Index n        = sys.size();
    const double uround  = std::numeric_limits<double>::epsilon();
    const double t0      = sys.t0();
    const double tf      = sys.t_final();
    const int nit        = cfg.newton_max_iters;
    const bool fixed     = cfg.fixed_step > 0.0;
    cfg.validate(n);

    // Tolerances as used internally by the method.
    VectorXd rtol(n), atol(n);
    for (Index i = 0; i < n; ++i)
    {
        const double q = cfg.atol[i] / cfg.rtol[i];
        rtol[i]        = 0.1 * std::pow(cfg.rtol[i], 2.0 / 3.0);
        atol[i]        = rtol[i] * q;
    }
    const double fnewt = cfg.newton_tol_factor > 0.0
                             ? cfg.newton_tol_factor
                             : std::max(10.0 * uround / rtol[0], std::min(0.03, std::sqrt(rtol[0])));
    const double safe = cfg.safety;
    const double facr = 1.0 / cfg.growth_max;
    const double facl = 1.0 / cfg.growth_min;
    const double cfac = safe * (1 + 2 * nit);
    const double thet = cfg.jacobian_reuse_theta;
    const double hmax = cfg.h_max > 0.0 ? std::min(cfg.h_max, tf - t0) : tf - t0;

    // Breaking points strictly inside (t0, tf); tf is always a target.
    std::vector<double> targets;
    for (double b : sys.breaking_points())
        if (b > t0 && b < tf)
            targets.push_back(b);
    targets.push_back(tf);
    std::size_t next_target = 0;

    IntegrationReport report;
    auto& st = report.stats;

    DenseOutput history;
    DenseOutput full_output;
    StepHistory<System> hist(sys, history);
    const double max_lag = sys.max_lag();

    // Samples.
    std::vector<double> sample_times = cfg.sample_times;
    std::sort(sample_times.begin(), sample_times.end());
    std::size_t next_sample = 0;
    auto sample_state       = [&](double t, const VectorXd& state) {
        Sample s;
        s.t = t;
        if (cfg.sample_components.empty())
            s.values = state;
        else
        {
            s.values.resize(static_cast<Index>(cfg.sample_components.size()));
            for (std::size_t k = 0; k < cfg.sample_components.size(); ++k)
                s.values[static_cast<Index>(k)] = state[cfg.sample_components[k]];
        }
        report.samples.push_back(std::move(s));
    };

    double x   = t0;
    VectorXd y = sys.initial_state();
    report.mesh.push_back(x);
    while (next_sample < sample_times.size() && sample_times[next_sample] <= x)
    {
        if (sample_times[next_sample] == x)
            sample_state(x, y);
        ++next_sample;
    }

    VectorXd scal(n);
    auto update_scal = [&] {
        for (Index i = 0; i < n; ++i)
            scal[i] = atol[i] + rtol[i] * std::abs(y[i]);
    };
    update_scal();

    VectorXd y0p(n);
    sys.rhs(x, y, hist, y0p);
    ++st.n_fevals;

    double h = fixed ? cfg.fixed_step : cfg.h_init;
    if (std::abs(h) <= 10.0 * uround)
        h = 1e-6;
    h = std::min(h, hmax);

    bool hit_target = false;
    auto clip_to_target = [&](double hn, double stretch) {
        const double target = targets[next_target];
        if (x + hn * stretch >= target)
        {
            hit_target = true;
            return target - x;
        }
        hit_target = false;
        return hn;
    };
    h = clip_to_target(h, fixed ? 1.0 + 1e-9 : 1.0001);

    VectorXd z1 = VectorXd::Zero(n), z2 = VectorXd::Zero(n), z3 = VectorXd::Zero(n);
    VectorXd f1 = VectorXd::Zero(n), f2 = VectorXd::Zero(n), f3 = VectorXd::Zero(n);
    VectorXd a1(n), a2(n), a3(n), cont(n), mf1(n), mf2(n), mf3(n), stage(n);
    Eigen::VectorXcd cz(n);

    bool first = true, reject = false, caljac = false, restart_values = true;
    bool need_jac = true, need_decomp = true;
    double hold = h, hacc = 0.0, erracc = 0.0, faccon = 1.0, theta = thet, thqold = 0.0;
    long naccpt = 0;
    int nsing   = 0;

    std::optional<typename System::Jacobian> jac;
    std::optional<typename System::template Factorization<double>> e1;
    std::optional<typename System::template Factorization<cplx>> e2;

    auto fail = [&](const std::string& why) {
        throw NumericalFailure("integrate: " + why + " at t = " + std::to_string(x));
    };

    while (true)
    {
        if (need_jac)
        {
            hist.clear_current();
            jac.emplace(sys.jacobian(x, y, hist));
            ++st.n_jac;
            caljac      = true;
            need_decomp = true;
            need_jac    = false;
        }
        if (need_decomp)
        {
            const double fac1 = radau::u1 / h;
            const cplx shift2(radau::alph / h, radau::beta / h);
            try
            {
                e1.emplace(sys.factor(*jac, fac1));
                e2.emplace(sys.factor(*jac, shift2));
                ++st.n_lu;
            }
            catch (const SingularMatrix&)
            {
                ++st.n_rejected;
                if (++nsing >= 5 || fixed)
                    fail("repeatedly singular iteration matrix");
                h *= 0.5;
                hit_target = false;
                reject     = true;
                if (!caljac)
                    need_jac = true;
                continue;
            }
            need_decomp = false;
        }

        if (st.n_steps + st.n_rejected >= cfg.max_steps)
            fail("maximum number of steps exceeded");
        if (0.1 * std::abs(h) <= std::abs(x) * uround)
            fail("step size too small");

        const double xph = hit_target ? targets[next_target] : x + h;
        const double fac1  = radau::u1 / h;
        const double alphn = radau::alph / h;
        const double betan = radau::beta / h;

        // Starting values.
        if (first || restart_values)
        {
            z1.setZero();
            z2.setZero();
            z3.setZero();
            f1.setZero();
            f2.setZero();
            f3.setZero();
        }
        else
        {
            const auto& last = history.segment(history.size() - 1);
            const double c3q = h / hold;
            const double c1q = radau::c1 * c3q;
            const double c2q = radau::c2 * c3q;
            for (Index i = 0; i < n; ++i)
            {
                const double ak1 = last.cont1[i], ak2 = last.cont2[i], ak3 = last.cont3[i];
                const double z1i = c1q * (ak1 + (c1q - radau::c2m1) * (ak2 + (c1q - radau::c1m1) * ak3));
                const double z2i = c2q * (ak1 + (c2q - radau::c2m1) * (ak2 + (c2q - radau::c1m1) * ak3));
                const double z3i = c3q * (ak1 + (c3q - radau::c2m1) * (ak2 + (c3q - radau::c1m1) * ak3));
                z1[i] = z1i;
                z2[i] = z2i;
                z3[i] = z3i;
                f1[i] = radau::TI11 * z1i + radau::TI12 * z2i + radau::TI13 * z3i;
                f2[i] = radau::TI21 * z1i + radau::TI22 * z2i + radau::TI23 * z3i;
                f3[i] = radau::TI31 * z1i + radau::TI32 * z2i + radau::TI33 * z3i;
            }
        }

        // Simplified Newton iteration.
        hist.set_current(x, xph - x, &y, &z1, &z2, &z3);
        int newt      = 0;
        faccon        = std::pow(std::max(faccon, uround), 0.8);
        theta         = std::abs(thet);
        double dynold = 0.0;
        enum class Outcome { converged, diverged, slow } outcome = Outcome::converged;
        while (true)
        {
            if (newt >= nit)
            {
                outcome = Outcome::diverged;
                break;
            }
            stage = y + z1;
            sys.rhs(x + radau::c1 * h, stage, hist, a1);
            stage = y + z2;
            sys.rhs(x + radau::c2 * h, stage, hist, a2);
            stage = y + z3;
            sys.rhs(xph, stage, hist, a3);
            st.n_fevals += 3;

            // Transformed residual.
            sys.apply_mass(f1, mf1);
            sys.apply_mass(f2, mf2);
            sys.apply_mass(f3, mf3);
            VectorXd r1 = radau::TI11 * a1 + radau::TI12 * a2 + radau::TI13 * a3 - fac1 * mf1;
            VectorXd r2 = radau::TI21 * a1 + radau::TI22 * a2 + radau::TI23 * a3 - alphn * mf2 + betan * mf3;
            VectorXd r3 = radau::TI31 * a1 + radau::TI32 * a2 + radau::TI33 * a3 - alphn * mf3 - betan * mf2;
            e1->solve_in_place(r1);
            cz.real() = r2;
            cz.imag() = r3;
            e2->solve_in_place(cz);
            r2 = cz.real();
            r3 = cz.imag();
            st.n_solves += 3;
            ++st.n_newton;
            ++newt;

            double dyno = 0.0;
            for (Index i = 0; i < n; ++i)
            {
                const double d1 = r1[i] / scal[i], d2 = r2[i] / scal[i], d3 = r3[i] / scal[i];
                dyno += d1 * d1 + d2 * d2 + d3 * d3;
            }
            dyno = std::sqrt(dyno / static_cast<double>(3 * n));

            if (newt > 1 && newt < nit)
            {
                const double thq = dyno / dynold;
                theta            = newt == 2 ? thq : std::sqrt(thq * thqold);
                thqold           = thq;
                if (theta < 0.99)
                {
                    faccon            = theta / (1.0 - theta);
                    const double dyth = faccon * dyno * std::pow(theta, nit - 1 - newt) / fnewt;
                    if (dyth >= 1.0 && !fixed)
                    {
                        const double qnewt = std::max(1e-4, std::min(20.0, dyth));
                        h *= 0.8 * std::pow(qnewt, -1.0 / (4.0 + nit - 1 - newt));
                        outcome = Outcome::slow;
                        break;
                    }
                }
                else
                {
                    outcome = Outcome::diverged;
                    break;
                }
            }
            dynold = std::max(dyno, uround);
            f1 += r1;
            f2 += r2;
            f3 += r3;
            z1 = radau::T11 * f1 + radau::T12 * f2 + radau::T13 * f3;
            z2 = radau::T21 * f1 + radau::T22 * f2 + radau::T23 * f3;
            z3 = radau::T31 * f1 + f2;
            if (faccon * dyno <= fnewt)
                break;
        }
        hist.clear_current();

        if (outcome != Outcome::converged)
        {
            if (fixed)
                fail("Newton iteration failed in fixed-step mode");
            if (outcome == Outcome::diverged)
                h *= 0.5;
            ++st.n_rejected;
            hit_target = false;
            reject     = true;
            if (caljac)
                need_decomp = true;
            else
                need_jac = true;
            continue;
        }

        // Error estimate.
        double err = 0.0;
        if (!fixed)
        {
            const double hee1 = radau::dd1 / h, hee2 = radau::dd2 / h, hee3 = radau::dd3 / h;
            VectorXd ef1 = hee1 * z1 + hee2 * z2 + hee3 * z3;
            VectorXd ef2(n);
            sys.apply_mass(ef1, ef2);
            cont = ef2 + y0p;
            e1->solve_in_place(cont);
            ++st.n_solves;
            auto norm = [&] {
                double s = 0.0;
                for (Index i = 0; i < n; ++i)
                {
                    const double v = cont[i] / scal[i];
                    s += v * v;
                }
                return std::max(std::sqrt(s / static_cast<double>(n)), 1e-10);
            };
            err = norm();
            if (err >= 1.0 && (first || reject))
            {
                stage = y + cont;
                sys.rhs(x, stage, hist, ef1);
                ++st.n_fevals;
                cont = ef1 + ef2;
                e1->solve_in_place(cont);
                ++st.n_solves;
                err = norm();
            }
        }

        const double fac = std::min(safe, cfac / (newt + 2 * nit));
        double quot      = std::max(facr, std::min(facl, std::pow(err, 0.25) / fac));
        double hnew      = h / quot;

        if (err < 1.0)
        {
            first = false;
            ++naccpt;
            if (cfg.predictive_controller && !fixed)
            {
                if (naccpt > 1)
                {
                    double facgus = (hacc / h) * std::pow(err * err / erracc, 0.25) / safe;
                    facgus        = std::max(facr, std::min(facl, facgus));
                    quot          = std::max(quot, facgus);
                    hnew          = h / quot;
                }
                hacc   = h;
                erracc = std::max(1e-2, err);
            }
            const double xold = x;
            hold              = h;
            x                 = xph;
            DenseSegment seg  = DenseSegment::from_stages(xold, x - xold, y, z1, z2, z3);
            y                 = seg.y_right;
            ++st.n_steps;
            report.mesh.push_back(x);

            while (next_sample < sample_times.size() && sample_times[next_sample] <= x)
            {
                const double ts = sample_times[next_sample];
                if (ts >= xold)
                {
                    VectorXd v(n);
                    seg.eval(ts, 0, n, v);
                    sample_state(ts, ts == x ? y : v);
                }
                ++next_sample;
            }
            if (cfg.keep_dense_output)
                full_output.push(seg);
            history.push(std::move(seg));
            if (max_lag > 0.0)
                history.prune_before(x - max_lag * (1.0 + 1e-9) - 1e-12);
            else
                history.prune_before(x);

            update_scal();
            caljac = false;
            nsing  = 0;
            restart_values = false;
            if (hit_target)
            {
                if (next_target + 1 == targets.size())
                    break;
                ++next_target;
                // Derivative jump: extrapolated starting values are unreliable.
                restart_values = true;
            }
            sys.rhs(x, y, hist, y0p);
            ++st.n_fevals;

            if (fixed)
            {
                h          = cfg.fixed_step;
                h          = clip_to_target(h, 1.0 + 1e-9);
                need_jac   = true;
                reject     = false;
                continue;
            }
            hnew = std::min(std::abs(hnew), hmax);
            if (reject)
                hnew = std::min(hnew, h);
            reject = false;

            const double hn = clip_to_target(hnew, 1.1);
            if (hit_target)
            {
                h = hn;
            }
            else
            {
                const double qt = hnew / h;
                if (theta <= thet && qt >= 1.0 && qt <= 1.2)
                    continue;
                h = hnew;
            }
            if (theta <= thet)
                need_decomp = true;
            else
                need_jac = true;
        }
        else
        {
            reject     = true;
            hit_target = false;
            if (first)
                h *= 0.1;
            else
                h = hnew;
            ++st.n_rejected;
            if (caljac)
                need_decomp = true;
            else
                need_jac = true;
        }
    }

    report.t_end = x;
    report.y_end = y;
    if (cfg.keep_dense_output)
        report.dense = std::move(full_output);
    return report;
}

} // namespace disdel

#endif // DISDEL_RADAU_HPP
