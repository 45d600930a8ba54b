///
/// \file driver.hpp
///
/// Runs of the built-in problems and the published sweeps: problem
/// construction, kernel approximation, tolerance set-up, integration and
/// error evaluation against the known or reference solutions.
///
#ifndef DISDEL_DRIVER_HPP
#define DISDEL_DRIVER_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <complex>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "disdel/builtin_problems.hpp"
#include "disdel/kernel_approx.hpp"
#include "disdel/problem.hpp"
#include "disdel/radau.hpp"

namespace disdel {

struct RunSpec
{
    std::string problem       = "example1";
    int param_set             = 2;
    Formulation formulation   = Formulation::ode;
    double eps                = 1e-8;
    double tol                = 1e-8;
    double omega              = 1.0;
    double aux_scale          = 1.0;
    std::optional<double> h_init; ///< empty: problem default
    LinearAlgebra linear_algebra = LinearAlgebra::structured;
    std::vector<double> sample_times;
    long max_steps = 500000;

    void validate() const
    {
        detail::require(eps > 0.0 && eps < 1.0, "run: eps must lie in (0, 1)");
        detail::require(tol > 0.0 && tol < 1.0, "run: tol must lie in (0, 1)");
        detail::require(omega >= 1.0, "run: omega must be at least 1");
        detail::require(aux_scale > 0.0, "run: aux_scale must be positive");
        detail::require(!h_init || *h_init > 0.0, "run: h_init must be positive");
        detail::require(param_set == 1 || param_set == 2, "run: param_set must be 1 or 2");
    }
};

/// Initial step used when none is given.
inline double default_h_init(const RunSpec& s)
{
    if (s.problem == "example2")
        return s.tol;
    if (s.problem == "example3")
        return std::max(s.eps, 1e-5);
    return s.eps;
}

struct RunResult
{
    RunSpec spec;
    ApproximationParams params;
    Index system_size = 0;
    Index z_count     = 0;
    std::vector<double> breaking_points;
    IntegrationReport report;
    VectorXd y_final;          ///< original (non-augmented) components at t_f
    std::optional<VectorXd> reference;
    std::optional<double> error; ///< max relative error of the checked components
    double wall_seconds = 0.0;
};

inline DistributedDelayProblem make_problem(const RunSpec& s)
{
    if (s.problem == "example3")
        return example3(s.param_set, s.formulation);
    return builtin_problem(s.problem);
}

inline AugmentedSystem make_system(const RunSpec& s, ApproximationParams* params = nullptr)
{
    const auto problem = make_problem(s);
    const auto approx  = approximate_kernel(*problem.kernel, s.eps, problem.tf - problem.t0);
    if (params != nullptr)
        *params = approx.params;
    AugmentOptions opts;
    opts.linear_algebra = s.linear_algebra;
    return AugmentedSystem(problem, approx.kernel, opts);
}

inline IntegratorConfig make_config(const AugmentedSystem& sys, const RunSpec& s)
{
    const auto ledger = tolerance_ledger(sys, s.tol, s.omega, s.aux_scale);
    auto cfg          = IntegratorConfig::from_ledger(ledger, s.h_init.value_or(default_h_init(s)));
    cfg.max_steps     = s.max_steps;
    cfg.sample_times  = s.sample_times;
    cfg.sample_components.resize(static_cast<std::size_t>(sys.dim()));
    for (Index i = 0; i < sys.dim(); ++i)
        cfg.sample_components[static_cast<std::size_t>(i)] = i;
    return cfg;
}

namespace detail {

// Chemo reference: DAE form with tight kernel and integrator accuracy.
inline VectorXd chemo_reference_uncached(int set)
{
    RunSpec r;
    r.problem     = "example3";
    r.param_set   = set;
    r.formulation = Formulation::dae;
    r.eps         = 1e-12;
    r.tol         = 1e-12;
    r.omega       = 100.0;
    r.aux_scale   = 1e-2;
    const auto sys = make_system(r);
    const auto rep = integrate(sys, make_config(sys, r));
    return rep.y_end.head(sys.dim());
}

} // namespace detail

/// Reference state at t_f = 100 for the chemo model, computed once per set.
inline VectorXd chemo_reference(int set)
{
    static std::mutex mutex;
    static std::map<int, VectorXd> cache;
    {
        std::lock_guard<std::mutex> lock(mutex);
        if (auto it = cache.find(set); it != cache.end())
            return it->second;
    }
    VectorXd ref = detail::chemo_reference_uncached(set);
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(set, ref);
    return ref;
}

/// Reference values of the checked components at t_f, if known.
inline std::optional<VectorXd> reference_solution(const RunSpec& s)
{
    if (s.problem == "example1")
        return VectorXd::Constant(1, example1_solution(example1().tf));
    if (s.problem == "example2")
        return VectorXd::Constant(1, example2_reference);
    if (s.problem == "example3")
        return chemo_reference(s.param_set).head(2);
    return std::nullopt;
}

inline RunResult run(const RunSpec& s)
{
    s.validate();
    const auto start = std::chrono::steady_clock::now();
    RunResult r;
    r.spec     = s;
    const auto sys  = make_system(s, &r.params);
    r.system_size   = sys.size();
    r.z_count       = sys.z_count();
    r.breaking_points = sys.breaking_points();
    r.report        = integrate(sys, make_config(sys, s));
    r.y_final       = r.report.y_end.head(sys.dim());
    r.wall_seconds  = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.reference     = reference_solution(s);
    if (r.reference)
    {
        double e = 0.0;
        for (Index i = 0; i < r.reference->size(); ++i)
            e = std::max(e, std::abs(r.y_final[i] - (*r.reference)[i]) / std::abs((*r.reference)[i]));
        r.error = e;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Number of worker threads: DISDEL_THREADS if set, else hardware concurrency.
inline unsigned sweep_threads()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DISDEL_THREADS"))
    {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

/// Apply fn to every item on a small thread pool; results keep input order.
template <class In, class Fn>
auto parallel_map(const std::vector<In>& items, Fn fn, unsigned threads = sweep_threads())
{
    using Out = decltype(fn(items.front()));
    std::vector<std::optional<Out>> slots(items.size());
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++)
        {
            try
            {
                slots[i].emplace(fn(items[i]));
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(items.size())));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n; ++k)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    std::vector<Out> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
    {
        if (errors[i])
            std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

enum class SweepTable
{
    t2,
    t3,
    t4,
    t7,
    t8
};

inline SweepTable parse_sweep_table(const std::string& s)
{
    if (s == "t2")
        return SweepTable::t2;
    if (s == "t3")
        return SweepTable::t3;
    if (s == "t4")
        return SweepTable::t4;
    if (s == "t7")
        return SweepTable::t7;
    if (s == "t8")
        return SweepTable::t8;
    throw DomainError("unknown sweep table '" + s + "'");
}

/// Run specifications of a table, in row order.
inline std::vector<RunSpec> sweep_specs(SweepTable table)
{
    std::vector<RunSpec> out;
    switch (table)
    {
    case SweepTable::t2:
        for (int k = 4; k <= 11; ++k)
        {
            RunSpec s;
            s.problem = "example1";
            s.eps     = std::pow(10.0, -k);
            s.tol     = 1e-8;
            out.push_back(s);
        }
        break;
    case SweepTable::t3:
        for (int k : {4, 6, 8, 10})
            for (double w : {1.0, 10.0, 100.0})
            {
                RunSpec s;
                s.problem = "example1";
                s.eps     = std::pow(10.0, -k);
                s.tol     = s.eps;
                s.omega   = w;
                s.h_init  = 0.1;
                out.push_back(s);
            }
        break;
    case SweepTable::t4:
        for (int k = 1; k <= 11; ++k)
        {
            RunSpec s;
            s.problem = "example2";
            s.eps     = std::pow(10.0, -k);
            s.tol     = 1e-8;
            out.push_back(s);
        }
        break;
    case SweepTable::t7:
    case SweepTable::t8:
        for (int k : {3, 5, 7, 9, 11})
            for (auto form : {Formulation::ode, Formulation::dae})
            {
                if (table == SweepTable::t7 && form == Formulation::dae)
                    continue;
                RunSpec s;
                s.problem     = "example3";
                s.param_set   = 2;
                s.formulation = form;
                s.eps         = std::pow(10.0, -k);
                s.tol         = s.eps;
                s.omega       = 100.0;
                s.aux_scale   = 1e-2;
                out.push_back(s);
            }
        break;
    }
    return out;
}

inline std::vector<RunResult> run_sweep(SweepTable table, unsigned threads = sweep_threads())
{
    return parallel_map(sweep_specs(table), [](const RunSpec& s) { return run(s); }, threads);
}

// ---------------------------------------------------------------------------
// Linear-algebra timing
// ---------------------------------------------------------------------------

struct SolveTiming
{
    double eps          = 0.0;
    Index z_count       = 0;
    Index system_size   = 0;
    double structured_s = 0.0; ///< seconds per factor + solve cycle
    double dense_s      = 0.0;
    double ratio() const { return dense_s / structured_s; }
};

/// One real + complex factor-and-solve cycle of the chemo system at a
/// fixed state, structured and assembled dense.
class SolveBench
{
public:
    SolveBench(int set, double eps)
    {
        RunSpec s;
        s.problem   = "example3";
        s.param_set = set;
        s.eps       = eps;
        const auto sys = make_system(s);
        NoHistory none;
        VectorXd x = sys.initial_state();
        for (Index i = sys.z_begin(); i < sys.size(); ++i)
            x[i] = 1e-3 * static_cast<double>(i % 7);
        op_          = sys.jacobian(0.5, x, none).op;
        z_count_     = sys.z_count();
        a_           = VectorXd::LinSpaced(sys.size(), -1.0, 1.0);
        ac_          = a_.cast<std::complex<double>>();
    }

    Index z_count() const { return z_count_; }
    Index system_size() const { return op_.size(); }

    /// Seconds per structured cycle, averaged over `batch` cycles.
    double structured_cycle(int batch = 50) const
    {
        const auto t0 = std::chrono::steady_clock::now();
        for (int k = 0; k < batch; ++k)
        {
            auto f1             = StructuredFactorization<double>(op_, real_shift);
            auto f2             = StructuredFactorization<std::complex<double>>(op_, complex_shift());
            VectorXd u          = a_;
            Eigen::VectorXcd uc = ac_;
            f1.solve_in_place(u);
            f2.solve_in_place(uc);
        }
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / batch;
    }

    /// Seconds for one dense cycle, including assembly.
    double dense_cycle() const
    {
        const auto t0       = std::chrono::steady_clock::now();
        const auto full     = assemble_dense(op_);
        auto f1             = DenseFactorization<double>(full, real_shift);
        auto f2             = DenseFactorization<std::complex<double>>(full, complex_shift());
        VectorXd u          = a_;
        Eigen::VectorXcd uc = ac_;
        f1.solve_in_place(u);
        f2.solve_in_place(uc);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

private:
    static constexpr double real_shift = 3.64;
    static std::complex<double> complex_shift() { return {2.68, 3.05}; }

    StructuredOperator op_;
    Index z_count_ = 0;
    VectorXd a_;
    Eigen::VectorXcd ac_;
};

/// Best of `repeats` cycles, structured vs dense.
inline SolveTiming time_solves(int set, double eps, int repeats = 5, bool with_dense = true)
{
    const SolveBench bench(set, eps);
    SolveTiming out;
    out.eps          = eps;
    out.z_count      = bench.z_count();
    out.system_size  = bench.system_size();
    out.structured_s = 1e300;
    for (int r = 0; r < repeats; ++r)
        out.structured_s = std::min(out.structured_s, bench.structured_cycle());
    if (with_dense)
    {
        out.dense_s = 1e300;
        for (int r = 0; r < repeats; ++r)
            out.dense_s = std::min(out.dense_s, bench.dense_cycle());
    }
    return out;
}

} // namespace disdel

#endif // DISDEL_DRIVER_HPP
