// disdel command-line driver.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "disdel/disdel.hpp"

namespace {

using disdel::DomainError;
using disdel::Index;
using disdel::NumericalFailure;
using Json = nlohmann::ordered_json;

constexpr int exit_ok        = 0;
constexpr int exit_usage     = 2;
constexpr int exit_numerical = 3;

// ---------------------------------------------------------------------------
// Tabular output
// ---------------------------------------------------------------------------

using Cell = std::variant<std::monostate, std::string, long long, double>;

struct Table
{
    std::string command;
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row)
    {
        if (row.size() != columns.size())
            throw std::logic_error("table row width mismatch");
        rows.push_back(std::move(row));
    }
};

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& c)
{
    struct Visitor
    {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
    };
    return std::visit(Visitor{}, c);
}

Json cell_json(const Cell& c)
{
    struct Visitor
    {
        Json operator()(std::monostate) const { return nullptr; }
        Json operator()(const std::string& s) const { return s; }
        Json operator()(long long v) const { return v; }
        Json operator()(double v) const
        {
            if (!std::isfinite(v))
                return format_double(v);
            return v;
        }
    };
    return std::visit(Visitor{}, c);
}

void write_csv(std::ostream& os, const Table& t)
{
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << format_cell(row[i]);
        os << '\n';
    }
}

Json table_json(const Table& t)
{
    Json doc;
    doc["command"] = t.command;
    doc["table"]   = t.name;
    doc["columns"] = t.columns;
    Json rows      = Json::array();
    for (const auto& row : t.rows)
    {
        Json obj = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            obj[t.columns[i]] = cell_json(row[i]);
        rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(rows);
    return doc;
}

struct OutputOptions
{
    std::string format = "csv";
    std::string file;
};

template <class Writer>
void emit(const OutputOptions& out, Writer&& write)
{
    if (out.file.empty())
    {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream os(out.file, std::ios::binary | std::ios::trunc);
    if (!os)
        throw DomainError("cannot open output file '" + out.file + "'");
    write(os);
    if (!os)
        throw NumericalFailure("writing '" + out.file + "' failed");
}

void emit_table(const OutputOptions& out, const Table& t)
{
    emit(out, [&](std::ostream& os) {
        if (out.format == "json")
            os << table_json(t).dump(2) << '\n';
        else
            write_csv(os, t);
    });
}

// ---------------------------------------------------------------------------
// Small parsing helpers
// ---------------------------------------------------------------------------

double parse_double(const std::string& s, const std::string& what)
{
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    double v = 0.0;
    in >> v;
    if (in.fail() || !in.eof())
        throw DomainError(what + ": cannot parse '" + s + "' as a number");
    return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty())
            out.push_back(parse_double(item, what));
    if (out.empty())
        throw DomainError(what + ": empty list");
    return out;
}

/// "auto" or a positive number.
std::optional<double> parse_h_init(const std::string& s)
{
    if (s.empty() || s == "auto")
        return std::nullopt;
    const double h = parse_double(s, "--h-init");
    if (!(h > 0.0))
        throw DomainError("--h-init must be positive or 'auto'");
    return h;
}

/// A bare integer is a count of uniformly spaced points in (t0, tf];
/// anything else is a comma-separated list of times.
std::vector<double> parse_sample_grid(const std::string& s, double t0, double tf)
{
    if (s.empty())
        return {};
    if (s.find_first_not_of("0123456789") == std::string::npos)
    {
        const long n = std::stol(s);
        if (n < 1)
            throw DomainError("--samples: count must be at least 1");
        std::vector<double> out;
        for (long k = 1; k <= n; ++k)
            out.push_back(t0 + (tf - t0) * static_cast<double>(k) / static_cast<double>(n));
        return out;
    }
    auto out = parse_list(s, "--samples");
    for (double t : out)
        if (t < t0 || t > tf)
            throw DomainError("--samples: time " + format_double(t) + " outside the integration interval");
    std::sort(out.begin(), out.end());
    return out;
}

disdel::LinearAlgebra parse_linear_algebra(const std::string& s)
{
    if (s == "structured")
        return disdel::LinearAlgebra::structured;
    if (s == "dense")
        return disdel::LinearAlgebra::dense;
    throw DomainError("unknown linear algebra '" + s + "'");
}

// ---------------------------------------------------------------------------
// params
// ---------------------------------------------------------------------------

struct ParamsArgs
{
    std::string distribution;
    double alpha     = 0.5;
    double kappa     = 0.25;
    double beta      = 1.0;
    std::vector<double> eps;
    double delta_min = 0.0;
    double tf        = 0.0;
};

void cmd_params(const ParamsArgs& a, const OutputOptions& out)
{
    Table t;
    t.command = "params";
    t.name    = a.distribution;
    const bool gamma = a.distribution == "gamma";
    t.columns = {"distribution", "alpha", gamma ? "kappa" : "beta", "eps", "h", "T", "delta", "M", "N", "terms"};
    for (double e : a.eps)
    {
        const auto p = gamma ? disdel::gamma_params(a.alpha, a.kappa, e, a.delta_min, a.tf)
                             : disdel::pareto_params(a.alpha, a.beta, e, a.tf);
        t.add({a.distribution, a.alpha, gamma ? a.kappa : a.beta, e, p.h_quad, p.t_max, p.delta,
               static_cast<long long>(p.m_lo), static_cast<long long>(p.n_hi),
               static_cast<long long>(p.term_count())});
    }
    emit_table(out, t);
}

// ---------------------------------------------------------------------------
// approx: kernel record
// ---------------------------------------------------------------------------

struct ApproxArgs
{
    std::string distribution;
    double alpha     = 0.5;
    double kappa     = 0.25;
    double beta      = 1.0;
    double eps       = 1e-8;
    double delta_min = 0.0;
    double tf        = 0.0;
};

disdel::KernelSpec kernel_spec(const std::string& dist, double alpha, double kappa, double beta)
{
    if (dist == "gamma")
        return disdel::GammaDistribution{kappa, alpha};
    if (dist == "pareto")
        return disdel::ParetoTypeI{alpha, beta};
    return disdel::RawPowerLaw{alpha};
}

void cmd_approx(const ApproxArgs& a, const OutputOptions& out)
{
    const auto approx = disdel::approximate_kernel(kernel_spec(a.distribution, a.alpha, a.kappa, a.beta), a.eps,
                                                   a.tf, a.delta_min);
    const auto& p     = approx.params;
    const auto& terms = approx.kernel.terms();
    if (out.format == "json")
    {
        Json doc;
        doc["command"]      = "approx";
        doc["distribution"] = a.distribution;
        doc["params"]       = {{"eps", p.eps},     {"h_quad", p.h_quad}, {"m_lo", p.m_lo},
                               {"n_hi", p.n_hi},   {"delta", p.delta},   {"t_max", p.t_max},
                               {"angle_a", p.angle_a}};
        Json jt = Json::array();
        for (const auto& term : terms)
        {
            Json coeffs = Json::array();
            for (double c : term.coeffs)
                coeffs.push_back(format_double(c));
            jt.push_back({{"exponent", format_double(term.exponent)}, {"coeffs", coeffs}});
        }
        doc["kernel"] = {{"delay", format_double(approx.kernel.delay())},
                         {"approximated_exponent", format_double(approx.approximated_exponent)},
                         {"terms", jt}};
        emit(out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
        return;
    }
    std::size_t degree = 0;
    for (const auto& term : terms)
        degree = std::max(degree, term.coeffs.size());
    Table t;
    t.command = "approx";
    t.name    = a.distribution;
    t.columns = {"index", "exponent"};
    for (std::size_t j = 0; j < degree; ++j)
        t.columns.push_back("coeff_" + std::to_string(j));
    for (std::size_t i = 0; i < terms.size(); ++i)
    {
        std::vector<Cell> row{static_cast<long long>(i), terms[i].exponent};
        for (std::size_t j = 0; j < degree; ++j)
            row.emplace_back(j < terms[i].coeffs.size() ? terms[i].coeffs[j] : 0.0);
        t.add(std::move(row));
    }
    emit_table(out, t);
}

// ---------------------------------------------------------------------------
// approx-scan
// ---------------------------------------------------------------------------

struct ScanArgs
{
    std::string scan;
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double h_min     = 0.05;
    double h_max     = 1.5;
    double h_step    = 0.01;
    double threshold = 1e-5;
    double h         = 0.78;
    int m_min        = -80;
    int n_min        = -20;
    int n_max        = 60;
    double eps       = 1e-5;
    double delta     = 0.0;
    double t_max     = 100.0;
    int points       = 200;
    std::vector<double> t_values;
};

// Minimum over the strip half-width a of the a-priori trapezoidal bound.
double apriori_trapezoid_bound(double alpha, double h)
{
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 400; ++k)
    {
        const double a = 0.5 * std::numbers::pi * k / 400.0;
        best           = std::min(best, disdel::trapezoid_error_bound(alpha, h, a));
    }
    return best;
}

std::vector<double> h_grid(const ScanArgs& a)
{
    if (!(a.h_min > 0.0 && a.h_max > a.h_min && a.h_step > 0.0))
        throw DomainError("approx-scan: need 0 < h-min < h-max and h-step > 0");
    std::vector<double> out;
    const long n = std::lround(std::floor((a.h_max - a.h_min) / a.h_step + 1e-9));
    for (long k = 0; k <= n; ++k)
        out.push_back(a.h_min + static_cast<double>(k) * a.h_step);
    return out;
}

double max_low_error(double alpha, double h, int m, double t_hi)
{
    double worst = 0.0;
    for (double t : disdel::log_grid(1e-10, t_hi, 200))
        worst = std::max(worst, disdel::truncation_low_error(alpha, h, m, t));
    return worst;
}

double max_high_error(double alpha, double h, int n, double delta)
{
    double worst = 0.0;
    for (double t : disdel::log_grid(delta, 500.0, 200))
        worst = std::max(worst, disdel::truncation_high_error(alpha, h, n, t));
    return worst;
}

const std::vector<double>& fig2_t_values()
{
    static const std::vector<double> v{1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10};
    return v;
}

const std::vector<double>& fig2_delta_values()
{
    static const std::vector<double> v{1e2, 1e1, 1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
    return v;
}

void cmd_approx_scan(const ScanArgs& a, const OutputOptions& out)
{
    for (double al : a.alphas)
        disdel::detail::require(al > 0.0 && al < 1.0, "approx-scan: alpha must lie in (0, 1)");
    Table t;
    t.command = "approx-scan";
    t.name    = a.scan;
    if (a.scan == "trapezoid")
    {
        t.columns = {"alpha", "h", "rel_error", "apriori_bound"};
        const auto hs = h_grid(a);
        for (double al : a.alphas)
            for (double h : hs)
                t.add({al, h, disdel::trapezoid_relative_error(al, h), apriori_trapezoid_bound(al, h)});
    }
    else if (a.scan == "crossing")
    {
        disdel::detail::require(a.threshold > 0.0 && a.threshold < 1.0, "approx-scan: threshold must lie in (0, 1)");
        t.columns = {"alpha", "threshold", "h_measured", "h_apriori"};
        h_grid(a);
        for (double al : a.alphas)
            t.add({al, a.threshold, disdel::trapezoid_step_crossing(al, a.threshold, a.h_min, a.h_max, a.h_step),
                   disdel::trapezoid_step_and_angle(al, a.threshold).h_quad});
    }
    else if (a.scan == "truncation")
    {
        disdel::detail::require(a.m_min < 0 && a.n_min < a.n_max, "approx-scan: need m-min < 0 and n-min < n-max");
        t.columns       = {"side", "parameter", "index", "rel_error"};
        const double al = a.alphas.front();
        for (double tt : fig2_t_values())
            for (int m = -1; m >= a.m_min; --m)
                t.add({std::string("low"), tt, static_cast<long long>(m), max_low_error(al, a.h, m, tt)});
        for (double d : fig2_delta_values())
            for (int n = a.n_min; n <= a.n_max; ++n)
                t.add({std::string("high"), d, static_cast<long long>(n), max_high_error(al, a.h, n, d)});
    }
    else if (a.scan == "indices")
    {
        disdel::detail::require(a.eps > 0.0 && a.eps < 1.0, "approx-scan: eps must lie in (0, 1)");
        t.columns       = {"side", "parameter", "eps", "index"};
        const double al = a.alphas.front();
        for (double tt : fig2_t_values())
        {
            int m = -1;
            while (m > a.m_min && max_low_error(al, a.h, m, tt) > a.eps)
                --m;
            t.add({std::string("low"), tt, a.eps, static_cast<long long>(m)});
        }
        for (double d : fig2_delta_values())
        {
            int n = a.n_min;
            while (n < a.n_max && max_high_error(al, a.h, n, d) > a.eps)
                ++n;
            t.add({std::string("high"), d, a.eps, static_cast<long long>(n)});
        }
    }
    else if (a.scan == "points")
    {
        const double al    = a.alphas.front();
        const double delta = a.delta > 0.0 ? a.delta : std::pow(a.eps, 1.0 / (1.0 - al));
        const auto p       = disdel::power_law_params(al, a.eps, delta, a.t_max);
        const auto sum     = disdel::build_power_law_sum(al, p);
        std::vector<double> ts = a.t_values;
        if (ts.empty())
        {
            disdel::detail::require(a.points >= 2, "approx-scan: need at least 2 points");
            ts = disdel::log_grid(p.delta, p.t_max, static_cast<std::size_t>(a.points));
            if (p.delta < 1.0 && p.t_max > 1.0)
                ts.push_back(1.0);
            std::sort(ts.begin(), ts.end());
            ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        }
        t.columns = {"t",           "exact",           "approx",          "rel_error",
                     "bound_trapezoidal", "bound_low", "bound_high", "bound_total"};
        for (const auto& s : disdel::error_report(al, p, ts))
            t.add({s.t, std::pow(s.t, -al), sum.evaluate(s.t), s.measured, s.trapezoidal, s.truncation_low,
                   s.truncation_high, s.bound_total()});
    }
    else
        throw DomainError("unknown scan '" + a.scan + "'");
    emit_table(out, t);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunArgs
{
    std::string problem = "example1";
    int set             = 2;
    std::string formulation = "ode";
    double eps          = 1e-8;
    double tol          = 1e-8;
    double omega        = 1.0;
    double aux_scale    = 1.0;
    std::string h_init  = "auto";
    std::string samples;
    std::string linear_algebra = "structured";
    long max_steps      = 500000;
    std::string table   = "summary";
};

std::vector<double> breaks_hit(const disdel::RunResult& r)
{
    std::vector<double> hit;
    for (double b : r.breaking_points)
        for (double m : r.report.mesh)
            if (std::abs(m - b) <= 1e-12 * std::max(1.0, std::abs(b)))
            {
                hit.push_back(b);
                break;
            }
    return hit;
}

Cell optional_cell(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }

void cmd_run(const RunArgs& a, const OutputOptions& out)
{
    disdel::RunSpec s;
    s.problem        = a.problem;
    s.param_set      = a.set;
    s.formulation    = disdel::parse_formulation(a.formulation);
    s.eps            = a.eps;
    s.tol            = a.tol;
    s.omega          = a.omega;
    s.aux_scale      = a.aux_scale;
    s.h_init         = parse_h_init(a.h_init);
    s.linear_algebra = parse_linear_algebra(a.linear_algebra);
    s.max_steps      = a.max_steps;
    const auto problem = disdel::make_problem(s);
    s.sample_times     = parse_sample_grid(a.samples, problem.t0, problem.tf);
    s.validate();

    const auto r   = disdel::run(s);
    const auto hit = breaks_hit(r);
    const auto& st = r.report.stats;
    const Index d  = r.y_final.size();
    Table t;
    t.command = "run";
    t.name    = a.table;
    if (a.table == "summary")
    {
        t.columns = {"problem", "set",   "formulation", "eps",   "tol",      "omega",     "aux_scale",
                     "h",       "T",     "delta",       "M",     "N",        "system_size", "z_count"};
        for (Index i = 0; i < d; ++i)
            t.columns.push_back("y" + std::to_string(i));
        for (const char* c : {"error", "steps", "rejected", "fevals", "jac", "lu", "solves", "newton",
                              "breaks_scheduled", "breaks_hit"})
            t.columns.emplace_back(c);
        std::vector<Cell> row{a.problem,
                              static_cast<long long>(a.set),
                              std::string(disdel::to_string(s.formulation)),
                              s.eps,
                              s.tol,
                              s.omega,
                              s.aux_scale,
                              r.params.h_quad,
                              r.params.t_max,
                              r.params.delta,
                              static_cast<long long>(r.params.m_lo),
                              static_cast<long long>(r.params.n_hi),
                              static_cast<long long>(r.system_size),
                              static_cast<long long>(r.z_count)};
        for (Index i = 0; i < d; ++i)
            row.emplace_back(r.y_final[i]);
        row.push_back(optional_cell(r.error));
        for (long v : {st.n_steps, st.n_rejected, st.n_fevals, st.n_jac, st.n_lu, st.n_solves, st.n_newton})
            row.emplace_back(static_cast<long long>(v));
        row.emplace_back(static_cast<long long>(r.breaking_points.size()));
        row.emplace_back(static_cast<long long>(hit.size()));
        t.add(std::move(row));
    }
    else if (a.table == "samples")
    {
        t.columns = {"t"};
        for (Index i = 0; i < d; ++i)
            t.columns.push_back("y" + std::to_string(i));
        for (const auto& smp : r.report.samples)
        {
            std::vector<Cell> row{smp.t};
            for (Index i = 0; i < d; ++i)
                row.emplace_back(smp.values[i]);
            t.add(std::move(row));
        }
    }
    else if (a.table == "breaks")
    {
        t.columns = {"t", "hit"};
        for (double b : r.breaking_points)
            t.add({b, static_cast<long long>(std::find(hit.begin(), hit.end(), b) != hit.end())});
    }
    else
        throw DomainError("unknown run table '" + a.table + "' (expected summary, samples or breaks)");

    if (!r.breaking_points.empty())
    {
        std::cerr << "breaking points hit (" << hit.size() << " of " << r.breaking_points.size() << "):";
        for (double b : hit)
            std::cerr << ' ' << format_double(b);
        std::cerr << '\n';
    }
    emit_table(out, t);
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs
{
    std::string table;
    std::vector<double> eps;
    double tol       = 0.0;
    double omega     = 0.0;
    double aux_scale = 0.0;
    std::string h_init;
    std::string linear_algebra = "structured";
    int set          = 0;
    int repeats      = 5;
    bool has_tol = false, has_omega = false, has_aux = false, has_h = false, has_la = false, has_set = false;
};

using Field = std::function<Cell(const disdel::RunResult&)>;

const std::map<std::string, Field>& sweep_fields()
{
    static const std::map<std::string, Field> f{
        {"eps", [](const auto& r) { return Cell{r.spec.eps}; }},
        {"tol", [](const auto& r) { return Cell{r.spec.tol}; }},
        {"omega", [](const auto& r) { return Cell{r.spec.omega}; }},
        {"formulation", [](const auto& r) { return Cell{std::string(disdel::to_string(r.spec.formulation))}; }},
        {"h", [](const auto& r) { return Cell{r.params.h_quad}; }},
        {"T", [](const auto& r) { return Cell{r.params.t_max}; }},
        {"M", [](const auto& r) { return Cell{static_cast<long long>(r.params.m_lo)}; }},
        {"N", [](const auto& r) { return Cell{static_cast<long long>(r.params.n_hi)}; }},
        {"z_count", [](const auto& r) { return Cell{static_cast<long long>(r.z_count)}; }},
        {"err", [](const auto& r) { return optional_cell(r.error); }},
        {"steps", [](const auto& r) { return Cell{static_cast<long long>(r.report.stats.n_steps)}; }},
        {"rejected", [](const auto& r) { return Cell{static_cast<long long>(r.report.stats.n_rejected)}; }},
        {"fevals", [](const auto& r) { return Cell{static_cast<long long>(r.report.stats.n_fevals)}; }},
        {"jac", [](const auto& r) { return Cell{static_cast<long long>(r.report.stats.n_jac)}; }},
        {"lu", [](const auto& r) { return Cell{static_cast<long long>(r.report.stats.n_lu)}; }},
        {"solves", [](const auto& r) { return Cell{static_cast<long long>(r.report.stats.n_solves)}; }},
    };
    return f;
}

std::vector<std::string> sweep_columns(disdel::SweepTable table)
{
    using disdel::SweepTable;
    switch (table)
    {
    case SweepTable::t2: return {"eps", "tol", "h", "T", "M", "N", "err", "steps", "fevals"};
    case SweepTable::t3: return {"eps", "tol", "omega", "err", "steps", "fevals"};
    case SweepTable::t4: return {"eps", "tol", "h", "M", "N", "err", "steps", "fevals", "jac", "lu", "solves"};
    case SweepTable::t7: return {"eps", "tol", "M", "N", "z_count", "err", "steps", "fevals"};
    case SweepTable::t8: return {"eps", "tol", "formulation", "err", "steps", "fevals", "jac", "lu"};
    }
    return {};
}

// Replaces the eps ladder, keeping the other dimensions of the first row group.
std::vector<disdel::RunSpec> override_eps(const std::vector<disdel::RunSpec>& specs, const std::vector<double>& eps)
{
    std::vector<disdel::RunSpec> group;
    for (const auto& s : specs)
        if (s.eps == specs.front().eps)
            group.push_back(s);
    std::vector<disdel::RunSpec> out;
    for (double e : eps)
        for (auto s : group)
        {
            if (s.tol == s.eps)
                s.tol = e;
            s.eps = e;
            out.push_back(s);
        }
    return out;
}

void cmd_sweep_timing(const SweepArgs& a, const OutputOptions& out)
{
    const int set = a.has_set ? a.set : 1;
    const std::vector<double> eps = a.eps.empty() ? std::vector<double>{1e-3, 1e-4, 1e-5, 1e-6} : a.eps;
    disdel::detail::require(a.repeats >= 1, "sweep: repeats must be at least 1");
    Table t;
    t.command = "sweep";
    t.name    = a.table;
    t.columns = {"set", "eps", "system_size", "z_count", "speedup", "structured_rel", "dense_rel"};
    std::vector<disdel::SolveTiming> rows;
    for (double e : eps)
        rows.push_back(disdel::time_solves(set, e, a.repeats, true));
    for (const auto& r : rows)
        t.add({static_cast<long long>(set), r.eps, static_cast<long long>(r.system_size),
               static_cast<long long>(r.z_count), r.ratio(), r.structured_s / rows.front().structured_s,
               r.dense_s / rows.front().dense_s});
    emit_table(out, t);
}

void cmd_sweep(const SweepArgs& a, const OutputOptions& out)
{
    if (a.table == "t6_timing")
        return cmd_sweep_timing(a, out);
    const auto table = disdel::parse_sweep_table(a.table);
    auto specs       = disdel::sweep_specs(table);
    if (!a.eps.empty())
        specs = override_eps(specs, a.eps);
    for (auto& s : specs)
    {
        if (a.has_tol)
            s.tol = a.tol;
        if (a.has_omega)
            s.omega = a.omega;
        if (a.has_aux)
            s.aux_scale = a.aux_scale;
        if (a.has_h)
            s.h_init = parse_h_init(a.h_init);
        if (a.has_la)
            s.linear_algebra = parse_linear_algebra(a.linear_algebra);
        if (a.has_set)
            s.param_set = a.set;
        s.validate();
    }
    const auto results = disdel::parallel_map(specs, [](const disdel::RunSpec& s) { return disdel::run(s); });
    Table t;
    t.command = "sweep";
    t.name    = a.table;
    t.columns = sweep_columns(table);
    for (const auto& r : results)
    {
        std::vector<Cell> row;
        for (const auto& c : t.columns)
            row.push_back(sweep_fields().at(c)(r));
        t.add(std::move(row));
    }
    emit_table(out, t);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Solver for differential equations with distributed delays"};
    app.name("disdel");
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.set_config("--config", "", "INI configuration file; command-line flags take precedence");

    OutputOptions out;
    app.add_option("--output", out.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out-file", out.file, "Write output to this file instead of stdout");

    // params
    ParamsArgs pa;
    auto* params = app.add_subcommand("params", "Quadrature parameters (h, T, delta, M, N) per eps");
    params->add_option("distribution", pa.distribution, "gamma or pareto")
        ->required()
        ->check(CLI::IsMember({"gamma", "pareto"}));
    params->add_option("--alpha", pa.alpha, "Kernel exponent");
    params->add_option("--kappa", pa.kappa, "Gamma rate");
    params->add_option("--beta", pa.beta, "Pareto scale");
    params->add_option("--eps", pa.eps, "Target accuracy (repeatable or comma-separated)")
        ->required()
        ->delimiter(',');
    params->add_option("--delta-min", pa.delta_min, "Lower bound for delta (gamma)");
    params->add_option("--tf", pa.tf, "Length of the integration interval")->required();

    // approx
    ApproxArgs aa;
    auto* approx = app.add_subcommand("approx", "Exponential-sum kernel record");
    approx->add_option("distribution", aa.distribution, "gamma, pareto or power")
        ->required()
        ->check(CLI::IsMember({"gamma", "pareto", "power"}));
    approx->add_option("--alpha", aa.alpha, "Kernel exponent");
    approx->add_option("--kappa", aa.kappa, "Gamma rate");
    approx->add_option("--beta", aa.beta, "Pareto scale");
    approx->add_option("--eps", aa.eps, "Target accuracy");
    approx->add_option("--delta-min", aa.delta_min, "Lower bound for delta");
    approx->add_option("--tf", aa.tf, "Length of the integration interval")->required();

    // approx-scan
    ScanArgs sa;
    auto* scan = app.add_subcommand("approx-scan", "Error scans of the trapezoidal exponential sum");
    scan->add_option("scan", sa.scan, "trapezoid, crossing, truncation, indices or points")
        ->required()
        ->check(CLI::IsMember({"trapezoid", "crossing", "truncation", "indices", "points"}));
    auto* o_alpha = scan->add_option("--alpha", sa.alphas,
                                     "Exponent(s); single-exponent scans use the first (default 0.5)")
                        ->delimiter(',');
    scan->add_option("--h-min", sa.h_min, "Smallest step of the h grid");
    scan->add_option("--h-max", sa.h_max, "Largest step of the h grid");
    scan->add_option("--h-step", sa.h_step, "Spacing of the h grid");
    scan->add_option("--threshold", sa.threshold, "Error level for the crossing scan");
    scan->add_option("--step", sa.h, "Fixed step for the truncation scans");
    scan->add_option("--m-min", sa.m_min, "Most negative M scanned");
    scan->add_option("--n-min", sa.n_min, "Smallest N scanned");
    scan->add_option("--n-max", sa.n_max, "Largest N scanned");
    scan->add_option("--eps", sa.eps, "Target accuracy (indices, points)");
    scan->add_option("--delta", sa.delta, "Left end of the interval (points)");
    scan->add_option("--t-max", sa.t_max, "Right end of the interval (points)");
    scan->add_option("--points", sa.points, "Number of log-spaced points (points)");
    scan->add_option("--t", sa.t_values, "Explicit evaluation points (points)")->delimiter(',');

    // run
    RunArgs ra;
    std::vector<std::string> problems = disdel::builtin_problem_names();
    auto* run = app.add_subcommand("run", "Integrate a built-in problem");
    run->add_option("--problem", ra.problem, "Built-in problem")->check(CLI::IsMember(problems));
    run->add_option("--set", ra.set, "Chemo parameter set (example3)")->check(CLI::IsMember({1, 2}));
    run->add_option("--formulation", ra.formulation, "ode or dae (example3)")
        ->check(CLI::IsMember({"ode", "dae"}));
    run->add_option("--eps", ra.eps, "Kernel accuracy");
    run->add_option("--tol", ra.tol, "Integrator tolerance");
    run->add_option("--omega", ra.omega, "Tolerance relaxation of the auxiliary chains");
    run->add_option("--aux-scale", ra.aux_scale, "Tolerance factor of the integral variable");
    run->add_option("--h-init", ra.h_init, "Initial step or 'auto'");
    run->add_option("--samples", ra.samples, "Sample count or comma-separated times");
    run->add_option("--linear-algebra", ra.linear_algebra, "structured or dense")
        ->check(CLI::IsMember({"structured", "dense"}));
    run->add_option("--max-steps", ra.max_steps, "Step limit");
    run->add_option("--table", ra.table, "summary, samples or breaks")
        ->check(CLI::IsMember({"summary", "samples", "breaks"}));

    // sweep
    SweepArgs wa;
    auto* sweep = app.add_subcommand("sweep", "Run a published eps ladder");
    sweep->add_option("table", wa.table, "t2, t3, t4, t7, t8 or t6_timing")
        ->required()
        ->check(CLI::IsMember({"t2", "t3", "t4", "t7", "t8", "t6_timing"}));
    sweep->add_option("--eps", wa.eps, "Replacement eps ladder")->delimiter(',');
    auto* o_tol   = sweep->add_option("--tol", wa.tol, "Integrator tolerance for every row");
    auto* o_omega = sweep->add_option("--omega", wa.omega, "Omega for every row");
    auto* o_aux   = sweep->add_option("--aux-scale", wa.aux_scale, "Integral tolerance factor for every row");
    auto* o_h     = sweep->add_option("--h-init", wa.h_init, "Initial step for every row");
    auto* o_la    = sweep->add_option("--linear-algebra", wa.linear_algebra, "structured or dense")
                     ->check(CLI::IsMember({"structured", "dense"}));
    auto* o_set   = sweep->add_option("--set", wa.set, "Chemo parameter set")->check(CLI::IsMember({1, 2}));
    sweep->add_option("--repeats", wa.repeats, "Timing repetitions (t6_timing)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return exit_usage;
    }

    try
    {
        if (*params)
            cmd_params(pa, out);
        else if (*approx)
            cmd_approx(aa, out);
        else if (*scan)
        {
            if (o_alpha->count() == 0 && sa.scan != "trapezoid" && sa.scan != "crossing")
                sa.alphas = {0.5};
            cmd_approx_scan(sa, out);
        }
        else if (*run)
            cmd_run(ra, out);
        else if (*sweep)
        {
            wa.has_tol   = o_tol->count() > 0;
            wa.has_omega = o_omega->count() > 0;
            wa.has_aux   = o_aux->count() > 0;
            wa.has_h     = o_h->count() > 0;
            wa.has_la    = o_la->count() > 0;
            wa.has_set   = o_set->count() > 0;
            cmd_sweep(wa, out);
        }
    }
    catch (const DomainError& e)
    {
        std::cerr << "disdel: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const NumericalFailure& e)
    {
        std::cerr << "disdel: numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
    catch (const std::exception& e)
    {
        std::cerr << "disdel: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_ok;
}
