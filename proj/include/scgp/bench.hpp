#pragma once

/**
 * @file bench.hpp
 * @brief Convergence sweeps over N: configuration, error/rate columns and
 *        CSV / JSON / SVG emission.
 *
 * Config files are flat `key = value` text; `#` starts a comment.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "scgp/error.hpp"
#include "scgp/optimizer.hpp"
#include "scgp/problems.hpp"

namespace scgp {

inline constexpr const char* kCsvHeader =
    "N,control_error,control_rate,multiplier_error,multiplier_rate,state_integral,iterations,"
    "wall_time_s";

inline constexpr const char* kOutputDirEnv = "SCGP_OUTPUT_DIR";

struct SweepConfig {
    std::string problem = "example2";
    std::size_t d = 5;
    double alpha = 0.1;
    std::optional<double> mu_star;
    std::optional<double> delta;
    double horizon = 1.0;
    std::vector<std::size_t> N_list{8, 12, 16, 20, 30, 40};
    SolveConfig solve{};
    double u0 = 0.0;
    bool self_convergence = false;
    std::string output_dir = "out";
    std::vector<std::string> formats{"csv", "json"};

    void validate() const {
        if (N_list.empty()) throw ConfigError("N_list must not be empty");
        for (std::size_t k = 0; k < N_list.size(); ++k) {
            if (N_list[k] < 2) throw ConfigError("every N must be >= 2");
            if (k > 0 && N_list[k] <= N_list[k - 1]) {
                throw ConfigError("N_list must be strictly increasing");
            }
        }
        solve.validate();
    }

    [[nodiscard]] bool wants(const std::string& format) const {
        return std::find(formats.begin(), formats.end(), format) != formats.end();
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
        const auto x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    const auto s = lower(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace detail

/// Parse a `key = value` configuration. Unknown keys are an error.
inline SweepConfig parse_sweep_config(std::istream& in) {
    using namespace detail;
    SweepConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));

        if (key == "problem") c.problem = lower(v);
        else if (key == "d") c.d = parse_uint(key, v);
        else if (key == "alpha") c.alpha = parse_double(key, v);
        else if (key == "mu_star") c.mu_star = parse_double(key, v);
        else if (key == "delta") c.delta = parse_double(key, v);
        else if (key == "T") c.horizon = parse_double(key, v);
        else if (key == "N_list") {
            c.N_list.clear();
            for (const auto& item : split_list(v)) c.N_list.push_back(parse_uint(key, item));
        }
        else if (key == "L") c.solve.paths = parse_uint(key, v);
        else if (key == "rho") c.solve.rho = parse_double(key, v);
        else if (key == "rho_schedule") {
            const auto s = lower(v);
            if (s == "constant") c.solve.schedule = StepSchedule::Constant;
            else if (s == "harmonic") c.solve.schedule = StepSchedule::Harmonic;
            else throw ConfigError("rho_schedule must be constant or harmonic");
        }
        else if (key == "eps0") c.solve.eps0 = parse_double(key, v);
        else if (key == "max_iters") c.solve.max_iters = parse_uint(key, v);
        else if (key == "seed") c.solve.seed = parse_uint(key, v);
        else if (key == "u0") c.u0 = parse_double(key, v);
        else if (key == "basis.kind") {
            const auto s = lower(v);
            if (s == "hc" || s == "hypercube") c.solve.basis.kind = BasisKind::Hypercube;
            else if (s == "vp" || s == "voronoi") c.solve.basis.kind = BasisKind::Voronoi;
            else throw ConfigError("basis.kind must be HC or VP");
        }
        else if (key == "basis.K") {
            c.solve.basis.cells = parse_uint(key, v);
            c.solve.basis.q_cells = c.solve.basis.cells;
        }
        else if (key == "basis.K_tilde") c.solve.basis.q_cells = parse_uint(key, v);
        else if (key == "basis.tau_rule") c.solve.basis.tau_rule = parse_bool(key, v);
        else if (key == "basis.tau_scale") c.solve.basis.tau_scale = parse_double(key, v);
        else if (key == "basis.q_estimator") {
            const auto s = lower(v);
            if (s == "centered" || s == "centred") c.solve.basis.q_estimator = QEstimator::Centered;
            else if (s == "raw") c.solve.basis.q_estimator = QEstimator::Raw;
            else throw ConfigError("basis.q_estimator must be centered or raw");
        }
        else if (key == "brownian.centered") c.solve.center_increments = parse_bool(key, v);
        else if (key == "self_convergence") c.self_convergence = parse_bool(key, v);
        else if (key == "output.dir") c.output_dir = v;
        else if (key == "output.formats") {
            c.formats.clear();
            for (const auto& f : split_list(v)) c.formats.push_back(lower(f));
        }
        else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) c.output_dir = env;
    c.validate();
    return c;
}

inline SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_sweep_config(in);
}

struct ProblemInfo {
    const char* id;
    const char* summary;
};

inline std::vector<ProblemInfo> list_problems() {
    return {
        {"example1", "d decoupled tracking problems, dy = u dt + alpha dW; exact u*_n = (T^2-t^2)/n"},
        {"example2", "dy = (u - r) dt + alpha u dW; exact u* = (T-t)/(alpha^2 (T-t) + 1), mu* = 0.2"},
        {"example3", "dy = (u + y) dt + alpha sqrt(1+y^2) dW, y0 = 1; no closed form, mu* = 1"},
        {"zero_noise", "dy = u dt, j'(u) = u - 1, inactive constraint; u* = 1, mu* = 0"},
    };
}

/// Problem components selected by a config (one for scalar problems).
inline VectorProblem make_problem(const SweepConfig& c) {
    if (c.problem == "example1") {
        return example1(c.d, c.mu_star.value_or(0.3), c.alpha, c.horizon);
    }
    if (c.problem == "example2") {
        auto p = example2(c.alpha, c.horizon);
        if (c.delta) p.delta = *c.delta;
        return VectorProblem{{std::move(p)}};
    }
    if (c.problem == "example3") {
        return VectorProblem{{example3(c.alpha, c.delta.value_or(kExample3ActiveDelta),
                                       c.mu_star.value_or(1.0), c.horizon)}};
    }
    if (c.problem == "zero_noise") return VectorProblem{{zero_noise_problem(c.horizon)}};
    throw ConfigError("unknown problem '" + c.problem + "'");
}

/// ln(e1/e2) / ln(N2/N1).
inline double rate(double e1, std::size_t N1, double e2, std::size_t N2) {
    return std::log(e1 / e2) / std::log(static_cast<double>(N2) / static_cast<double>(N1));
}

/// Least-squares slope of -log(error) against log(N); first order gives ~1.
inline double fit_order(std::span<const double> N, std::span<const double> errors) {
    if (N.size() != errors.size()) throw ConfigError("fit_order: length mismatch");
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t k = 0; k < N.size(); ++k) {
        if (N[k] > 0.0 && errors[k] > 0.0 && std::isfinite(errors[k])) {
            x.push_back(std::log(N[k]));
            y.push_back(std::log(errors[k]));
        }
    }
    if (x.size() < 3) throw ConfigError("fit_order needs at least 3 valid rows");
    const auto k = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return -sxy / sxx;
}

struct ReportRow {
    std::size_t N = 0;
    std::optional<double> control_error;
    std::optional<double> control_rate;
    std::optional<double> multiplier_error;
    std::optional<double> multiplier_rate;
    std::optional<double> control_error_l2;  // continuous L2, JSON only
    double state_integral = 0.0;
    double delta = 0.0;
    double mu = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double wall_time_s = 0.0;
    std::optional<std::string> failure;
    std::optional<StepFunction> control;  // u_final, for trajectory files
};

struct RunReport {
    std::string problem;
    std::size_t component = 0;  // 1-based for vector problems, 0 for scalar
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    double rho = 0.0;
    std::string rho_schedule;
    std::string basis;
    std::size_t cells = 0;
    std::optional<TimeFn> u_star;
    std::vector<ReportRow> rows;

    [[nodiscard]] std::string stem() const {
        return component ? problem + "_c" + std::to_string(component) : problem;
    }
};

enum class Column { ControlError, MultiplierError };

inline double fit_order(const RunReport& report, Column column) {
    std::vector<double> N;
    std::vector<double> e;
    for (const auto& r : report.rows) {
        const auto& v = column == Column::ControlError ? r.control_error : r.multiplier_error;
        if (!r.failure && v) {
            N.push_back(static_cast<double>(r.N));
            e.push_back(*v);
        }
    }
    return fit_order(N, e);
}

namespace detail {

inline void fill_rates(RunReport& report) {
    auto fill = [&](auto err, auto out) {
        const ReportRow* prev = nullptr;
        for (auto& r : report.rows) {
            if (r.failure || !(r.*err) || !(*(r.*err) > 0.0)) continue;
            if (prev) r.*out = rate(*(prev->*err), prev->N, *(r.*err), r.N);
            prev = &r;
        }
    };
    fill(&ReportRow::control_error, &ReportRow::control_rate);
    fill(&ReportRow::multiplier_error, &ReportRow::multiplier_rate);
}

/// Per-N seed so that each row is reproducible on its own.
inline std::uint64_t seed_for(std::uint64_t base, std::size_t N) { return mix_seed(base, N); }

}  // namespace detail

/// Runs one solve per N and fills error, rate and integral columns. A failing
/// N is recorded in its row and the sweep continues.
inline std::vector<RunReport> run_sweep(const SweepConfig& config) {
    config.validate();
    const auto vp = make_problem(config);
    const std::size_t d = vp.components.size();
    const bool vector = config.problem == "example1";

    std::vector<RunReport> reports(d);
    for (std::size_t k = 0; k < d; ++k) {
        auto& rep = reports[k];
        rep.problem = config.problem;
        rep.component = vector ? k + 1 : 0;
        rep.seed = config.solve.seed;
        rep.paths = config.solve.paths;
        rep.rho = config.solve.rho;
        rep.rho_schedule = config.solve.schedule == StepSchedule::Harmonic ? "harmonic" : "constant";
        rep.basis = to_string(config.solve.basis.kind);
        rep.cells = config.solve.basis.cells;
        rep.u_star = vp.components[k].u_star;
    }

    for (const std::size_t N : config.N_list) {
        SolveConfig sc = config.solve;
        sc.seed = detail::seed_for(config.solve.seed, N);
        std::vector<SolveResult> results;
        std::optional<std::string> failure;
        try {
            for (std::size_t k = 0; k < d; ++k) {
                SolveConfig ck = sc;
                if (k > 0) ck.seed = mix_seed(sc.seed, 1000 + k);
                const auto& p = vp.components[k];
                results.push_back(solve(p, ck, StepFunction(p.grid(N), config.u0)));
            }
        } catch (const Error& e) {
            failure = e.what();
        }
        for (std::size_t k = 0; k < d; ++k) {
            ReportRow row;
            row.N = N;
            row.delta = vp.components[k].delta;
            if (failure || k >= results.size()) {
                row.failure = failure.value_or("not run");
                reports[k].rows.push_back(std::move(row));
                continue;
            }
            const auto& r = results[k];
            const auto& p = vp.components[k];
            if (p.u_star) {
                row.control_error = l2_nodal_dist(r.u_final, *p.u_star);
                row.control_error_l2 = l2_dist_to_function(r.u_final, *p.u_star);
            }
            if (p.mu_star) row.multiplier_error = std::abs(r.mu_final - *p.mu_star);
            row.state_integral = r.state_integral;
            row.mu = r.mu_final;
            row.iterations = r.iterations;
            row.converged = r.converged;
            row.wall_time_s = r.wall_time;
            row.control = r.u_final;
            reports[k].rows.push_back(std::move(row));
        }
    }

    if (config.self_convergence) {
        for (auto& rep : reports) {
            if (rep.u_star) continue;
            const ReportRow* finest = nullptr;
            for (const auto& r : rep.rows) {
                if (!r.failure) finest = &r;
            }
            if (!finest) continue;
            const StepFunction ref = *finest->control;
            for (auto& r : rep.rows) {
                if (r.failure || &r == finest) continue;
                r.control_error = l2_nodal_dist(*r.control, [&ref](double t) { return ref(t); });
            }
        }
    }
    for (auto& rep : reports) detail::fill_rates(rep);
    return reports;
}

/// Scientific notation with six significant digits and an unpadded exponent ("5.29884e-3").
inline std::string format_error(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.5e", x);
    std::string s(buf);
    const auto e = s.find('e');
    if (e == std::string::npos) return s;
    const int exponent = std::atoi(s.c_str() + e + 1);
    return s.substr(0, e) + "e" + std::to_string(exponent);
}

inline std::string format_fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

inline void write_csv(std::ostream& os, const RunReport& report) {
    os << kCsvHeader << '\n';
    auto opt = [](const std::optional<double>& v, auto fmt) { return v ? fmt(*v) : std::string(); };
    auto err = [](double x) { return format_error(x); };
    auto rate2 = [](double x) { return format_fixed(x, 2); };
    for (const auto& r : report.rows) {
        os << r.N << ',';
        if (r.failure) {
            os << ",,,,,,\n";
            continue;
        }
        os << opt(r.control_error, err) << ',' << opt(r.control_rate, rate2) << ','
           << opt(r.multiplier_error, err) << ',' << opt(r.multiplier_rate, rate2) << ','
           << format_fixed(r.state_integral, 5) << ',' << r.iterations << ','
           << format_fixed(r.wall_time_s, 2) << '\n';
    }
}

inline nlohmann::json to_json(const RunReport& report) {
    using nlohmann::json;
    json rows = json::array();
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    for (const auto& r : report.rows) {
        json row{{"N", r.N},
                 {"control_error", opt(r.control_error)},
                 {"control_rate", opt(r.control_rate)},
                 {"multiplier_error", opt(r.multiplier_error)},
                 {"multiplier_rate", opt(r.multiplier_rate)},
                 {"control_error_l2", opt(r.control_error_l2)},
                 {"state_integral", r.state_integral},
                 {"delta", r.delta},
                 {"mu", r.mu},
                 {"iterations", r.iterations},
                 {"converged", r.converged},
                 {"wall_time_s", r.wall_time_s}};
        if (r.failure) row["failure"] = *r.failure;
        rows.push_back(std::move(row));
    }
    return json{{"metadata",
                 {{"problem", report.problem},
                  {"component", report.component},
                  {"seed", report.seed},
                  {"L", report.paths},
                  {"rho", report.rho},
                  {"rho_schedule", report.rho_schedule},
                  {"basis", report.basis},
                  {"K", report.cells}}},
                {"rows", std::move(rows)}};
}

/// node,numerical,exact for one N; node is t_n, exact is empty without a closed form.
inline void write_trajectory_csv(std::ostream& os, const StepFunction& u,
                                 const std::optional<TimeFn>& exact) {
    os << "node,numerical,exact\n";
    os.precision(10);
    const auto& g = u.grid();
    for (std::size_t n = 0; n < g.steps(); ++n) {
        const double t = g.node(n);
        os << t << ',' << u[n] << ',';
        if (exact) os << (*exact)(t);
        os << '\n';
    }
}

/// Minimal log-log plot of the error columns against N.
inline void write_svg(std::ostream& os, const RunReport& report) {
    const double W = 480.0;
    const double H = 360.0;
    const double pad = 50.0;
    std::vector<std::pair<const char*, std::vector<std::pair<double, double>>>> series{
        {"control", {}}, {"multiplier", {}}};
    for (const auto& r : report.rows) {
        if (r.failure) continue;
        if (r.control_error && *r.control_error > 0) {
            series[0].second.emplace_back(std::log10(r.N), std::log10(*r.control_error));
        }
        if (r.multiplier_error && *r.multiplier_error > 0) {
            series[1].second.emplace_back(std::log10(r.N), std::log10(*r.multiplier_error));
        }
    }
    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
    for (const auto& [name, pts] : series) {
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
    auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
    const char* colors[] = {"#1f77b4", "#d62728"};
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << pad << "\" y=\"20\" font-size=\"12\">" << report.stem()
       << ": log10 error vs log10 N</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& pts = series[s].second;
        if (pts.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << colors[s] << "\" points=\"";
        for (const auto& [x, y] : pts) os << px(x) << ',' << py(y) << ' ';
        os << "\"/>\n<text x=\"" << W - 2 * pad << "\" y=\"" << 40 + 15 * s << "\" font-size=\"11\" fill=\""
           << colors[s] << "\">" << series[s].first << "</text>\n";
    }
    os << "</svg>\n";
}

/// Writes <stem>_report.csv/.json, per-N trajectory files and optional SVG.
inline std::vector<std::filesystem::path> write_outputs(const SweepConfig& config,
                                                        const std::vector<RunReport>& reports) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    auto open = [&](const fs::path& p) {
        std::ofstream f(p);
        if (!f) throw ConfigError("cannot write " + p.string());
        written.push_back(p);
        return f;
    };
    for (const auto& rep : reports) {
        if (config.wants("csv")) {
            auto f = open(dir / (rep.stem() + "_report.csv"));
            write_csv(f, rep);
        }
        if (config.wants("json")) {
            auto f = open(dir / (rep.stem() + "_report.json"));
            f << to_json(rep).dump(2) << '\n';
        }
        if (config.wants("svg")) {
            auto f = open(dir / (rep.stem() + "_errors.svg"));
            write_svg(f, rep);
        }
        for (const auto& row : rep.rows) {
            if (!row.control) continue;
            auto f = open(dir / (rep.stem() + "_N" + std::to_string(row.N) + "_control.csv"));
            write_trajectory_csv(f, *row.control, rep.u_star);
        }
    }
    return written;
}

}  // namespace scgp
