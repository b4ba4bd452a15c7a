// torus_pam_cli - evaluate, verify, simulate and run experiments for the
// parabolic Anderson model with colored noise on the flat torus.
//
// Parameters come from built-in defaults, then a JSON config file
// (--config), then command-line flags; later sources win.  Every run writes
// manifest.json into the output directory before any result file.
// Exit status: 0 success, 1 usage or domain error, 2 a verification failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "torus_pam.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* artifact_version = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Param {
    std::string name;
    json fallback;
    std::string help;
};

class Context {
public:
    std::string command;
    json params;
    fs::path out_dir;
    std::string format = "json";
    int threads = 1;
    std::uint64_t seed = 1;

    double num(const std::string& k) const { return params.at(k).get<double>(); }
    int integer(const std::string& k) const { return params.at(k).get<int>(); }
    bool flag(const std::string& k) const { return params.at(k).get<bool>(); }
    std::string str(const std::string& k) const { return params.at(k).get<std::string>(); }
    std::vector<double> list(const std::string& k) const { return params.at(k).get<std::vector<double>>(); }

    tpam::NoiseSpec spec() const
    {
        tpam::NoiseSpec s;
        s.d = integer("d");
        s.alpha = num("alpha");
        s.rho = num("rho");
        s.lambda = params.contains("lambda") ? num("lambda") : 1.0;
        s.validate();
        return s;
    }

    fs::path path(const std::string& file) const { return out_dir / file; }

    // Scalar results: <stem>.json, or <stem>.csv as key,value rows with
    // nested keys joined by '.'.
    void write_result(const std::string& stem, const json& j) const
    {
        if (format == "json") {
            write_json(stem + ".json", j);
            return;
        }
        tpam::CsvWriter csv(path(stem + ".csv").string(), {"key", "value"});
        flatten(csv, "", j);
    }

    void write_json(const std::string& file, const json& j) const
    {
        std::ofstream os(path(file));
        if (!os) throw tpam::DomainError("cannot write " + path(file).string());
        os << j.dump(2) << '\n';
    }

private:
    static void flatten(tpam::CsvWriter& csv, const std::string& prefix, const json& j)
    {
        if (j.is_object() || j.is_array()) {
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                const std::string key = j.is_object() ? it.key() : std::to_string(i);
                flatten(csv, prefix.empty() ? key : prefix + "." + key, *it);
            }
            return;
        }
        csv.row_strings({prefix, j.is_number_float() ? tpam::format_double(j.get<double>()) : j.dump()});
    }
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Param> params;
    std::function<bool(Context&)> run;   // returns the overall pass flag
};

std::string normalize(std::string s)
{
    for (char& c : s)
        if (c == '_') c = '-';
    return s;
}

json parse_flag(const std::string& name, const std::string& raw, const json& fallback)
{
    try {
        if (fallback.is_boolean()) {
            if (raw == "true" || raw == "1" || raw == "yes") return true;
            if (raw == "false" || raw == "0" || raw == "no") return false;
            throw UsageError("--" + name + " expects true or false");
        }
        if (fallback.is_number_integer() || fallback.is_number_unsigned()) {
            std::size_t used = 0;
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw UsageError("--" + name + " expects an integer");
            return v;
        }
        if (fallback.is_number()) {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw UsageError("--" + name + " expects a number");
            return v;
        }
        if (fallback.is_array()) {
            json arr = json::array();
            std::stringstream ss(raw);
            std::string item;
            while (std::getline(ss, item, ',')) {
                std::size_t used = 0;
                const double v = std::stod(item, &used);
                if (used != item.size()) throw UsageError("--" + name + " expects comma-separated numbers");
                arr.push_back(v);
            }
            return arr;
        }
    } catch (const std::invalid_argument&) {
        throw UsageError("--" + name + ": cannot parse '" + raw + "'");
    } catch (const std::out_of_range&) {
        throw UsageError("--" + name + ": value out of range '" + raw + "'");
    }
    return raw;
}

// Lookup in a config file: top-level keys, or keys under the command name.
void merge_config(const fs::path& file, const std::string& command, json& params)
{
    std::ifstream is(file);
    if (!is) throw UsageError("cannot open config file " + file.string());
    json cfg;
    try {
        cfg = json::parse(is);
    } catch (const json::parse_error& e) {
        throw UsageError("config file " + file.string() + ": " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
    auto apply = [&](const json& obj) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            const std::string key = normalize(it.key());
            if (key == command && it.value().is_object()) continue;
            if (!params.contains(key)) throw UsageError("config file: unknown parameter '" + it.key() + "'");
            params[key] = it.value();
        }
    };
    apply(cfg);
    if (cfg.contains(command) && cfg[command].is_object()) apply(cfg[command]);
}

std::vector<double> as_point(const std::vector<double>& v, int d, const std::string& what)
{
    if (static_cast<int>(v.size()) != d)
        throw tpam::DomainError(what + " needs " + std::to_string(d) + " coordinates");
    return v;
}

std::vector<std::vector<double>> as_points(const std::vector<double>& flat, int d, const std::string& what)
{
    if (flat.empty() || flat.size() % static_cast<std::size_t>(d) != 0)
        throw tpam::DomainError(what + " needs a multiple of " + std::to_string(d) + " coordinates");
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < flat.size(); i += d) pts.emplace_back(flat.begin() + i, flat.begin() + i + d);
    return pts;
}

// Initial data: uniform (mass), cosine density (1 + amp cos x_1)/(2pi)^d
// sampled on the solver grid, or a point mass at mu-x0.
tpam::InitialMeasure make_measure(const Context& c, int d, int grid_n)
{
    const std::string kind = c.str("mu");
    if (kind == "uniform") return tpam::InitialMeasure::make_uniform(d, c.num("mu-mass"));
    if (kind == "cosine") {
        const double amp = c.num("mu-amp");
        if (std::abs(amp) > 1.0) throw tpam::DomainError("mu-amp must lie in [-1, 1]");
        std::size_t total = 1;
        for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(grid_n);
        std::vector<double> v(total);
        for (std::size_t i = 0; i < total; ++i) {
            const double x1 = -tpam::pi + tpam::two_pi * static_cast<double>(i % grid_n) / grid_n;
            v[i] = c.num("mu-mass") * (1.0 + amp * std::cos(x1)) * std::pow(tpam::two_pi, -d);
        }
        return tpam::InitialMeasure::make_density(d, grid_n, v);
    }
    if (kind == "delta") return tpam::InitialMeasure::make_delta(as_point(c.list("mu-x0"), d, "mu-x0"));
    throw tpam::DomainError("unknown initial measure '" + kind + "' (uniform, cosine, delta)");
}

std::vector<Param> measure_params()
{
    return {{"mu", "uniform", "initial measure: uniform, cosine or delta"},
            {"mu-mass", 1.0, "total mass"},
            {"mu-amp", 0.5, "cosine density amplitude"},
            {"mu-x0", json::array({0.0}), "point-mass location"}};
}

std::vector<Param> noise_params(double alpha = 0.3, double rho = 1.0)
{
    return {{"d", 1, "dimension"}, {"alpha", alpha, "covariance exponent"}, {"rho", rho, "zero-mode weight"}};
}

std::vector<Param> solver_params()
{
    return {{"lambda", 1.0, "noise strength"},
            {"grid-n", 64, "output grid points per axis"},
            {"mode-k", 21, "spectral cutoff"},
            {"noise-mode-k", -1, "noise cutoff (-1 follows mode-k, 0 keeps the constant mode)"},
            {"dt", 1e-3, "time step"},
            {"T", 1.0, "horizon"},
            {"dealias", true, "form products on a 3K+1 grid"}};
}

tpam::SolverConfig solver_config(const Context& c)
{
    tpam::SolverConfig s;
    s.spec = c.spec();
    s.grid_n = c.integer("grid-n");
    s.mode_k = c.integer("mode-k");
    s.noise_mode_k = c.integer("noise-mode-k");
    s.dt = c.num("dt");
    s.T = c.num("T");
    s.dealias = c.flag("dealias");
    if (s.spec.lambda != 0.0) tpam::require_dalang(s.spec);
    s.validate();
    return s;
}

template <class... Lists>
std::vector<Param> join(Lists... lists)
{
    std::vector<Param> out;
    (out.insert(out.end(), lists.begin(), lists.end()), ...);
    return out;
}

void summary(const std::string& line) { std::cout << line << '\n'; }

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(8) << v;
    return os.str();
}

// ---------------------------------------------------------------------------

bool cmd_kernel_eval(Context& c)
{
    const int d = c.integer("d");
    const double t = c.num("t");
    const auto x = as_point(c.list("x"), d, "x");
    json out;
    out["t"] = t;
    out["x"] = x;
    out["G"] = tpam::heat_kernel(t, x);
    out["log_G"] = tpam::log_heat_kernel(t, x);
    out["deviation"] = tpam::heat_kernel_deviation(t, x);
    if (d == 1) {
        out["G_spectral"] = tpam::heat_kernel_spectral_1d(t, x[0]);
        out["G_image"] = tpam::heat_kernel_image_1d(t, x[0]);
    }
    c.write_result("kernel_eval", out);
    summary("G(" + fmt(t) + ", x) = " + fmt(out["G"].get<double>()));
    return true;
}

bool cmd_kernel_verify(Context& c)
{
    const int d = c.integer("d");
    const auto ts = c.list("t-list");
    const int n = c.integer("samples");
    tpam::CsvWriter csv(c.path("kernel_verify.csv").string(),
                        {"t", "samples", "sandwich_violations", "uniform_violations", "max_dual_difference",
                         "flattening_sup", "flattening_bound", "pass"});
    bool all = true;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double t = ts[k];
        tpam::RngStream rng(c.seed, k);
        int sandwich = 0, uniform = 0;
        double dual = 0.0, flat = 0.0;
        for (int i = 0; i < n; ++i) {
            std::vector<double> x(d);
            for (double& v : x) v = -tpam::pi + tpam::two_pi * rng.uniform();
            const tpam::TorusPoint p(x);
            if (!tpam::kernel_sandwich_check(t, p).pass) ++sandwich;
            if (!tpam::kernel_uniform_bound_check(t, p).pass) ++uniform;
            double spectral = 1.0, image = 1.0;
            for (double xi : x) {
                spectral *= tpam::heat_kernel_spectral_1d(t, xi);
                image *= tpam::heat_kernel_image_1d(t, xi);
            }
            dual = std::max(dual, std::abs(spectral - image));
            flat = std::max(flat, std::abs(tpam::heat_kernel_deviation(t, x)));
        }
        const double bound = t >= 1.0 ? tpam::KernelConfig{}.theta(1.0, d) * std::exp(-0.5 * t) : NAN;
        const bool pass = sandwich == 0 && uniform == 0 && dual <= 1e-10 && (!(t >= 1.0) || flat <= bound);
        all = all && pass;
        csv.row({t, double(n), double(sandwich), double(uniform), dual, flat, bound, pass ? 1.0 : 0.0});
        summary("t = " + fmt(t) + ": sandwich violations " + std::to_string(sandwich) + ", uniform violations " +
                std::to_string(uniform) + ", dual-series difference " + fmt(dual) + (pass ? "  PASS" : "  FAIL"));
    }
    return all;
}

bool cmd_cov_eval(Context& c)
{
    const auto spec = c.spec();
    const auto x = as_point(c.list("x"), spec.d, "x");
    const auto a = tpam::covariance_eval(spec, x);
    const auto b = tpam::covariance_eval_integral(spec, x);
    const double diff = std::abs(a.value - b.value);
    const bool pass = diff <= c.num("tolerance");
    json out;
    out["x"] = x;
    out["spectral"] = {{"value", a.value}, {"error_bound", a.error_bound}};
    out["integral"] = {{"value", b.value}, {"error_bound", b.error_bound}};
    out["difference"] = diff;
    out["pass"] = pass;
    c.write_result("cov_eval", out);
    summary("f(x) = " + fmt(a.value) + " (spectral), " + fmt(b.value) + " (integral)" + (pass ? "  PASS" : "  FAIL"));
    return pass;
}

bool cmd_cov_rho_star(Context& c)
{
    auto spec = c.spec();
    spec.rho = 0.0;
    const auto r = tpam::rho_star(spec, c.integer("grid-n"));
    json out;
    out["alpha"] = spec.alpha;
    out["d"] = spec.d;
    out["rho_star_est"] = r.rho_star_est;
    out["rho_sufficient"] = r.rho_sufficient;
    out["min_f"] = r.min_f;
    out["argmin"] = r.argmin;
    out["grid_n"] = r.grid_n;
    c.write_result("cov_rho_star", out);
    summary("rho* ~ " + fmt(r.rho_star_est) + ", sufficient rho = " + fmt(r.rho_sufficient));
    return true;
}

bool cmd_noise_sample(Context& c)
{
    const auto spec = c.spec();
    const int K = c.integer("K");
    const int n = c.integer("grid-n");
    const double dt = c.num("dt");
    const tpam::NoiseSampler sampler(spec, tpam::make_weights(spec, K), dt, n);
    std::vector<tpam::FieldRecord> records;
    tpam::CsvWriter csv(c.path("noise.csv").string(), {"record", "index", "value"});
    double residue = 0.0;
    for (int k = 0; k < c.integer("count"); ++k) {
        tpam::RngStream rng(c.seed, static_cast<std::uint64_t>(k));
        const auto inc = sampler.sample(rng);
        residue = std::max(residue, inc.imag_residue);
        records.push_back({static_cast<std::uint32_t>(spec.d), static_cast<std::uint32_t>(n), dt, c.seed, inc.values});
        for (std::size_t i = 0; i < inc.values.size(); ++i) csv.row({double(k), double(i), inc.values[i]});
    }
    tpam::write_field_file(c.path("noise.bin").string(), records);
    summary("wrote " + std::to_string(records.size()) + " increments; max imaginary residue " + fmt(residue));
    return true;
}

bool cmd_noise_verify(Context& c)
{
    const auto spec = c.spec();
    const auto r = tpam::empirical_covariance(spec, c.num("dt"), c.integer("grid-n"), c.integer("K"),
                                              c.integer("samples"), c.seed);
    const auto v = tpam::constant_functional_variance(spec, c.num("dt"), c.integer("steps"), c.integer("grid-n"),
                                                      c.integer("K"), c.integer("samples"), c.seed + 1);
    const bool cov_pass = r.max_deviation_se <= 4.0;
    const bool var_pass = std::abs(v.variance - v.target) <= 3.0 * v.std_err;
    tpam::CsvWriter csv(c.path("noise_verify.csv").string(), {"i", "j", "estimate", "target", "std_err"});
    const int n = r.grid_n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * n + j;
            csv.row({double(i), double(j), r.estimate[k], r.target[k], r.std_err[k]});
        }
    json out;
    out["max_deviation_se"] = r.max_deviation_se;
    out["max_abs_deviation"] = r.max_abs_deviation;
    out["max_deviation_full"] = r.max_deviation_full;
    out["max_imag_residue"] = r.max_imag_residue;
    out["constant_functional"] = {{"t", v.t}, {"variance", v.variance}, {"std_err", v.std_err}, {"target", v.target}};
    out["pass"] = {{"covariance", cov_pass}, {"constant_functional", var_pass}};
    c.write_result("noise_verify", out);
    summary("covariance: worst deviation " + fmt(r.max_deviation_se) + " SE" + (cov_pass ? "  PASS" : "  FAIL"));
    summary("constant functional variance " + fmt(v.variance) + " vs " + fmt(v.target) + (var_pass ? "  PASS" : "  FAIL"));
    return cov_pass && var_pass;
}

bool cmd_moments_table(Context& c)
{
    const auto spec = c.spec();
    tpam::require_dalang(spec);
    const int n_max = c.integer("n-max");
    const double t_max = c.num("t-max");
    const auto table = tpam::hn_table(spec, n_max, tpam::uniform_time_grid(t_max, c.integer("cells")), c.threads);
    std::vector<std::string> header{"t"};
    for (int n = 0; n <= n_max; ++n) header.push_back("h" + std::to_string(n));
    tpam::CsvWriter csv(c.path("hn_table.csv").string(), header);
    bool monotone = true;
    for (std::size_t i = 0; i < table.t_grid.size(); ++i) {
        std::vector<double> row{table.t_grid[i]};
        for (int n = 0; n <= n_max; ++n) {
            row.push_back(table.values[n][i]);
            if (i > 0 && table.values[n][i] < table.values[n][i - 1]) monotone = false;
        }
        csv.row(row);
    }
    const auto h = tpam::h_lambda_sum(table, t_max, spec.lambda);
    json out;
    out["parameters"] = {{"d", spec.d}, {"alpha", spec.alpha}, {"rho", spec.rho}, {"lambda", spec.lambda},
                         {"n_max", n_max}, {"t_max", t_max}, {"cells", c.integer("cells")}};
    out["H_lambda"] = {{"t", t_max}, {"value", h.value}, {"terms", h.terms}, {"last_ratio", h.last_ratio},
                       {"converged", h.converged}};
    out["rows_nondecreasing"] = monotone;
    c.write_result("moments_table", out);
    summary("H_lambda(" + fmt(t_max) + ") = " + fmt(h.value) + (h.converged ? "" : " (partial sum)") +
            (monotone ? "; rows nondecreasing  PASS" : "; rows not monotone  FAIL"));
    return monotone;
}

bool cmd_gamma0(Context& c)
{
    const auto spec = c.spec();
    tpam::require_dalang(spec);
    const auto g = tpam::gamma0(spec.lambda, spec);
    json out;
    out["lambda"] = g.lambda;
    out["gamma0"] = g.gamma0;
    out["residual"] = g.residual;
    out["theta_at_gamma0"] = g.theta_at_gamma0;
    out["bracket"] = {g.bracket_lo, g.bracket_hi};
    out["iterations"] = g.iterations;
    out["rate_exponent"] = g.rate_exponent;
    out["rate_ratio"] = g.rate_ratio;
    const bool pass = g.residual < 1e-9;
    out["pass"] = pass;
    c.write_result("gamma0", out);
    std::cout << out.dump(2) << '\n';
    return pass;
}

bool cmd_bridge_verify(Context& c)
{
    const int d = c.integer("d");
    const double eps = c.num("eps");
    const double t = c.num("t") > 0.0 ? c.num("t") : 2.0 * eps;
    const int n = c.integer("samples");
    const auto large = tpam::check_large_time_bound(eps, t, d, n, c.seed);
    const auto sweep = tpam::image_sum_sweep(d, n, c.num("t-max"), c.seed + 1);
    const auto refined = tpam::image_sum_sweep(d, 2 * n, c.num("t-max"), c.seed + 2);
    const double change = std::abs(refined.fitted_constant / sweep.fitted_constant - 1.0);
    const bool sweep_pass = std::isfinite(sweep.fitted_constant) && change <= 0.2;
    json out;
    out["large_time"] = {{"n_samples", large.n_samples}, {"violations", large.violations},
                         {"c_eps", large.c_eps}, {"C_eps", large.C_eps}, {"min_ratio", large.min_ratio},
                         {"max_ratio", large.max_ratio}, {"parameters", {{"d", d}, {"eps", eps}, {"t", t}}},
                         {"seed", large.seed}};
    out["image_sum"] = {{"n_samples", sweep.n_samples}, {"fitted_constant", sweep.fitted_constant},
                        {"fitted_constant_refined", refined.fitted_constant}, {"relative_change", change},
                        {"worst_point", sweep.worst_point}, {"seed", sweep.seed}};
    out["pass"] = large.pass() && sweep_pass;
    c.write_result("bridge_verify", out);
    summary("large-time sandwich: " + std::to_string(large.violations) + " violations in " + std::to_string(n) +
            (large.pass() ? "  PASS" : "  FAIL"));
    summary("image-sum constant " + fmt(sweep.fitted_constant) + " -> " + fmt(refined.fitted_constant) +
            (sweep_pass ? "  PASS" : "  FAIL"));
    return large.pass() && sweep_pass;
}

bool cmd_simulate(Context& c)
{
    const auto cfg0 = solver_config(c);
    auto cfg = cfg0;
    cfg.output_every = c.integer("output-every");
    const auto mu = make_measure(c, cfg.spec.d, cfg.grid_n);
    const tpam::PamSolver solver(cfg, mu);
    const auto tr = solver.solve(c.seed, static_cast<std::uint64_t>(c.integer("path")));
    std::vector<tpam::FieldRecord> records;
    tpam::CsvWriter csv(c.path("trajectory.csv").string(), {"time", "index", "value"});
    for (std::size_t k = 0; k < tr.fields.size(); ++k) {
        records.push_back({static_cast<std::uint32_t>(cfg.spec.d), static_cast<std::uint32_t>(cfg.grid_n), cfg.dt,
                           c.seed, tr.fields[k]});
        for (std::size_t i = 0; i < tr.fields[k].size(); ++i) csv.row({tr.times[k], double(i), tr.fields[k][i]});
    }
    tpam::write_field_file(c.path("trajectory.bin").string(), records);
    json meta;
    meta["version"] = artifact_version;
    meta["seed"] = c.seed;
    meta["path"] = tr.path;
    meta["times"] = tr.times;
    meta["max_imag_residue"] = tr.max_imag_residue;
    meta["positivity_violations"] = tr.positivity_violations;
    meta["config"] = c.params;
    c.write_result("trajectory", meta);
    summary("stored " + std::to_string(tr.fields.size()) + " fields; negative grid values " +
            std::to_string(tr.positivity_violations));
    return true;
}

bool cmd_mc_moments(Context& c)
{
    tpam::McMomentsConfig m;
    m.solver = solver_config(c);
    m.mu = make_measure(c, m.solver.spec.d, m.solver.grid_n);
    m.p = c.num("p");
    m.n_samples = static_cast<std::size_t>(c.integer("samples"));
    m.t_list = c.list("t-list");
    m.x_list = as_points(c.list("x-list"), m.solver.spec.d, "x-list");
    m.seed = c.seed;
    m.threads = c.threads;
    m.h_cells = static_cast<std::size_t>(c.integer("h-cells"));
    if (c.num("lower-eps") > 0.0) {
        tpam::NoiseSpec zero = m.solver.spec;
        zero.rho = 0.0;
        const auto rs = tpam::rho_star(zero, 256);
        const double C_f = m.solver.spec.rho * std::pow(tpam::two_pi, -zero.d) + rs.min_f;
        if (C_f > 0.0 && m.mu.is_bounded_density())
            m.lower = tpam::LowerBoundInputs{c.num("lower-eps"), C_f, tpam::detail::density_infimum(m.mu)};
    }
    const auto est = tpam::mc_moments(m);
    tpam::CsvWriter csv(c.path("mc_moments.csv").string(),
                        {"d", "alpha", "rho", "lambda", "t", "x1", "p", "value", "std_err", "n_samples",
                         "upper_bound", "upper_converged", "upper_pass", "lower_bound", "lower_pass", "reference"});
    bool all = true;
    for (const auto& e : est) {
        all = all && e.upper_pass && e.lower_pass;
        csv.row({double(m.solver.spec.d), m.solver.spec.alpha, m.solver.spec.rho, m.solver.spec.lambda, e.t, e.x[0],
                 e.p, e.value, e.std_err, double(e.n_samples), e.upper_bound, e.upper_converged ? 1.0 : 0.0,
                 e.upper_pass ? 1.0 : 0.0, e.lower_bound, e.lower_pass ? 1.0 : 0.0, e.reference});
        summary("t = " + fmt(e.t) + ", x1 = " + fmt(e.x[0]) + ": E|u|^p = " + fmt(e.value) + " +- " + fmt(e.std_err) +
                ((e.upper_pass && e.lower_pass) ? "  PASS" : "  FAIL"));
    }
    c.write_result("mc_moments", {{"estimates", est.size()}, {"pass", all}});
    return all;
}

bool cmd_two_point(Context& c)
{
    const auto spec = c.spec();
    if (spec.d != 1) throw tpam::DomainError("two-point: d = 1 only");
    const auto mu = make_measure(c, 1, 256);
    tpam::ResolventOptions opt;
    opt.modes = c.integer("modes");
    opt.time_steps = c.integer("steps");
    const auto r = tpam::two_point(c.num("t"), c.num("x"), c.num("xp"), mu, spec, c.integer("n-max"), opt);
    json out;
    out["value"] = r.value;
    out["terms"] = r.terms;
    out["j0_product"] = r.j0_product;
    out["truncation_ratio"] = r.truncation_ratio;
    out["warning"] = r.warning;
    c.write_result("two_point", out);
    summary("E[u(t,x) u(t,x')] ~ " + fmt(r.value) + " (truncation ratio " + fmt(r.truncation_ratio) + ")" +
            (r.warning ? "  WARNING: truncation ratio above 0.1" : ""));
    return true;
}

bool cmd_resolvent(Context& c)
{
    const auto spec = c.spec();
    if (spec.d != 1) throw tpam::DomainError("resolvent: d = 1 only");
    const int nx = c.integer("nx");
    if (nx < 2 || nx > 33) throw tpam::DomainError("resolvent: nx must lie in [2, 33]");
    std::vector<double> xs;
    for (int i = 0; i < nx; ++i) xs.push_back(-tpam::pi + tpam::two_pi * i / nx);
    tpam::ResolventOptions opt;
    opt.modes = c.integer("modes");
    opt.time_steps = c.integer("steps");
    if (c.num("constant-f") > 0.0) opt.constant_f = c.num("constant-f");
    const auto tab = tpam::resolvent_Ln(spec, c.integer("n-max"), c.list("t-list"), c.num("x0"), c.num("x0p"), xs, opt);
    std::vector<std::string> header{"n", "t", "x", "xp", "L", "GG"};
    tpam::CsvWriter csv(c.path("resolvent.csv").string(), header);
    for (int n = 0; n <= tab.n_max; ++n)
        for (std::size_t k = 0; k < tab.times.size(); ++k)
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < nx; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * nx + j;
                    csv.row({double(n), tab.times[k], xs[i], xs[j], tab.values[n][k][idx], tab.gg[k][idx]});
                }
    const bool pass = tab.all_finite && tab.max_L0_error <= 1e-12;
    json out;
    out["rho_used"] = tab.rho_used;
    out["fitted_C"] = tab.fitted_C;
    out["fitted_C_per_n"] = tab.fitted_C_per_n;
    out["gg_floor"] = tab.gg_floor;
    out["masked_points"] = tab.masked_points;
    out["max_L0_error"] = tab.max_L0_error;
    out["all_finite"] = tab.all_finite;
    out["pass"] = pass;
    c.write_result("resolvent", out);
    summary("fitted C = " + fmt(tab.fitted_C) + ", max |L0 - GG| = " + fmt(tab.max_L0_error) + (pass ? "  PASS" : "  FAIL"));
    return pass;
}

tpam::CovarianceLookup lookup_for(const Context& c, const tpam::NoiseSpec& spec)
{
    const std::string mode = c.str("covariance");
    if (mode == "constant") return tpam::CovarianceLookup::constant(spec);
    if (mode == "truncated") {
        const int K = c.integer("K");
        return tpam::CovarianceLookup::truncated(spec, K, spec.d == 1 ? std::max(1024, 4 * K + 1) : 4 * K + 1);
    }
    if (mode == "capped") {
        if (spec.d == 1) return tpam::CovarianceLookup::capped(spec, c.num("cap-radius"), c.threads);
        return tpam::CovarianceLookup::for_grid(spec, c.integer("grid-n"), c.threads);
    }
    throw tpam::DomainError("covariance must be capped, truncated or constant");
}

bool cmd_feynman_kac(Context& c)
{
    const auto spec = c.spec();
    const auto mu = make_measure(c, spec.d, 256);
    const auto f = lookup_for(c, spec);
    tpam::FeynmanKacOptions o;
    o.n_paths = static_cast<std::size_t>(c.integer("paths"));
    o.dt_bm = c.num("dt-bm");
    o.seed = c.seed;
    o.threads = c.threads;
    const auto r = tpam::feynman_kac_second_moment(spec, mu, c.num("t"), as_point(c.list("x"), spec.d, "x"), f, o);
    json out;
    out["value"] = r.estimate.value;
    out["std_err"] = r.estimate.std_err;
    out["n_paths"] = r.estimate.n_samples;
    out["steps"] = r.steps;
    out["cap_radius"] = r.cap_radius;
    out["jensen_floor"] = r.jensen_floor;
    out["pass"] = r.jensen_pass;
    c.write_result("feynman_kac", out);
    summary("E[u^2] ~ " + fmt(r.estimate.value) + " +- " + fmt(r.estimate.std_err) + "; Jensen floor " +
            fmt(r.jensen_floor) + (r.jensen_pass ? "  PASS" : "  FAIL"));
    return r.jensen_pass;
}

bool cmd_ergodic_check(Context& c)
{
    const auto spec = c.spec();
    const auto f = lookup_for(c, spec);
    const auto rep = tpam::ergodic_average_check(spec, c.list("t-list"), static_cast<std::size_t>(c.integer("paths")), f,
                                                 c.num("dt"), c.seed, c.threads);
    tpam::CsvWriter csv(c.path("ergodic.csv").string(), {"t", "mean", "std_err", "variance", "expected", "limit"});
    for (const auto& r : rep.rows) {
        csv.row({r.t, r.mean, r.std_err, r.variance, r.expected, rep.limit});
        summary("t = " + fmt(r.t) + ": time average " + fmt(r.mean) + " +- " + fmt(r.std_err) + " (expected " +
                fmt(r.expected) + ", limit " + fmt(rep.limit) + ")");
    }
    const bool pass = rep.limit_pass && rep.expected_pass && rep.variance_decreasing;
    c.write_result("ergodic", {{"limit", rep.limit}, {"limit_pass", rep.limit_pass},
                                  {"expected_pass", rep.expected_pass},
                                  {"variance_decreasing", rep.variance_decreasing},
                                  {"cap_radius", rep.cap_radius}, {"pass", pass}});
    return pass;
}

bool cmd_holder(Context& c)
{
    tpam::HolderConfig h;
    h.solver = solver_config(c);
    h.mu = make_measure(c, h.solver.spec.d, h.solver.grid_n);
    h.n_paths = static_cast<std::size_t>(c.integer("paths"));
    h.seed = c.seed;
    h.threads = c.threads;
    h.burn_in = c.num("burn-in");
    h.sample_every = c.integer("sample-every");
    h.time_lags.clear();
    h.space_lags.clear();
    for (double v : c.list("time-lags")) h.time_lags.push_back(static_cast<int>(v));
    for (double v : c.list("space-lags")) h.space_lags.push_back(static_cast<int>(v));
    const auto e = tpam::holder_experiment(h);
    tpam::CsvWriter csv(c.path("holder.csv").string(), {"direction", "lag", "structure"});
    for (std::size_t k = 0; k < e.time.lags.size(); ++k) csv.row({0.0, e.time.lags[k], e.time.structure[k]});
    for (std::size_t k = 0; k < e.space.lags.size(); ++k) csv.row({1.0, e.space.lags[k], e.space.structure[k]});
    json out;
    out["beta1_hat"] = e.beta1_hat;
    out["beta1_std_err"] = e.time.std_err;
    out["beta1_ci"] = {e.time.ci_low, e.time.ci_high};
    out["beta2_hat"] = e.beta2_hat;
    out["beta2_std_err"] = e.space.std_err;
    out["beta2_ci"] = {e.space.ci_low, e.space.ci_high};
    out["n_paths"] = e.n_paths;
    c.write_result("holder", out);
    summary("beta1_hat = " + fmt(e.beta1_hat) + " +- " + fmt(e.time.std_err) + ", beta2_hat = " + fmt(e.beta2_hat) +
            " +- " + fmt(e.space.std_err));
    return true;
}

std::vector<Command> commands()
{
    const std::vector<Param> cov_choice{{"covariance", "capped", "covariance table: capped, truncated or constant"},
                                        {"cap-radius", 1e-3, "d = 1 cap radius"},
                                        {"K", 21, "truncation for the truncated table"},
                                        {"grid-n", 64, "grid for d > 1 tables"}};
    return {
        {"kernel-eval", "evaluate the heat kernel",
         {{"d", 1, "dimension"}, {"t", 1.0, "time"}, {"x", json::array({0.0}), "point"}}, cmd_kernel_eval},
        {"kernel-verify", "check kernel identities and bounds at random points",
         {{"d", 1, "dimension"}, {"t-list", json::array({0.1, 1.0, 10.0}), "times"}, {"samples", 1000, "points per time"}},
         cmd_kernel_verify},
        {"cov-eval", "evaluate the covariance by both routes",
         join(noise_params(), std::vector<Param>{{"x", json::array({1.0}), "point"}, {"tolerance", 1e-6, "agreement"}}),
         cmd_cov_eval},
        {"cov-rho-star", "estimate the smallest rho making f nonnegative",
         {{"d", 1, "dimension"}, {"alpha", 0.3, "covariance exponent"}, {"rho", 0.0, "ignored"}, {"grid-n", 256, "grid"}},
         cmd_cov_rho_star},
        {"noise-sample", "sample noise increments",
         join(noise_params(), std::vector<Param>{{"K", 16, "mode cutoff"}, {"grid-n", 33, "grid"}, {"dt", 0.01, "step"},
                                                 {"count", 4, "increments"}}),
         cmd_noise_sample},
        {"noise-verify", "empirical covariance of sampled increments",
         join(noise_params(), std::vector<Param>{{"K", 16, "mode cutoff"}, {"grid-n", 33, "grid"}, {"dt", 0.01, "step"},
                                                 {"steps", 10, "steps in the constant functional"},
                                                 {"samples", 10000, "samples"}}),
         cmd_noise_verify},
        {"moments-table", "tabulate h_n and H_lambda",
         join(noise_params(), std::vector<Param>{{"lambda", 0.3, "noise strength"}, {"n-max", 32, "levels"},
                                                 {"t-max", 1.0, "horizon"}, {"cells", 1000, "grid cells"}}),
         cmd_moments_table},
        {"gamma0", "solve lambda^2 Theta_gamma = 1",
         join(noise_params(), std::vector<Param>{{"lambda", 1.0, "noise strength"}}), cmd_gamma0},
        {"bridge-verify", "bridge comparison bounds",
         {{"d", 1, "dimension"}, {"eps", 0.5, "epsilon"}, {"t", 0.0, "bridge time (0 selects 2 eps)"},
          {"samples", 10000, "draws"}, {"t-max", 1.0, "largest bridge time in the image-sum sweep"}},
         cmd_bridge_verify},
        {"simulate", "one solver path",
         join(noise_params(), solver_params(), measure_params(),
              std::vector<Param>{{"output-every", 100, "steps between stored fields"}, {"path", 0, "path index"}}),
         cmd_simulate},
        {"mc-moments", "Monte-Carlo moments against the bounds",
         join(noise_params(), solver_params(), measure_params(),
              std::vector<Param>{{"p", 2.0, "moment order"}, {"samples", 1000, "paths"},
                                 {"t-list", json::array({0.5, 1.0}), "times"}, {"x-list", json::array({0.0}), "points"},
                                 {"h-cells", 1000, "cells of the h_n table"},
                                 {"lower-eps", 0.0, "epsilon of the lower bound (0 disables)"}}),
         cmd_mc_moments},
        {"two-point", "two-point function from the resolvent series",
         join(noise_params(), measure_params(),
              std::vector<Param>{{"lambda", 0.5, "noise strength"}, {"t", 1.0, "time"}, {"x", 0.0, "x"},
                                 {"xp", 0.5, "x'"}, {"n-max", 3, "series order"}, {"modes", 32, "Fourier modes"},
                                 {"steps", 400, "time steps"}}),
         cmd_two_point},
        {"resolvent", "iterated convolutions L_n on a grid",
         join(noise_params(), std::vector<Param>{{"n-max", 3, "levels"}, {"t-list", json::array({0.5, 1.0, 2.0}), "times"},
                                                 {"x0", 0.3, "x0"}, {"x0p", -0.5, "x0'"}, {"nx", 17, "grid points"},
                                                 {"modes", 32, "Fourier modes"}, {"steps", 400, "time steps"},
                                                 {"constant-f", 0.0, "replace f by this constant (0 disables)"}}),
         cmd_resolvent},
        {"feynman-kac", "second moment from Brownian pairs",
         join(noise_params(), measure_params(), cov_choice,
              std::vector<Param>{{"lambda", 1.0, "noise strength"}, {"t", 0.5, "time"}, {"x", json::array({0.0}), "point"},
                                 {"paths", 20000, "pairs"}, {"dt-bm", 1e-3, "Brownian step"}}),
         cmd_feynman_kac},
        {"ergodic-check", "long-time averages of f along B - B~",
         join(noise_params(0.3, 2.0), cov_choice,
              std::vector<Param>{{"t-list", json::array({10.0, 50.0, 200.0}), "times"}, {"paths", 400, "paths"},
                                 {"dt", 0.01, "step"}}),
         cmd_ergodic_check},
        {"holder", "empirical Hoelder exponents",
         join(noise_params(), solver_params(), measure_params(),
              std::vector<Param>{{"paths", 200, "paths"}, {"burn-in", 0.1, "start of the measurement window"},
                                 {"sample-every", 2, "steps between base times"},
                                 {"time-lags", json::array({4, 8, 16, 32, 64}), "time lags in steps"},
                                 {"space-lags", json::array({1, 2, 4, 8}), "space lags in cells"}}),
         cmd_holder},
    };
}

}  // namespace

int main(int argc, char** argv)
{
    auto cmds = commands();
    CLI::App app{"Parabolic Anderson model with colored noise on the flat torus"};
    app.require_subcommand(1);
    app.set_version_flag("--version", artifact_version);

    std::map<std::string, std::map<std::string, std::string>> raw;
    std::map<std::string, std::string> config_file, out_dir, format;
    std::map<std::string, std::uint64_t> seed;
    std::map<std::string, int> threads;
    std::map<std::string, CLI::App*> subs;
    for (auto& cmd : cmds) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        subs[cmd.name] = sub;
        for (const auto& p : cmd.params) {
            const std::string def = p.fallback.is_string() ? p.fallback.get<std::string>() : p.fallback.dump();
            sub->add_option("--" + p.name, raw[cmd.name][p.name], p.help + " [" + def + "]");
        }
        config_file[cmd.name] = "";
        out_dir[cmd.name] = "out/" + cmd.name;
        format[cmd.name] = "json";
        seed[cmd.name] = 1;
        threads[cmd.name] = tpam::default_thread_count();
        sub->add_option("--config", config_file[cmd.name], "JSON parameter file (flags take precedence)");
        sub->add_option("--seed", seed[cmd.name], "64-bit seed");
        sub->add_option("--threads", threads[cmd.name], "worker threads (results do not depend on it)");
        sub->add_option("--output-dir", out_dir[cmd.name], "directory for the manifest and results");
        sub->add_option("--format", format[cmd.name], "summary format")->check(CLI::IsMember({"csv", "json"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        for (auto& cmd : cmds) {
            auto* sub = subs[cmd.name];
            if (!sub->parsed()) continue;
            Context c;
            c.command = cmd.name;
            c.params = json::object();
            for (const auto& p : cmd.params) c.params[p.name] = p.fallback;
            c.params["seed"] = seed[cmd.name];
            if (!config_file[cmd.name].empty()) {
                merge_config(config_file[cmd.name], cmd.name, c.params);
                if (sub->count("--seed") > 0) c.params["seed"] = seed[cmd.name];
            }
            for (const auto& p : cmd.params) {
                const std::string opt = "--" + p.name;
                if (sub->count(opt) > 0) c.params[p.name] = parse_flag(p.name, raw[cmd.name][p.name], p.fallback);
            }
            c.seed = c.params["seed"].get<std::uint64_t>();
            c.threads = std::max(1, threads[cmd.name]);
            c.format = format[cmd.name];
            c.out_dir = out_dir[cmd.name];
            fs::create_directories(c.out_dir);

            json manifest;
            manifest["artifact"] = "torus_pam";
            manifest["version"] = artifact_version;
            manifest["command"] = cmd.name;
            manifest["seed"] = c.seed;
            manifest["parameters"] = c.params;
            c.write_json("manifest.json", manifest);

            const bool pass = cmd.run(c);
            return pass ? 0 : 2;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
