#include "fnreg/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "fnreg/config.hpp"
#include "fnreg/csv.hpp"
#include "fnreg/errors.hpp"
#include "fnreg/estimator.hpp"
#include "fnreg/orlicz.hpp"
#include "fnreg/ratebench.hpp"
#include "fnreg/smallball.hpp"

namespace fs = std::filesystem;

namespace fnreg {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Written once before the computation starts and rewritten when it ends.
class RunManifest {
public:
    RunManifest(std::string subcommand, fs::path out_dir) : out_dir_(std::move(out_dir)) {
        doc_["subcommand"] = std::move(subcommand);
        doc_["tool_version"] = kToolVersion;
        doc_["outputs"] = Json::array();
        doc_["seed"] = nullptr;
    }

    void set_config(const Json& resolved, const std::string& hash) {
        doc_["config"] = resolved;
        doc_["config_hash"] = hash;
    }
    void set_seed(std::uint64_t seed) { doc_["seed"] = seed; }
    Json& results() { return doc_["results"]; }

    fs::path output(const std::string& path) {
        fs::path p(path);
        if (p.is_relative())
            p = out_dir_ / p;
        const std::string s = p.lexically_normal().string();
        for (const auto& existing : doc_["outputs"])
            if (existing == s)
                throw ConfigError("output file listed twice: " + s);
        doc_["outputs"].push_back(s);
        return p;
    }

    fs::path path() const { return out_dir_ / (doc_["subcommand"].get<std::string>() + "_manifest.json"); }

    void start() {
        fs::create_directories(out_dir_);
        doc_["started"] = utc_now();
        doc_["status"] = "running";
        flush();
    }

    void finish(const std::string& status, const std::string& error = {}) {
        doc_["finished"] = utc_now();
        doc_["status"] = status;
        if (!error.empty())
            doc_["error"] = error;
        flush();
    }

    bool started() const { return doc_.contains("started"); }

private:
    void flush() const { write_text_file(path().string(), doc_.dump(2) + "\n"); }

    fs::path out_dir_;
    Json doc_;
};

fs::path resolve_out_dir(const std::string& flag) {
    if (!flag.empty())
        return flag;
    if (const char* env = std::getenv("FNREG_OUT_DIR"); env && *env)
        return env;
    return ".";
}

Json metric_json(const std::string& kind, int dim, const std::string& basis) {
    Json j = Json::object();
    if (!kind.empty())
        j["kind"] = kind;
    if (kind == "projection") {
        j["dim"] = dim;
        j["basis"] = basis;
    }
    return j;
}

Kernel parse_kernel(const std::string& s) {
    if (s == "uniform")
        return Kernel::uniform;
    if (s == "triangle")
        return Kernel::triangle;
    throw ConfigError("unknown kernel '" + s + "'");
}

CurveTable element_table(const ProcessSpec& spec, const Eigen::MatrixXd& xs, const std::string& prefix) {
    CurveTable table;
    if (const auto grid = spec.element_grid())
        table.t = grid->points();
    else
        table.t = Eigen::VectorXd::LinSpaced(xs.rows(), 0.0, double(xs.rows() - 1));
    table.values = xs;
    for (Eigen::Index i = 0; i < xs.cols(); ++i)
        table.ids.push_back(prefix + std::to_string(i + 1));
    return table;
}

/// A single point of the covariate space: "zero" or a one-column curve file.
Eigen::VectorXd load_point(const std::string& spec, const ProcessSpec& process) {
    const Eigen::Index dim = process.element_dim();
    if (spec == "zero")
        return Eigen::VectorXd::Zero(dim);
    const CurveTable table = read_curve_csv(spec);
    if (table.values.cols() != 1)
        throw DataError(spec + ": expected exactly one curve, got " + std::to_string(table.values.cols()));
    if (table.t.size() != dim)
        throw GridMismatch(dim, table.t.size());
    if (const auto grid = process.element_grid(); grid && !table.t.isApprox(grid->points(), 1e-12))
        throw DataError(spec + ": t values differ from the process grid");
    return table.values.col(0);
}

Json check_summary(const PropositionCheckResult& res) {
    Json j;
    j["proposition"] = proposition_name(res.proposition);
    j["replications"] = res.replications;
    j["violations"] = res.violations;
    j["violation_fraction"] = res.violation_fraction;
    j["in_hypothesis"] = res.in_hypothesis;
    j["parameters"] = res.parameters;
    j["warnings"] = res.warnings;
    return j;
}

struct Options {
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 1;

    // simulate / smallball
    std::string process_file;
    long n = 0;
    std::string out;
    std::vector<int> couple;

    // estimate
    std::string x_file, data_file, responses_file;
    std::string scheme = "knn";
    std::optional<int> k;
    std::optional<double> h;
    std::string kernel = "uniform";
    std::string metric;
    int metric_dim = 3;
    std::string basis = "cosine";

    // orlicz
    std::string psi = "exp";
    double p = 1.0;
    std::string input;
    double tol = 1e-6;

    // smallball
    std::string x_point = "zero";
    std::string hgrid;
    std::string check = "phi";
    std::optional<double> radius, radius_lo, radius_hi;
    std::optional<int> m;
    int reps = 200;

    // ratebench
    std::string config;
};

void cmd_simulate(const Options& o, RunManifest& manifest, std::ostream& out) {
    Json resolved;
    ProcessSpec spec = parse_process(load_json_file(o.process_file), "process", resolved["process"]);
    spec = spec.with_seed(o.seed);
    if (o.n < 1)
        throw ConfigError("--n must be positive");
    resolved["n"] = o.n;
    resolved["couple"] = o.couple;
    manifest.set_config(resolved, config_hash(resolved));
    manifest.set_seed(o.seed);

    const fs::path base = manifest.output(o.out);
    std::vector<std::pair<fs::path, CurveTable>> files;
    if (o.couple.empty()) {
        manifest.start();
        files.emplace_back(base, element_table(spec, generate(spec, o.n), "x"));
    } else {
        const fs::path stem = base.parent_path() / base.stem();
        const std::string ext = base.extension().string();
        std::vector<fs::path> extra{manifest.output((stem.string() + "_prime" + ext))};
        for (int m : o.couple)
            extra.push_back(manifest.output(stem.string() + "_m" + std::to_string(m) + ext));
        manifest.start();
        const CoupledPair pair = generate_coupled(spec, o.n, o.couple);
        files.emplace_back(base, element_table(spec, pair.original(), "x"));
        files.emplace_back(extra[0], element_table(spec, pair.prime(), "x"));
        for (std::size_t j = 0; j < o.couple.size(); ++j)
            files.emplace_back(extra[j + 1], element_table(spec, pair.coupled(o.couple[j]), "x"));
    }
    for (const auto& [path, table] : files) {
        write_text_file(path.string(), curve_csv(table));
        out << path.string() << "\n";
    }
}

void cmd_estimate(const Options& o, RunManifest& manifest, std::ostream& out) {
    const CurveTable data = read_curve_csv(o.data_file);
    const CurveTable responses = read_curve_csv(o.responses_file);
    const CurveTable x = read_curve_csv(o.x_file);
    if (data.values.cols() != responses.values.cols())
        throw DataError("covariate and response files hold " + std::to_string(data.values.cols()) + " and " +
                        std::to_string(responses.values.cols()) + " observations");
    if (x.values.cols() != 1)
        throw DataError(o.x_file + ": expected exactly one curve");
    if (x.t.size() != data.t.size())
        throw GridMismatch(data.t.size(), x.t.size());
    if (!x.t.isApprox(data.t, 1e-12))
        throw DataError(o.x_file + ": t values differ from the covariate file");

    Json resolved;
    GridPtrD grid;
    if (o.metric != "euclidean" && data.t.size() >= 2)
        grid = std::make_shared<const GridD>(data.t);
    const SemiMetric metric =
        parse_metric(metric_json(o.metric, o.metric_dim, o.basis), "metric", grid, resolved["metric"]);

    WeightScheme scheme;
    resolved["scheme"] = {{"family", o.scheme}, {"kernel", o.kernel}};
    if (o.scheme == "nw") {
        if (!o.h)
            throw ConfigError("--scheme nw needs --h");
        scheme = NadarayaWatson{*o.h, parse_kernel(o.kernel)};
        resolved["scheme"]["h"] = *o.h;
    } else if (o.scheme == "knn" || o.scheme == "kknn") {
        if (!o.k)
            throw ConfigError("--scheme " + o.scheme + " needs --k");
        if (*o.k < 1 || *o.k > data.values.cols())
            throw ConfigError("--k must lie in [1, n]");
        if (o.scheme == "knn")
            scheme = SimpleKnn{*o.k};
        else
            scheme = KernelKnn{*o.k, parse_kernel(o.kernel)};
        resolved["scheme"]["k"] = *o.k;
    } else {
        throw ConfigError("unknown scheme '" + o.scheme + "'");
    }
    resolved["inputs"] = {{"x", o.x_file}, {"data", o.data_file}, {"responses", o.responses_file}};
    manifest.set_config(resolved, config_hash(resolved));
    const fs::path out_path = manifest.output(o.out);
    manifest.start();

    const WeightVector w = compute_weights(scheme, data.values, x.values.col(0), metric);
    const int k_stats = o.k ? *o.k : int(w.k_effective);
    const WeightStats stats = weight_stats(w, std::max(k_stats, 1));
    CurveTable result;
    result.t = responses.t;
    result.ids = {"estimate"};
    result.values = estimate(w, responses.values);
    write_text_file(out_path.string(), curve_csv(result));
    manifest.results() = {{"radius", w.radius},   {"k_effective", w.k_effective}, {"v_n1", stats.v_n1},
                          {"c_n2", stats.c_n2},   {"b_n", stats.b_n},
                          {"envelope_compliant", w.envelope_compliant}};
    out << out_path.string() << "\n";
}

void cmd_orlicz(const Options& o, RunManifest& manifest, std::ostream& out) {
    PsiSpec spec;
    if (o.psi == "exp")
        spec = PsiSpec::exponential(o.p);
    else if (o.psi == "power")
        spec = PsiSpec::power(o.p);
    else
        throw ConfigError("unknown psi family '" + o.psi + "'");
    validate(spec);
    Json resolved = {{"psi", o.psi}, {"p", o.p}, {"input", o.input}, {"tol", o.tol}};
    manifest.set_config(resolved, config_hash(resolved));
    manifest.start();

    const std::vector<double> samples = read_sample_column(o.input);
    const OrliczEstimate est = orlicz_norm(samples, spec, o.tol);
    Json j = {{"psi", spec.name()},         {"value", est.value},          {"lo", est.lo},
              {"hi", est.hi},               {"tolerance", est.tolerance},  {"mc_samples", est.mc_samples},
              {"degenerate", est.degenerate}};
    manifest.results() = j;
    out << j.dump() << "\n";
}

Eigen::VectorXd parse_hgrid(const std::string& s) {
    double lo = 0, hi = 0;
    long steps = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(s);
    if (!(ss >> lo >> c1 >> hi >> c2 >> steps) || c1 != ':' || c2 != ':' || !ss.eof())
        throw ConfigError("--hgrid expects lo:hi:steps, got '" + s + "'");
    if (!(lo > 0.0) || !(hi > lo) || steps < 2)
        throw ConfigError("--hgrid needs 0 < lo < hi and steps >= 2");
    return Eigen::VectorXd::LinSpaced(steps, lo, hi);
}

void cmd_smallball(const Options& o, RunManifest& manifest, std::ostream& out) {
    Json resolved;
    ProcessSpec spec = parse_process(load_json_file(o.process_file), "process", resolved["process"]);
    spec = spec.with_seed(o.seed);
    const SemiMetric metric =
        parse_metric(metric_json(o.metric, o.metric_dim, o.basis), "metric", spec.element_grid(), resolved["metric"]);
    const Eigen::VectorXd x = load_point(o.x_point, spec);
    if (o.n < 1)
        throw ConfigError("--n must be positive");
    resolved["x"] = o.x_point;
    resolved["n"] = o.n;
    resolved["check"] = o.check;
    PropositionOptions opts;
    opts.workers = o.workers;

    if (o.check == "phi") {
        if (o.hgrid.empty())
            throw ConfigError("--check phi needs --hgrid");
        const Eigen::VectorXd h = parse_hgrid(o.hgrid);
        resolved["hgrid"] = o.hgrid;
        manifest.set_config(resolved, config_hash(resolved));
        manifest.set_seed(o.seed);
        const fs::path path = manifest.output(o.out);
        manifest.start();
        const SmallBallCurve curve = phi_estimate(generate(spec, o.n), x, metric, h);
        std::string csv = "h,phi_hat\n";
        for (Eigen::Index i = 0; i < h.size(); ++i)
            csv += format_double(curve.h_grid[i]) + "," + format_double(curve.phi_hat[i]) + "\n";
        write_text_file(path.string(), csv);
        manifest.results() = {{"rearranged", curve.rearranged}, {"n_samples", curve.n_samples}};
        out << path.string() << "\n";
        return;
    }

    resolved["reps"] = o.reps;
    const bool dependent = o.check == "p2" || o.check == "p4";
    const bool needs_k = o.check == "p1" || o.check == "p2";
    int k = 0;
    if (needs_k) {
        k = o.k ? *o.k : int(std::ceil(std::pow(double(o.n), 0.6)));
        resolved["k"] = k;
    }
    DependenceInfo dep;
    if (dependent) {
        dep.m = o.m ? *o.m : int(std::ceil(std::log(double(o.n))));
        resolved["m"] = dep.m;
    }
    if (o.check == "p3" || o.check == "p4") {
        if (!o.radius)
            throw ConfigError("--check " + o.check + " needs --H");
        resolved["H"] = *o.radius;
    } else if (o.check == "p2" && o.radius) {
        resolved["H"] = *o.radius;
    } else if (o.check != "p1" && o.check != "p2") {
        throw ConfigError("unknown check '" + o.check + "'");
    }
    if (o.radius_lo)
        resolved["H_lo"] = *o.radius_lo;
    if (o.radius_hi)
        resolved["H_hi"] = *o.radius_hi;
    manifest.set_config(resolved, config_hash(resolved));
    manifest.set_seed(o.seed);
    const fs::path path = manifest.output(o.out);
    manifest.start();

    if (dependent) {
        const DecayEstimate beta = estimate_gamma(spec, dep.m, 1000, DecayNorm::mean_square(), &metric);
        dep.beta_m = beta.gamma_hat;
    }
    PropositionCheckResult res;
    if (o.check == "p1") {
        res = check_prop1(spec, x, metric, o.n, k, o.reps, opts);
    } else if (o.check == "p3") {
        res = check_prop3(spec, x, metric, o.n, *o.radius, o.reps, opts);
    } else if (o.check == "p2") {
        double h = 0.0;
        if (o.radius) {
            h = *o.radius;
        } else {
            const SmallBallCurve ref = reference_phi(spec, x, metric, o.n, opts);
            h = phi_inverse(ref, 2.0 * k / double(o.n)) + kMinMarginInBeta * dep.beta_m;
        }
        res = check_prop2(spec, x, metric, o.n, k, h, dep, o.reps, opts);
    } else {
        const double margin = kMinMarginInBeta * dep.beta_m;
        const double lo = o.radius_lo ? *o.radius_lo : std::max(0.0, *o.radius - margin);
        const double hi = o.radius_hi ? *o.radius_hi : *o.radius + margin;
        res = check_prop4(spec, x, metric, o.n, *o.radius, lo, hi, dep, o.reps, opts);
    }
    std::string csv = "replication,statistic,violated\n";
    for (const auto& r : res.outcomes)
        csv += std::to_string(r.replication) + "," + format_double(r.statistic) + "," + (r.violated ? "1" : "0") +
               "\n";
    write_text_file(path.string(), csv);
    const Json summary = check_summary(res);
    manifest.results() = summary;
    out << summary.dump() << "\n";
}

void cmd_ratebench(const Options& o, RunManifest& manifest, std::ostream& out) {
    ResolvedExperiment exp = parse_experiment_file(o.config, o.seed);
    if (o.workers > 0)
        exp.config.workers = o.workers;
    manifest.set_config(exp.resolved, exp.hash);
    manifest.set_seed(o.seed);
    const fs::path raw_path = manifest.output("raw.csv");
    const fs::path summary_path = manifest.output("summary.csv");
    manifest.start();

    const ExperimentResult res = run_experiment(exp.config);
    write_text_file(raw_path.string(), raw_csv(res));
    write_text_file(summary_path.string(), summary_csv(res));

    Json props = Json::object();
    if (exp.check_median_decreasing)
        props["median_strictly_decreasing"] = res.median_strictly_decreasing;
    if (exp.check_slope_range)
        props["slope_in_range"] = res.slope && res.slope->slope >= exp.slope_lo && res.slope->slope <= exp.slope_hi;
    if (exp.check_bias_bound)
        props["bias_bound"] = !exp.config.noise && res.bias_bound_violations == 0 && res.failures == 0;
    Json j;
    j["slope"] = res.slope ? Json(res.slope->slope) : Json(nullptr);
    j["slope_residual"] = res.slope ? Json(res.slope->residual) : Json(nullptr);
    j["noise_gamma1"] = res.noise_gamma1 ? Json(*res.noise_gamma1) : Json(nullptr);
    j["bias_bound_violations"] = res.bias_bound_violations;
    j["failures"] = res.failures;
    j["properties"] = props;
    bool all = true;
    for (const auto& [name, pass] : props.items())
        all = all && pass.get<bool>();
    j["all_properties_pass"] = all;
    manifest.results() = j;
    out << j.dump() << "\n";
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonparametric regression with functional responses"};
    app.name("fnreg");
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Options o;

    auto common = [&](CLI::App* sub, bool seeded) {
        sub->add_option("--out-dir", o.out_dir, "Output directory (default: $FNREG_OUT_DIR or .)");
        if (seeded)
            sub->add_option("--seed", o.seed, "Master seed (required)")->required();
    };
    auto metric_opts = [&](CLI::App* sub) {
        sub->add_option("--metric", o.metric, "Semi-metric: euclidean, l2, or projection")
            ->check(CLI::IsMember({"euclidean", "l2", "projection"}));
        sub->add_option("--dim", o.metric_dim, "Projection dimension")->capture_default_str();
        sub->add_option("--basis", o.basis, "Projection basis: cosine or a curve CSV path")->capture_default_str();
    };

    auto* sim = app.add_subcommand("simulate", "Generate a process sample, optionally with coupled copies");
    common(sim, true);
    sim->add_option("--process", o.process_file, "Process spec (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--n", o.n, "Sample size")->required();
    sim->add_option("--out", o.out, "Output CSV")->required();
    sim->add_option("--couple", o.couple, "Coupling lags m1,m2,...")->delimiter(',');

    auto* est = app.add_subcommand("estimate", "Estimate the regression curve at one point");
    common(est, false);
    est->set_help_flag("--help", "Print this help message and exit"); // -h would clash with --h
    est->add_option("--x", o.x_file, "Target point (one-curve CSV)")->required()->check(CLI::ExistingFile);
    est->add_option("--data", o.data_file, "Covariates (curve CSV)")->required()->check(CLI::ExistingFile);
    est->add_option("--responses", o.responses_file, "Responses (curve CSV)")->required()->check(CLI::ExistingFile);
    est->add_option("--scheme", o.scheme, "Weight scheme")->capture_default_str()->check(CLI::IsMember({"knn", "kknn", "nw"}));
    est->add_option("--k", o.k, "Neighbor count (knn, kknn)");
    est->add_option("--h", o.h, "Bandwidth (nw)");
    est->add_option("--kernel", o.kernel, "Kernel")->capture_default_str()->check(CLI::IsMember({"uniform", "triangle"}));
    metric_opts(est);
    est->add_option("--out", o.out, "Output CSV")->required();

    auto* orl = app.add_subcommand("orlicz", "Orlicz norm of a sample");
    common(orl, false);
    orl->add_option("--psi", o.psi, "psi family")->capture_default_str()->check(CLI::IsMember({"power", "exp"}));
    orl->add_option("--p", o.p, "psi order")->capture_default_str();
    orl->add_option("--input", o.input, "Sample CSV (first column)")->required()->check(CLI::ExistingFile);
    orl->add_option("--tol", o.tol, "Relative bracket tolerance")->capture_default_str();

    auto* sb = app.add_subcommand("smallball", "Small-ball curves and neighbor-count frequency checks");
    common(sb, true);
    sb->add_option("--process", o.process_file, "Process spec (JSON)")->required()->check(CLI::ExistingFile);
    sb->add_option("--x", o.x_point, "Target point: zero or a one-curve CSV")->capture_default_str();
    metric_opts(sb);
    sb->add_option("--hgrid", o.hgrid, "lo:hi:steps for --check phi");
    sb->add_option("--check", o.check, "phi, p1, p2, p3, or p4")->capture_default_str()
        ->check(CLI::IsMember({"phi", "p1", "p2", "p3", "p4"}));
    sb->add_option("--n", o.n, "Sample size")->required();
    sb->add_option("--k", o.k, "Neighbor count (p1, p2; default ceil(n^0.6))");
    sb->add_option("--H", o.radius, "Radius (p3, p4) or threshold h (p2)");
    sb->add_option("--H-lo", o.radius_lo, "Lower radius H' (p4)");
    sb->add_option("--H-hi", o.radius_hi, "Upper radius H'' (p4)");
    sb->add_option("--m", o.m, "Coupling lag (p2, p4; default ceil(log n))");
    sb->add_option("--reps", o.reps, "Replications")->capture_default_str();
    sb->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
    sb->add_option("--out", o.out, "Output CSV")->required();

    auto* rb = app.add_subcommand("ratebench", "Monte Carlo rate experiment");
    common(rb, true);
    rb->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    rb->add_option("--workers", o.workers, "Worker threads (overrides the config)");
    o.workers = 1;

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    CLI::App* chosen = app.get_subcommands().front();
    std::optional<RunManifest> manifest;
    try {
        if (chosen == rb && rb->count("--workers") == 0)
            o.workers = 0; // keep the config value
        if (o.workers < 0)
            throw ConfigError("--workers must be nonnegative");
        manifest.emplace(chosen->get_name(), resolve_out_dir(o.out_dir));
        if (chosen == sim)
            cmd_simulate(o, *manifest, out);
        else if (chosen == est)
            cmd_estimate(o, *manifest, out);
        else if (chosen == orl)
            cmd_orlicz(o, *manifest, out);
        else if (chosen == sb)
            cmd_smallball(o, *manifest, out);
        else
            cmd_ratebench(o, *manifest, out);
        manifest->finish("complete");
        return 0;
    } catch (const std::exception& e) {
        int code = 1;
        if (dynamic_cast<const DataError*>(&e))
            code = 2;
        else if (dynamic_cast<const NumericError*>(&e))
            code = 3;
        err << "error: " << e.what() << "\n";
        if (manifest && manifest->started()) {
            try {
                manifest->finish("failed", e.what());
            } catch (const std::exception&) {
            }
        }
        return code;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace fnreg
