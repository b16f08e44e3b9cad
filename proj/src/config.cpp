#include "fnreg/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "fnreg/csv.hpp"

namespace fnreg {

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config file not found: " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_hash(const Json& resolved) {
    const std::string canonical = resolved.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

/// Reads one JSON object, remembering which keys were consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path, Json& resolved) : j_(j), path_(std::move(path)), out_(resolved) {
        if (!j_.is_object())
            throw ConfigError(path_ + ": expected an object");
        out_ = Json::object();
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key))
            throw ConfigError(key_path(key) + ": required key missing");
        return j_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        const Json& v = raw(key);
        T value;
        try {
            value = v.get<T>();
        } catch (const Json::exception& e) {
            throw ConfigError(key_path(key) + ": " + e.what());
        }
        out_[key] = v;
        return value;
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) {
            out_[key] = fallback;
            return fallback;
        }
        return get<T>(key);
    }

    std::string key_path(const std::string& key) const { return path_ + "." + key; }
    Json& resolved(const std::string& key) { return out_[key]; }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key))
                throw ConfigError(key_path(key) + ": unknown key");
    }

private:
    Json j_; // owned: callers often pass temporaries
    std::string path_;
    Json& out_;
    std::set<std::string> seen_;
};

Innovation parse_innovation(const Json& j, const std::string& path, Json& resolved) {
    ObjectReader r(j, path, resolved);
    Innovation inn;
    const auto kind = r.get<std::string>("kind", "gaussian");
    if (kind == "gaussian")
        inn.kind = Innovation::Kind::gaussian;
    else if (kind == "uniform")
        inn.kind = Innovation::Kind::uniform;
    else if (kind == "exponential")
        inn.kind = Innovation::Kind::exponential;
    else if (kind == "brownian")
        inn.kind = Innovation::Kind::brownian;
    else
        throw ConfigError(r.key_path("kind") + ": unknown innovation kind '" + kind + "'");
    inn.scale = r.get<double>("scale", 1.0);
    r.finish();
    return inn;
}

} // namespace

GridPtrD parse_grid(const Json& j, const std::string& path, Json& resolved) {
    ObjectReader r(j, path, resolved);
    const double lo = r.get<double>("lo", 0.0);
    const double hi = r.get<double>("hi", 1.0);
    const int points = r.get<int>("points", 101);
    r.finish();
    if (!(hi > lo))
        throw ConfigError(path + ": hi must exceed lo");
    try {
        return GridD::uniform(lo, hi, points);
    } catch (const DataError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

ProcessSpec parse_process(const Json& j, const std::string& path, Json& resolved) {
    ObjectReader r(j, path, resolved);
    ProcessSpec spec;
    const auto kind = r.get<std::string>("kind");
    if (kind == "iid_gaussian") {
        IidGaussian g;
        g.dim = r.get<int>("dim", 1);
        g.scale = r.get<double>("scale", 1.0);
        spec.kind = g;
    } else if (kind == "brownian") {
        BrownianMotion b;
        b.grid = parse_grid(r.has("grid") ? r.raw("grid") : Json::object(), r.key_path("grid"), r.resolved("grid"));
        spec.kind = b;
    } else if (kind == "ar1") {
        Ar1 a;
        a.rho = r.get<double>("rho");
        a.innovation = parse_innovation(r.has("innovation") ? r.raw("innovation") : Json::object(),
                                        r.key_path("innovation"), r.resolved("innovation"));
        if (r.has("grid"))
            a.grid = parse_grid(r.raw("grid"), r.key_path("grid"), r.resolved("grid"));
        const auto op = r.get<std::string>("operator", "diagonal");
        if (op == "diagonal")
            a.op = Ar1::Operator::diagonal;
        else if (op == "banded")
            a.op = Ar1::Operator::banded;
        else
            throw ConfigError(r.key_path("operator") + ": unknown operator '" + op + "'");
        a.band_weight = r.get<double>("band_weight", 0.25);
        spec.kind = a;
        if (std::abs(a.rho) < 1.0)
            spec.burn_in = r.get<int>("burn_in", default_burn_in(a.rho));
    } else {
        throw ConfigError(r.key_path("kind") + ": unknown process kind '" + kind + "'");
    }
    r.finish();
    try {
        validate(spec);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return spec;
}

SemiMetric parse_metric(const Json& j, const std::string& path, const GridPtrD& element_grid, Json& resolved) {
    ObjectReader r(j, path, resolved);
    const auto kind = r.get<std::string>("kind", element_grid ? "l2" : "euclidean");
    SemiMetric metric;
    if (kind == "euclidean") {
        metric = SemiMetric::euclidean();
    } else if (kind == "l2" || kind == "projection") {
        if (!element_grid)
            throw ConfigError(r.key_path("kind") + ": " + kind + " needs curve-valued covariates");
        if (kind == "l2") {
            metric = SemiMetric::l2(element_grid);
        } else {
            const int dim = r.get<int>("dim");
            const auto basis = r.get<std::string>("basis", "cosine");
            Eigen::MatrixXd b;
            if (basis == "cosine") {
                b = cosine_basis(*element_grid, dim);
            } else {
                const CurveTable table = read_curve_csv(basis);
                if (table.t.size() != element_grid->size() ||
                    !table.t.isApprox(element_grid->points(), 1e-12))
                    throw ConfigError(r.key_path("basis") + ": basis grid differs from the covariate grid");
                b = table.values;
            }
            metric = SemiMetric::projection(element_grid, std::move(b), dim);
        }
    } else {
        throw ConfigError(r.key_path("kind") + ": unknown metric '" + kind + "'");
    }
    r.finish();
    return metric;
}

namespace {

RegressionTruth::Profile parse_profile(const std::string& s, const std::string& path) {
    if (s == "one")
        return RegressionTruth::Profile::one;
    if (s == "sine")
        return RegressionTruth::Profile::sine;
    throw ConfigError(path + ": unknown profile '" + s + "'");
}

Eigen::VectorXd parse_point(ObjectReader& r, const std::string& key, Eigen::Index dim, const std::string& fallback) {
    if (!r.has(key)) {
        r.resolved(key) = fallback;
        if (fallback == "zero")
            return Eigen::VectorXd::Zero(dim);
        return {};
    }
    const Json& v = r.raw(key);
    r.resolved(key) = v;
    if (v.is_string()) {
        if (v.get<std::string>() == "zero")
            return Eigen::VectorXd::Zero(dim);
        if (v.get<std::string>() == "target")
            return {};
        throw ConfigError(r.key_path(key) + ": expected \"zero\", \"target\", or a coordinate list");
    }
    std::vector<double> coords;
    try {
        coords = v.get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw ConfigError(r.key_path(key) + ": " + e.what());
    }
    if (Eigen::Index(coords.size()) != dim)
        throw ConfigError(r.key_path(key) + ": expected " + std::to_string(dim) + " coordinates, got " +
                          std::to_string(coords.size()));
    return Eigen::Map<Eigen::VectorXd>(coords.data(), dim);
}

} // namespace

ResolvedExperiment parse_experiment(const Json& j, std::uint64_t seed) {
    ResolvedExperiment out;
    ObjectReader r(j, "config", out.resolved);
    auto& cfg = out.config;
    cfg.seed = seed;
    if (r.has("seed") && r.get<std::uint64_t>("seed") != seed)
        throw ConfigError("config.seed conflicts with --seed");
    out.resolved["seed"] = seed;

    cfg.covariates = parse_process(r.raw("covariates"), r.key_path("covariates"), r.resolved("covariates"));
    if (r.has("noise"))
        cfg.noise = parse_process(r.raw("noise"), r.key_path("noise"), r.resolved("noise"));
    else
        out.resolved["noise"] = nullptr;
    const GridPtrD cov_grid = cfg.covariates.element_grid();
    cfg.metric = parse_metric(r.has("metric") ? r.raw("metric") : Json::object(), r.key_path("metric"), cov_grid,
                              r.resolved("metric"));
    const GridPtrD response_grid = parse_grid(r.has("response_grid") ? r.raw("response_grid") : Json::object(),
                                              r.key_path("response_grid"), r.resolved("response_grid"));
    cfg.target = parse_point(r, "target", cfg.covariates.element_dim(), "zero");

    {
        ObjectReader s(r.raw("scheme"), r.key_path("scheme"), r.resolved("scheme"));
        const auto family = s.get<std::string>("family", "knn");
        if (family == "knn")
            cfg.scheme.family = SchemeRule::Family::knn;
        else if (family == "kknn")
            cfg.scheme.family = SchemeRule::Family::kknn;
        else if (family == "nw")
            cfg.scheme.family = SchemeRule::Family::nw;
        else
            throw ConfigError(s.key_path("family") + ": unknown scheme family '" + family + "'");
        const bool nw = cfg.scheme.family == SchemeRule::Family::nw;
        cfg.scheme.rule = Rule(s.get<std::string>(nw ? "h" : "k"));
        const auto kernel = s.get<std::string>("kernel", "uniform");
        if (kernel == "uniform")
            cfg.scheme.kernel = Kernel::uniform;
        else if (kernel == "triangle")
            cfg.scheme.kernel = Kernel::triangle;
        else
            throw ConfigError(s.key_path("kernel") + ": unknown kernel '" + kernel + "'");
        s.finish();
    }

    {
        ObjectReader t(r.has("truth") ? r.raw("truth") : Json::object(), r.key_path("truth"), r.resolved("truth"));
        const auto kind = t.get<std::string>("kind", "sine");
        const auto profile = parse_profile(t.get<std::string>("profile", "one"), t.key_path("profile"));
        const double amplitude = t.get<double>("amplitude", 1.0);
        if (kind == "constant") {
            cfg.truth = RegressionTruth::constant(response_grid, profile, amplitude);
        } else {
            Eigen::VectorXd center = parse_point(t, "center", cfg.covariates.element_dim(), "target");
            if (center.size() == 0)
                center = cfg.target;
            if (kind == "sine") {
                const double freq = t.get<double>("frequency", 1.0);
                cfg.truth = RegressionTruth::sine(response_grid, profile, cfg.metric, center, amplitude, freq);
            } else if (kind == "holder") {
                const double alpha = t.get<double>("alpha", 0.5);
                const double cap = t.get<double>("cap", 1.0);
                cfg.truth = RegressionTruth::holder(response_grid, profile, cfg.metric, center, amplitude, alpha, cap);
            } else {
                throw ConfigError(t.key_path("kind") + ": unknown truth kind '" + kind + "'");
            }
        }
        t.finish();
    }

    cfg.n_grid = r.get<std::vector<int>>("n_grid");
    cfg.replications = r.get<int>("replications", 100);
    cfg.workers = r.get<int>("workers", 1);

    {
        ObjectReader c(r.has("checks") ? r.raw("checks") : Json::object(), r.key_path("checks"), r.resolved("checks"));
        out.check_median_decreasing = c.get<bool>("median_decreasing", false);
        out.check_bias_bound = c.get<bool>("bias_bound", false);
        if (c.has("slope_range")) {
            const auto range = c.get<std::vector<double>>("slope_range");
            if (range.size() != 2 || !(range[0] <= range[1]))
                throw ConfigError(c.key_path("slope_range") + ": expected [lo, hi]");
            out.check_slope_range = true;
            out.slope_lo = range[0];
            out.slope_hi = range[1];
        } else {
            c.resolved("slope_range") = nullptr;
        }
        c.finish();
    }
    r.finish();

    // worker count never changes outputs, so it stays out of the hash
    Json hashed = out.resolved;
    hashed.erase("workers");
    out.hash = config_hash(hashed);
    return out;
}

ResolvedExperiment parse_experiment_file(const std::string& path, std::uint64_t seed) {
    return parse_experiment(load_json_file(path), seed);
}

} // namespace fnreg
