#include "fnreg/ratebench.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fnreg/csv.hpp"
#include "fnreg/parallel.hpp"
#include "fnreg/rng.hpp"

namespace fnreg {

// ---------------------------------------------------------------- truth

RegressionTruth::RegressionTruth(Kind kind, GridPtrD grid, Profile profile, SemiMetric metric, Eigen::VectorXd center)
    : kind_(kind), grid_(std::move(grid)), profile_kind_(profile), metric_(std::move(metric)),
      center_(std::move(center)) {
    if (!grid_)
        throw ConfigError("regression truth needs a response grid");
    const auto& t = grid_->points();
    const double lo = t[0];
    const double span = t[t.size() - 1] - lo;
    if (profile == Profile::one)
        profile_ = Eigen::VectorXd::Ones(t.size());
    else
        profile_ = std::numbers::sqrt2 * ((t.array() - lo) / span * std::numbers::pi).sin();
}

RegressionTruth RegressionTruth::constant(GridPtrD grid, Profile profile, double amplitude) {
    RegressionTruth r(Kind::constant, std::move(grid), profile, SemiMetric::euclidean(), Eigen::VectorXd());
    r.amplitude_ = amplitude;
    r.m_ = 0.0;
    r.alpha_ = 1.0;
    r.b_ = std::abs(amplitude) * grid_norm(*r.grid_, r.profile_);
    return r;
}

RegressionTruth RegressionTruth::sine(GridPtrD grid, Profile profile, SemiMetric metric, Eigen::VectorXd center,
                                      double amplitude, double frequency) {
    RegressionTruth r(Kind::sine, std::move(grid), profile, std::move(metric), std::move(center));
    r.amplitude_ = amplitude;
    r.frequency_ = frequency;
    const double pn = grid_norm(*r.grid_, r.profile_);
    r.m_ = std::abs(amplitude * frequency) * pn;
    r.alpha_ = 1.0;
    r.b_ = std::abs(amplitude) * pn;
    return r;
}

RegressionTruth RegressionTruth::holder(GridPtrD grid, Profile profile, SemiMetric metric, Eigen::VectorXd center,
                                        double amplitude, double alpha, double cap) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("holder exponent alpha must lie in (0, 1]");
    if (!(cap > 0.0))
        throw ConfigError("holder cap must be positive");
    RegressionTruth r(Kind::holder, std::move(grid), profile, std::move(metric), std::move(center));
    r.amplitude_ = amplitude;
    r.alpha_ = alpha;
    r.cap_ = cap;
    const double pn = grid_norm(*r.grid_, r.profile_);
    r.m_ = std::abs(amplitude) * pn;
    r.b_ = std::abs(amplitude) * std::pow(cap, alpha) * pn;
    return r;
}

std::string RegressionTruth::describe() const {
    std::ostringstream s;
    const char* prof = profile_kind_ == Profile::one ? "one" : "sine";
    switch (kind_) {
    case Kind::constant:
        s << "constant(amplitude=" << amplitude_ << ", profile=" << prof << ")";
        break;
    case Kind::sine:
        s << "sine(amplitude=" << amplitude_ << ", frequency=" << frequency_ << ", profile=" << prof
          << ", metric=" << metric_.name() << ")";
        break;
    case Kind::holder:
        s << "holder(amplitude=" << amplitude_ << ", alpha=" << alpha_ << ", cap=" << cap_ << ", profile=" << prof
          << ", metric=" << metric_.name() << ")";
        break;
    }
    s << " M=" << m_ << " alpha=" << alpha_ << " B=" << b_;
    return s.str();
}

double RegressionTruth::g(double s) const {
    switch (kind_) {
    case Kind::constant:
        return amplitude_;
    case Kind::sine:
        return amplitude_ * std::sin(frequency_ * s);
    case Kind::holder:
        return amplitude_ * std::pow(std::min(s, cap_), alpha_);
    }
    return 0.0;
}

Eigen::MatrixXd RegressionTruth::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
    Eigen::RowVectorXd levels(xs.cols());
    if (kind_ == Kind::constant) {
        levels.setConstant(amplitude_);
    } else {
        const Eigen::VectorXd d = metric_.distances(xs, center_);
        for (Eigen::Index i = 0; i < d.size(); ++i)
            levels[i] = g(d[i]);
    }
    return profile_ * levels;
}

Eigen::VectorXd RegressionTruth::evaluate_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return evaluate(x);
}

void RegressionTruth::verify_lipschitz(const ProcessSpec& covariates, int pairs) const {
    const auto probe = covariates.with_seed(derive_seed(covariates.seed, {stream::lipschitz_probe}));
    const Eigen::MatrixXd xs = generate(probe, 2 * Eigen::Index(pairs));
    const Eigen::MatrixXd rs = evaluate(xs);
    for (int p = 0; p < pairs; ++p) {
        const double d = metric_.distance(xs.col(2 * p), xs.col(2 * p + 1));
        const double gap = grid_norm(*grid_, rs.col(2 * p) - rs.col(2 * p + 1));
        const double bound = m_ * std::pow(d, alpha_);
        if (gap > bound * (1.0 + 1e-9) + 1e-12)
            throw ConfigError("regression truth violates its Lipschitz bound on probe pair " + std::to_string(p) +
                              ": " + format_double(gap) + " > " + format_double(bound));
        if (grid_norm(*grid_, rs.col(2 * p)) > b_ * (1.0 + 1e-9) + 1e-12)
            throw ConfigError("regression truth exceeds its bound B on probe pair " + std::to_string(p));
    }
}

// ---------------------------------------------------------------- scheme rule

WeightScheme SchemeRule::at(Eigen::Index n) const {
    const double v = rule(double(n));
    if (!std::isfinite(v))
        throw ConfigError("rule " + rule.text() + " is not finite at n = " + std::to_string(n));
    if (family == Family::nw)
        return NadarayaWatson{v, kernel};
    const double rounded = std::round(v);
    if (std::abs(v - rounded) > 1e-9)
        throw ConfigError("k rule " + rule.text() + " gives non-integer " + format_double(v) + " at n = " +
                          std::to_string(n));
    if (rounded < 1.0 || rounded > double(n))
        throw ConfigError("k rule " + rule.text() + " gives k = " + format_double(v) + " outside [1, " +
                          std::to_string(n) + "]");
    const int k = int(rounded);
    if (family == Family::knn)
        return SimpleKnn{k};
    return KernelKnn{k, kernel};
}

std::string SchemeRule::describe() const {
    switch (family) {
    case Family::knn:
        return "knn k=" + rule.text();
    case Family::kknn:
        return "kknn k=" + rule.text() + " kernel=" + kernel_name(kernel);
    case Family::nw:
        return "nw h=" + rule.text() + " kernel=" + kernel_name(kernel);
    }
    return "?";
}

// ---------------------------------------------------------------- experiment

LineFit fit_slope(const std::vector<double>& ns, const std::vector<double>& errors) {
    if (ns.size() != errors.size())
        throw DataError("fit_slope: length mismatch");
    if (ns.size() < 3)
        throw DataError("fit_slope needs at least 3 points");
    std::vector<double> lx(ns.size()), ly(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(ns[i] > 0.0))
            throw DataError("fit_slope: sample sizes must be positive");
        for (std::size_t j = 0; j < i; ++j)
            if (ns[j] == ns[i])
                throw DataError("fit_slope: duplicate n = " + format_double(ns[i]));
        if (!(errors[i] > 0.0))
            throw DataError("fit_slope: nonpositive error " + format_double(errors[i]));
        lx[i] = std::log(ns[i]);
        ly[i] = std::log(errors[i]);
    }
    return ols_line(lx, ly);
}

namespace {

struct Job {
    std::size_t n_index;
    int replication;
};

ReplicationRecord run_replication(const ExperimentConfig& cfg, int n, int rep) {
    ReplicationRecord rec;
    rec.n = n;
    rec.replication = rep;
    const auto cov = cfg.covariates.with_seed(
        derive_seed(cfg.seed, {stream::covariates, std::uint64_t(n), std::uint64_t(rep)}));
    const Eigen::MatrixXd xs = generate(cov, n);
    const Eigen::VectorXd d = cfg.metric.distances(xs, cfg.target);
    WeightVector wv;
    try {
        wv = weights_from_distances(cfg.scheme.at(n), d);
    } catch (const NumericError& e) {
        rec.ok = false;
        rec.failure = e.what();
        rec.error = std::numeric_limits<double>::quiet_NaN();
        return rec;
    }
    Eigen::MatrixXd ys = cfg.truth.evaluate(xs);
    if (cfg.noise) {
        const auto noise = cfg.noise->with_seed(
            derive_seed(cfg.seed, {stream::noise, std::uint64_t(n), std::uint64_t(rep)}));
        ys += noise_sequence(noise, n, cfg.truth.grid());
    }
    const Eigen::VectorXd fitted = estimate(wv, ys);
    const Eigen::VectorXd truth = cfg.truth.evaluate_one(cfg.target);
    rec.error = grid_norm(*cfg.truth.grid(), fitted - truth);
    const auto stats = weight_stats(wv, int(std::min<Eigen::Index>(wv.k_effective, n)));
    rec.radius = wv.radius;
    rec.k_effective = long(wv.k_effective);
    rec.v_n1 = stats.v_n1;
    rec.c_n2 = stats.c_n2;
    rec.b_n = stats.b_n;
    rec.bias_bound = cfg.truth.lipschitz_constant() * std::pow(wv.radius, cfg.truth.alpha()) +
                     2.0 * cfg.truth.bound() * stats.b_n;
    return rec;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n_grid.empty())
        throw ConfigError("n_grid is empty");
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        if (cfg.n_grid[i] < 1)
            throw ConfigError("n_grid entries must be >= 1");
        if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1])
            throw ConfigError("n_grid must be strictly increasing");
    }
    if (cfg.replications < 1)
        throw ConfigError("replications must be >= 1");
    if (!cfg.truth.grid())
        throw ConfigError("experiment needs a regression truth");
    validate(cfg.covariates);
    if (cfg.noise)
        validate(*cfg.noise);
    if (cfg.target.size() != cfg.covariates.element_dim())
        throw GridMismatch(cfg.covariates.element_dim(), cfg.target.size());
    for (int n : cfg.n_grid)
        (void)cfg.scheme.at(n); // k(n) <= n
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    config.truth.verify_lipschitz(config.covariates.with_seed(config.seed));

    std::vector<Job> jobs;
    for (std::size_t i = 0; i < config.n_grid.size(); ++i)
        for (int r = 0; r < config.replications; ++r)
            jobs.push_back({i, r});

    ExperimentResult result;
    result.records.resize(jobs.size());
    parallel_for(jobs.size(), config.workers, [&](std::size_t j) {
        result.records[j] = run_replication(config, config.n_grid[jobs[j].n_index], jobs[j].replication);
    });

    std::vector<double> ns, medians;
    for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
        NSummary s;
        s.n = config.n_grid[i];
        s.rule_value = config.scheme.rule(double(s.n));
        std::vector<double> errors, radii, c2;
        for (int r = 0; r < config.replications; ++r) {
            const auto& rec = result.records[i * std::size_t(config.replications) + std::size_t(r)];
            if (!rec.ok) {
                ++s.failures;
                continue;
            }
            errors.push_back(rec.error);
            radii.push_back(rec.radius);
            c2.push_back(rec.c_n2);
            if (!config.noise && rec.error > rec.bias_bound * (1.0 + 1e-9) + 1e-12)
                ++result.bias_bound_violations;
        }
        result.failures += s.failures;
        if (errors.empty()) {
            s.median = s.q90 = s.median_radius = s.median_c_n2 = std::numeric_limits<double>::quiet_NaN();
        } else {
            s.median = median(errors);
            s.q90 = quantile(errors, 0.9);
            s.median_radius = median(radii);
            s.median_c_n2 = median(c2);
            const double log_n = std::log(double(s.n));
            s.dependent_rate = log_n * log_n * std::ceil(log_n) * s.median_c_n2;
            if (s.median > 0.0) {
                ns.push_back(double(s.n));
                medians.push_back(s.median);
            }
        }
        result.summaries.push_back(s);
    }
    result.median_strictly_decreasing = result.summaries.size() >= 2;
    for (std::size_t i = 1; i < result.summaries.size(); ++i)
        if (!(result.summaries[i].median < result.summaries[i - 1].median))
            result.median_strictly_decreasing = false;
    if (ns.size() >= 3)
        result.slope = fit_slope(ns, medians);
    if (config.noise && !config.noise->is_independent())
        result.noise_gamma1 = estimate_gamma_sum(
            config.noise->with_seed(derive_seed(config.seed, {stream::noise})), 1000, DecayNorm::mean_square());
    return result;
}

std::string raw_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "n,replication,error,H,k_eff,v_n1,c_n2,b_n,status\n";
    for (const auto& r : result.records) {
        out << r.n << ',' << r.replication << ',' << format_double(r.error) << ',' << format_double(r.radius) << ','
            << r.k_effective << ',' << format_double(r.v_n1) << ',' << format_double(r.c_n2) << ','
            << format_double(r.b_n) << ',' << (r.ok ? "ok" : "empty_neighborhood") << '\n';
    }
    return out.str();
}

std::string summary_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "n,median,q90,rule_value,failures,median_H,median_c_n2,dependent_rate\n";
    for (const auto& s : result.summaries) {
        out << s.n << ',' << format_double(s.median) << ',' << format_double(s.q90) << ','
            << format_double(s.rule_value) << ',' << s.failures << ',' << format_double(s.median_radius) << ','
            << format_double(s.median_c_n2) << ',' << format_double(s.dependent_rate) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------- variance term

VarianceDiagnostic variance_diagnostic(const WeightVector& weights, const ProcessSpec& noise, int replications,
                                       const GridPtrD& target, std::optional<double> gamma1) {
    if (replications < 1)
        throw ConfigError("variance_diagnostic needs at least one replication");
    const Eigen::Index n = weights.weights.size();
    VarianceDiagnostic out;
    const auto stats = weight_stats(weights, int(n));
    out.c_n2 = stats.c_n2;
    out.v_n1 = stats.v_n1;
    if (gamma1)
        out.gamma1 = *gamma1;
    else if (!noise.is_independent())
        out.gamma1 = estimate_gamma_sum(noise.with_seed(derive_seed(noise.seed, {stream::gamma_replication})), 1000,
                                        DecayNorm::mean_square());
    double total = 0.0;
    for (int r = 0; r < replications; ++r) {
        const auto rep = noise.with_seed(derive_seed(noise.seed, {stream::replication, std::uint64_t(r)}));
        const Eigen::MatrixXd eps = noise_sequence(rep, n, target);
        const Eigen::VectorXd s = eps * weights.weights;
        total += target ? grid_norm(*target, s) : s.norm();
    }
    out.mean_sn_norm = total / replications;
    const double denom = out.c_n2 + std::sqrt(out.gamma1 * out.v_n1);
    out.ratio = out.mean_sn_norm / denom;
    return out;
}

} // namespace fnreg
