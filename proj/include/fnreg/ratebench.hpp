#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fnreg/curves.hpp"
#include "fnreg/datagen.hpp"
#include "fnreg/estimator.hpp"
#include "fnreg/rule.hpp"
#include "fnreg/stats.hpp"

namespace fnreg {

/// Known regression map r: covariate -> response curve, bounded by B and
/// Lipschitz of order alpha with constant M in the experiment's semi-metric.
///
/// Distance-driven maps have the form r(x)(t) = g(d(x, center)) * profile(t).
/// Since |d(x, c) - d(x', c)| <= d(x, x') for every semi-metric used here,
/// the constants follow from those of g and the profile norm.
class RegressionTruth {
public:
    enum class Kind { constant, sine, holder };
    enum class Profile { one, sine };

    /// Placeholder without a grid; experiments reject it.
    RegressionTruth() = default;

    /// r(x) = amplitude * profile.
    static RegressionTruth constant(GridPtrD grid, Profile profile, double amplitude);
    /// g(s) = amplitude * sin(frequency * s): M = |amplitude * frequency| ||profile||, alpha = 1.
    static RegressionTruth sine(GridPtrD grid, Profile profile, SemiMetric metric, Eigen::VectorXd center,
                                double amplitude, double frequency);
    /// g(s) = amplitude * min(s, cap)^alpha: M = |amplitude| ||profile||, alpha in (0, 1].
    static RegressionTruth holder(GridPtrD grid, Profile profile, SemiMetric metric, Eigen::VectorXd center,
                                  double amplitude, double alpha, double cap);

    Kind kind() const { return kind_; }
    double lipschitz_constant() const { return m_; }
    double alpha() const { return alpha_; }
    double bound() const { return b_; }
    const GridPtrD& grid() const { return grid_; }
    std::string describe() const;

    /// Response curves r(X_i) as columns.
    Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& xs) const;
    Eigen::VectorXd evaluate_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Checks ||r(x) - r(x')|| <= M d(x, x')^alpha on `pairs` random pairs drawn
    /// from `covariates`. Throws ConfigError on the first violation.
    void verify_lipschitz(const ProcessSpec& covariates, int pairs = 1000) const;

private:
    RegressionTruth(Kind kind, GridPtrD grid, Profile profile, SemiMetric metric, Eigen::VectorXd center);
    double g(double s) const;

    Kind kind_ = Kind::constant;
    GridPtrD grid_;
    Profile profile_kind_ = Profile::one;
    Eigen::VectorXd profile_;
    SemiMetric metric_;
    Eigen::VectorXd center_;
    double amplitude_ = 1.0;
    double frequency_ = 1.0;
    double cap_ = 1.0;
    double m_ = 0.0;
    double alpha_ = 1.0;
    double b_ = 0.0;
};

/// k(n) or h(n) as an explicit arithmetic rule.
struct SchemeRule {
    enum class Family { knn, kknn, nw };
    Family family = Family::knn;
    Rule rule{"ceil(n^(2/3))"};
    Kernel kernel = Kernel::uniform;

    /// Weight scheme for sample size n; k rules must evaluate to an integer in [1, n].
    WeightScheme at(Eigen::Index n) const;
    std::string describe() const;
};

struct ExperimentConfig {
    ProcessSpec covariates;
    std::optional<ProcessSpec> noise; // absent: noiseless responses
    RegressionTruth truth;
    SemiMetric metric;
    SchemeRule scheme;
    std::vector<int> n_grid;
    int replications = 100;
    Eigen::VectorXd target;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct ReplicationRecord {
    int n = 0;
    int replication = 0;
    double error = 0.0;
    double radius = 0.0;
    long k_effective = 0;
    double v_n1 = 0.0;
    double c_n2 = 0.0;
    double b_n = 0.0;
    double bias_bound = 0.0; // M H^alpha + 2 B b_n
    bool ok = true;
    std::string failure;
};

struct NSummary {
    int n = 0;
    double rule_value = 0.0;
    int failures = 0;
    double median = 0.0;
    double q90 = 0.0;
    double median_radius = 0.0;
    double median_c_n2 = 0.0;
    /// (log n)^2 * ceil(log n) * median c_n2, reported for dependent noise.
    double dependent_rate = 0.0;
};

struct ExperimentResult {
    std::vector<ReplicationRecord> records; // ordered by (n, replication)
    std::vector<NSummary> summaries;
    std::optional<LineFit> slope;
    std::optional<double> noise_gamma1; // present when the noise is dependent
    bool median_strictly_decreasing = false;
    int bias_bound_violations = 0; // meaningful for noiseless runs
    int failures = 0;
};

/// OLS fit of log(error) on log(n). Needs >= 3 distinct n and positive errors.
LineFit fit_slope(const std::vector<double>& ns, const std::vector<double>& errors);

ExperimentResult run_experiment(const ExperimentConfig& config);

std::string raw_csv(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);

struct VarianceDiagnostic {
    double mean_sn_norm = 0.0;
    double c_n2 = 0.0;
    double v_n1 = 0.0;
    double gamma1 = 0.0;
    double ratio = 0.0; // mean_sn_norm / (c_n2 + sqrt(gamma1 * v_n1))
};

/// Monte Carlo E|| sum_i W_i eps_i || for fixed weights. `gamma1` defaults to
/// the estimated tail sum of the noise coupling distances (0 for independent noise).
VarianceDiagnostic variance_diagnostic(const WeightVector& weights, const ProcessSpec& noise, int replications,
                                       const GridPtrD& target, std::optional<double> gamma1 = std::nullopt);

} // namespace fnreg
