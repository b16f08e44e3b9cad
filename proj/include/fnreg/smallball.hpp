#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fnreg/curves.hpp"
#include "fnreg/datagen.hpp"

namespace fnreg {

struct SmallBallCurve {
    Eigen::VectorXd h_grid;  // strictly increasing, positive
    Eigen::VectorXd phi_hat; // non-decreasing, in [0, 1]
    Eigen::Index n_samples = 0;
    bool rearranged = false; // monotone rearrangement was needed
};

/// Empirical small-ball probability (1/n) #{i : d_i <= h} on `h_grid`.
SmallBallCurve phi_from_distances(const Eigen::Ref<const Eigen::VectorXd>& distances,
                                  const Eigen::Ref<const Eigen::VectorXd>& h_grid);
SmallBallCurve phi_estimate(const Eigen::Ref<const Eigen::MatrixXd>& samples, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const SemiMetric& metric, const Eigen::Ref<const Eigen::VectorXd>& h_grid);

/// Full-resolution empirical curve: the grid is every distinct observed distance,
/// so the generalized inverse is exact for the empirical law.
SmallBallCurve phi_at_observed(const Eigen::Ref<const Eigen::VectorXd>& distances);

/// Smallest grid h with phi_hat(h) >= p.
double phi_inverse(const SmallBallCurve& curve, double p);
/// phi_hat at an arbitrary h (step function; 0 below the first grid point).
double phi_at(const SmallBallCurve& curve, double h);

/// Fitted slope of log phi_hat against log h over grid points with phi_hat > 0.
double log_log_slope(const SmallBallCurve& curve, double h_lo, double h_hi);

enum class Proposition { p1, p2, p3, p4 };
std::string proposition_name(Proposition p);

struct ReplicationOutcome {
    int replication = 0;
    double statistic = 0.0; // H for radius checks, k for count checks
    bool violated = false;
};

struct PropositionCheckResult {
    Proposition proposition = Proposition::p1;
    int replications = 0;
    int violations = 0;
    double violation_fraction = 0.0;
    bool in_hypothesis = true; // false: diagnostic regime, no pass/fail
    std::map<std::string, double> parameters;
    std::vector<std::string> warnings;
    std::vector<ReplicationOutcome> outcomes;
};

struct PropositionOptions {
    int aux_factor = 10; // reference sample size multiple of n
    int workers = 1;
};

/// Reference small-ball curve from an auxiliary sample of size aux_factor * n,
/// drawn on an independent stream of the process seed.
SmallBallCurve reference_phi(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const SemiMetric& metric, Eigen::Index n, const PropositionOptions& opts = {});

/// Violation: H > phi^{-1}(2k/n), H the k-th neighbor distance.
PropositionCheckResult check_prop1(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, int k, int replications,
                                   const PropositionOptions& opts = {});

/// Violation: k not in [n phi(H) / 2, 2 n phi(H)], k = #{i : d_i <= H}.
PropositionCheckResult check_prop3(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, double radius, int replications,
                                   const PropositionOptions& opts = {});

/// Coupling lag and measured covariate decay || d(X_1, X_1^(m)) || for the dependent checks.
struct DependenceInfo {
    int m = 1;
    double beta_m = 0.0;
};

/// Margins below this many beta_m put a dependent check in the diagnostic regime.
inline constexpr double kMinMarginInBeta = 5.0;

/// Dependent covariates. Violation: H > h for a caller-chosen h (normally
/// phi^{-1}(2k/n) plus a margin built from beta_m).
PropositionCheckResult check_prop2(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, int k, double h,
                                   const DependenceInfo& dependence, int replications,
                                   const PropositionOptions& opts = {});

/// Dependent covariates. Violation: k not in [n phi(H') / 2, 2 n phi(H'')] with H' <= H <= H''.
PropositionCheckResult check_prop4(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, double radius, double radius_lo,
                                   double radius_hi, const DependenceInfo& dependence, int replications,
                                   const PropositionOptions& opts = {});

} // namespace fnreg
