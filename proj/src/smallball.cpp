#include "fnreg/smallball.hpp"

#include <algorithm>
#include <cmath>

#include "fnreg/estimator.hpp"
#include "fnreg/parallel.hpp"
#include "fnreg/rng.hpp"
#include "fnreg/stats.hpp"

namespace fnreg {

namespace {

void require_increasing(const Eigen::Ref<const Eigen::VectorXd>& h_grid, bool allow_zero) {
    if (h_grid.size() < 1)
        throw DataError("h grid is empty");
    if (!(h_grid[0] > 0.0 || (allow_zero && h_grid[0] == 0.0)))
        throw DataError("h grid must be positive");
    for (Eigen::Index j = 1; j < h_grid.size(); ++j)
        if (!(h_grid[j] > h_grid[j - 1]))
            throw DataError("h grid must be strictly increasing");
}

SmallBallCurve phi_on_grid(const Eigen::Ref<const Eigen::VectorXd>& distances,
                           const Eigen::Ref<const Eigen::VectorXd>& h_grid) {
    if (distances.size() < 1)
        throw DataError("small-ball estimate needs at least one sample");
    std::vector<double> sorted(distances.data(), distances.data() + distances.size());
    std::sort(sorted.begin(), sorted.end());
    SmallBallCurve curve;
    curve.h_grid = h_grid;
    curve.n_samples = distances.size();
    curve.phi_hat.resize(h_grid.size());
    const double n = double(sorted.size());
    double running = 0.0;
    for (Eigen::Index j = 0; j < h_grid.size(); ++j) {
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), h_grid[j]) - sorted.begin();
        double value = double(count) / n;
        if (value < running) {
            value = running;
            curve.rearranged = true;
        }
        curve.phi_hat[j] = running = value;
    }
    return curve;
}

} // namespace

SmallBallCurve phi_from_distances(const Eigen::Ref<const Eigen::VectorXd>& distances,
                                  const Eigen::Ref<const Eigen::VectorXd>& h_grid) {
    require_increasing(h_grid, false);
    return phi_on_grid(distances, h_grid);
}

SmallBallCurve phi_estimate(const Eigen::Ref<const Eigen::MatrixXd>& samples, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const SemiMetric& metric, const Eigen::Ref<const Eigen::VectorXd>& h_grid) {
    if (samples.cols() < 1)
        throw DataError("small-ball estimate needs at least one sample");
    return phi_from_distances(metric.distances(samples, x), h_grid);
}

SmallBallCurve phi_at_observed(const Eigen::Ref<const Eigen::VectorXd>& distances) {
    if (distances.size() < 1)
        throw DataError("small-ball estimate needs at least one sample");
    std::vector<double> d(distances.data(), distances.data() + distances.size());
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    const Eigen::VectorXd grid = Eigen::Map<const Eigen::VectorXd>(d.data(), Eigen::Index(d.size()));
    return phi_on_grid(distances, grid);
}

double phi_inverse(const SmallBallCurve& curve, double p) {
    if (!(p > 0.0))
        throw DataError("phi_inverse needs p > 0");
    const auto& phi = curve.phi_hat;
    const auto it = std::lower_bound(phi.begin(), phi.end(), p);
    if (it == phi.end())
        throw DataError("phi_inverse: p = " + std::to_string(p) + " above the attained maximum " +
                        std::to_string(phi.size() ? phi[phi.size() - 1] : 0.0));
    return curve.h_grid[it - phi.begin()];
}

double phi_at(const SmallBallCurve& curve, double h) {
    const auto& g = curve.h_grid;
    const auto it = std::upper_bound(g.begin(), g.end(), h);
    if (it == g.begin())
        return 0.0;
    return curve.phi_hat[(it - g.begin()) - 1];
}

double log_log_slope(const SmallBallCurve& curve, double h_lo, double h_hi) {
    std::vector<double> lx, ly;
    for (Eigen::Index j = 0; j < curve.h_grid.size(); ++j) {
        const double h = curve.h_grid[j];
        if (h < h_lo || h > h_hi || !(curve.phi_hat[j] > 0.0))
            continue;
        lx.push_back(std::log(h));
        ly.push_back(std::log(curve.phi_hat[j]));
    }
    if (lx.size() < 3)
        throw DataError("log-log slope needs at least 3 grid points with positive mass in range");
    return ols_line(lx, ly).slope;
}

std::string proposition_name(Proposition p) {
    switch (p) {
    case Proposition::p1:
        return "P1";
    case Proposition::p2:
        return "P2";
    case Proposition::p3:
        return "P3";
    case Proposition::p4:
        return "P4";
    }
    return "?";
}

SmallBallCurve reference_phi(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const SemiMetric& metric, Eigen::Index n, const PropositionOptions& opts) {
    if (opts.aux_factor < 1)
        throw ConfigError("aux_factor must be >= 1");
    const auto aux = process.with_seed(derive_seed(process.seed, {stream::auxiliary}));
    const Eigen::MatrixXd sample = generate(aux, n * opts.aux_factor);
    return phi_at_observed(metric.distances(sample, x));
}

namespace {

/// Per-replication statistic computed from the n distances to x.
template <typename Statistic>
std::vector<ReplicationOutcome> replicate(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const SemiMetric& metric, Eigen::Index n, int replications,
                                          const PropositionOptions& opts, Statistic&& statistic) {
    if (replications < 1)
        throw ConfigError("need at least one replication");
    if (n < 1)
        throw ConfigError("need n >= 1");
    std::vector<ReplicationOutcome> out(replications);
    const Eigen::VectorXd target = x;
    parallel_for(std::size_t(replications), opts.workers, [&](std::size_t r) {
        const auto rep = process.with_seed(derive_seed(process.seed, {stream::replication, r}));
        const Eigen::MatrixXd xs = generate(rep, n);
        const Eigen::VectorXd d = metric.distances(xs, target);
        out[r] = statistic(d);
        out[r].replication = int(r);
    });
    return out;
}

void tally(PropositionCheckResult& res) {
    res.replications = int(res.outcomes.size());
    res.violations = 0;
    for (const auto& o : res.outcomes)
        res.violations += o.violated ? 1 : 0;
    res.violation_fraction = double(res.violations) / double(res.replications);
}

std::vector<ReplicationOutcome> radius_outcomes(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                                const SemiMetric& metric, Eigen::Index n, int k, double threshold,
                                                int replications, const PropositionOptions& opts) {
    if (k < 1 || k > n)
        throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    return replicate(process, x, metric, n, replications, opts, [&](const Eigen::VectorXd& d) {
        const double radius = knn_radius_from_distances(d, k);
        return ReplicationOutcome{0, radius, radius > threshold};
    });
}

std::vector<ReplicationOutcome> count_outcomes(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                               const SemiMetric& metric, Eigen::Index n, double radius, double lo,
                                               double hi, int replications, const PropositionOptions& opts) {
    return replicate(process, x, metric, n, replications, opts, [&](const Eigen::VectorXd& d) {
        const double k = double((d.array() <= radius).count());
        return ReplicationOutcome{0, k, k < lo || k > hi};
    });
}

void require_independent(const ProcessSpec& process, const char* which) {
    if (!process.is_independent())
        throw ConfigError(std::string(which) + " needs independent covariates (use the dependent check)");
}

} // namespace

PropositionCheckResult check_prop1(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, int k, int replications,
                                   const PropositionOptions& opts) {
    require_independent(process, "check_prop1");
    if (k < 1 || k > n)
        throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    const double mass = 2.0 * k / double(n);
    if (mass > 1.0)
        throw ConfigError("check_prop1: 2k/n = " + std::to_string(mass) + " exceeds 1, phi^{-1} undefined");
    const SmallBallCurve ref = reference_phi(process, x, metric, n, opts);
    const double threshold = phi_inverse(ref, mass);

    PropositionCheckResult res;
    res.proposition = Proposition::p1;
    const double log_n = std::log(double(n));
    res.parameters = {{"n", double(n)}, {"k", double(k)}, {"phi_inverse_2k_over_n", threshold},
                      {"aux_samples", double(ref.n_samples)}};
    if (double(k) / double(n) > 0.1 || double(k) < 5.0 * log_n) {
        res.in_hypothesis = false;
        res.warnings.push_back("k/n small and k/log n large not satisfied; diagnostic only");
    }
    res.outcomes = radius_outcomes(process, x, metric, n, k, threshold, replications, opts);
    tally(res);
    return res;
}

PropositionCheckResult check_prop3(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, double radius, int replications,
                                   const PropositionOptions& opts) {
    require_independent(process, "check_prop3");
    if (!(radius > 0.0))
        throw ConfigError("radius H must be positive");
    const SmallBallCurve ref = reference_phi(process, x, metric, n, opts);
    const double phi = phi_at(ref, radius);
    const double expected = double(n) * phi;

    PropositionCheckResult res;
    res.proposition = Proposition::p3;
    res.parameters = {{"n", double(n)}, {"H", radius}, {"phi_H", phi}, {"aux_samples", double(ref.n_samples)}};
    if (expected < 5.0 * std::log(double(n))) {
        res.in_hypothesis = false;
        res.warnings.push_back("n phi(H) / log n large not satisfied; diagnostic only");
    }
    res.outcomes = count_outcomes(process, x, metric, n, radius, expected / 2.0, 2.0 * expected, replications, opts);
    tally(res);
    return res;
}

PropositionCheckResult check_prop2(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, int k, double h,
                                   const DependenceInfo& dependence, int replications, const PropositionOptions& opts) {
    if (k < 1 || k > n)
        throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    if (dependence.m < 1 || dependence.m > n)
        throw ConfigError("coupling lag m must lie in [1, n]");
    const double mass = 2.0 * k / double(n);
    if (mass > 1.0)
        throw ConfigError("check_prop2: 2k/n = " + std::to_string(mass) + " exceeds 1, phi^{-1} undefined");
    const SmallBallCurve ref = reference_phi(process, x, metric, n, opts);
    const double base = phi_inverse(ref, mass);
    const double margin = h - base;

    PropositionCheckResult res;
    res.proposition = Proposition::p2;
    const double log_n = std::log(double(n));
    res.parameters = {{"n", double(n)},
                      {"k", double(k)},
                      {"h", h},
                      {"phi_inverse_2k_over_n", base},
                      {"margin", margin},
                      {"m", double(dependence.m)},
                      {"beta_m", dependence.beta_m},
                      {"aux_samples", double(ref.n_samples)}};
    if (!(margin > 0.0))
        res.warnings.push_back("h does not exceed phi^{-1}(2k/n)");
    const bool margin_ok = dependence.beta_m == 0.0 ? margin >= 0.0
                                                    : margin >= kMinMarginInBeta * dependence.beta_m * (1.0 - 1e-9);
    if (double(k) / double(n) > 0.1 || double(k) < double(dependence.m) * log_n || !margin_ok) {
        res.in_hypothesis = false;
        res.warnings.push_back("k/(m log n) large or margin >= 5 beta_m not satisfied; diagnostic only");
    }
    res.outcomes = radius_outcomes(process, x, metric, n, k, h, replications, opts);
    tally(res);
    return res;
}

PropositionCheckResult check_prop4(const ProcessSpec& process, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const SemiMetric& metric, Eigen::Index n, double radius, double radius_lo,
                                   double radius_hi, const DependenceInfo& dependence, int replications,
                                   const PropositionOptions& opts) {
    if (!(radius > 0.0) || !(radius_lo <= radius) || !(radius <= radius_hi))
        throw ConfigError("check_prop4 needs 0 < H and H' <= H <= H''");
    if (dependence.m < 1 || dependence.m > n)
        throw ConfigError("coupling lag m must lie in [1, n]");
    const SmallBallCurve ref = reference_phi(process, x, metric, n, opts);
    const double phi_lo = phi_at(ref, radius_lo);
    const double phi_hi = phi_at(ref, radius_hi);

    PropositionCheckResult res;
    res.proposition = Proposition::p4;
    res.parameters = {{"n", double(n)},
                      {"H", radius},
                      {"H_lo", radius_lo},
                      {"H_hi", radius_hi},
                      {"phi_H_lo", phi_lo},
                      {"phi_H_hi", phi_hi},
                      {"m", double(dependence.m)},
                      {"beta_m", dependence.beta_m},
                      {"aux_samples", double(ref.n_samples)}};
    const double need = kMinMarginInBeta * dependence.beta_m * (1.0 - 1e-9);
    const bool margins_ok = (radius_hi - radius) >= need && (radius - radius_lo) >= need;
    if (double(n) * phi_lo < double(dependence.m) * std::log(double(n)) || !margins_ok) {
        res.in_hypothesis = false;
        res.warnings.push_back("n phi(H')/(m log n) large or margins >= 5 beta_m not satisfied; diagnostic only");
    }
    res.outcomes = count_outcomes(process, x, metric, n, radius, double(n) * phi_lo / 2.0, 2.0 * double(n) * phi_hi,
                                  replications, opts);
    tally(res);
    return res;
}

} // namespace fnreg
