#include "fnreg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fnreg {

double kernel_value(Kernel kernel, double u) {
    if (u < 0.0 || u > 1.0)
        return 0.0;
    switch (kernel) {
    case Kernel::uniform:
        return 1.0;
    case Kernel::triangle:
        return 1.0 - u;
    }
    return 0.0;
}

std::string kernel_name(Kernel kernel) {
    return kernel == Kernel::uniform ? "uniform" : "triangle";
}

bool envelope_compliant(Kernel kernel) {
    return kernel == Kernel::uniform;
}

std::string scheme_name(const WeightScheme& scheme) {
    return std::visit(
        [](const auto& s) -> std::string {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SimpleKnn>)
                return "knn(k=" + std::to_string(s.k) + ")";
            else if constexpr (std::is_same_v<S, KernelKnn>)
                return "kknn(k=" + std::to_string(s.k) + ", " + kernel_name(s.kernel) + ")";
            else
                return "nw(h=" + std::to_string(s.h) + ", " + kernel_name(s.kernel) + ")";
        },
        scheme);
}

RankVector rank_by_distance(const Eigen::Ref<const Eigen::VectorXd>& distances) {
    RankVector ranks(distances.size());
    std::iota(ranks.begin(), ranks.end(), Eigen::Index{0});
    std::stable_sort(ranks.begin(), ranks.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return distances[a] < distances[b]; });
    return ranks;
}

RankVector rank_neighbors(const Eigen::Ref<const Eigen::MatrixXd>& xs, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const SemiMetric& metric) {
    if (xs.cols() < 1)
        throw DataError("rank_neighbors needs at least one covariate");
    return rank_by_distance(metric.distances(xs, x));
}

double knn_radius_from_distances(const Eigen::Ref<const Eigen::VectorXd>& distances, int k) {
    if (k < 1 || k > distances.size())
        throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(distances.size()) + "]");
    std::vector<double> d(distances.data(), distances.data() + distances.size());
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    return d[k - 1];
}

double knn_radius(const Eigen::Ref<const Eigen::MatrixXd>& xs, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const SemiMetric& metric, int k) {
    return knn_radius_from_distances(metric.distances(xs, x), k);
}

namespace {

void finish(WeightVector& wv) {
    wv.sorted = wv.weights;
    std::sort(wv.sorted.begin(), wv.sorted.end(), std::greater<>());
}

Eigen::Index count_within(const Eigen::Ref<const Eigen::VectorXd>& distances, double radius) {
    return (distances.array() <= radius).count();
}

/// Kernel weights K(d/H) normalized over the closed ball of radius H.
/// A zero radius only admits covariates at distance zero, each with K(0).
WeightVector kernel_weights(Kernel kernel, double radius, const Eigen::Ref<const Eigen::VectorXd>& distances,
                            RankVector ranks) {
    const Eigen::Index n = distances.size();
    WeightVector wv;
    wv.ranks = std::move(ranks);
    wv.radius = radius;
    wv.k_effective = count_within(distances, radius);
    wv.envelope_compliant = envelope_compliant(kernel);
    wv.weights = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = distances[i];
        if (d > radius)
            continue;
        const double u = radius > 0.0 ? d / radius : 0.0;
        wv.weights[i] = kernel_value(kernel, u);
    }
    // accumulate in rank order so the total does not depend on input order
    double mass = 0.0;
    for (Eigen::Index r : wv.ranks)
        mass += wv.weights[r];
    if (!(mass > 0.0))
        throw EmptyNeighborhood("no kernel mass within radius " + std::to_string(radius) + " (" +
                                std::to_string(wv.k_effective) + " covariates in the ball)");
    wv.weights /= mass;
    finish(wv);
    return wv;
}

} // namespace

WeightVector weights_from_distances(const WeightScheme& scheme, const Eigen::Ref<const Eigen::VectorXd>& distances) {
    const Eigen::Index n = distances.size();
    if (n < 1)
        throw DataError("weights need at least one covariate");
    RankVector ranks = rank_by_distance(distances);
    return std::visit(
        [&](const auto& s) -> WeightVector {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SimpleKnn>) {
                if (s.k < 1 || s.k > n)
                    throw ConfigError("k = " + std::to_string(s.k) + " outside [1, " + std::to_string(n) + "]");
                WeightVector wv;
                wv.weights = Eigen::VectorXd::Zero(n);
                for (int i = 0; i < s.k; ++i)
                    wv.weights[ranks[i]] = 1.0 / s.k;
                wv.radius = distances[ranks[s.k - 1]];
                wv.k_effective = s.k;
                wv.ranks = std::move(ranks);
                finish(wv);
                return wv;
            } else if constexpr (std::is_same_v<S, KernelKnn>) {
                if (s.k < 1 || s.k > n)
                    throw ConfigError("k = " + std::to_string(s.k) + " outside [1, " + std::to_string(n) + "]");
                const double radius = distances[ranks[s.k - 1]];
                return kernel_weights(s.kernel, radius, distances, std::move(ranks));
            } else {
                if (!(s.h > 0.0))
                    throw ConfigError("bandwidth h must be positive");
                return kernel_weights(s.kernel, s.h, distances, std::move(ranks));
            }
        },
        scheme);
}

WeightVector compute_weights(const WeightScheme& scheme, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                             const Eigen::Ref<const Eigen::VectorXd>& x, const SemiMetric& metric) {
    return weights_from_distances(scheme, metric.distances(xs, x));
}

WeightVector weights_from_sequence(const Eigen::Ref<const Eigen::VectorXd>& v,
                                   const Eigen::Ref<const Eigen::VectorXd>& distances) {
    const Eigen::Index n = distances.size();
    if (v.size() != n)
        throw DataError("weight sequence length " + std::to_string(v.size()) + " does not match " +
                        std::to_string(n) + " covariates");
    if ((v.array() < 0.0).any())
        throw DataError("weight sequence has negative entries");
    for (Eigen::Index i = 1; i < n; ++i)
        if (v[i] > v[i - 1])
            throw DataError("weight sequence must be non-increasing");
    if (std::abs(v.sum() - 1.0) > 1e-12)
        throw DataError("weight sequence must sum to 1");
    WeightVector wv;
    wv.ranks = rank_by_distance(distances);
    wv.weights = Eigen::VectorXd::Zero(n);
    Eigen::Index last = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        wv.weights[wv.ranks[i]] = v[i];
        if (v[i] > 0.0)
            last = i;
    }
    wv.radius = distances[wv.ranks[last]];
    wv.k_effective = last + 1;
    finish(wv);
    return wv;
}

Eigen::VectorXd estimate(const WeightVector& weights, const Eigen::Ref<const Eigen::MatrixXd>& ys) {
    if (ys.cols() != weights.weights.size())
        throw DataError("estimate: " + std::to_string(ys.cols()) + " responses for " +
                        std::to_string(weights.weights.size()) + " weights");
    return ys * weights.weights;
}

CurveD estimate(const WeightVector& weights, const std::vector<CurveD>& ys) {
    if (ys.empty())
        throw DataError("estimate needs at least one response");
    Eigen::MatrixXd stacked(ys.front().size(), Eigen::Index(ys.size()));
    for (std::size_t i = 0; i < ys.size(); ++i) {
        require_same_grid(ys.front().grid(), ys[i].grid());
        stacked.col(Eigen::Index(i)) = ys[i].values();
    }
    return CurveD(ys.front().grid_ptr(), estimate(weights, stacked));
}

WeightStats weight_stats(const WeightVector& weights, int k) {
    const auto n = weights.sorted.size();
    if (k < 1 || k > n)
        throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    WeightStats st;
    st.v_n1 = weights.sorted[0];
    st.c_n2 = weights.sorted.norm();
    st.b_n = weights.sorted.tail(n - k).sum();
    return st;
}

} // namespace fnreg
