#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fnreg/curves.hpp"

namespace fnreg {

enum class Kernel { uniform, triangle };

/// K(u) on [0, 1] (distances are nonnegative); zero outside.
double kernel_value(Kernel kernel, double u);
std::string kernel_name(Kernel kernel);
/// Whether c * 1[-1,1] <= K <= C * 1[-1,1] holds with c > 0.
bool envelope_compliant(Kernel kernel);

struct SimpleKnn {
    int k = 1;
};
struct KernelKnn {
    int k = 1;
    Kernel kernel = Kernel::uniform;
};
struct NadarayaWatson {
    double h = 1.0;
    Kernel kernel = Kernel::uniform;
};

using WeightScheme = std::variant<SimpleKnn, KernelKnn, NadarayaWatson>;

std::string scheme_name(const WeightScheme& scheme);

/// Nearest-neighbor order: ranks[i] is the (0-based) index of the i-th nearest
/// covariate. Equal distances keep the original index order.
using RankVector = std::vector<Eigen::Index>;

struct WeightStats {
    double v_n1 = 0.0; // largest weight
    double c_n2 = 0.0; // Euclidean norm of the weights
    double b_n = 0.0;  // weight beyond the k largest
};

struct WeightVector {
    Eigen::VectorXd weights;  // W_n1..W_nn in observation order
    Eigen::VectorXd sorted;   // order statistics, non-increasing
    RankVector ranks;
    double radius = 0.0;      // H: k-th neighbor distance, or the bandwidth
    Eigen::Index k_effective = 0;
    bool envelope_compliant = true;
};

RankVector rank_by_distance(const Eigen::Ref<const Eigen::VectorXd>& distances);
RankVector rank_neighbors(const Eigen::Ref<const Eigen::MatrixXd>& xs, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const SemiMetric& metric);

/// inf{h : #{i : d_i <= h} >= k}, i.e. the k-th smallest distance.
double knn_radius_from_distances(const Eigen::Ref<const Eigen::VectorXd>& distances, int k);
double knn_radius(const Eigen::Ref<const Eigen::MatrixXd>& xs, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const SemiMetric& metric, int k);

WeightVector weights_from_distances(const WeightScheme& scheme, const Eigen::Ref<const Eigen::VectorXd>& distances);
WeightVector compute_weights(const WeightScheme& scheme, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                             const Eigen::Ref<const Eigen::VectorXd>& x, const SemiMetric& metric);

/// Assigns a deterministic non-increasing probability sequence v to the ranked
/// covariates: W_{R_i} = v_i.
WeightVector weights_from_sequence(const Eigen::Ref<const Eigen::VectorXd>& v,
                                   const Eigen::Ref<const Eigen::VectorXd>& distances);

/// Weighted combination of the response columns of `ys` (one curve per column).
Eigen::VectorXd estimate(const WeightVector& weights, const Eigen::Ref<const Eigen::MatrixXd>& ys);
CurveD estimate(const WeightVector& weights, const std::vector<CurveD>& ys);

WeightStats weight_stats(const WeightVector& weights, int k);

} // namespace fnreg
