#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fnreg/curves.hpp"
#include "fnreg/orlicz.hpp"

namespace fnreg {

/// Distribution of the i.i.d. innovations driving an AR(1) process.
struct Innovation {
    enum class Kind { gaussian, uniform, exponential, brownian };
    Kind kind = Kind::gaussian;
    // gaussian: standard deviation; uniform: half-width a of U[-a, a];
    // exponential: mean; brownian: multiplier of a standard Brownian path.
    double scale = 1.0;

    double mean() const { return kind == Kind::exponential ? scale : 0.0; }
};

struct IidGaussian {
    int dim = 1;
    double scale = 1.0;
};

struct BrownianMotion {
    GridPtrD grid;
};

struct Ar1 {
    enum class Operator { diagonal, banded };
    double rho = 0.0;
    Innovation innovation;
    GridPtrD grid;  // null: scalar-valued process
    Operator op = Operator::diagonal;
    double band_weight = 0.25; // banded: rho * (w, 1 - 2w, w) stencil with reflecting ends
};

/// Generator description. Elements are column vectors: length 1 for scalar
/// processes, `dim` for finite-dimensional Gaussians, grid size for curves.
struct ProcessSpec {
    std::variant<IidGaussian, BrownianMotion, Ar1> kind;
    std::uint64_t seed = 0;
    std::optional<int> burn_in; // ar1 only; default from rho

    bool is_ar1() const { return std::holds_alternative<Ar1>(kind); }
    const Ar1* ar1() const { return std::get_if<Ar1>(&kind); }
    /// i.i.d. kinds and ar1 with rho = 0.
    bool is_independent() const;
    Eigen::Index element_dim() const;
    /// Grid the elements live on, or null for scalar / finite-dimensional kinds.
    GridPtrD element_grid() const;
    ProcessSpec with_seed(std::uint64_t s) const;
};

/// Throws ConfigError for invalid fields (|rho| >= 1, dim < 1, missing grid, ...).
void validate(const ProcessSpec& spec);

/// ceil(log(1e-12) / log|rho|), or 0 for rho = 0.
int default_burn_in(double rho);
int effective_burn_in(const ProcessSpec& spec);

/// n elements as the columns of the result.
Eigen::MatrixXd generate(const ProcessSpec& spec, Eigen::Index n);

/// Original sequence, the independent-copy sequence X' driven by the primed
/// innovations, and for each m the coupled sequence X^(m). The history of X
/// and X' is kept back to time 1 - max(m) so X_{i-m} is available for every i.
class CoupledPair {
public:
    CoupledPair(Eigen::MatrixXd original_ext, Eigen::MatrixXd prime_ext, Eigen::Index offset,
                std::map<int, Eigen::MatrixXd> coupled);

    Eigen::Index n() const { return original_.cols() - offset_; }
    Eigen::Index history() const { return offset_; }

    /// Columns for times 1..n.
    auto original() const { return original_.rightCols(n()); }
    auto prime() const { return prime_.rightCols(n()); }
    const Eigen::MatrixXd& coupled(int m) const;
    const std::map<int, Eigen::MatrixXd>& all_coupled() const { return coupled_; }

    /// X_t and X'_t for t in [1 - history(), n].
    auto original_at(Eigen::Index t) const { return original_.col(t - 1 + offset_); }
    auto prime_at(Eigen::Index t) const { return prime_.col(t - 1 + offset_); }

private:
    Eigen::MatrixXd original_;
    Eigen::MatrixXd prime_;
    Eigen::Index offset_;
    std::map<int, Eigen::MatrixXd> coupled_;
};

CoupledPair generate_coupled(const ProcessSpec& spec, Eigen::Index n, const std::vector<int>& m_list);

struct DecayNorm {
    enum class Kind { l2, orlicz };
    Kind kind = Kind::l2;
    PsiSpec psi{};

    static DecayNorm mean_square() { return {}; }
    static DecayNorm orlicz(PsiSpec psi) { return {Kind::orlicz, psi}; }
};

struct DecayEstimate {
    int m = 1;
    double gamma_hat = 0.0;
    DecayNorm norm;
    int replications = 0;
};

/// Monte Carlo estimate of || X_m - X_m^(m) ||. The distance of each replicated
/// pair is measured with `metric` when given (the covariate version beta_m),
/// otherwise with |.|, the Euclidean norm, or the trapezoid L2 norm of the
/// element space.
DecayEstimate estimate_gamma(const ProcessSpec& spec, int m, int replications, const DecayNorm& norm,
                             const SemiMetric* metric = nullptr);

/// Truncated tail sum gamma_1 = sum_{m>=1} || X_m - X_m^(m) ||, stopping once a
/// term falls below `relative_cutoff` of the first or at `max_m`.
double estimate_gamma_sum(const ProcessSpec& spec, int replications, const DecayNorm& norm,
                          double relative_cutoff = 1e-4, int max_m = 200);

/// Stationary mean of a single element (closed form for every supported kind).
Eigen::VectorXd stationary_mean(const ProcessSpec& spec);

/// Mean-zero noise elements living on `target` (scalar when null). Scalar
/// processes on a curve target are broadcast as eps_i * 1(t); curve processes
/// must already live on `target`.
Eigen::MatrixXd noise_sequence(const ProcessSpec& spec, Eigen::Index n, const GridPtrD& target);

/// Norm of each column in the element space of `spec` (|.|, Euclidean, or trapezoid L2).
Eigen::VectorXd element_norms(const ProcessSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& elements);

} // namespace fnreg
