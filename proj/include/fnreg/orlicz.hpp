#pragma once

#include <span>
#include <string>

namespace fnreg {

/// psi(x) = outer * base(inner * x) with base x^p (power) or exp(x^p) - 1 (exponential).
/// The two scale factors only exist to express the rescaled psi functions that
/// appear in the Orlicz-norm comparison rules; plain specs leave them at 1.
struct PsiSpec {
    enum class Family { power, exponential };

    Family family = Family::power;
    double p = 1.0;
    double inner = 1.0;
    double outer = 1.0;

    static PsiSpec power(double p);
    static PsiSpec exponential(double p);
    PsiSpec scaled_argument(double a) const;
    PsiSpec scaled_value(double a) const;

    std::string name() const;
};

/// Throws ConfigError unless p >= 1, the scales are positive, and psi is
/// numerically convex and strictly increasing on a probe grid.
void validate(const PsiSpec& spec);

double psi_eval(const PsiSpec& spec, double x);

/// Generalized inverse at 1: the x with psi(x) = 1.
double psi_inverse_one(const PsiSpec& spec);

struct OrliczEstimate {
    double value = 0.0;
    long mc_samples = 0;
    double lo = 0.0;
    double hi = 0.0;
    double tolerance = 0.0;
    bool degenerate = false; // every sample was zero
};

/// Smallest C with mean(psi(s_i / C)) <= 1, by bisection on C. The sample mean
/// is evaluated in log space, so exponential families never overflow.
OrliczEstimate orlicz_norm(std::span<const double> samples, const PsiSpec& spec, double tolerance = 1e-6);

/// min(1, 1 / psi(x / norm)).
double tail_bound(double norm, const PsiSpec& spec, double x);

/// ((1 + K) / C)^(1/p): psi_p norm bound for variables with P(|X| > x) <= K exp(-C x^p).
double norm_bound_from_tail(double K, double C, double p);

struct ContractionResult {
    double norm_x = 0.0;
    double norm_conditional = 0.0;
};

/// Orlicz norms of X and of E[X | G], where G is generated by the partition
/// given in `groups` (labels in [0, group_count)). Every group must be nonempty.
ContractionResult conditional_contraction_check(std::span<const double> values, std::span<const int> groups,
                                                int group_count, const PsiSpec& spec, double tolerance = 1e-6);

} // namespace fnreg
