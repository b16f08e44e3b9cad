#include "fnreg/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fnreg/errors.hpp"

namespace fnreg {

PsiSpec PsiSpec::power(double p) {
    PsiSpec s{Family::power, p, 1.0, 1.0};
    validate(s);
    return s;
}

PsiSpec PsiSpec::exponential(double p) {
    PsiSpec s{Family::exponential, p, 1.0, 1.0};
    validate(s);
    return s;
}

PsiSpec PsiSpec::scaled_argument(double a) const {
    PsiSpec s = *this;
    s.inner *= a;
    validate(s);
    return s;
}

PsiSpec PsiSpec::scaled_value(double a) const {
    PsiSpec s = *this;
    s.outer *= a;
    validate(s);
    return s;
}

std::string PsiSpec::name() const {
    std::string base = family == Family::power ? "power" : "exp";
    base += "(p=" + std::to_string(p);
    if (inner != 1.0)
        base += ", inner=" + std::to_string(inner);
    if (outer != 1.0)
        base += ", outer=" + std::to_string(outer);
    return base + ")";
}

namespace {

double base_psi(PsiSpec::Family family, double p, double u) {
    if (family == PsiSpec::Family::power)
        return std::pow(u, p);
    return std::expm1(std::pow(u, p));
}

} // namespace

void validate(const PsiSpec& spec) {
    if (!(spec.p >= 1.0) || !std::isfinite(spec.p))
        throw ConfigError("psi exponent p must be >= 1, got " + std::to_string(spec.p));
    if (!(spec.inner > 0.0) || !(spec.outer > 0.0))
        throw ConfigError("psi scale factors must be positive");
    // convexity and strict monotonicity on a probe grid below psi^{-1}(1) * 2
    const double top = 2.0 * psi_inverse_one(spec);
    constexpr int steps = 64;
    double prev = psi_eval(spec, 0.0);
    double prev_inc = 0.0;
    if (prev != 0.0)
        throw ConfigError("psi(0) must be 0");
    for (int j = 1; j <= steps; ++j) {
        const double cur = psi_eval(spec, top * j / steps);
        if (!std::isfinite(cur))
            break;
        const double inc = cur - prev;
        if (!(inc > 0.0))
            throw ConfigError("psi is not strictly increasing: " + spec.name());
        if (inc < prev_inc * (1.0 - 1e-9))
            throw ConfigError("psi is not convex: " + spec.name());
        prev = cur;
        prev_inc = inc;
    }
}

double psi_eval(const PsiSpec& spec, double x) {
    if (x < 0.0 || std::isnan(x))
        throw DataError("psi argument must be >= 0, got " + std::to_string(x));
    return spec.outer * base_psi(spec.family, spec.p, spec.inner * x);
}

double psi_inverse_one(const PsiSpec& spec) {
    const double target = 1.0 / spec.outer;
    const double base_inv = spec.family == PsiSpec::Family::power ? std::pow(target, 1.0 / spec.p)
                                                                  : std::pow(std::log1p(target), 1.0 / spec.p);
    return base_inv / spec.inner;
}

namespace {

/// log(mean psi(s_i / C)) - log(1): the sign decides feasibility of C.
/// Positive samples only are passed in `log_s` (log of each positive sample);
/// `zeros` counts the zero samples, which contribute psi(0) = 0.
class MeanPsi {
public:
    MeanPsi(const PsiSpec& spec, std::vector<double> log_s, std::size_t total)
        : spec_(spec), log_s_(std::move(log_s)), log_n_(std::log(double(total))), total_(total) {
        exponents_.resize(log_s_.size());
    }

    // > 0 means mean(psi(s/C)) > 1.
    double excess(double c) const {
        const double log_ratio = std::log(spec_.inner) - std::log(c);
        if (spec_.family == PsiSpec::Family::power) {
            // log mean outer*(inner s/C)^p
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < log_s_.size(); ++i) {
                exponents_[i] = spec_.p * (log_s_[i] + log_ratio);
                mx = std::max(mx, exponents_[i]);
            }
            if (log_s_.empty())
                return -std::numeric_limits<double>::infinity();
            double acc = 0.0;
            for (double e : exponents_)
                acc += std::exp(e - mx);
            return std::log(spec_.outer) + mx + std::log(acc) - log_n_;
        }
        // exponential: mean(exp(u_i)) - 1 <= 1/outer, u_i = (inner s_i / C)^p
        const double threshold = std::log1p(1.0 / spec_.outer);
        double mx = 0.0; // zero samples contribute exp(0)
        for (std::size_t i = 0; i < log_s_.size(); ++i) {
            const double lu = spec_.p * (log_s_[i] + log_ratio);
            exponents_[i] = lu > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(lu);
            mx = std::max(mx, exponents_[i]);
        }
        if (!std::isfinite(mx) || mx - log_n_ > threshold)
            return 1.0; // a single term already pushes the mean over the threshold
        double acc = double(total_ - log_s_.size()) * std::exp(-mx);
        for (double u : exponents_)
            acc += std::exp(u - mx);
        return mx + std::log(acc) - log_n_ - threshold;
    }

private:
    const PsiSpec& spec_;
    std::vector<double> log_s_;
    double log_n_;
    std::size_t total_;
    mutable std::vector<double> exponents_;
};

} // namespace

OrliczEstimate orlicz_norm(std::span<const double> samples, const PsiSpec& spec, double tolerance) {
    if (samples.empty())
        throw DataError("orlicz_norm needs at least one sample");
    if (!(tolerance > 0.0))
        throw ConfigError("orlicz_norm tolerance must be positive");
    double max_sample = 0.0;
    std::vector<double> log_s;
    log_s.reserve(samples.size());
    for (double s : samples) {
        if (s < 0.0 || std::isnan(s))
            throw DataError("orlicz_norm samples must be nonnegative norms, got " + std::to_string(s));
        if (!std::isfinite(s))
            throw NumericError("orlicz norm is infinite: sample is not finite");
        if (s > 0.0) {
            log_s.push_back(std::log(s));
            max_sample = std::max(max_sample, s);
        }
    }
    OrliczEstimate est;
    est.mc_samples = static_cast<long>(samples.size());
    est.tolerance = tolerance;
    if (log_s.empty()) {
        est.degenerate = true;
        return est;
    }

    const MeanPsi mean_psi(spec, std::move(log_s), samples.size());
    const double scale = max_sample / psi_inverse_one(spec);
    double lo = scale * 1e-6;
    double hi = scale * 1e6;
    const double ceiling = scale * std::ldexp(1.0, 60);
    while (mean_psi.excess(hi) > 0.0) {
        hi *= 2.0;
        if (hi > ceiling)
            throw NumericError("orlicz norm bracket exceeded 2^60: norm effectively infinite for this sample");
    }
    const double floor = scale * std::ldexp(1.0, -60);
    while (mean_psi.excess(lo) <= 0.0) {
        hi = lo;
        lo /= 2.0;
        if (lo < floor)
            throw NumericError("orlicz norm bracket fell below 2^-60 of the sample scale");
    }
    while (hi - lo > tolerance * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (mean_psi.excess(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    est.value = hi;
    est.lo = lo;
    est.hi = hi;
    return est;
}

double tail_bound(double norm, const PsiSpec& spec, double x) {
    if (!(norm > 0.0))
        throw DataError("tail_bound needs a positive norm");
    const double psi = psi_eval(spec, x / norm);
    if (!(psi > 1.0))
        return 1.0;
    return 1.0 / psi;
}

double norm_bound_from_tail(double K, double C, double p) {
    if (!(K > 0.0) || !(C > 0.0) || !(p >= 1.0))
        throw DataError("norm_bound_from_tail needs K > 0, C > 0, p >= 1");
    return std::pow((1.0 + K) / C, 1.0 / p);
}

ContractionResult conditional_contraction_check(std::span<const double> values, std::span<const int> groups,
                                                int group_count, const PsiSpec& spec, double tolerance) {
    if (values.size() != groups.size())
        throw DataError("values and group labels differ in length");
    if (group_count < 1)
        throw DataError("need at least one group");
    std::vector<double> sum(group_count, 0.0);
    std::vector<long> count(group_count, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int g = groups[i];
        if (g < 0 || g >= group_count)
            throw DataError("group label " + std::to_string(g) + " outside [0, " + std::to_string(group_count) + ")");
        sum[g] += values[i];
        ++count[g];
    }
    for (int g = 0; g < group_count; ++g) {
        if (count[g] == 0)
            throw DataError("empty group " + std::to_string(g));
        sum[g] /= double(count[g]);
    }
    std::vector<double> abs_x(values.size());
    std::vector<double> abs_cond(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        abs_x[i] = std::abs(values[i]);
        abs_cond[i] = std::abs(sum[groups[i]]);
    }
    return {orlicz_norm(abs_x, spec, tolerance).value, orlicz_norm(abs_cond, spec, tolerance).value};
}

} // namespace fnreg
