#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fnreg/errors.hpp"

namespace fnreg {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // root mean square of the fit residuals
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit ols_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DataError("ols_line: length mismatch");
    if (x.size() < 2)
        throw DataError("ols_line needs at least 2 points");
    const double n = double(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw DataError("ols_line: degenerate design (all x equal)");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

/// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty())
        throw DataError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * double(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) {
    return quantile(std::move(values), 0.5);
}

} // namespace fnreg
