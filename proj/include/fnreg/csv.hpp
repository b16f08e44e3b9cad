#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fnreg {

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Curve file: column `t` followed by one column per curve; header row holds
/// the curve identifiers. `values` has one row per t and one column per curve.
struct CurveTable {
    Eigen::VectorXd t;
    std::vector<std::string> ids;
    Eigen::MatrixXd values;
};

/// Throws DataError on malformed input or non-increasing t.
CurveTable read_curve_csv(const std::string& path);
CurveTable parse_curve_csv(std::istream& in, const std::string& source);
void write_curve_csv(std::ostream& out, const CurveTable& table);
std::string curve_csv(const CurveTable& table);

/// First column of a CSV as numbers; a non-numeric first row is treated as a header.
std::vector<double> read_sample_column(const std::string& path);

/// Writes `content` to `path`, throwing DataError on failure.
void write_text_file(const std::string& path, const std::string& content);

} // namespace fnreg
