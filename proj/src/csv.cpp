#include "fnreg/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fnreg/errors.hpp"

namespace fnreg {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' '))
            c.pop_back();
        while (!c.empty() && c.front() == ' ')
            c.erase(c.begin());
    }
    return cells;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty())
        return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

} // namespace

CurveTable parse_curve_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(source + ": empty curve file");
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "t")
        throw DataError(source + ": header must start with 't' and name at least one curve");
    CurveTable table;
    table.ids.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " columns, got " + std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (!parse_number(cells[j], row[j]))
                throw DataError(source + ":" + std::to_string(lineno) + ": bad number '" + cells[j] + "'");
        if (!rows.empty() && !(row[0] > rows.back()[0]))
            throw DataError(source + ":" + std::to_string(lineno) + ": t values must be strictly increasing");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw DataError(source + ": no data rows");
    const auto n_rows = Eigen::Index(rows.size());
    const auto n_cols = Eigen::Index(table.ids.size());
    table.t.resize(n_rows);
    table.values.resize(n_rows, n_cols);
    for (Eigen::Index i = 0; i < n_rows; ++i) {
        table.t[i] = rows[i][0];
        for (Eigen::Index j = 0; j < n_cols; ++j)
            table.values(i, j) = rows[i][j + 1];
    }
    return table;
}

CurveTable read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open " + path);
    return parse_curve_csv(in, path);
}

void write_curve_csv(std::ostream& out, const CurveTable& table) {
    out << "t";
    for (const auto& id : table.ids)
        out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < table.t.size(); ++i) {
        out << format_double(table.t[i]);
        for (Eigen::Index j = 0; j < table.values.cols(); ++j)
            out << ',' << format_double(table.values(i, j));
        out << '\n';
    }
}

std::string curve_csv(const CurveTable& table) {
    std::ostringstream out;
    write_curve_csv(out, table);
    return out.str();
}

std::vector<double> read_sample_column(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open " + path);
    std::vector<double> values;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split(line);
        double v = 0.0;
        if (cells.empty() || !parse_number(cells[0], v)) {
            if (lineno == 1)
                continue; // header
            throw DataError(path + ":" + std::to_string(lineno) + ": bad number");
        }
        values.push_back(v);
    }
    if (values.empty())
        throw DataError(path + ": no samples");
    return values;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path);
    out << content;
    if (!out)
        throw DataError("write failed for " + path);
}

} // namespace fnreg
