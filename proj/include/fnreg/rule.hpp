#pragma once

#include <memory>
#include <string>

namespace fnreg {

/// Arithmetic rule in one variable `n`, e.g. "ceil(n^(2/3))" or "0.8*n^-0.2".
/// Supports + - * / ^ (right-associative), unary minus, parentheses, and the
/// functions ceil, floor, round, log, exp, sqrt, abs, min, max.
class Rule {
public:
    explicit Rule(std::string text);
    ~Rule();
    Rule(const Rule&);
    Rule& operator=(const Rule&);
    Rule(Rule&&) noexcept;
    Rule& operator=(Rule&&) noexcept;

    double operator()(double n) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

} // namespace fnreg
