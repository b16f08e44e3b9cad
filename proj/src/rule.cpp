#include "fnreg/rule.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "fnreg/errors.hpp"

namespace fnreg {

struct Rule::Node {
    enum class Op { number, variable, neg, add, sub, mul, div, pow, call };
    Op op = Op::number;
    double value = 0.0;
    std::string fn;
    std::vector<std::shared_ptr<const Node>> args;

    double eval(double n) const {
        switch (op) {
        case Op::number:
            return value;
        case Op::variable:
            return n;
        case Op::neg:
            return -args[0]->eval(n);
        case Op::add:
            return args[0]->eval(n) + args[1]->eval(n);
        case Op::sub:
            return args[0]->eval(n) - args[1]->eval(n);
        case Op::mul:
            return args[0]->eval(n) * args[1]->eval(n);
        case Op::div:
            return args[0]->eval(n) / args[1]->eval(n);
        case Op::pow:
            return std::pow(args[0]->eval(n), args[1]->eval(n));
        case Op::call:
            return call(n);
        }
        return 0.0;
    }

    double call(double n) const {
        const double a = args[0]->eval(n);
        if (fn == "ceil")
            return std::ceil(a);
        if (fn == "floor")
            return std::floor(a);
        if (fn == "round")
            return std::round(a);
        if (fn == "log")
            return std::log(a);
        if (fn == "exp")
            return std::exp(a);
        if (fn == "sqrt")
            return std::sqrt(a);
        if (fn == "abs")
            return std::abs(a);
        if (fn == "min")
            return std::min(a, args[1]->eval(n));
        return std::max(a, args[1]->eval(n));
    }
};

namespace {

using NodePtr = std::shared_ptr<const Rule::Node>;

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size())
            fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("rule \"" + s_ + "\": " + what + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr make(Rule::Node::Op op, std::vector<NodePtr> args) {
        auto n = std::make_shared<Rule::Node>();
        n->op = op;
        n->args = std::move(args);
        return n;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make(Rule::Node::Op::add, {lhs, term()});
            else if (accept('-'))
                lhs = make(Rule::Node::Op::sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make(Rule::Node::Op::mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make(Rule::Node::Op::div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-'))
            return make(Rule::Node::Op::neg, {unary()});
        if (accept('+'))
            return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^'))
            return make(Rule::Node::Op::pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size())
            fail("unexpected end");
        if (accept('(')) {
            NodePtr e = expr();
            if (!accept(')'))
                fail("missing ')'");
            return e;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin)
                fail("bad number");
            pos_ += std::size_t(end - begin);
            auto n = std::make_shared<Rule::Node>();
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "n") {
                auto n = std::make_shared<Rule::Node>();
                n->op = Rule::Node::Op::variable;
                return n;
            }
            static const std::vector<std::string> unary_fns{"ceil", "floor", "round", "log", "exp", "sqrt", "abs"};
            const bool binary = name == "min" || name == "max";
            bool known = binary;
            for (const auto& f : unary_fns)
                known = known || f == name;
            if (!known)
                fail("unknown identifier '" + name + "'");
            if (!accept('('))
                fail("expected '(' after " + name);
            std::vector<NodePtr> args{expr()};
            if (binary) {
                if (!accept(','))
                    fail(name + " takes two arguments");
                args.push_back(expr());
            }
            if (!accept(')'))
                fail("missing ')'");
            auto n = std::make_shared<Rule::Node>();
            n->op = Rule::Node::Op::call;
            n->fn = name;
            n->args = std::move(args);
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

Rule::Rule(std::string text) : text_(std::move(text)), root_(Parser(text_).parse()) {}
Rule::~Rule() = default;
Rule::Rule(const Rule&) = default;
Rule& Rule::operator=(const Rule&) = default;
Rule::Rule(Rule&&) noexcept = default;
Rule& Rule::operator=(Rule&&) noexcept = default;

double Rule::operator()(double n) const {
    return root_->eval(n);
}

} // namespace fnreg
