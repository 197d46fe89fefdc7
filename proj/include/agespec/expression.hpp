#pragma once

// Closed-form rate expressions in the variables a (age) and x (position).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | a | x | func '(' expr (',' expr)* ')' | '(' expr ')'
//   func    := exp | sqrt | abs | min | max
//
// min and max take two or more arguments; the others take exactly one.

#include <agespec/error.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

namespace agespec {

class Expression {
public:
    Expression() : Expression("0") {}

    explicit Expression(std::string text) : text_(std::move(text)) {
        Parser p{text_, 0, nodes_};
        root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text_.size()) {
            p.error("unexpected trailing input");
        }
        for (const auto& n : nodes_) {
            if (n.op == Op::var_a) uses_a_ = true;
            if (n.op == Op::var_x) uses_x_ = true;
        }
    }

    double operator()(double a, double x) const { return eval(root_, a, x); }

    const std::string& text() const noexcept { return text_; }
    bool depends_on_age() const noexcept { return uses_a_; }
    bool depends_on_position() const noexcept { return uses_x_; }

private:
    enum class Op { constant, var_a, var_x, add, sub, mul, div, pow, neg, exp, sqrt, abs, min, max };

    struct Node {
        Op op;
        double value = 0.0;
        std::vector<int> args;
    };

    struct Parser {
        const std::string& s;
        std::size_t pos;
        std::vector<Node>& nodes;

        [[noreturn]] void error(const std::string& what) const {
            fail(ErrorKind::config, "expression_syntax",
                 "expression '" + s + "': " + what + " at offset " + std::to_string(pos));
        }

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }

        bool accept(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        int add(Op op, std::vector<int> args = {}, double value = 0.0) {
            nodes.push_back(Node{op, value, std::move(args)});
            return static_cast<int>(nodes.size()) - 1;
        }

        int parse_expr() {
            int lhs = parse_term();
            for (;;) {
                if (accept('+')) lhs = add(Op::add, {lhs, parse_term()});
                else if (accept('-')) lhs = add(Op::sub, {lhs, parse_term()});
                else return lhs;
            }
        }

        int parse_term() {
            int lhs = parse_unary();
            for (;;) {
                if (accept('*')) lhs = add(Op::mul, {lhs, parse_unary()});
                else if (accept('/')) lhs = add(Op::div, {lhs, parse_unary()});
                else return lhs;
            }
        }

        int parse_unary() {
            if (accept('-')) return add(Op::neg, {parse_unary()});
            if (accept('+')) return parse_unary();
            return parse_power();
        }

        int parse_power() {
            int base = parse_primary();
            if (accept('^')) return add(Op::pow, {base, parse_unary()});
            return base;
        }

        int parse_primary() {
            skip_ws();
            if (pos >= s.size()) error("unexpected end of input");
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* begin = s.c_str() + pos;
                char* end = nullptr;
                double v = std::strtod(begin, &end);
                if (end == begin) error("bad number");
                pos += static_cast<std::size_t>(end - begin);
                return add(Op::constant, {}, v);
            }
            if (c == '(') {
                ++pos;
                int inner = parse_expr();
                if (!accept(')')) error("expected ')'");
                return inner;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t start = pos;
                while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
                std::string name = s.substr(start, pos - start);
                if (name == "a") return add(Op::var_a);
                if (name == "x") return add(Op::var_x);
                Op op;
                std::size_t min_args = 1, max_args = 1;
                if (name == "exp") op = Op::exp;
                else if (name == "sqrt") op = Op::sqrt;
                else if (name == "abs") op = Op::abs;
                else if (name == "min") { op = Op::min; min_args = 2; max_args = 64; }
                else if (name == "max") { op = Op::max; min_args = 2; max_args = 64; }
                else { pos = start; error("unknown identifier '" + name + "'"); }
                if (!accept('(')) error("expected '(' after " + name);
                std::vector<int> args{parse_expr()};
                while (accept(',')) args.push_back(parse_expr());
                if (!accept(')')) error("expected ')' closing " + name);
                if (args.size() < min_args || args.size() > max_args) {
                    error("wrong argument count for " + name);
                }
                return add(op, std::move(args));
            }
            error(std::string("unexpected character '") + c + "'");
        }
    };

    double eval(int idx, double a, double x) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        auto arg = [&](std::size_t k) { return eval(n.args[k], a, x); };
        switch (n.op) {
            case Op::constant: return n.value;
            case Op::var_a: return a;
            case Op::var_x: return x;
            case Op::add: return arg(0) + arg(1);
            case Op::sub: return arg(0) - arg(1);
            case Op::mul: return arg(0) * arg(1);
            case Op::div: return arg(0) / arg(1);
            case Op::pow: return std::pow(arg(0), arg(1));
            case Op::neg: return -arg(0);
            case Op::exp: return std::exp(arg(0));
            case Op::sqrt: return std::sqrt(arg(0));
            case Op::abs: return std::fabs(arg(0));
            case Op::min: {
                double v = arg(0);
                for (std::size_t k = 1; k < n.args.size(); ++k) v = std::min(v, arg(k));
                return v;
            }
            case Op::max: {
                double v = arg(0);
                for (std::size_t k = 1; k < n.args.size(); ++k) v = std::max(v, arg(k));
                return v;
            }
        }
        return 0.0;
    }

    std::string text_;
    std::vector<Node> nodes_;
    int root_ = 0;
    bool uses_a_ = false;
    bool uses_x_ = false;
};

}  // namespace agespec
