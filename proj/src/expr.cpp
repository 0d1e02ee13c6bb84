#include "nfl/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "nfl/util.hpp"

namespace nfl {

enum class Op : std::uint8_t { Num, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };

struct Expr::Node {
    Op op;
    double value = 0.0; // Num payload
    int lhs = -1;
    int rhs = -1;
};

struct ExprParser {
    const std::string& text;
    std::size_t pos = 0;
    std::vector<Expr::Node> nodes;

    explicit ExprParser(const std::string& t) : text(t) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw config_error("expression '" + text + "': " + what + " at offset " +
                           std::to_string(pos));
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    int add_node(Expr::Node n) {
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = add_node({Op::Add, 0.0, lhs, parse_term()});
            else if (eat('-'))
                lhs = add_node({Op::Sub, 0.0, lhs, parse_term()});
            else
                return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            if (eat('*'))
                lhs = add_node({Op::Mul, 0.0, lhs, parse_factor()});
            else if (eat('/'))
                lhs = add_node({Op::Div, 0.0, lhs, parse_factor()});
            else
                return lhs;
        }
    }

    int parse_factor() {
        if (eat('-')) return add_node({Op::Neg, 0.0, parse_factor(), -1});
        return parse_primary();
    }

    int parse_primary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of input");
        const char c = text[pos];
        if (c == '(') {
            ++pos;
            const int inner = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text.c_str() + pos;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos += static_cast<std::size_t>(end - begin);
            return add_node({Op::Num, v, -1, -1});
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
            const std::string word = text.substr(start, pos - start);
            if (word == "t") return add_node({Op::Var, 0.0, -1, -1});
            Op op;
            if (word == "sin")
                op = Op::Sin;
            else if (word == "cos")
                op = Op::Cos;
            else if (word == "exp")
                op = Op::Exp;
            else
                fail("unknown name '" + word + "'");
            if (!eat('(')) fail("expected '(' after '" + word + "'");
            const int inner = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return add_node({op, 0.0, inner, -1});
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

Expr Expr::parse(const std::string& text) {
    ExprParser p(text);
    const int root = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    Expr e;
    // Root last: nodes are evaluated in index order (children precede parents).
    if (root != static_cast<int>(p.nodes.size()) - 1) p.fail("internal parse error");
    e.nodes_ = std::make_shared<const std::vector<Node>>(std::move(p.nodes));
    e.text_ = text;
    return e;
}

Expr Expr::constant(double v) {
    Expr e;
    e.nodes_ = std::make_shared<const std::vector<Node>>(std::vector<Node>{{Op::Num, v, -1, -1}});
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    e.text_ = buf;
    return e;
}

double Expr::operator()(double t) const {
    const auto& nodes = *nodes_;
    // Stack-free evaluation: children always precede parents in the vector.
    std::vector<double> value(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Node& n = nodes[i];
        switch (n.op) {
            case Op::Num: value[i] = n.value; break;
            case Op::Var: value[i] = t; break;
            case Op::Add: value[i] = value[static_cast<std::size_t>(n.lhs)] + value[static_cast<std::size_t>(n.rhs)]; break;
            case Op::Sub: value[i] = value[static_cast<std::size_t>(n.lhs)] - value[static_cast<std::size_t>(n.rhs)]; break;
            case Op::Mul: value[i] = value[static_cast<std::size_t>(n.lhs)] * value[static_cast<std::size_t>(n.rhs)]; break;
            case Op::Div: value[i] = value[static_cast<std::size_t>(n.lhs)] / value[static_cast<std::size_t>(n.rhs)]; break;
            case Op::Neg: value[i] = -value[static_cast<std::size_t>(n.lhs)]; break;
            case Op::Sin: value[i] = std::sin(value[static_cast<std::size_t>(n.lhs)]); break;
            case Op::Cos: value[i] = std::cos(value[static_cast<std::size_t>(n.lhs)]); break;
            case Op::Exp: value[i] = std::exp(value[static_cast<std::size_t>(n.lhs)]); break;
        }
    }
    return value.back();
}

bool Expr::is_constant() const {
    for (const Node& n : *nodes_)
        if (n.op == Op::Var) return false;
    return true;
}

} // namespace nfl
