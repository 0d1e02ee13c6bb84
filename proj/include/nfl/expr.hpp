#pragma once

#include <memory>
#include <string>
#include <vector>

namespace nfl {

// Closed-form functions of t from a deliberately small grammar:
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := '-' factor | number | 't' | (sin|cos|exp) '(' expr ')' | '(' expr ')'
// Everything is smooth, so fixed-order Gauss-Legendre panels integrate
// these to near machine precision.
class Expr {
public:
    static Expr parse(const std::string& text);
    static Expr constant(double v);

    double operator()(double t) const;

    // True when no 't' occurs anywhere in the expression.
    bool is_constant() const;

    const std::string& text() const { return text_; }

private:
    struct Node;
    Expr() = default;
    std::shared_ptr<const std::vector<Node>> nodes_;
    std::string text_;
    friend struct ExprParser;
};

} // namespace nfl
