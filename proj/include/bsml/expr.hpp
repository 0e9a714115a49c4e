#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bsml {

// Arithmetic over doubles: + - * / ^, unary minus, parentheses, the usual
// math functions and the constant pi.
struct Expr {
    enum Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
    Kind kind = Num;
    double value = 0;
    std::string name;   // Var / Call
    std::vector<std::shared_ptr<const Expr>> args;

    static std::shared_ptr<const Expr> parse(const std::string& text);
    double eval(const std::function<std::optional<double>(const std::string&)>& lookup) const;
    void vars(std::set<std::string>& out) const;
};

struct Assignment {
    std::string target;
    std::shared_ptr<const Expr> expr;
    std::string source;
};

// `name = expr` statements separated by ';' or newlines.
std::vector<Assignment> parse_assignments(const std::string& text);

// Shortest text that reads back to the same double.
std::string format_double(double d);

}  // namespace bsml
