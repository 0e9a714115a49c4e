#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace bsml {

using Rational = boost::multiprecision::cpp_rational;

// Exponents over the base atoms m, s, g, W.
using Dimension = std::array<int, 4>;

struct UnitExpr {
    enum Kind { Linear, Decibel };
    Kind kind = Linear;
    Dimension dim{};
    Rational scale{1};         // Linear: value in base units per unit; Decibel: reference scale
    Rational offset_db{0};     // Decibel only

    bool operator==(const UnitExpr&) const = default;
};

struct UnitConversion {
    Rational a{1}, b{0};   // y = a*x + b
    double apply(double x) const;
    double a_double() const;
    double b_double() const;
    bool identity() const { return a == 1 && b == 0; }
};

class UnitTable {
public:
    UnitTable();   // built-in atoms
    // Adds lines of the form `name = <rational> <base-atom-product>`.
    void load(const std::string& text);
    UnitExpr parse(const std::string& text) const;
    bool has(const std::string& atom) const { return atoms_.count(atom) != 0; }

private:
    std::map<std::string, UnitExpr> atoms_;
};

const UnitTable& builtin_units();

UnitExpr parse_units(const std::string& text);
UnitExpr canonical(const UnitExpr& u);
bool compatible(const UnitExpr& a, const UnitExpr& r);
// Raises UnitError when the units are incompatible.
UnitConversion conversion(const UnitExpr& a, const UnitExpr& r);

Rational parse_rational(const std::string& text);
double to_double(const Rational& r);
std::string describe(const UnitExpr& u);

}  // namespace bsml
