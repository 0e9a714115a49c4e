#include "bsml/units.hpp"

#include <cmath>
#include <sstream>

#include "bsml/error.hpp"

namespace bsml {

using boost::multiprecision::cpp_int;

Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace((unsigned char)c)) s += c;
    if (s.empty()) throw UnitError("empty rational");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Rational n = parse_rational(s.substr(0, slash));
        Rational d = parse_rational(s.substr(slash + 1));
        if (d == 0) throw UnitError("zero denominator in '" + text + "'");
        return n / d;
    }
    bool neg = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
    cpp_int mant = 0;
    int exp10 = 0;
    bool digits = false, dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            mant = mant * 10 + (c - '0');
            digits = true;
            if (dot) --exp10;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!digits) throw UnitError("bad rational '" + text + "'");
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E') throw UnitError("bad rational '" + text + "'");
        try {
            std::size_t used = 0;
            int e = std::stoi(s.substr(i + 1), &used);
            if (used != s.size() - i - 1) throw UnitError("bad rational '" + text + "'");
            exp10 += e;
        } catch (const std::logic_error&) {
            throw UnitError("bad rational '" + text + "'");
        }
    }
    Rational r(mant);
    cpp_int p = boost::multiprecision::pow(cpp_int(10), unsigned(std::abs(exp10)));
    if (exp10 > 0) r *= Rational(p);
    if (exp10 < 0) r /= Rational(p);
    return neg ? Rational(-r) : r;
}

// Correctly rounded (to nearest, ties to even) conversion.
double to_double(const Rational& r) {
    if (r == 0) return 0.0;
    bool neg = r < 0;
    cpp_int n = boost::multiprecision::numerator(r);
    cpp_int d = boost::multiprecision::denominator(r);
    if (neg) n = -n;
    long s = 55 - (long(boost::multiprecision::msb(n)) - long(boost::multiprecision::msb(d)));
    cpp_int q, rem;
    for (;;) {
        cpp_int num = n, den = d;
        if (s > 0) num <<= unsigned(s);
        else den <<= unsigned(-s);
        boost::multiprecision::divide_qr(num, den, q, rem);
        if (q >= (cpp_int(1) << 56)) {
            --s;
            continue;
        }
        if (q < (cpp_int(1) << 55)) {
            ++s;
            continue;
        }
        break;
    }
    // q has 56 bits; keep 53
    cpp_int low = q & 7;
    cpp_int mant = q >> 3;
    bool sticky = rem != 0;
    bool round_up = low > 4 || (low == 4 && (sticky || (mant & 1) != 0));
    if (round_up) mant += 1;
    double m = mant.convert_to<double>();   // exact: at most 54 bits, power of two if carried
    double v = std::ldexp(m, int(3 - s));
    return neg ? -v : v;
}

double UnitConversion::a_double() const { return to_double(a); }
double UnitConversion::b_double() const { return to_double(b); }

double UnitConversion::apply(double x) const {
    double y;
    if (a == 1) y = x;
    else if (a >= 1 || a <= -1) y = x * to_double(a);
    else y = x / to_double(Rational(1) / a);
    if (b != 0) y += to_double(b);
    return y;
}

namespace {

UnitExpr linear(Dimension d, Rational s) {
    UnitExpr u;
    u.dim = d;
    u.scale = s;
    return u;
}

UnitExpr decibel(Dimension ref, Rational offset) {
    UnitExpr u;
    u.kind = UnitExpr::Decibel;
    u.dim = ref;
    u.scale = 1;
    u.offset_db = offset;
    return u;
}

constexpr Dimension M{1, 0, 0, 0}, S{0, 1, 0, 0}, G{0, 0, 1, 0}, W{0, 0, 0, 1}, ONE{0, 0, 0, 0};

}  // namespace

UnitTable::UnitTable() {
    atoms_["1"] = linear(ONE, 1);
    atoms_["rad"] = linear(ONE, 1);
    atoms_["Hz"] = linear(Dimension{0, -1, 0, 0}, 1);
    atoms_["kHz"] = linear(Dimension{0, -1, 0, 0}, 1000);
    atoms_["MHz"] = linear(Dimension{0, -1, 0, 0}, 1000000);
    atoms_["GHz"] = linear(Dimension{0, -1, 0, 0}, 1000000000);
    atoms_["m"] = linear(M, 1);
    atoms_["mm"] = linear(M, Rational(1, 1000));
    atoms_["cm"] = linear(M, Rational(1, 100));
    atoms_["km"] = linear(M, 1000);
    atoms_["in"] = linear(M, Rational(254, 10000));
    atoms_["s"] = linear(S, 1);
    atoms_["ms"] = linear(S, Rational(1, 1000));
    atoms_["us"] = linear(S, Rational(1, 1000000));
    atoms_["ns"] = linear(S, Rational(1, 1000000000));
    atoms_["g"] = linear(G, 1);
    atoms_["kg"] = linear(G, 1000);
    atoms_["lb"] = linear(G, Rational(45359237, 100000));
    atoms_["W"] = linear(W, 1);
    atoms_["mW"] = linear(W, Rational(1, 1000));
    atoms_["dB"] = decibel(ONE, 0);
    atoms_["dBW"] = decibel(W, 0);
    atoms_["dBm"] = decibel(W, -30);
}

UnitExpr UnitTable::parse(const std::string& text) const {
    std::size_t i = 0;
    auto skip = [&] {
        while (i < text.size() && std::isspace((unsigned char)text[i])) ++i;
    };
    UnitExpr acc = linear(ONE, 1);
    bool any = false, has_db = false;
    int terms = 0;
    char op = '*';
    for (;;) {
        skip();
        std::string atom;
        while (i < text.size() && (std::isalnum((unsigned char)text[i]) || text[i] == '_')) atom += text[i++];
        if (atom.empty()) throw UnitError("expected unit atom in '" + text + "'");
        auto it = atoms_.find(atom);
        if (it == atoms_.end()) throw UnitError("unknown unit atom '" + atom + "'");
        skip();
        int e = 1;
        if (i < text.size() && text[i] == '^') {
            ++i;
            skip();
            std::string num;
            if (i < text.size() && (text[i] == '-' || text[i] == '+')) num += text[i++];
            while (i < text.size() && std::isdigit((unsigned char)text[i])) num += text[i++];
            if (num.empty() || num == "-" || num == "+") throw UnitError("bad exponent in '" + text + "'");
            e = std::stoi(num);
        }
        if (op == '/') e = -e;
        const UnitExpr& a = it->second;
        ++terms;
        if (a.kind == UnitExpr::Decibel) {
            if (e != 1) throw UnitError("decibel unit '" + atom + "' cannot be raised or divided");
            has_db = true;
            acc = a;
        } else if (atom != "1" || terms == 1) {
            for (int k = 0; k < 4; ++k) acc.dim[std::size_t(k)] += a.dim[std::size_t(k)] * e;
            Rational f = 1;
            for (int k = 0; k < std::abs(e); ++k) f *= a.scale;
            if (e < 0) acc.scale /= f;
            else acc.scale *= f;
        }
        any = true;
        skip();
        if (i >= text.size()) break;
        op = text[i];
        if (op != '*' && op != '/') throw UnitError("unexpected '" + std::string(1, op) + "' in '" + text + "'");
        ++i;
    }
    if (!any) throw UnitError("empty unit expression");
    if (has_db && terms > 1) throw UnitError("decibel units cannot be combined with other atoms: '" + text + "'");
    return acc;
}

void UnitTable::load(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string name, eq, rat;
        if (!(ls >> name)) continue;
        if (!(ls >> eq) || eq != "=" || !(ls >> rat))
            throw UnitError("unit table line " + std::to_string(ln) + ": expected 'name = <rational> <units>'");
        std::string rest;
        std::getline(ls, rest);
        UnitExpr base = parse(rest);
        if (base.kind != UnitExpr::Linear) throw UnitError("unit table line " + std::to_string(ln) + ": decibel base");
        Rational f = parse_rational(rat);
        if (f <= 0) throw UnitError("unit table line " + std::to_string(ln) + ": scale must be positive");
        base.scale *= f;
        atoms_[name] = base;
    }
}

const UnitTable& builtin_units() {
    static const UnitTable t;
    return t;
}

UnitExpr parse_units(const std::string& text) { return builtin_units().parse(text); }

UnitExpr canonical(const UnitExpr& u) {
    UnitExpr c = u;
    if (c.kind == UnitExpr::Linear) c.offset_db = 0;
    return c;
}

bool compatible(const UnitExpr& a, const UnitExpr& r) { return a.kind == r.kind && a.dim == r.dim; }

std::string describe(const UnitExpr& u) {
    static const char* names[4] = {"m", "s", "g", "W"};
    std::ostringstream o;
    if (u.kind == UnitExpr::Decibel) o << "dB(";
    o << u.scale;
    for (int k = 0; k < 4; ++k)
        if (u.dim[std::size_t(k)] != 0) o << "*" << names[k] << "^" << u.dim[std::size_t(k)];
    if (u.kind == UnitExpr::Decibel) o << ")" << (u.offset_db >= 0 ? "+" : "") << u.offset_db;
    return o.str();
}

UnitConversion conversion(const UnitExpr& a, const UnitExpr& r) {
    if (!compatible(a, r)) throw UnitError("incompatible units " + describe(a) + " and " + describe(r));
    UnitConversion c;
    if (a.kind == UnitExpr::Linear) {
        c.a = a.scale / r.scale;
        c.b = 0;
    } else {
        c.a = 1;
        c.b = a.offset_db - r.offset_db;
    }
    return c;
}

}  // namespace bsml
