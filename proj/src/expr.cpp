#include "bsml/expr.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

#include "bsml/error.hpp"

namespace bsml {

namespace {

struct FnInfo {
    int min_args, max_args;
};

const std::map<std::string, FnInfo>& functions() {
    static const std::map<std::string, FnInfo> f = {
        {"sqrt", {1, 1}}, {"abs", {1, 1}},   {"sin", {1, 1}},   {"cos", {1, 1}}, {"tan", {1, 1}},
        {"atan", {1, 1}}, {"atan2", {2, 2}}, {"acos", {1, 1}},  {"asin", {1, 1}}, {"exp", {1, 1}},
        {"log", {1, 1}},  {"log10", {1, 1}}, {"pow", {2, 2}},   {"min", {2, 64}}, {"max", {2, 64}},
    };
    return f;
}

using P = std::shared_ptr<const Expr>;

class ExprParser {
public:
    explicit ExprParser(const std::string& s) : s_(s) {}

    P parse_all() {
        P e = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& m) {
        throw ExprError("expression '" + s_ + "': " + m + " at offset " + std::to_string(i_));
    }
    void skip() {
        while (i_ < s_.size() && std::isspace((unsigned char)s_[i_])) ++i_;
    }
    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }
    static P node(Expr::Kind k, std::vector<P> args, std::string name = {}, double v = 0) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->args = std::move(args);
        e->name = std::move(name);
        e->value = v;
        return e;
    }
    P expr() {
        P l = term();
        for (;;) {
            if (eat('+')) l = node(Expr::Add, {l, term()});
            else if (eat('-')) l = node(Expr::Sub, {l, term()});
            else return l;
        }
    }
    P term() {
        P l = unary();
        for (;;) {
            if (eat('*')) l = node(Expr::Mul, {l, unary()});
            else if (eat('/')) l = node(Expr::Div, {l, unary()});
            else return l;
        }
    }
    P unary() {
        if (eat('-')) return node(Expr::Neg, {unary()});
        if (eat('+')) return unary();
        return power();
    }
    P power() {
        P b = primary();
        if (eat('^')) return node(Expr::Pow, {b, unary()});
        return b;
    }
    P primary() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end");
        char c = s_[i_];
        if (eat('(')) {
            P e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit((unsigned char)c) || c == '.') {
            std::size_t j = i_;
            while (j < s_.size() && (std::isdigit((unsigned char)s_[j]) || s_[j] == '.')) ++j;
            if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
                if (k < s_.size() && std::isdigit((unsigned char)s_[k])) {
                    j = k;
                    while (j < s_.size() && std::isdigit((unsigned char)s_[j])) ++j;
                }
            }
            double v;
            auto r = std::from_chars(s_.data() + i_, s_.data() + j, v);
            if (r.ec != std::errc() || r.ptr != s_.data() + j) fail("bad number");
            i_ = j;
            return node(Expr::Num, {}, {}, v);
        }
        if (std::isalpha((unsigned char)c) || c == '_') {
            std::string name;
            while (i_ < s_.size() && (std::isalnum((unsigned char)s_[i_]) || s_[i_] == '_')) name += s_[i_++];
            if (eat('(')) {
                auto it = functions().find(name);
                if (it == functions().end()) fail("unknown function " + name);
                std::vector<P> args;
                if (!eat(')')) {
                    do args.push_back(expr());
                    while (eat(','));
                    if (!eat(')')) fail("expected ')'");
                }
                if (int(args.size()) < it->second.min_args || int(args.size()) > it->second.max_args)
                    fail("wrong number of arguments to " + name);
                return node(Expr::Call, std::move(args), name);
            }
            if (name == "pi") return node(Expr::Num, {}, {}, std::numbers::pi);
            return node(Expr::Var, {}, name);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t i_ = 0;
};

}  // namespace

std::shared_ptr<const Expr> Expr::parse(const std::string& text) { return ExprParser(text).parse_all(); }

double Expr::eval(const std::function<std::optional<double>(const std::string&)>& lookup) const {
    auto a = [&](std::size_t k) { return args[k]->eval(lookup); };
    switch (kind) {
        case Num: return value;
        case Var: {
            auto v = lookup(name);
            if (!v) throw ExprError("unbound name '" + name + "' in expression");
            return *v;
        }
        case Neg: return -a(0);
        case Add: return a(0) + a(1);
        case Sub: return a(0) - a(1);
        case Mul: return a(0) * a(1);
        case Div: return a(0) / a(1);
        case Pow: return std::pow(a(0), a(1));
        case Call: {
            if (name == "sqrt") return std::sqrt(a(0));
            if (name == "abs") return std::fabs(a(0));
            if (name == "sin") return std::sin(a(0));
            if (name == "cos") return std::cos(a(0));
            if (name == "tan") return std::tan(a(0));
            if (name == "atan") return std::atan(a(0));
            if (name == "atan2") return std::atan2(a(0), a(1));
            if (name == "acos") return std::acos(a(0));
            if (name == "asin") return std::asin(a(0));
            if (name == "exp") return std::exp(a(0));
            if (name == "log") return std::log(a(0));
            if (name == "log10") return std::log10(a(0));
            if (name == "pow") return std::pow(a(0), a(1));
            if (name == "min" || name == "max") {
                double r = a(0);
                for (std::size_t k = 1; k < args.size(); ++k) r = name == "min" ? std::fmin(r, a(k)) : std::fmax(r, a(k));
                return r;
            }
            throw ExprError("unknown function " + name);
        }
    }
    return 0;
}

void Expr::vars(std::set<std::string>& out) const {
    if (kind == Var) out.insert(name);
    for (auto& a : args) a->vars(out);
}

std::vector<Assignment> parse_assignments(const std::string& text) {
    std::vector<Assignment> out;
    std::string cur;
    auto flush = [&] {
        std::size_t a = 0, b = cur.size();
        while (a < b && std::isspace((unsigned char)cur[a])) ++a;
        while (b > a && std::isspace((unsigned char)cur[b - 1])) --b;
        std::string st = cur.substr(a, b - a);
        cur.clear();
        if (st.empty()) return;
        auto eq = st.find('=');
        if (eq == std::string::npos) throw ExprError("expected 'name = expression' in '" + st + "'");
        Assignment as;
        as.target = st.substr(0, eq);
        while (!as.target.empty() && std::isspace((unsigned char)as.target.back())) as.target.pop_back();
        if (as.target.empty()) throw ExprError("missing assignment target in '" + st + "'");
        if (!std::isalpha((unsigned char)as.target[0]) && as.target[0] != '_')
            throw ExprError("bad assignment target '" + as.target + "'");
        for (char c : as.target)
            if (!std::isalnum((unsigned char)c) && c != '_') throw ExprError("bad assignment target '" + as.target + "'");
        as.source = st.substr(eq + 1);
        as.expr = Expr::parse(as.source);
        out.push_back(std::move(as));
    };
    for (char c : text) {
        if (c == ';' || c == '\n') flush();
        else cur += c;
    }
    flush();
    return out;
}

std::string format_double(double d) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, r.ptr);
}

}  // namespace bsml
