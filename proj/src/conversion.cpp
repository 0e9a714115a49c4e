#include "bsml/conversion.hpp"

#include <algorithm>
#include <sstream>

#include "bsml/binding.hpp"
#include "bsml/error.hpp"
#include "bsml/grammar.hpp"

namespace bsml {

// ---------------------------------------------------------------- filters

std::vector<ConversionFilter> parse_filters(const std::string& xml_text, const SchemaSet& types) {
    XmlNode root = parse_xml(xml_text);
    if (root.name != "filters") throw SchemaError("filter library root must be <filters>");
    std::vector<ConversionFilter> out;
    for (auto& fn : root.children) {
        if (fn.name != "filter") throw SchemaError("unexpected <" + fn.name + "> in filter library");
        ConversionFilter f;
        if (auto* n = fn.attr("name")) f.name = *n;
        else f.name = "filter" + std::to_string(out.size() + 1);
        std::set<std::string> in_names;
        for (auto& p : fn.children) {
            if (p.name != "in" && p.name != "out") throw SchemaError("unexpected <" + p.name + "> in filter " + f.name);
            ConversionFilter::Port port;
            auto* nm = p.attr("name");
            if (!nm) throw SchemaError("filter port without name in " + f.name);
            port.name = *nm;
            port.type_ref = p.attr("type") ? *p.attr("type") : "double";
            FacetText ft;
            if (auto* u = p.attr("units")) ft.units = *u;
            port.type = derive_type(types, port.type_ref, ft, "filter " + f.name);
            if (port.type.base != Base::Double)
                throw SchemaError("filter " + f.name + ": port '" + port.name + "' is not double-based");
            if (p.name == "in") {
                if (!in_names.insert(port.name).second)
                    throw SchemaError("filter " + f.name + ": duplicate input '" + port.name + "'");
                f.inputs.push_back(std::move(port));
            } else {
                port.expr_text = p.text;
                while (!port.expr_text.empty() && std::isspace((unsigned char)port.expr_text.back())) port.expr_text.pop_back();
                port.expr_text.erase(0, port.expr_text.find_first_not_of(" \t\r\n"));
                port.expr = Expr::parse(port.expr_text);
                std::set<std::string> vars;
                port.expr->vars(vars);
                for (auto& v : vars)
                    if (!in_names.count(v))
                        throw SchemaError("filter " + f.name + ": output '" + port.name + "' reads undeclared '" + v + "'");
                f.outputs.push_back(std::move(port));
            }
        }
        if (f.inputs.empty() || f.outputs.empty()) throw SchemaError("filter " + f.name + " needs inputs and outputs");
        out.push_back(std::move(f));
    }
    return out;
}

CompiledFilter compile_filter(const ConversionFilter& f) {
    CompiledFilter c;
    c.filter = f;
    for (auto& o : f.outputs) c.code_text += (c.code_text.empty() ? "" : "; ") + o.name + " = " + o.expr_text;
    return c;
}

std::vector<double> CompiledFilter::run(const std::vector<double>& in) const {
    if (in.size() != filter.inputs.size()) throw Error("filter " + filter.name + " expects " +
                                                       std::to_string(filter.inputs.size()) + " inputs");
    auto lookup = [&](const std::string& n) -> std::optional<double> {
        for (std::size_t i = 0; i < in.size(); ++i)
            if (filter.inputs[i].name == n) return in[i];
        return std::nullopt;
    };
    std::vector<double> out;
    for (auto& o : filter.outputs) out.push_back(o.expr->eval(lookup));
    return out;
}

// ---------------------------------------------------------------- proof tree

void ProofNode::rules(std::set<std::string>& out) const {
    out.insert(rule);
    for (auto& k : kids) k.rules(out);
}

std::set<std::string> DeterminesProof::rules() const {
    std::set<std::string> s;
    root.rules(s);
    return s;
}

std::string ProofNode::dump(int indent) const {
    std::string s(std::size_t(indent) * 2, ' ');
    s += rule;
    if (a || r) s += " [" + (a ? block_label(*a) : std::string("-")) + " >= " + (r ? block_label(*r) : std::string("-")) + "]";
    if (rule == "F") s += " " + ref_a + " >= " + ref_r + (assumed ? " (assumed)" : "");
    if (conv) s += " y = " + format_double(conv->a_double()) + "*x + " + format_double(conv->b_double());
    s += "\n";
    for (auto& k : kids) s += k.dump(indent + 1);
    return s;
}

namespace {

enum Cls { Neutral, Gen, Restr };

struct State {
    int last = Neutral;
    int run = 0;
};

bool is_code(const Block* b) { return b->kind == Block::Kind::Code; }

std::optional<double> num(const std::optional<std::string>& s) {
    if (!s) return std::nullopt;
    try {
        return std::stod(*s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

class Prover {
public:
    Prover(const SchemaSet& a, const SchemaSet& r, int k, const std::vector<ConversionFilter>& filters,
           const UnitTable& units, std::deque<Block>& owned)
        : A_(a), R_(r), k_(k), filters_(filters), units_(units), owned_(owned) {}

    std::vector<std::pair<std::string, std::string>> fstack;
    std::string unmatched;

    std::optional<State> step(State st, Cls c) const {
        if (c == Neutral) return State{};
        int other = c == Gen ? Restr : Gen;
        if (st.last == other) return std::nullopt;
        int run = st.last == c ? st.run + 1 : 1;
        if (run > k_) return std::nullopt;
        return State{c, run};
    }

    // Operand list of a block: pseudo elements for attributes, then non-code children.
    std::pair<std::vector<const Block*>, int> actual_kids(const Block* b) {
        auto it = akids_.find(b);
        if (it != akids_.end()) return it->second;
        std::vector<const Block*> v;
        int n = 0;
        if (b->kind == Block::Kind::Element)
            for (auto& at : b->attrs) {
                // defaults are injected, so the value is always there
                owned_.push_back(Block::primitive(at.name, at.type, at.type_ref));
                v.push_back(&owned_.back());
                ++n;
            }
        if (!(b->kind == Block::Kind::Element && b->content == Block::Content::Wildcard))
            for (auto& c : b->children)
                if (!is_code(&c)) v.push_back(&c);
        return akids_[b] = {v, n};
    }

    std::vector<const Block*> required_kids(const Block* b) {
        auto it = rkids_.find(b);
        if (it != rkids_.end()) return it->second;
        std::vector<const Block*> v;
        if (b->kind == Block::Kind::Element)
            for (auto& at : b->attrs) {
                Block p = Block::primitive(at.name, at.type, at.type_ref);
                p.optional = at.default_value.has_value();
                p.default_value = at.default_value;
                owned_.push_back(std::move(p));
                v.push_back(&owned_.back());
            }
        if (!(b->kind == Block::Kind::Element && b->content == Block::Content::Wildcard))
            for (auto& c : b->children) v.push_back(&c);
        return rkids_[b] = v;
    }

    const Block* deref(const SchemaSet& s, const std::string& id) const {
        const Block* t = s.resolve(id);
        if (!t) throw SchemaError("unresolved ref '" + id + "'");
        return t;
    }

    bool eff_opt(const Block* b, const SchemaSet& s, int guard = 0) const {
        if (b->optional) return true;
        if (b->kind == Block::Kind::Repetition && b->min == 0) return true;
        if (b->kind == Block::Kind::Ref && guard < 32) return eff_opt(deref(s, b->ref), s, guard + 1);
        return false;
    }

    bool opt_ok(const Block* a, const Block* r) const { return !eff_opt(a, A_) || eff_opt(r, R_); }

    std::optional<ProofNode> det(const Block* a, const Block* r, State st) {
        if (++depth_ > 400) {
            --depth_;
            return std::nullopt;
        }
        struct Guard {
            int& d;
            ~Guard() { --d; }
        } guard{depth_};

        if (a->kind == Block::Kind::Ref && r->kind == Block::Kind::Ref) {
            ProofNode n;
            n.rule = "F";
            n.a = a;
            n.r = r;
            n.ref_a = a->ref;
            n.ref_r = r->ref;
            std::pair<std::string, std::string> key{a->ref, r->ref};
            if (std::find(fstack.begin(), fstack.end(), key) != fstack.end()) {
                n.assumed = true;
                return n;
            }
            if (!opt_ok(a, r)) return std::nullopt;
            fstack.push_back(key);
            auto sub = det(deref(A_, a->ref), deref(R_, r->ref), State{});
            fstack.pop_back();
            if (!sub) return std::nullopt;
            n.kids.push_back(std::move(*sub));
            return n;
        }
        if (a->kind == Block::Kind::Ref) {
            if (a->optional && !eff_opt(r, R_)) return std::nullopt;
            return det(deref(A_, a->ref), r, st);
        }
        if (r->kind == Block::Kind::Ref) return det(a, deref(R_, r->ref), st);
        if (is_code(a) || is_code(r)) return std::nullopt;

        using K = Block::Kind;
        auto wild = [](const Block* b) { return b->kind == K::Element && b->content == Block::Content::Wildcard; };
        auto node = [&](const char* rule, std::optional<ProofNode> q) -> std::optional<ProofNode> {
            if (!q) return std::nullopt;
            ProofNode n;
            n.rule = rule;
            n.a = a;
            n.r = r;
            n.kids.push_back(std::move(*q));
            return n;
        };
        auto single = [](const Block* b) { return std::vector<const Block*>{b}; };
        // wrapper rules must expose a block that takes part in the match
        auto wraps = [](std::optional<ProofNode> q) -> std::optional<ProofNode> {
            if (!q) return q;
            for (auto& k : q->kids) {
                if (k.ai == 0) return q;
                if (k.rule == "Filter" && std::find(k.ais.begin(), k.ais.end(), 0) != k.ais.end()) return q;
            }
            return std::nullopt;
        };
        auto unwraps = [](std::optional<ProofNode> q) -> std::optional<ProofNode> {
            if (!q) return q;
            for (auto& k : q->kids) {
                if (k.rule == "DefaultFill" || k.rule == "Unmatched") continue;
                if (k.ri == 0 || std::find(k.ris.begin(), k.ris.end(), 0) != k.ris.end()) return q;
            }
            return std::nullopt;
        };

        // D_r
        if (a->kind == K::Data && r->kind == K::Data) return data_rule(a, r);
        // E
        if (a->kind == K::Element && r->kind == K::Element && a->name == r->name && opt_ok(a, r)) {
            if (wild(a) || wild(r)) {
                if (wild(a) && wild(r)) {
                    ProofNode n;
                    n.rule = "E";
                    n.a = a;
                    n.r = r;
                    return n;
                }
            } else {
                auto [al, na] = actual_kids(a);
                if (auto p = node("E", q(al, na, required_kids(r), State{}))) return p;
            }
        }
        // E_g
        if (r->kind == K::Element && !wild(r) && opt_ok(a, r))
            if (auto s = step(st, Gen))
                if (auto p = node("E_g", wraps(q(single(a), 0, required_kids(r), *s)))) return p;
        // E_r
        if (a->kind == K::Element && !wild(a) && opt_ok(a, r))
            if (auto s = step(st, Restr)) {
                auto [al, na] = actual_kids(a);
                if (auto p = node("E_r", unwraps(q(al, na, single(r), *s)))) return p;
            }
        // P
        if (a->kind == K::Sequence && r->kind == K::Sequence && opt_ok(a, r)) {
            auto [al, na] = actual_kids(a);
            if (auto p = node("P", q(al, na, required_kids(r), State{}))) return p;
        }
        // P_g
        if (r->kind == K::Sequence && opt_ok(a, r))
            if (auto s = step(st, Gen))
                if (auto p = node("P_g", wraps(q(single(a), 0, required_kids(r), *s)))) return p;
        // P_r
        if (a->kind == K::Sequence && opt_ok(a, r))
            if (auto s = step(st, Restr)) {
                auto [al, na] = actual_kids(a);
                if (auto p = node("P_r", unwraps(q(al, na, single(r), *s)))) return p;
            }
        // C
        if (a->kind == K::Selection && r->kind == K::Selection && opt_ok(a, r)) {
            ProofNode n;
            n.rule = "C";
            n.a = a;
            n.r = r;
            bool ok = true;
            auto rl = required_kids(r);
            auto [al, na] = actual_kids(a);
            for (std::size_t i = 0; i < al.size() && ok; ++i) {
                auto c = unique(al[i], rl, State{});
                if (!c) ok = false;
                else {
                    c->ai = int(i);
                    n.kids.push_back(std::move(*c));
                }
            }
            if (ok) return n;
        }
        // C_g
        if (r->kind == K::Selection && opt_ok(a, r))
            if (auto s = step(st, Gen))
                if (auto c = unique(a, required_kids(r), *s)) {
                    ProofNode n;
                    n.rule = "C_g";
                    n.a = a;
                    n.r = r;
                    n.kids.push_back(std::move(*c));
                    return n;
                }
        // R
        if (a->kind == K::Repetition && r->kind == K::Repetition && a->min >= r->min && opt_ok(a, r) &&
            (!r->max || (a->max && *a->max <= *r->max))) {
            auto [al, na] = actual_kids(a);
            if (auto p = node("R", q(al, na, required_kids(r), State{}))) return p;
        }
        // R_g
        if (r->kind == K::Repetition && r->min <= 1 && (!r->max || *r->max >= 1) && opt_ok(a, r))
            if (auto s = step(st, Gen))
                if (auto p = node("R_g", wraps(q(single(a), 0, required_kids(r), *s)))) return p;
        return std::nullopt;
    }

    // Exactly one required choice determined by `a`; several raise Ambiguous.
    std::optional<ProofNode> unique(const Block* a, const std::vector<const Block*>& rl, State st) {
        std::vector<std::pair<int, ProofNode>> found;
        for (std::size_t j = 0; j < rl.size(); ++j) {
            if (is_code(rl[j])) continue;
            if (auto p = det(a, rl[j], st)) found.emplace_back(int(j), std::move(*p));
        }
        if (found.empty()) return std::nullopt;
        if (found.size() > 1) {
            std::vector<std::string> c;
            for (auto& f : found) c.push_back(block_label(*rl[std::size_t(f.first)]));
            throw Ambiguous(block_label(*a) + " (choices it determines)", c);
        }
        found[0].second.ri = found[0].first;
        return std::move(found[0].second);
    }

    std::optional<ProofNode> data_rule(const Block* a, const Block* r) const {
        const PrimitiveType& ta = a->type;
        const PrimitiveType& tr = r->type;
        if (ta.base != tr.base) return std::nullopt;
        std::optional<UnitConversion> conv;
        if (ta.units || tr.units) {
            if (!ta.units || !tr.units) return std::nullopt;
            try {
                UnitConversion c = conversion(units_.parse(*ta.units), units_.parse(*tr.units));
                if (!c.identity()) {
                    if (ta.base != Base::Double) return std::nullopt;
                    conv = c;
                }
            } catch (const Error&) {
                return std::nullopt;
            }
        }
        if (ta.base != Base::Boolean) {
            auto map = [&](double x) { return conv ? conv->apply(x) : x; };
            if (tr.min) {
                auto rm = num(tr.min), am = num(ta.min);
                if (!rm || !am || map(*am) < *rm) return std::nullopt;
            }
            if (tr.max) {
                auto rm = num(tr.max), am = num(ta.max);
                if (!rm || !am || map(*am) > *rm) return std::nullopt;
            }
        }
        if (tr.number && !ta.number) return std::nullopt;
        if (tr.finite && !ta.finite) return std::nullopt;
        if (tr.values) {
            if (!ta.values || conv) return std::nullopt;
            for (auto& v : *ta.values)
                if (std::find(tr.values->begin(), tr.values->end(), v) == tr.values->end()) return std::nullopt;
        }
        ProofNode n;
        n.rule = conv ? "UnitConv" : "D_r";
        n.a = a;
        n.r = r;
        n.conv = conv;
        return n;
    }

    std::optional<ProofNode> q(const std::vector<const Block*>& al, int na, const std::vector<const Block*>& rl, State st) {
        ProofNode n;
        n.rule = "Q";
        n.alist = al;
        n.rlist = rl;
        n.attrs_a = na;
        std::vector<bool> used(al.size(), false);
        std::vector<int> pending;
        for (std::size_t j = 0; j < rl.size(); ++j) {
            if (is_code(rl[j])) continue;
            std::vector<std::pair<int, ProofNode>> found;
            for (std::size_t i = 0; i < al.size(); ++i) {
                if (used[i]) continue;
                if (auto p = det(al[i], rl[j], st)) found.emplace_back(int(i), std::move(*p));
            }
            if (found.size() > 1) {
                std::vector<std::string> c;
                for (auto& f : found) c.push_back(block_label(*al[std::size_t(f.first)]));
                throw Ambiguous(block_label(*rl[j]), c);
            }
            if (found.empty()) {
                pending.push_back(int(j));
                continue;
            }
            used[std::size_t(found[0].first)] = true;
            found[0].second.ai = found[0].first;
            found[0].second.ri = int(j);
            n.kids.push_back(std::move(found[0].second));
        }

        // replacements through user filters
        auto prim = [](const Block* b, const std::string& name) {
            return b->kind == Block::Kind::Element && b->content == Block::Content::Primitive && b->name == name;
        };
        std::map<int, int> claimed;   // pending required index -> filter
        std::vector<std::pair<int, ProofNode>> fnodes;
        for (std::size_t f = 0; f < filters_.size(); ++f) {
            const ConversionFilter& flt = filters_[f];
            ProofNode fn;
            fn.rule = "Filter";
            fn.filter = int(f);
            bool ok = true;
            for (auto& in : flt.inputs) {
                int hit = -1, hits = 0;
                for (std::size_t i = 0; i < al.size(); ++i)
                    if (!used[i] && prim(al[i], in.name)) {
                        hit = int(i);
                        ++hits;
                    }
                if (hits != 1 || eff_opt(al[std::size_t(hit)], A_)) {
                    ok = false;
                    break;
                }
                Block port;
                port.kind = Block::Kind::Data;
                port.type = in.type;
                if (!data_rule(&al[std::size_t(hit)]->children.front(), &port) ||
                    data_rule(&al[std::size_t(hit)]->children.front(), &port)->conv) {
                    ok = false;
                    break;
                }
                fn.ais.push_back(hit);
            }
            if (!ok) continue;
            for (auto& out : flt.outputs)
                for (int j : pending)
                    if (prim(rl[std::size_t(j)], out.name)) {
                        Block port;
                        port.kind = Block::Kind::Data;
                        port.type = out.type;
                        auto d = data_rule(&port, &rl[std::size_t(j)]->children.front());
                        if (d && !d->conv) fn.ris.push_back(j);
                    }
            if (fn.ris.empty()) continue;
            for (int j : fn.ris) {
                if (claimed.count(j))
                    throw Ambiguous(block_label(*rl[std::size_t(j)]),
                                    {"filter " + filters_[std::size_t(claimed[j])].name, "filter " + flt.name});
                claimed[j] = int(f);
            }
            fnodes.emplace_back(int(f), std::move(fn));
        }
        for (auto& [f, fn] : fnodes) {
            bool clash = false;
            for (int i : fn.ais)
                if (used[std::size_t(i)]) clash = true;
            if (clash) {
                std::vector<std::string> c;
                for (int i : fn.ais) c.push_back(block_label(*al[std::size_t(i)]));
                throw Ambiguous("inputs of filter " + filters_[std::size_t(f)].name, c);
            }
            for (int i : fn.ais) used[std::size_t(i)] = true;
            n.kids.push_back(std::move(fn));
        }

        for (int j : pending) {
            if (claimed.count(j)) continue;
            const Block* r = rl[std::size_t(j)];
            ProofNode d;
            d.r = r;
            d.ri = j;
            if (r->kind == Block::Kind::Element && r->default_value && r->content == Block::Content::Primitive) {
                d.rule = "DefaultFill";
            } else if (eff_opt(r, R_)) {
                d.rule = "Unmatched";
            } else {
                unmatched = block_label(*r);
                return std::nullopt;
            }
            n.kids.push_back(std::move(d));
        }
        return n;
    }

private:
    const SchemaSet& A_;
    const SchemaSet& R_;
    int k_;
    const std::vector<ConversionFilter>& filters_;
    const UnitTable& units_;
    std::deque<Block>& owned_;
    std::map<const Block*, std::pair<std::vector<const Block*>, int>> akids_;
    std::map<const Block*, std::vector<const Block*>> rkids_;
    int depth_ = 0;
};

}  // namespace

DeterminesProof determines(const SchemaSet& actual, const std::string& actual_id, const SchemaSet& required,
                           const std::string& required_id, int k, const std::vector<ConversionFilter>& filters,
                           const UnitTable& units) {
    if (k < 0) throw Error("k must be non-negative");
    const Schema* sa = actual.find_schema(actual_id);
    const Schema* sr = required.find_schema(required_id);
    if (!sa) throw SchemaError("no actual schema '" + actual_id + "'");
    if (!sr) throw SchemaError("no required schema '" + required_id + "'");
    DeterminesProof proof;
    proof.actual_id = actual_id;
    proof.required_id = required_id;
    proof.filters = filters;
    proof.owned = std::make_shared<std::deque<Block>>();
    Prover p(actual, required, k, proof.filters, units, *proof.owned);
    p.fstack.push_back({actual_id, required_id});
    auto [al, na] = p.actual_kids(&sa->root);
    auto q = p.q(al, na, p.required_kids(&sr->root), State{});
    if (!q) throw NoProof("required " + (p.unmatched.empty() ? std::string("schema") : p.unmatched) +
                          " is not determined by the actual schema");
    proof.root.rule = "A";
    proof.root.a = &sa->root;
    proof.root.r = &sr->root;
    proof.root.kids.push_back(std::move(*q));
    return proof;
}

// ---------------------------------------------------------------- synthesis

namespace {

bool contains_codes(const Block& b) {
    if (b.kind == Block::Kind::Code) return true;
    for (auto& c : b.children)
        if (contains_codes(c)) return true;
    return false;
}

Block conv_code(std::string text, Block::Role role) {
    Block c = Block::code(std::move(text));
    c.language = "bsml";
    c.role = role;
    return c;
}

std::string unit_text(const std::string& name, const UnitConversion& c) {
    std::string s = name + " = " + name;
    if (c.a != 1) {
        if (c.a >= 1 || c.a <= -1) s += " * " + format_double(to_double(c.a));
        else s += " / " + format_double(to_double(Rational(1) / c.a));
    }
    if (c.b > 0) s += " + " + format_double(to_double(c.b));
    if (c.b < 0) s += " - " + format_double(to_double(-c.b));
    return s;
}

class Synth {
public:
    Synth(const SchemaSet& a, const DeterminesProof& p) : A_(a), P_(p) {}

    SchemaSet out;

    void run() {
        out.types = A_.types;
        main_ = P_.actual_id;
        fids_[{P_.actual_id, P_.required_id}] = main_;
        Schema s;
        s.id = main_;
        s.root = Block::sequence(synth_q(P_.root.kids.at(0), ""));
        out.schemas.push_back(std::move(s));
        for (auto& x : extra_) out.schemas.push_back(std::move(x));
    }

private:
    const SchemaSet& A_;
    const DeterminesProof& P_;
    std::string main_;
    std::map<std::pair<std::string, std::string>, std::string> fids_;
    std::set<std::string> taken_;
    std::vector<Schema> extra_;

    std::string fresh(const std::string& base) {
        std::string id = base;
        for (int i = 2; taken_.count(id) || id == main_; ++i) id = base + std::to_string(i);
        taken_.insert(id);
        return id;
    }

    // Actual block with its codes removed; refs point at stripped copies.
    Block strip(const Block& b) {
        Block c = b;
        c.id.clear();
        c.children.clear();
        if (b.kind == Block::Kind::Ref) c.ref = stripped_target(b.ref);
        for (auto& k : b.children)
            if (k.kind != Block::Kind::Code) c.children.push_back(strip(k));
        return c;
    }

    std::string stripped_target(const std::string& id) {
        if (id == main_ && A_.find_schema(id)) return id;
        auto key = std::make_pair(id, std::string());
        if (auto it = fids_.find(key); it != fids_.end()) return it->second;
        std::string nid = fresh(id);
        fids_[key] = nid;
        Schema s;
        s.id = nid;
        const Block* t = A_.resolve(id);
        if (!t) throw SchemaError("unresolved ref '" + id + "'");
        Block body = strip(*t);
        s.root = A_.find_schema(id) ? body : Block::sequence({body});
        s.root.optional = false;
        extra_.push_back(std::move(s));
        return nid;
    }

    Block shell(const Block& b) {
        Block c = b;
        c.id.clear();
        c.children.clear();
        return c;
    }

    std::vector<Block> synth(const ProofNode& n, const std::string& owner) {
        const std::string& r = n.rule;
        if (r == "D_r") return {strip(*n.a)};
        if (r == "UnitConv") return {strip(*n.a), conv_code(unit_text(owner, *n.conv), Block::Role::UnitConv)};
        if (r == "E" || r == "E_r" || r == "P" || r == "P_r" || r == "R") {
            if (n.kids.empty()) return {strip(*n.a)};
            Block c = shell(*n.a);
            bool is_elem = n.a->kind == Block::Kind::Element;
            std::vector<Block> kids = synth_q(n.kids[0], is_elem ? n.a->name : owner);
            if (is_elem && n.a->content == Block::Content::Primitive) {
                // primitive content cannot hold codes; they follow the element
                std::vector<Block> after;
                for (auto& k : kids) (k.kind == Block::Kind::Code ? after : c.children).push_back(std::move(k));
                std::vector<Block> res{std::move(c)};
                for (auto& k : after) res.push_back(std::move(k));
                return res;
            }
            c.children = std::move(kids);
            return {std::move(c)};
        }
        if (r == "E_g" || r == "P_g" || r == "R_g") return synth_q(n.kids.at(0), owner);
        if (r == "C_g") return synth(n.kids.at(0), owner);
        if (r == "C") {
            Block c = shell(*n.a);
            for (auto& k : n.kids) {
                auto part = synth(k, owner);
                if (part.size() == 1) c.children.push_back(std::move(part[0]));
                else c.children.push_back(Block::sequence(std::move(part)));
            }
            return {std::move(c)};
        }
        if (r == "F") {
            auto key = std::make_pair(n.ref_a, n.ref_r);
            Block ref = shell(*n.a);
            if (auto it = fids_.find(key); it != fids_.end()) {
                ref.ref = it->second;
                return {ref};
            }
            std::string nid = fresh(n.ref_a == n.ref_r ? n.ref_a : n.ref_a + "_" + n.ref_r);
            fids_[key] = nid;
            ref.ref = nid;
            if (n.assumed) return {ref};
            auto body = synth(n.kids.at(0), owner);
            Schema s;
            s.id = nid;
            if (body.size() == 1 && body[0].kind == Block::Kind::Sequence && !body[0].optional) s.root = std::move(body[0]);
            else s.root = Block::sequence(std::move(body));
            extra_.push_back(std::move(s));
            return {ref};
        }
        throw Error("synthesize: unexpected proof rule " + r);
    }

    std::vector<Block> synth_q(const ProofNode& q, const std::string& owner) {
        std::size_t na = std::size_t(q.attrs_a);
        std::size_t nreal = q.alist.size() - na;
        std::vector<std::vector<std::pair<int, Block>>> slots(nreal + 1);
        std::vector<std::optional<std::vector<Block>>> content(nreal);
        std::map<int, const ProofNode*> cover;
        for (auto& k : q.kids) {
            if (k.rule == "Filter")
                for (int j : k.ris) cover[j] = &k;
            else cover[k.ri] = &k;
        }
        auto slot_of = [&](int ai) { return std::size_t(ai) < na ? std::size_t(0) : std::size_t(ai) - na + 1; };

        for (auto& k : q.kids) {
            if (k.ai < 0) continue;
            auto blocks = synth(k, std::size_t(k.ai) < na ? k.a->name : owner);
            if (std::size_t(k.ai) < na) {
                // attribute values are bound at the start tag
                for (auto& b : blocks)
                    if (b.kind == Block::Kind::Code) slots[0].emplace_back(-1, std::move(b));
            } else {
                content[std::size_t(k.ai) - na] = std::move(blocks);
            }
        }

        std::size_t m = 0;
        std::set<const ProofNode*> placed;
        for (std::size_t j = 0; j < q.rlist.size(); ++j) {
            const Block* r = q.rlist[j];
            if (r->kind == Block::Kind::Code) {
                slots[m].emplace_back(2, *r);
                continue;
            }
            const ProofNode* k = cover.at(int(j));
            if (k->rule == "Filter") {
                if (!placed.insert(k).second) continue;
                std::size_t s = 0;
                for (int i : k->ais) s = std::max(s, slot_of(i));
                auto cf = compile_filter(P_.filters[std::size_t(k->filter)]);
                slots[s].emplace_back(0, conv_code(cf.code_text, Block::Role::Filter));
                m = std::max(m, s);
            } else if (k->rule == "DefaultFill") {
                slots[m].emplace_back(1, conv_code(r->name + " = " + *r->default_value, Block::Role::DefaultFill));
            } else if (k->rule == "Unmatched") {
            } else {
                std::size_t s = slot_of(k->ai);
                if (s < m && contains_codes(*r))
                    throw DelayImpossible(block_label(*r) + " carries codes that must run after data appearing later in "
                                          "the actual document");
                m = std::max(m, s);
            }
        }

        std::vector<Block> out;
        auto flush = [&](std::size_t s) {
            std::stable_sort(slots[s].begin(), slots[s].end(),
                             [](const auto& x, const auto& y) { return x.first < y.first; });
            for (auto& [c, b] : slots[s]) out.push_back(std::move(b));
        };
        flush(0);
        for (std::size_t i = 0; i < nreal; ++i) {
            if (content[i]) {
                for (auto& b : *content[i]) out.push_back(std::move(b));
            } else {
                out.push_back(strip(*q.alist[na + i]));
            }
            flush(i + 1);
        }
        return out;
    }
};

std::set<std::string> unbound_names(const SchemaSet& s, const std::string& id) {
    std::set<std::string> out;
    for (auto& v : check_l_attributed(lower(s, id))) out.insert(v.name);
    return out;
}

}  // namespace

SchemaSet synthesize(const SchemaSet& actual, const SchemaSet& required, const DeterminesProof& proof) {
    Synth s(actual, proof);
    s.run();
    validate_schema_set(s.out);
    auto before = unbound_names(required, proof.required_id);
    for (auto& n : unbound_names(s.out, proof.actual_id))
        if (!before.count(n))
            throw NoProof("required codes read %" + n + ", which the actual schema never binds under that name");
    return std::move(s.out);
}

}  // namespace bsml
