#include "bsml/binding.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "bsml/error.hpp"

namespace bsml {

std::string GenericTree::to_xml() const {
    if (is_text) return xml_escape(value);
    std::string s = "<" + value;
    for (auto& [k, v] : attrs) s += " " + k + "='" + xml_escape(v, true) + "'";
    if (children.empty()) return s + "/>";
    s += ">";
    for (auto& c : children) s += c.to_xml();
    return s + "</" + value + ">";
}

void Env::bind(const std::string& name, Value v, int depth) {
    for (auto it = b_.rbegin(); it != b_.rend(); ++it)
        if (it->depth == depth && it->name == name) {
            Binding moved{name, std::move(v), depth};
            b_.erase(std::next(it).base());
            b_.push_back(std::move(moved));
            return;
        }
    b_.push_back({name, std::move(v), depth});
}

const Env::Binding* Env::find(const std::string& name) const {
    for (auto it = b_.rbegin(); it != b_.rend(); ++it)
        if (it->name == name) return &*it;
    return nullptr;
}

Env::Binding* Env::find(const std::string& name) {
    for (auto it = b_.rbegin(); it != b_.rend(); ++it)
        if (it->name == name) return &*it;
    return nullptr;
}

void Env::close(int depth) {
    b_.erase(std::remove_if(b_.begin(), b_.end(), [&](const Binding& x) { return x.depth >= depth + 2; }), b_.end());
}

std::size_t Env::bytes() const {
    std::size_t n = b_.capacity() * sizeof(Binding);
    for (auto& x : b_) n += x.name.capacity() + x.value.text.capacity() + (x.value.tree ? sizeof(GenericTree) : 0);
    return n;
}

EnvSnapshot snapshot(const Env& env) {
    EnvSnapshot out;
    std::set<std::string> seen;
    auto& all = env.all();
    for (auto it = all.rbegin(); it != all.rend(); ++it)
        if (seen.insert(it->name).second) out.emplace_back(it->name, it->value.render());
    return out;
}

std::string expand(const CodeTemplate& t, const Env& env) {
    std::string scratch;
    return t.expand([&](const std::string& n) -> const std::string* {
        auto* b = env.find(n);
        if (!b) return nullptr;
        if (b->value.tree) {
            scratch = b->value.tree->to_xml();
            return &scratch;
        }
        return &b->value.text;
    });
}

void TextSink::on_action(int, const ActionInfo& action, const Env& env) {
    out_ << expand(action.tmpl, env) << '\n';
}

void CallbackSink::on_action(int code_id, const ActionInfo&, const Env& env) {
    auto it = reg_.find(code_id);
    if (it == reg_.end()) throw Error("no procedure registered for code id " + std::to_string(code_id));
    it->second(code_id, snapshot(env));
}

std::unique_ptr<ActionSink> make_sink(SinkMode mode, std::ostream* out, std::map<int, Callback> registry) {
    if (mode == SinkMode::Text) {
        if (!out) throw Error("text sink needs an output stream");
        return std::make_unique<TextSink>(*out);
    }
    return std::make_unique<CallbackSink>(std::move(registry));
}

// ---------------------------------------------------------------- static check

namespace {

const std::string kSelf = "$self";

// Names an action reads.
std::vector<std::string> reads(const ActionInfo& a) {
    if (a.kind == ActionInfo::User) return a.tmpl.refs();
    if (a.kind == ActionInfo::Convert) {
        std::set<std::string> v;
        for (auto& as : a.assigns) as.expr->vars(v);
        return {v.begin(), v.end()};
    }
    return {};
}

using Defs = std::set<std::pair<std::string, int>>;   // (name, level relative to entry depth)

struct DefsVal {
    bool top = true;
    Defs d;
};

Defs meet(const Defs& a, const Defs& b) {
    Defs out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

}  // namespace

std::vector<Violation> check_l_attributed(const Grammar& g) {
    const Context& ctx = *g.ctx;
    std::size_t n = g.nt.size();

    // Walks one production, feeding definitions into `st`. Symbols after s(x)
    // are one level deeper until the matching e(x).
    auto walk = [&](const Production& p, const std::vector<DefsVal>& defs, Defs st, auto&& at_symbol) -> Defs {
        int shift = 0;   // levels entered within this production
        std::vector<std::string> open;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const Sym& s = p[i];
            at_symbol(i, st, shift);
            switch (s.kind) {
                case Sym::Start: {
                    ++shift;
                    open.push_back(ctx.start_name(s.id));
                    for (auto& a : ctx.starts[std::size_t(s.id)].attrs) st.insert({a.name, shift});
                    break;
                }
                case Sym::End: {
                    Defs kept;
                    for (auto& [nm, lv] : st)
                        if (lv < shift + 2) kept.insert({nm == kSelf && !open.empty() && lv == shift ? open.back() : nm, lv});
                    st = std::move(kept);
                    if (!open.empty()) open.pop_back();
                    --shift;
                    break;
                }
                case Sym::Wild: st.insert({ctx.start_name(s.id), shift + 1}); break;
                case Sym::Data: st.insert({open.empty() ? kSelf : open.back(), shift}); break;
                case Sym::Act: {
                    const ActionInfo& a = ctx.actions[std::size_t(s.id)];
                    if (a.kind == ActionInfo::Default) st.insert({a.elem, shift + 1});
                    if (a.kind == ActionInfo::Convert)
                        for (auto& as : a.assigns) st.insert({as.target, shift + 1});
                    break;
                }
                case Sym::NT: {
                    auto& dv = defs[std::size_t(s.id)];
                    if (dv.top) return Defs{};   // unproductive so far
                    for (auto& [nm, lv] : dv.d) {
                        std::string name = nm;
                        if (nm == kSelf && lv == 0 && !open.empty()) name = open.back();
                        st.insert({name, lv + shift});
                    }
                    break;
                }
                case Sym::Eof: break;
            }
        }
        return st;
    };

    // Definitions every derivation of a nonterminal leaves behind (greatest fixpoint).
    std::vector<DefsVal> defs(n);
    std::vector<bool> productive(n, false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t a = 0; a < n; ++a) {
            std::optional<Defs> acc;
            for (auto& p : g.prods[a]) {
                bool ok = true;
                for (auto& s : p)
                    if (s.kind == Sym::NT && defs[std::size_t(s.id)].top) ok = false;
                if (!ok) continue;
                Defs d = walk(p, defs, {}, [](std::size_t, const Defs&, int) {});
                Defs kept;
                for (auto& x : d)
                    if (x.second <= 2) kept.insert(x);
                acc = acc ? meet(*acc, kept) : kept;
            }
            if (!acc) continue;
            if (defs[a].top || defs[a].d != *acc) {
                // Levels only shrink after the first productive value.
                if (!defs[a].top && !std::includes(defs[a].d.begin(), defs[a].d.end(), acc->begin(), acc->end()))
                    *acc = meet(*acc, defs[a].d);
                if (defs[a].top || defs[a].d != *acc) {
                    defs[a].top = false;
                    defs[a].d = *acc;
                    changed = true;
                }
            }
        }
    }

    // Names bound on entry to each nonterminal, intersected over use sites.
    std::vector<std::optional<std::set<std::string>>> in(n);
    std::vector<int> parent(n, -1);
    in[std::size_t(g.start)] = std::set<std::string>{};
    auto names_of = [](const Defs& d) {
        std::set<std::string> s;
        for (auto& x : d)
            if (x.first != kSelf) s.insert(x.first);
        return s;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t b = 0; b < n; ++b) {
            if (!in[b]) continue;
            Defs base;
            for (auto& nm : *in[b]) base.insert({nm, -100});
            for (auto& p : g.prods[b]) {
                walk(p, defs, base, [&](std::size_t i, const Defs& st, int) {
                    if (p[i].kind != Sym::NT) return;
                    std::size_t a = std::size_t(p[i].id);
                    auto here = names_of(st);
                    if (!in[a]) {
                        in[a] = here;
                        parent[a] = int(b);
                        changed = true;
                    } else {
                        std::set<std::string> m;
                        std::set_intersection(in[a]->begin(), in[a]->end(), here.begin(), here.end(),
                                              std::inserter(m, m.end()));
                        if (m != *in[a]) {
                            in[a] = std::move(m);
                            changed = true;
                        }
                    }
                });
            }
        }
    }

    std::vector<Violation> out;
    std::set<std::pair<int, std::string>> seen;
    for (std::size_t b = 0; b < n; ++b) {
        if (!in[b]) continue;
        Defs base;
        for (auto& nm : *in[b]) base.insert({nm, -100});
        for (auto& p : g.prods[b]) {
            walk(p, defs, base, [&](std::size_t i, const Defs& st, int) {
                if (p[i].kind != Sym::Act) return;
                auto here = names_of(st);
                for (auto& r : reads(ctx.actions[std::size_t(p[i].id)])) {
                    if (here.count(r) || !seen.insert({p[i].id, r}).second) continue;
                    std::vector<std::string> chain;
                    for (int x = int(b); x >= 0 && chain.size() <= n; x = parent[std::size_t(x)]) {
                        chain.push_back(g.nt[std::size_t(x)]);
                        if (x == g.start) break;
                    }
                    std::reverse(chain.begin(), chain.end());
                    std::string path;
                    for (auto& c : chain) path += (path.empty() ? "" : " > ") + c;
                    out.push_back({p[i].id, r, path});
                }
            });
        }
    }
    return out;
}

}  // namespace bsml
