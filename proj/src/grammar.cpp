#include "bsml/grammar.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "bsml/error.hpp"

namespace bsml {

// ---------------------------------------------------------------- context

namespace {

std::string type_key(const PrimitiveType& t) {
    std::ostringstream o;
    o << t.id << '\x1f' << int(t.base) << '\x1f' << (t.min ? "1" + *t.min : "0") << '\x1f'
      << (t.max ? "1" + *t.max : "0") << '\x1f' << t.number << t.finite << '\x1f' << (t.units ? "1" + *t.units : "0");
    if (t.values)
        for (auto& v : *t.values) o << '\x1e' << v;
    return o.str();
}

}  // namespace

int Context::name_id(const std::string& n) {
    auto it = name_ix_.find(n);
    if (it != name_ix_.end()) return it->second;
    int id = int(names.size());
    names.push_back(n);
    name_ix_[n] = id;
    return id;
}

int Context::find_name(const std::string& n) const {
    auto it = name_ix_.find(n);
    return it == name_ix_.end() ? -1 : it->second;
}

int Context::start_id(const std::string& name, const std::vector<AttributeDecl>& attrs) {
    std::string key = name;
    for (auto& a : attrs)
        key += '\x1d' + a.name + '\x1f' + type_key(a.type) + '\x1f' + (a.default_value ? "1" + *a.default_value : "0");
    auto it = start_ix_.find(key);
    if (it != start_ix_.end()) return it->second;
    int id = int(starts.size());
    starts.push_back({name_id(name), attrs});
    start_ix_[key] = id;
    return id;
}

int Context::data_id(const PrimitiveType& t) {
    for (std::size_t i = 0; i < datas.size(); ++i)
        if (datas[i] == t) return int(i);
    datas.push_back(t);
    return int(datas.size() - 1);
}

int Context::user_action(const std::string& text, Block::Role role) {
    std::string key = std::to_string(int(role)) + '\x1f' + text;
    auto it = user_ix_.find(key);
    if (it != user_ix_.end()) return it->second;
    ActionInfo a;
    a.text = text;
    a.role = role;
    if (role == Block::Role::User) {
        a.kind = ActionInfo::User;
        a.tmpl = CodeTemplate::parse(text);
    } else if (role == Block::Role::DefaultFill) {
        // `name = literal`, bound verbatim
        auto eq = text.find('=');
        if (eq == std::string::npos) throw SchemaError("default code must read 'name = value': " + text);
        auto strip = [](std::string s) {
            while (!s.empty() && std::isspace((unsigned char)s.back())) s.pop_back();
            std::size_t i = 0;
            while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
            return s.substr(i);
        };
        a.kind = ActionInfo::Default;
        a.elem = strip(text.substr(0, eq));
        a.value = strip(text.substr(eq + 1));
    } else {
        a.kind = ActionInfo::Convert;
        a.assigns = parse_assignments(text);
    }
    int id = int(actions.size());
    actions.push_back(std::move(a));
    user_ix_[key] = id;
    return id;
}

std::string Context::sym_text(const Sym& s) const {
    switch (s.kind) {
        case Sym::Start: return "s(" + start_name(s.id) + ")";
        case Sym::Wild: return "w(" + start_name(s.id) + ")";
        case Sym::End: return "e(" + names[std::size_t(s.id)] + ")";
        case Sym::Data: return "d";
        case Sym::Eof: return "$";
        case Sym::NT: return "?";
        case Sym::Act: {
            const ActionInfo& a = actions[std::size_t(s.id)];
            switch (a.kind) {
                case ActionInfo::User: return "{code#" + std::to_string(s.id) + "}";
                case ActionInfo::Begin: return "{B#" + std::to_string(a.rep) + "}";
                case ActionInfo::Append: return "{A#" + std::to_string(a.rep) + "}";
                case ActionInfo::End: return "{E#" + std::to_string(a.rep) + "}";
                case ActionInfo::Default: return "{default#" + std::to_string(s.id) + "}";
                case ActionInfo::Convert: return "{convert#" + std::to_string(s.id) + "}";
            }
        }
    }
    return "?";
}

int Grammar::add_nt(const std::string& base) {
    std::string name = base.empty() ? "N" : base;
    auto taken = [&](const std::string& n) { return std::find(nt.begin(), nt.end(), n) != nt.end(); };
    if (taken(name)) {
        int k = 2;
        while (taken(name + std::to_string(k))) ++k;
        name += std::to_string(k);
    }
    nt.push_back(name);
    prods.emplace_back();
    return int(nt.size() - 1);
}

std::size_t Grammar::production_count() const {
    std::size_t n = 0;
    for (auto& p : prods) n += p.size();
    return n;
}

std::string Grammar::dump() const {
    std::ostringstream o;
    auto row = [&](int a) {
        for (auto& p : prods[std::size_t(a)]) {
            o << nt[std::size_t(a)] << " ->";
            if (p.empty()) o << " eps";
            for (std::size_t i = 0; i < p.size(); ++i) {
                o << (i ? " , " : " ");
                o << (p[i].kind == Sym::NT ? nt[std::size_t(p[i].id)] : ctx->sym_text(p[i]));
            }
            o << "\n";
        }
    };
    row(start);
    for (int a = 0; a < int(nt.size()); ++a)
        if (a != start) row(a);
    return o.str();
}

bool CodeFilter::active(const Block& code) const {
    if (code.language && *code.language == "bsml") return true;
    if (language && code.language && *code.language != *language) return false;
    if (component && code.component && *code.component != *component) return false;
    return true;
}

int term_class(const Context& ctx, const Sym& s) {
    switch (s.kind) {
        case Sym::Start:
        case Sym::Wild: return 2 + 2 * ctx.starts[std::size_t(s.id)].name;
        case Sym::End: return 3 + 2 * s.id;
        case Sym::Data: return kDataClass;
        case Sym::Eof: return kEofClass;
        default: return -1;
    }
}

std::string class_text(const Context& ctx, int cls) {
    if (cls == kEofClass) return "EOF";
    if (cls == kDataClass) return "d";
    int n = (cls - 2) / 2;
    return std::string(cls % 2 == 0 ? "s(" : "e(") + ctx.names[std::size_t(n)] + ")";
}

// ---------------------------------------------------------------- lowering

namespace {

class Lowerer {
public:
    Lowerer(const SchemaSet& set, const CodeFilter& f, Grammar& g) : set_(set), filter_(f), g_(g) {}

    int lower(const Block& b) {
        auto it = memo_.find(&b);
        if (it != memo_.end()) return it->second;
        switch (b.kind) {
            case Block::Kind::Ref: {
                const Block* t = set_.resolve(b.ref);
                if (!t) throw SchemaError("unresolved ref '" + b.ref + "'");
                int n = lower_target(*t, b.ref);
                memo_[&b] = n;
                return n;
            }
            case Block::Kind::Element: return element(b);
            case Block::Kind::Sequence: return sequence(b, b.id.empty() ? "seq" : b.id);
            case Block::Kind::Selection: return selection(b);
            case Block::Kind::Repetition: return repetition(b);
            case Block::Kind::Code: {
                int n = g_.add_nt("code");
                memo_[&b] = n;
                g_.prods[std::size_t(n)].push_back({Sym{Sym::Act, g_.ctx->user_action(b.text, b.role)}});
                return n;
            }
            case Block::Kind::Data: {
                int n = g_.add_nt("D");
                memo_[&b] = n;
                g_.prods[std::size_t(n)].push_back({Sym{Sym::Data, g_.ctx->data_id(b.type)}});
                return n;
            }
        }
        throw SchemaError("unknown block kind");
    }

    int lower_target(const Block& t, const std::string& id) {
        auto it = memo_.find(&t);
        if (it != memo_.end()) return it->second;
        if (t.kind == Block::Kind::Sequence && t.id.empty()) return sequence(t, id);
        return lower(t);
    }

    // Children that produce grammar symbols: inactive codes are dropped.
    std::vector<const Block*> kids(const Block& b) {
        std::vector<const Block*> out;
        for (auto& c : b.children)
            if (c.kind != Block::Kind::Code || filter_.active(c)) out.push_back(&c);
        return out;
    }

    Production body(const Block& b) {
        Production p;
        for (auto* c : kids(b)) p.push_back(Sym{Sym::NT, lower(*c)});
        return p;
    }

private:
    int element(const Block& b) {
        int n = g_.add_nt(b.id.empty() ? b.name : b.id);
        memo_[&b] = n;
        Context& ctx = *g_.ctx;
        int sid = ctx.start_id(b.name, b.attrs);
        Production p;
        if (b.content == Block::Content::Wildcard) {
            p.push_back(Sym{Sym::Wild, sid});
        } else {
            p.push_back(Sym{Sym::Start, sid});
            Production inner = body(b);
            p.insert(p.end(), inner.begin(), inner.end());
            p.push_back(Sym{Sym::End, ctx.name_id(b.name)});
        }
        g_.prods[std::size_t(n)].push_back(std::move(p));
        if (b.optional) {
            if (b.default_value) {
                ActionInfo a;
                a.kind = ActionInfo::Default;
                a.elem = b.name;
                a.value = *b.default_value;
                a.text = b.name + " = " + *b.default_value;
                ctx.actions.push_back(std::move(a));
                g_.prods[std::size_t(n)].push_back({Sym{Sym::Act, int(ctx.actions.size() - 1)}});
            } else {
                g_.prods[std::size_t(n)].push_back({});
            }
        }
        return n;
    }

    int sequence(const Block& b, const std::string& name) {
        int n = g_.add_nt(name);
        memo_[&b] = n;
        Production p = body(b);
        g_.prods[std::size_t(n)].push_back(std::move(p));
        if (b.optional) g_.prods[std::size_t(n)].push_back({});
        return n;
    }

    int selection(const Block& b) {
        int n = g_.add_nt(b.id.empty() ? "sel" : b.id);
        memo_[&b] = n;
        auto ks = kids(b);
        if (ks.empty() && !b.optional) throw SchemaError("empty selection matches nothing");
        for (auto* c : ks) {
            Sym x{Sym::NT, lower(*c)};
            g_.prods[std::size_t(n)].push_back({x});
        }
        if (b.optional) g_.prods[std::size_t(n)].push_back({});
        return n;
    }

    int repetition(const Block& b) {
        std::string base = b.id.empty() ? "rep" : b.id;
        int r = g_.add_nt(base);
        memo_[&b] = r;
        int rp = g_.add_nt(g_.nt[std::size_t(r)] + "'");
        Context& ctx = *g_.ctx;
        int rep = ctx.reps++;
        auto act = [&](ActionInfo::Kind k) {
            ActionInfo a;
            a.kind = k;
            a.rep = rep;
            a.min = b.min;
            a.max = b.max;
            ctx.actions.push_back(std::move(a));
            return Sym{Sym::Act, int(ctx.actions.size() - 1)};
        };
        Sym B = act(ActionInfo::Begin), A = act(ActionInfo::Append), E = act(ActionInfo::End);
        Production x = body(b);
        Production p1{B};
        p1.insert(p1.end(), x.begin(), x.end());
        p1.push_back(A);
        p1.push_back(Sym{Sym::NT, rp});
        p1.push_back(E);
        Production p2 = x;
        p2.push_back(A);
        p2.push_back(Sym{Sym::NT, rp});
        g_.prods[std::size_t(r)].push_back(std::move(p1));
        if (b.optional || b.min == 0) g_.prods[std::size_t(r)].push_back({});
        g_.prods[std::size_t(rp)].push_back(std::move(p2));
        g_.prods[std::size_t(rp)].push_back({});
        return r;
    }

    const SchemaSet& set_;
    const CodeFilter& filter_;
    Grammar& g_;
    std::map<const Block*, int> memo_;
};

// Drops nonterminals unreachable from the start and renumbers.
Grammar prune(const Grammar& g) {
    std::vector<int> map(g.nt.size(), -1);
    std::vector<int> order;
    std::vector<int> stack{g.start};
    map[std::size_t(g.start)] = 0;
    order.push_back(g.start);
    while (!stack.empty()) {
        int a = stack.back();
        stack.pop_back();
        for (auto& p : g.prods[std::size_t(a)])
            for (auto& s : p)
                if (s.kind == Sym::NT && map[std::size_t(s.id)] < 0) {
                    map[std::size_t(s.id)] = 0;
                    order.push_back(s.id);
                    stack.push_back(s.id);
                }
    }
    std::sort(order.begin(), order.end());
    Grammar out;
    out.ctx = g.ctx;
    for (int a : order) {
        map[std::size_t(a)] = int(out.nt.size());
        out.nt.push_back(g.nt[std::size_t(a)]);
    }
    out.prods.resize(out.nt.size());
    for (int a : order) {
        auto& dst = out.prods[std::size_t(map[std::size_t(a)])];
        for (auto p : g.prods[std::size_t(a)]) {
            for (auto& s : p)
                if (s.kind == Sym::NT) s.id = map[std::size_t(s.id)];
            dst.push_back(std::move(p));
        }
    }
    out.start = map[std::size_t(g.start)];
    return out;
}

void dedupe(std::vector<Production>& ps) {
    std::vector<Production> out;
    for (auto& p : ps)
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    ps = std::move(out);
}

// Nonterminals with one production made only of actions and other such nonterminals.
std::vector<bool> code_nts(const Grammar& g) {
    std::size_t n = g.nt.size();
    std::vector<int> state(n, 0);   // 0 unknown, 1 visiting, 2 yes, 3 no
    std::function<bool(int)> visit = [&](int a) -> bool {
        auto& st = state[std::size_t(a)];
        if (st == 2) return true;
        if (st == 3 || st == 1) return false;
        st = 1;
        bool ok = g.prods[std::size_t(a)].size() == 1 && !g.prods[std::size_t(a)][0].empty();
        if (ok)
            for (auto& s : g.prods[std::size_t(a)][0]) {
                if (s.kind == Sym::Act) continue;
                if (s.kind == Sym::NT && visit(s.id)) continue;
                ok = false;
                break;
            }
        state[std::size_t(a)] = ok ? 2 : 3;
        return ok;
    };
    std::vector<bool> out(n);
    for (std::size_t a = 0; a < n; ++a) out[a] = visit(int(a));
    return out;
}

bool is_code(const Sym& s, const std::vector<bool>& cnt) {
    return s.kind == Sym::Act || (s.kind == Sym::NT && cnt[std::size_t(s.id)]);
}

void flatten_code(const Grammar& g, const Sym& s, Production& out) {
    if (s.kind == Sym::Act) {
        out.push_back(s);
        return;
    }
    for (auto& x : g.prods[std::size_t(s.id)][0]) flatten_code(g, x, out);
}

// Length of the leading run of code symbols.
std::size_t code_prefix(const Production& p, const std::vector<bool>& cnt) {
    std::size_t k = 0;
    while (k < p.size() && is_code(p[k], cnt)) ++k;
    return k;
}

Production flat_prefix(const Grammar& g, const Production& p, std::size_t k) {
    Production out;
    for (std::size_t i = 0; i < k; ++i) flatten_code(g, p[i], out);
    return out;
}

// Nonterminals that can derive a string containing an action.
std::vector<bool> derives_action(const Grammar& g) {
    std::vector<bool> r(g.nt.size(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t a = 0; a < g.nt.size(); ++a) {
            if (r[a]) continue;
            for (auto& p : g.prods[a])
                for (auto& s : p)
                    if (s.kind == Sym::Act || (s.kind == Sym::NT && r[std::size_t(s.id)])) {
                        r[a] = true;
                        changed = true;
                        goto next;
                    }
        next:;
        }
    }
    return r;
}

bool has_action(const Production& p, std::size_t from, std::size_t to, const std::vector<bool>& da) {
    for (std::size_t i = from; i < to; ++i)
        if (p[i].kind == Sym::Act || (p[i].kind == Sym::NT && da[std::size_t(p[i].id)])) return true;
    return false;
}

}  // namespace

Grammar lower(const SchemaSet& set, const std::string& schema_id, const CodeFilter& filter) {
    const Schema* s = set.find_schema(schema_id);
    if (!s) throw SchemaError("unknown schema '" + schema_id + "'");
    Grammar g;
    g.ctx = std::make_shared<Context>();
    Lowerer L(set, filter, g);
    auto ks = L.kids(s->root);
    if (ks.size() == 1 && ks[0]->kind != Block::Kind::Code) g.start = L.lower(*ks[0]);
    else g.start = L.lower_target(s->root, s->id);
    return prune(g);
}

// ---------------------------------------------------------------- step 2

Grammar eliminate_trivial(const Grammar& g0) {
    Grammar g = g0;
    std::size_t n = g.nt.size();
    std::vector<bool> productive(n, false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t a = 0; a < n; ++a) {
            if (productive[a]) continue;
            for (auto& p : g.prods[a]) {
                bool ok = true;
                for (auto& s : p)
                    if (s.kind == Sym::NT && !productive[std::size_t(s.id)]) ok = false;
                if (ok) {
                    productive[a] = changed = true;
                    break;
                }
            }
        }
    }
    for (auto& ps : g.prods)
        std::erase_if(ps, [&](const Production& p) {
            return std::any_of(p.begin(), p.end(), [&](const Sym& s) { return s.kind == Sym::NT && !productive[std::size_t(s.id)]; });
        });
    std::vector<bool> eps(n, true);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t a = 0; a < n; ++a) {
            if (!eps[a]) continue;
            bool ok = !g.prods[a].empty();
            for (auto& p : g.prods[a])
                for (auto& s : p)
                    if (s.kind != Sym::NT || !eps[std::size_t(s.id)]) ok = false;
            if (!ok) {
                eps[a] = false;
                changed = true;
            }
        }
    }
    if (eps[std::size_t(g.start)]) {
        g.prods[std::size_t(g.start)] = {Production{}};
        eps[std::size_t(g.start)] = false;
    }
    for (std::size_t a = 0; a < n; ++a) {
        if (eps[a]) continue;
        std::vector<Production> out;
        for (auto& p : g.prods[a]) {
            Production q;
            for (auto& s : p)
                if (!(s.kind == Sym::NT && eps[std::size_t(s.id)])) q.push_back(s);
            if (q.size() == 1 && q[0].kind == Sym::NT && q[0].id == int(a)) continue;
            out.push_back(std::move(q));
        }
        dedupe(out);
        g.prods[a] = std::move(out);
    }
    return prune(g);
}

// ---------------------------------------------------------------- step 3

Grammar eliminate_left_recursion(const Grammar& g0) {
    Grammar g = g0;
    auto cnt = code_nts(g);
    std::size_t n = g.nt.size();

    auto lead = [&](const Production& p) -> int {
        std::size_t k = code_prefix(p, cnt);
        if (k < p.size() && p[k].kind == Sym::NT) return p[k].id;
        return -1;
    };

    // Tarjan SCC over left-corner edges.
    std::vector<std::vector<int>> adj(n);
    for (std::size_t a = 0; a < n; ++a)
        for (auto& p : g.prods[a]) {
            int b = lead(p);
            if (b >= 0) adj[a].push_back(b);
        }
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on(n, false);
    std::vector<int> st;
    int counter = 0, ncomp = 0;
    std::function<void(int)> strong = [&](int v) {
        index[std::size_t(v)] = low[std::size_t(v)] = counter++;
        st.push_back(v);
        on[std::size_t(v)] = true;
        for (int w : adj[std::size_t(v)]) {
            if (index[std::size_t(w)] < 0) {
                strong(w);
                low[std::size_t(v)] = std::min(low[std::size_t(v)], low[std::size_t(w)]);
            } else if (on[std::size_t(w)]) {
                low[std::size_t(v)] = std::min(low[std::size_t(v)], index[std::size_t(w)]);
            }
        }
        if (low[std::size_t(v)] == index[std::size_t(v)]) {
            for (;;) {
                int w = st.back();
                st.pop_back();
                on[std::size_t(w)] = false;
                comp[std::size_t(w)] = ncomp;
                if (w == v) break;
            }
            ++ncomp;
        }
    };
    for (std::size_t a = 0; a < n; ++a)
        if (index[a] < 0) strong(int(a));

    std::vector<std::vector<int>> members{std::size_t(ncomp)};
    for (std::size_t a = 0; a < n; ++a) members[std::size_t(comp[a])].push_back(int(a));

    for (auto& mem : members) {
        bool recursive = mem.size() > 1;
        if (!recursive)
            for (int b : adj[std::size_t(mem[0])])
                if (b == mem[0]) recursive = true;
        if (!recursive) continue;
        std::sort(mem.begin(), mem.end());
        for (std::size_t i = 0; i < mem.size(); ++i) {
            int ai = mem[i];
            for (std::size_t j = 0; j < i; ++j) {
                int aj = mem[j];
                std::vector<Production> out;
                for (auto& p : g.prods[std::size_t(ai)]) {
                    std::size_t k = code_prefix(p, cnt);
                    if (k < p.size() && p[k].kind == Sym::NT && p[k].id == aj) {
                        for (auto& d : g.prods[std::size_t(aj)]) {
                            Production q(p.begin(), p.begin() + long(k));
                            q.insert(q.end(), d.begin(), d.end());
                            q.insert(q.end(), p.begin() + long(k) + 1, p.end());
                            out.push_back(std::move(q));
                        }
                    } else {
                        out.push_back(p);
                    }
                }
                dedupe(out);
                g.prods[std::size_t(ai)] = std::move(out);
            }
            // immediate recursion on ai
            std::vector<Production> rec, base;
            std::vector<std::size_t> rec_k;
            for (auto& p : g.prods[std::size_t(ai)]) {
                std::size_t k = code_prefix(p, cnt);
                if (k < p.size() && p[k].kind == Sym::NT && p[k].id == ai) {
                    if (k == 0 && p.size() == 1) continue;   // A -> A
                    rec.push_back(p);
                    rec_k.push_back(k);
                } else {
                    base.push_back(p);
                }
            }
            if (rec.empty()) {
                g.prods[std::size_t(ai)] = base;
                continue;
            }
            const std::string& name = g.nt[std::size_t(ai)];
            bool no_left = std::all_of(rec_k.begin(), rec_k.end(), [](std::size_t k) { return k == 0; });
            Production kappa;
            if (!no_left) {
                kappa = flat_prefix(g, rec[0], rec_k[0]);
                for (std::size_t r = 1; r < rec.size(); ++r)
                    if (flat_prefix(g, rec[r], rec_k[r]) != kappa)
                        throw CodeBlocksRewrite(name, "left recursion with different user code to the left of the recursive occurrence");
                auto da = derives_action(g);
                for (std::size_t r = 0; r < rec.size(); ++r)
                    if (has_action(rec[r], rec_k[r] + 1, rec[r].size(), da))
                        throw CodeBlocksRewrite(name, "left recursion with user code to the left of the recursive occurrence and user code to its right");
                for (auto& b : base)
                    if (has_action(b, 0, b.size(), da))
                        throw CodeBlocksRewrite(name, "left recursion with user code to the left of the recursive occurrence and user code in a non-recursive alternative");
            }
            int ap = g.add_nt(name + "'");
            cnt.push_back(false);
            std::vector<Production> nb, np;
            for (auto& b : base) {
                Production q = b;
                q.push_back(Sym{Sym::NT, ap});
                nb.push_back(std::move(q));
            }
            for (std::size_t r = 0; r < rec.size(); ++r) {
                Production q(rec[r].begin() + long(rec_k[r]) + 1, rec[r].end());
                q.insert(q.end(), kappa.begin(), kappa.end());
                q.push_back(Sym{Sym::NT, ap});
                np.push_back(std::move(q));
            }
            np.push_back({});
            dedupe(nb);
            dedupe(np);
            g.prods[std::size_t(ai)] = std::move(nb);
            g.prods[std::size_t(ap)] = std::move(np);
        }
    }
    return prune(g);
}

// ---------------------------------------------------------------- analysis

Analysis analyze(const Grammar& g) {
    std::size_t n = g.nt.size();
    Analysis a;
    a.nullable.assign(n, false);
    a.first.assign(n, {});
    a.follow.assign(n, {});
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t x = 0; x < n; ++x)
            for (auto& p : g.prods[x]) {
                bool nul = true;
                for (auto& s : p) {
                    if (s.kind == Sym::Act) continue;
                    if (s.kind == Sym::NT) {
                        for (int c : a.first[std::size_t(s.id)])
                            if (a.first[x].insert(c).second) changed = true;
                        if (a.nullable[std::size_t(s.id)]) continue;
                        nul = false;
                        break;
                    }
                    if (a.first[x].insert(term_class(*g.ctx, s)).second) changed = true;
                    nul = false;
                    break;
                }
                if (nul && !a.nullable[x]) {
                    a.nullable[x] = true;
                    changed = true;
                }
            }
    }
    a.follow[std::size_t(g.start)].insert(kEofClass);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t x = 0; x < n; ++x)
            for (auto& p : g.prods[x])
                for (std::size_t i = 0; i < p.size(); ++i) {
                    if (p[i].kind != Sym::NT) continue;
                    bool nul = false;
                    auto f = first_of(g, a, p, i + 1, nul);
                    auto& dst = a.follow[std::size_t(p[i].id)];
                    for (int c : f)
                        if (dst.insert(c).second) changed = true;
                    if (nul)
                        for (int c : a.follow[x])
                            if (dst.insert(c).second) changed = true;
                }
    }
    return a;
}

std::set<int> first_of(const Grammar& g, const Analysis& a, const Production& p, std::size_t from, bool& nullable) {
    std::set<int> out;
    nullable = true;
    for (std::size_t i = from; i < p.size(); ++i) {
        const Sym& s = p[i];
        if (s.kind == Sym::Act) continue;
        if (s.kind == Sym::NT) {
            out.insert(a.first[std::size_t(s.id)].begin(), a.first[std::size_t(s.id)].end());
            if (a.nullable[std::size_t(s.id)]) continue;
            nullable = false;
            return out;
        }
        out.insert(term_class(*g.ctx, s));
        nullable = false;
        return out;
    }
    return out;
}

// ---------------------------------------------------------------- step 4

Grammar left_factor(const Grammar& g0) {
    Grammar g = g0;
    int budget = 100;   // leading-nonterminal expansions; hidden left recursion would unroll forever
    for (std::size_t x = 0; x < g.nt.size(); ++x) {
        for (;;) {
            auto cnt = code_nts(g);
            Analysis an = analyze(g);
            auto& ps = g.prods[x];
            std::vector<std::set<int>> fs;
            for (auto& p : ps) {
                bool nul;
                fs.push_back(first_of(g, an, p, 0, nul));
            }
            int pi = -1, qi = -1;
            for (std::size_t i = 0; i < ps.size() && pi < 0; ++i)
                for (std::size_t j = i + 1; j < ps.size(); ++j) {
                    bool overlap = std::any_of(fs[i].begin(), fs[i].end(), [&](int c) { return fs[j].count(c) != 0; });
                    if (overlap) {
                        pi = int(i);
                        qi = int(j);
                        break;
                    }
                }
            if (pi < 0) break;
            const Production p = ps[std::size_t(pi)], q = ps[std::size_t(qi)];
            std::size_t kp = code_prefix(p, cnt), kq = code_prefix(q, cnt);
            bool lp = kp < p.size(), lq = kq < q.size();
            if (lp && lq && p[kp] == q[kq]) {
                Sym head = p[kp];
                std::vector<std::size_t> grp;
                for (std::size_t r = 0; r < ps.size(); ++r) {
                    std::size_t k = code_prefix(ps[r], cnt);
                    if (k < ps[r].size() && ps[r][k] == head) grp.push_back(r);
                }
                Production kappa = flat_prefix(g, ps[grp[0]], code_prefix(ps[grp[0]], cnt));
                std::vector<Production> members;
                for (auto r : grp) {
                    std::size_t k = code_prefix(ps[r], cnt);
                    if (flat_prefix(g, ps[r], k) != kappa)
                        throw CodeBlocksRewrite(g.nt[x], "productions share a prefix but differ in user code before it");
                    Production m = kappa;
                    m.insert(m.end(), ps[r].begin() + long(k), ps[r].end());
                    members.push_back(std::move(m));
                }
                std::size_t lcp = members[0].size();
                for (auto& m : members) {
                    std::size_t l = 0;
                    while (l < lcp && l < m.size() && m[l] == members[0][l]) ++l;
                    lcp = l;
                }
                std::vector<Production> tails;
                for (auto& m : members) tails.emplace_back(m.begin() + long(lcp), m.end());
                dedupe(tails);
                Production merged(members[0].begin(), members[0].begin() + long(lcp));
                if (tails.size() == 1) {
                    merged.insert(merged.end(), tails[0].begin(), tails[0].end());
                } else {
                    std::string name = g.nt[x] + "'";
                    int nn = g.add_nt(name);
                    g.prods[std::size_t(nn)] = tails;
                    merged.push_back(Sym{Sym::NT, nn});
                }
                auto& ps2 = g.prods[x];
                std::vector<Production> out;
                for (std::size_t r = 0; r < ps2.size(); ++r) {
                    if (r == grp[0]) out.push_back(merged);
                    else if (std::find(grp.begin(), grp.end(), r) == grp.end()) out.push_back(ps2[r]);
                }
                dedupe(out);
                g.prods[x] = std::move(out);
                continue;
            }
            // expand a leading nonterminal
            int which = -1;
            if (lp && p[kp].kind == Sym::NT && p[kp].id != int(x)) which = pi;
            else if (lq && q[kq].kind == Sym::NT && q[kq].id != int(x)) which = qi;
            if (which < 0 || --budget <= 0) break;
            const Production w = ps[std::size_t(which)];
            std::size_t k = which == pi ? kp : kq;
            std::vector<Production> out;
            for (std::size_t r = 0; r < ps.size(); ++r) {
                if (int(r) != which) {
                    out.push_back(ps[r]);
                    continue;
                }
                for (auto& d : g.prods[std::size_t(w[k].id)]) {
                    Production e(w.begin(), w.begin() + long(k));
                    e.insert(e.end(), d.begin(), d.end());
                    e.insert(e.end(), w.begin() + long(k) + 1, w.end());
                    out.push_back(std::move(e));
                }
            }
            dedupe(out);
            g.prods[x] = std::move(out);
        }
    }
    return prune(g);
}

// ---------------------------------------------------------------- step 5

namespace {

bool contains(const Production& p, std::size_t from, std::size_t to, int a) {
    for (std::size_t i = from; i < to; ++i)
        if (p[i].kind == Sym::NT && p[i].id == a) return true;
    return false;
}

void replace_nt(Grammar& g, int a, const Production& with) {
    for (auto& ps : g.prods)
        for (auto& p : ps) {
            Production q;
            for (auto& s : p) {
                if (s.kind == Sym::NT && s.id == a) q.insert(q.end(), with.begin(), with.end());
                else q.push_back(s);
            }
            p = std::move(q);
        }
}

bool suffix_rule(Grammar& g, std::vector<bool>& dead) {
    for (std::size_t a = 0; a < g.nt.size(); ++a) {
        if (dead[a] || int(a) == g.start) continue;
        auto& ps = g.prods[a];
        if (ps.empty()) continue;
        std::size_t len = ps[0].size();
        for (auto& p : ps) len = std::min(len, p.size());
        std::size_t l = 0;
        while (l < len) {
            const Sym& s = ps[0][ps[0].size() - 1 - l];
            bool same = std::all_of(ps.begin(), ps.end(), [&](const Production& p) { return p[p.size() - 1 - l] == s; });
            if (!same) break;
            ++l;
        }
        if (l == 0) continue;
        bool self = false;
        for (auto& p : ps)
            if (contains(p, 0, p.size(), int(a))) self = true;
        if (self) continue;
        Production beta(ps[0].end() - long(l), ps[0].end());
        if (ps.size() == 1) {
            dead[a] = true;
            ps.clear();
            replace_nt(g, int(a), beta);
        } else {
            for (auto& p : ps) p.resize(p.size() - l);
            Production with{Sym{Sym::NT, int(a)}};
            with.insert(with.end(), beta.begin(), beta.end());
            replace_nt(g, int(a), with);
        }
        return true;
    }
    return false;
}

bool duplicate_rule(Grammar& g, std::vector<bool>& dead) {
    std::size_t n = g.nt.size();
    std::vector<std::vector<Production>> norm(n);
    for (std::size_t a = 0; a < n; ++a) {
        norm[a] = g.prods[a];
        std::sort(norm[a].begin(), norm[a].end());
        norm[a].erase(std::unique(norm[a].begin(), norm[a].end()), norm[a].end());
    }
    for (std::size_t a = 0; a < n; ++a) {
        if (dead[a]) continue;
        for (std::size_t b = a + 1; b < n; ++b) {
            if (dead[b] || norm[a] != norm[b]) continue;
            int keep = int(a), drop = int(b);
            if (drop == g.start) std::swap(keep, drop);
            dead[std::size_t(drop)] = true;
            g.prods[std::size_t(drop)].clear();
            replace_nt(g, drop, {Sym{Sym::NT, keep}});
            return true;
        }
    }
    return false;
}

}  // namespace

Grammar cleanup(const Grammar& g0) {
    Grammar g = g0;
    std::vector<bool> dead(g.nt.size(), false);
    for (int guard = 0; guard < 100000; ++guard) {
        bool any = false;
        while (suffix_rule(g, dead)) any = true;
        while (duplicate_rule(g, dead)) any = true;
        if (!any) break;
    }
    for (auto& ps : g.prods) dedupe(ps);
    return prune(g);
}

Grammar finalize(const Grammar& g0) {
    Grammar g = prune(g0);
    for (auto& ps : g.prods)
        std::stable_partition(ps.begin(), ps.end(), [](const Production& p) { return p.empty(); });
    return g;
}

// ---------------------------------------------------------------- table

int ParseTable::cell(int nt, int cls) const {
    auto& row = cells[std::size_t(nt)];
    auto it = row.find(cls);
    return it == row.end() ? -1 : it->second;
}

std::vector<int> ParseTable::columns() const {
    std::set<int> used;
    for (auto& row : cells)
        for (auto& [c, p] : row) used.insert(c);
    std::vector<int> out;
    for (int c : used)
        if (c >= 2 && c % 2 == 0) out.push_back(c);
    if (used.count(kDataClass)) out.push_back(kDataClass);
    for (int c : used)
        if (c >= 2 && c % 2 == 1) out.push_back(c);
    if (used.count(kEofClass)) out.push_back(kEofClass);
    return out;
}

std::string ParseTable::dump() const {
    auto cols = columns();
    std::size_t w0 = 0;
    for (auto& n : g.nt) w0 = std::max(w0, n.size());
    std::vector<std::string> head;
    std::vector<std::size_t> w;
    for (int c : cols) {
        head.push_back(class_text(*g.ctx, c));
        w.push_back(head.back().size());
    }
    std::vector<std::vector<std::string>> body;
    std::vector<int> rows{g.start};
    for (int a = 0; a < int(g.nt.size()); ++a)
        if (a != g.start) rows.push_back(a);
    for (int a : rows) {
        std::vector<std::string> r;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            int p = cell(a, cols[i]);
            r.push_back(p < 0 ? "" : g.nt[std::size_t(a)] + "/" + std::to_string(p + 1));
            w[i] = std::max(w[i], r.back().size());
        }
        body.push_back(std::move(r));
    }
    auto line = [&](const std::string& first, const std::vector<std::string>& cells_) {
        std::string s = first + std::string(w0 - first.size(), ' ') + " |";
        for (std::size_t i = 0; i < cells_.size(); ++i) s += " " + cells_[i] + std::string(w[i] - cells_[i].size(), ' ');
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s + "\n";
    };
    std::string out = line("", head);
    for (std::size_t r = 0; r < rows.size(); ++r) out += line(g.nt[std::size_t(rows[r])], body[r]);
    return out;
}

ParseTable build_table(const Grammar& g) {
    ParseTable t;
    t.g = g;
    t.cells.resize(g.nt.size());
    Analysis an = analyze(g);
    for (std::size_t a = 0; a < g.nt.size(); ++a) {
        for (std::size_t i = 0; i < g.prods[a].size(); ++i) {
            bool nul;
            auto f = first_of(g, an, g.prods[a][i], 0, nul);
            if (nul) f.insert(an.follow[a].begin(), an.follow[a].end());
            for (int c : f) {
                auto [it, fresh] = t.cells[a].emplace(c, int(i));
                if (!fresh && it->second != int(i))
                    throw LL1Conflict(g.nt[a], class_text(*g.ctx, c), {it->second + 1, int(i) + 1});
            }
        }
    }
    return t;
}

Compiled compile(const SchemaSet& set, const std::string& schema_id, const CodeFilter& filter) {
    Compiled c;
    c.raw = lower(set, schema_id, filter);
    c.trivial = eliminate_trivial(c.raw);
    c.no_left_recursion = eliminate_left_recursion(c.trivial);
    c.factored = left_factor(c.no_left_recursion);
    c.cleaned = cleanup(c.factored);
    c.final = finalize(c.cleaned);
    c.table = build_table(c.final);
    return c;
}

}  // namespace bsml
