#include "bsml/runtime.hpp"

#include <sstream>

#include "bsml/error.hpp"

namespace bsml {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    return s.substr(a, b - a);
}

std::string event_text(const Event& e) {
    switch (e.kind) {
        case Event::StartElement: return "s(" + e.name + ")";
        case Event::EndElement: return "e(" + e.name + ")";
        case Event::CharData: return "d(\"" + (e.name.size() > 32 ? e.name.substr(0, 32) + "..." : e.name) + "\")";
        case Event::EndOfStream: return "EOF";
    }
    return "?";
}

struct RejectSignal {
    std::string expected, message;
};

}  // namespace

std::string ParseResult::describe() const {
    if (accepted) return "accepted";
    std::ostringstream o;
    o << "rejected at event " << ordinal << " (" << (path.empty() ? "/" : path) << "): " << message;
    if (!expected.empty()) o << "; expected " << expected;
    if (!got.empty()) o << "; got " << got;
    return o.str();
}

GenericTree capture_wildcard(const EventSource& pull, const Event& start) {
    GenericTree root;
    root.value = start.name;
    root.attrs = start.attrs;
    std::vector<GenericTree*> stack{&root};
    Event ev;
    while (!stack.empty()) {
        if (!pull(ev) || ev.kind == Event::EndOfStream) throw XmlError("unterminated wildcard content <" + start.name + ">", ev.line, 0);
        GenericTree* top = stack.back();
        switch (ev.kind) {
            case Event::StartElement: {
                GenericTree t;
                t.value = ev.name;
                t.attrs = ev.attrs;
                top->children.push_back(std::move(t));
                stack.push_back(&top->children.back());
                break;
            }
            case Event::EndElement:
                if (ev.name != top->value) throw XmlError("mismatched </" + ev.name + "> in wildcard content", ev.line, 0);
                stack.pop_back();
                break;
            case Event::CharData: {
                GenericTree t;
                t.is_text = true;
                t.value = ev.name;
                top->children.push_back(std::move(t));
                break;
            }
            case Event::EndOfStream: break;
        }
    }
    return root;
}

ParseResult Parser::run(const EventSource& pull, const std::function<std::size_t()>& source_bytes) {
    ParseResult res;
    const Grammar& g = t_.g;
    const Context& ctx = *g.ctx;
    std::vector<Sym> stack{Sym{Sym::Eof, 0}, Sym{Sym::NT, g.start}};
    Env env;
    int depth = 0;
    std::vector<std::string> open;
    std::vector<std::vector<unsigned>> reps(std::size_t(ctx.reps));
    Event la;

    auto advance = [&] {
        if (!pull(la)) {
            la = Event{};
            la.kind = Event::EndOfStream;
        }
        ++res.events;
    };
    auto class_of = [&](const Event& e) -> int {
        switch (e.kind) {
            case Event::StartElement: {
                int n = ctx.find_name(e.name);
                return n < 0 ? -1 : 2 + 2 * n;
            }
            case Event::EndElement: {
                int n = ctx.find_name(e.name);
                return n < 0 ? -1 : 3 + 2 * n;
            }
            case Event::CharData: return kDataClass;
            case Event::EndOfStream: return kEofClass;
        }
        return -1;
    };
    auto row_expected = [&](int nt) {
        std::string s;
        for (auto& [c, p] : t_.cells[std::size_t(nt)]) s += (s.empty() ? "" : ", ") + class_text(ctx, c);
        return s;
    };
    auto measure = [&] {
        std::size_t b = stack.capacity() * sizeof(Sym) + env.bytes() + open.capacity() * sizeof(std::string) +
                        sizeof(Event) + la.name.capacity();
        for (auto& o : open) b += o.capacity();
        for (auto& r : reps) b += r.capacity() * sizeof(unsigned);
        if (source_bytes) b += source_bytes();
        if (b > res.peak_retained) res.peak_retained = b;
    };
    auto reject = [](std::string expected, std::string message) -> RejectSignal {
        return RejectSignal{std::move(expected), std::move(message)};
    };

    try {
        advance();
        for (;;) {
            Sym top = stack.back();
            if (top.kind == Sym::Act) {
                stack.pop_back();
                const ActionInfo& a = ctx.actions[std::size_t(top.id)];
                switch (a.kind) {
                    case ActionInfo::User: sink_.on_action(top.id, a, env); break;
                    case ActionInfo::Begin: reps[std::size_t(a.rep)].push_back(0); break;
                    case ActionInfo::Append: {
                        auto& r = reps[std::size_t(a.rep)];
                        if (++r.back() > a.max.value_or(~0u))
                            throw reject("", "repetition maximum " + std::to_string(*a.max) + " exceeded");
                        break;
                    }
                    case ActionInfo::End: {
                        auto& r = reps[std::size_t(a.rep)];
                        if (r.back() < a.min)
                            throw reject("", "repetition minimum " + std::to_string(a.min) + " not reached (" +
                                                 std::to_string(r.back()) + " occurrences)");
                        r.pop_back();
                        break;
                    }
                    case ActionInfo::Default: env.bind(a.elem, Value{a.value, nullptr}, depth + 1); break;
                    case ActionInfo::Convert: {
                        std::vector<double> vals;
                        for (auto& as : a.assigns)
                            vals.push_back(as.expr->eval([&](const std::string& n) -> std::optional<double> {
                                auto* b = env.find(n);
                                if (!b || b->value.tree) return std::nullopt;
                                std::string t = trim(b->value.text);
                                try {
                                    std::size_t used = 0;
                                    double d = std::stod(t, &used);
                                    if (used != t.size()) return std::nullopt;
                                    return d;
                                } catch (const std::exception&) {
                                    return std::nullopt;
                                }
                            }));
                        for (std::size_t i = 0; i < vals.size(); ++i) {
                            Value v{format_double(vals[i]), nullptr};
                            if (auto* b = env.find(a.assigns[i].target)) b->value = std::move(v);
                            else env.bind(a.assigns[i].target, std::move(v), depth + 1);
                        }
                        break;
                    }
                }
                continue;
            }
            if (top.kind == Sym::NT) {
                int cls = class_of(la);
                int p = cls < 0 ? -1 : t_.cell(top.id, cls);
                if (p < 0 && la.kind == Event::EndElement) p = t_.cell(top.id, kDataClass);
                if (p < 0) throw reject(row_expected(top.id), "unexpected " + event_text(la));
                stack.pop_back();
                auto& body = g.prods[std::size_t(top.id)][std::size_t(p)];
                for (auto it = body.rbegin(); it != body.rend(); ++it) stack.push_back(*it);
                continue;
            }
            std::string want = ctx.sym_text(top);
            switch (top.kind) {
                case Sym::Eof:
                    if (la.kind != Event::EndOfStream) throw reject("EOF", "content after the document");
                    res.accepted = true;
                    measure();
                    return res;
                case Sym::Start: {
                    if (la.kind != Event::StartElement || la.name != ctx.start_name(top.id))
                        throw reject(want, "unexpected " + event_text(la));
                    ++depth;
                    open.push_back(la.name);
                    const auto& decls = ctx.starts[std::size_t(top.id)].attrs;
                    for (auto& [k, v] : la.attrs) {
                        const AttributeDecl* d = nullptr;
                        for (auto& x : decls)
                            if (x.name == k) d = &x;
                        if (!d) throw reject("", "undeclared attribute '" + k + "' on <" + la.name + ">");
                        std::string lit = trim(v);
                        try {
                            check_value(d->type, lit);
                        } catch (const ValueError& e) {
                            throw reject("", "attribute '" + k + "': " + e.what());
                        }
                        env.bind(k, Value{lit, nullptr}, depth);
                    }
                    for (auto& d : decls) {
                        bool present = false;
                        for (auto& [k, v] : la.attrs)
                            if (k == d.name) present = true;
                        if (present) continue;
                        if (!d.default_value) throw reject("", "missing required attribute '" + d.name + "' on <" + la.name + ">");
                        env.bind(d.name, Value{*d.default_value, nullptr}, depth);
                    }
                    stack.pop_back();
                    advance();
                    break;
                }
                case Sym::Wild: {
                    if (la.kind != Event::StartElement || la.name != ctx.start_name(top.id))
                        throw reject(want, "unexpected " + event_text(la));
                    auto tree = std::make_shared<GenericTree>(capture_wildcard(pull, la));
                    env.bind(la.name, Value{{}, std::move(tree)}, depth + 1);
                    stack.pop_back();
                    advance();
                    break;
                }
                case Sym::End: {
                    if (la.kind != Event::EndElement || la.name != ctx.names[std::size_t(top.id)])
                        throw reject(want, "unexpected " + event_text(la));
                    measure();
                    env.close(depth);
                    --depth;
                    open.pop_back();
                    stack.pop_back();
                    advance();
                    break;
                }
                case Sym::Data: {
                    std::string text;
                    if (la.kind == Event::CharData) text = trim(la.name);
                    else if (la.kind != Event::EndElement) throw reject(want, "unexpected " + event_text(la));
                    try {
                        check_value(ctx.datas[std::size_t(top.id)], text);
                    } catch (const ValueError& e) {
                        throw reject("", std::string("content of <") + (open.empty() ? "" : open.back()) + ">: " + e.what());
                    }
                    env.bind(open.empty() ? std::string() : open.back(), Value{text, nullptr}, depth);
                    stack.pop_back();
                    if (la.kind == Event::CharData) advance();
                    break;
                }
                default: throw reject(want, "internal: bad stack symbol");
            }
        }
    } catch (const RejectSignal& r) {
        res.expected = r.expected;
        res.message = r.message;
    } catch (const Error& e) {
        res.message = e.what();
    }
    res.accepted = false;
    res.ordinal = la.ordinal;
    res.got = event_text(la);
    for (auto& o : open) res.path += "/" + o;
    measure();
    return res;
}

ParseResult parse_stream(const ParseTable& table, std::istream& in, ActionSink& sink) {
    Tokenizer tok(in);
    Parser p(table, sink);
    return p.run([&](Event& e) { return tok.next(e); }, [&] { return tok.retained_bytes(); });
}

ParseResult parse_events(const ParseTable& table, const std::vector<Event>& events, ActionSink& sink) {
    std::size_t i = 0;
    Parser p(table, sink);
    return p.run([&](Event& e) {
        if (i >= events.size()) return false;
        e = events[i++];
        if (e.ordinal == 0) e.ordinal = i;
        return true;
    });
}

ParseResult parse_text(const ParseTable& table, const std::string& xml, ActionSink& sink) {
    std::istringstream in(xml);
    return parse_stream(table, in, sink);
}

}  // namespace bsml
