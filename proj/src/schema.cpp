#include "bsml/schema.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "bsml/error.hpp"

namespace bsml {

const char* base_name(Base b) {
    switch (b) {
        case Base::Integer: return "integer";
        case Base::String: return "string";
        case Base::Double: return "double";
        case Base::Boolean: return "boolean";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    return s.substr(a, b - a);
}

bool parse_int(const std::string& s, long long& out) {
    const char* p = s.data();
    const char* e = p + s.size();
    if (p != e && *p == '+') ++p;
    if (p == e) return false;
    auto r = std::from_chars(p, e, out);
    return r.ec == std::errc() && r.ptr == e;
}

bool parse_double(const std::string& s, double& out) {
    const char* p = s.data();
    const char* e = p + s.size();
    if (p != e && *p == '+') ++p;
    if (p == e) return false;
    auto r = std::from_chars(p, e, out);
    if (r.ec == std::errc::result_out_of_range) {
        // overflow to infinity / underflow to zero, as strtod would
        out = std::strtod(std::string(p, e).c_str(), nullptr);
        return true;
    }
    return r.ec == std::errc() && r.ptr == e;
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1") return out = true, true;
    if (s == "false" || s == "0") return out = false, true;
    return false;
}

std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

bool flag_value(const std::string& v, const std::string& what) {
    bool b;
    if (!parse_bool(v, b)) throw SchemaError("bad boolean '" + v + "' for " + what);
    return b;
}

// numeric value of a bound for comparison; string/integer bounds are integers
double bound_value(Base base, const std::string& txt, const std::string& ctx) {
    if (base == Base::Double) {
        double d;
        if (!parse_double(txt, d)) throw SchemaError("bad bound '" + txt + "' in " + ctx);
        return d;
    }
    long long i;
    if (!parse_int(txt, i)) throw SchemaError("bad bound '" + txt + "' in " + ctx);
    return double(i);
}

}  // namespace

TypedValue check_value(const PrimitiveType& t, const std::string& literal) {
    TypedValue v;
    v.base = t.base;
    v.text = trim(literal);
    const std::string& s = v.text;
    auto reject = [&](const std::string& why) -> void {
        throw ValueError("value '" + s + "' rejected by type " + (t.id.empty() ? base_name(t.base) : t.id) +
                         ": " + why);
    };
    switch (t.base) {
        case Base::Integer: {
            if (!parse_int(s, v.i)) reject("not an integer");
            v.d = double(v.i);
            if (t.min) {
                long long m;
                parse_int(*t.min, m);
                if (v.i < m) reject("below minimum " + *t.min);
            }
            if (t.max) {
                long long m;
                parse_int(*t.max, m);
                if (v.i > m) reject("above maximum " + *t.max);
            }
            break;
        }
        case Base::Double: {
            if (!parse_double(s, v.d)) reject("not a double");
            if (t.number && std::isnan(v.d)) reject("NaN not allowed");
            if (t.finite && std::isinf(v.d)) reject("infinity not allowed");
            double m;
            if (t.min && parse_double(*t.min, m) && v.d < m) reject("below minimum " + *t.min);
            if (t.max && parse_double(*t.max, m) && v.d > m) reject("above maximum " + *t.max);
            break;
        }
        case Base::Boolean:
            if (!parse_bool(s, v.b)) reject("not a boolean");
            break;
        case Base::String: {
            long long m;
            std::size_t n = utf8_length(s);
            if (t.min && parse_int(*t.min, m) && (long long)n < m) reject("shorter than " + *t.min);
            if (t.max && parse_int(*t.max, m) && (long long)n > m) reject("longer than " + *t.max);
            break;
        }
    }
    if (t.values) {
        bool ok = false;
        for (auto& lit : *t.values) {
            std::string l = trim(lit);
            if (t.base == Base::Double) {
                double d;
                if (parse_double(l, d) && d == v.d) ok = true;
            } else if (t.base == Base::Integer) {
                long long i;
                if (parse_int(l, i) && i == v.i) ok = true;
            } else if (t.base == Base::Boolean) {
                bool b;
                if (parse_bool(l, b) && b == v.b) ok = true;
            } else if (l == s) {
                ok = true;
            }
            if (ok) break;
        }
        if (!ok) reject("not among the allowed values");
    }
    return v;
}

PrimitiveType builtin_type(Base b) {
    PrimitiveType t;
    t.base = b;
    return t;
}

const PrimitiveType* SchemaSet::find_type(const std::string& id) const {
    for (auto& t : types)
        if (t.id == id) return &t;
    return nullptr;
}

const Schema* SchemaSet::find_schema(const std::string& id) const {
    for (auto& s : schemas)
        if (s.id == id) return &s;
    return nullptr;
}

namespace {
const Block* find_block(const Block& b, const std::string& id) {
    if (!id.empty() && b.id == id && b.kind != Block::Kind::Ref) return &b;
    for (auto& c : b.children)
        if (auto* r = find_block(c, id)) return r;
    return nullptr;
}
}  // namespace

const Block* SchemaSet::resolve(const std::string& id) const {
    if (auto* s = find_schema(id)) return &s->root;
    for (auto& s : schemas)
        if (auto* r = find_block(s.root, id)) return r;
    return nullptr;
}

PrimitiveType derive_type(const SchemaSet& set, const std::string& type_ref, const FacetText& f,
                          const std::string& context) {
    PrimitiveType t;
    if (type_ref == "integer") t = builtin_type(Base::Integer);
    else if (type_ref == "string") t = builtin_type(Base::String);
    else if (type_ref == "double") t = builtin_type(Base::Double);
    else if (type_ref == "boolean") t = builtin_type(Base::Boolean);
    else if (auto* p = set.find_type(type_ref)) t = *p;
    else throw SchemaError("unknown base type '" + type_ref + "' in " + context);
    t.id.clear();
    if (f.empty()) {
        t.id = set.find_type(type_ref) ? type_ref : std::string();
        return t;
    }
    const Base lenbase = t.base == Base::Double ? Base::Double : Base::Integer;
    if (f.min) {
        if (t.base == Base::Boolean) throw SchemaError("min on boolean type in " + context);
        double nv = bound_value(lenbase, *f.min, context);
        if (t.min && nv < bound_value(lenbase, *t.min, context))
            throw SchemaError("derived minimum " + *f.min + " widens " + *t.min + " in " + context);
        t.min = f.min;
    }
    if (f.max) {
        if (t.base == Base::Boolean) throw SchemaError("max on boolean type in " + context);
        double nv = bound_value(lenbase, *f.max, context);
        if (t.max && nv > bound_value(lenbase, *t.max, context))
            throw SchemaError("derived maximum " + *f.max + " widens " + *t.max + " in " + context);
        t.max = f.max;
    }
    if (t.min && t.max && bound_value(lenbase, *t.min, context) > bound_value(lenbase, *t.max, context))
        throw SchemaError("min > max in " + context);
    if (f.number) {
        bool v = flag_value(*f.number, "number");
        if (v && t.base != Base::Double) throw SchemaError("number flag on non-double type in " + context);
        if (!v && t.number) throw SchemaError("number flag cannot be relaxed in " + context);
        t.number = v;
    }
    if (f.finite) {
        bool v = flag_value(*f.finite, "finite");
        if (v && t.base != Base::Double) throw SchemaError("finite flag on non-double type in " + context);
        if (!v && t.finite) throw SchemaError("finite flag cannot be relaxed in " + context);
        t.finite = v;
    }
    if (f.units) {
        if (t.base != Base::Double) throw SchemaError("units on non-double type in " + context);
        if (t.units && *t.units != *f.units)
            throw SchemaError("units " + *f.units + " conflict with inherited " + *t.units + " in " + context);
        t.units = f.units;
    }
    if (f.values) {
        PrimitiveType parent = t;
        parent.values.reset();
        for (auto& v : *f.values) {
            try {
                check_value(parent, v);
            } catch (const ValueError&) {
                throw SchemaError("enumerated value '" + v + "' violates base type in " + context);
            }
        }
        if (t.values)
            for (auto& v : *f.values) {
                bool found = false;
                for (auto& pv : *t.values)
                    if (trim(pv) == trim(v)) found = true;
                if (!found) throw SchemaError("enumerated value '" + v + "' widens parent in " + context);
            }
        t.values = f.values;
    }
    return t;
}

Block Block::element(std::string name, std::vector<Block> kids) {
    Block b;
    b.kind = Kind::Element;
    b.name = std::move(name);
    b.children = std::move(kids);
    return b;
}

Block Block::primitive(std::string name, const PrimitiveType& t, std::string type_ref) {
    Block b;
    b.kind = Kind::Element;
    b.name = std::move(name);
    b.content = Content::Primitive;
    Block d;
    d.kind = Kind::Data;
    d.type = t;
    d.type_ref = type_ref.empty() ? (t.id.empty() ? base_name(t.base) : t.id) : type_ref;
    b.children.push_back(std::move(d));
    return b;
}

Block Block::sequence(std::vector<Block> kids) {
    Block b;
    b.kind = Kind::Sequence;
    b.children = std::move(kids);
    return b;
}

Block Block::selection(std::vector<Block> kids) {
    Block b;
    b.kind = Kind::Selection;
    b.children = std::move(kids);
    return b;
}

Block Block::repetition(unsigned min, std::optional<unsigned> max, std::vector<Block> kids) {
    Block b;
    b.kind = Kind::Repetition;
    b.min = min;
    b.max = max;
    b.children = std::move(kids);
    return b;
}

Block Block::code(std::string text) {
    Block b;
    b.kind = Kind::Code;
    b.text = std::move(text);
    return b;
}

Block Block::reference(std::string id) {
    Block b;
    b.kind = Kind::Ref;
    b.ref = std::move(id);
    return b;
}

std::string block_label(const Block& b) {
    switch (b.kind) {
        case Block::Kind::Element: return "element '" + b.name + "'";
        case Block::Kind::Sequence: return b.id.empty() ? "sequence" : "sequence '" + b.id + "'";
        case Block::Kind::Selection: return b.id.empty() ? "selection" : "selection '" + b.id + "'";
        case Block::Kind::Repetition: return b.id.empty() ? "repetition" : "repetition '" + b.id + "'";
        case Block::Kind::Ref: return "ref '" + b.ref + "'";
        case Block::Kind::Code: return "code '" + b.text.substr(0, 24) + "'";
        case Block::Kind::Data: return "data(" + b.type_ref + ")";
    }
    return "?";
}

namespace {

struct Loader {
    SchemaSet& set;

    FacetText facets_of(const XmlNode& n) {
        FacetText f;
        if (auto* v = n.attr("min")) f.min = *v;
        if (auto* v = n.attr("max")) f.max = *v;
        if (auto* v = n.attr("number")) f.number = *v;
        if (auto* v = n.attr("finite")) f.finite = *v;
        if (auto* v = n.attr("units")) f.units = *v;
        for (auto& c : n.children)
            if (c.name == "values") {
                std::vector<std::string> vals;
                for (auto& v : c.children) {
                    if (v.name != "value") throw SchemaError("unexpected <" + v.name + "> in <values>");
                    vals.push_back(trim(v.text));
                }
                f.values = std::move(vals);
            }
        return f;
    }

    static void no_text(const XmlNode& n) {
        if (!trim(n.text).empty())
            throw SchemaError("mixed content is not supported (text inside <" + n.name + "> at line " +
                              std::to_string(n.line) + ")");
    }

    static bool opt_flag(const XmlNode& n) {
        auto* v = n.attr("optional");
        return v && flag_value(*v, "optional");
    }

    static void check_attrs(const XmlNode& n, std::initializer_list<const char*> allowed) {
        for (auto& a : n.attrs) {
            bool ok = false;
            for (auto* x : allowed)
                if (a.first == x) ok = true;
            if (!ok) throw SchemaError("unexpected attribute '" + a.first + "' on <" + n.name + ">");
        }
    }

    std::vector<Block> blocks(const XmlNode& n) {
        std::vector<Block> out;
        for (auto& c : n.children) {
            if (c.name == "description") continue;
            if (c.name == "element" || c.name == "sequence" || c.name == "selection" || c.name == "repetition" ||
                c.name == "ref" || c.name == "code")
                out.push_back(block(c));
            else if (c.name == "attribute" || c.name == "values" || c.name == "default")
                continue;   // handled by the owning element
            else
                throw SchemaError("unexpected <" + c.name + "> at line " + std::to_string(c.line));
        }
        return out;
    }

    AttributeDecl attribute(const XmlNode& n) {
        check_attrs(n, {"name", "id", "type", "default", "min", "max", "number", "finite", "units"});
        AttributeDecl a;
        auto* name = n.attr("name");
        if (!name) throw SchemaError("attribute without name at line " + std::to_string(n.line));
        a.name = *name;
        if (auto* v = n.attr("id")) a.id = *v;
        if (auto* v = n.attr("type")) a.type_ref = *v;
        a.facets = facets_of(n);
        a.type = derive_type(set, a.type_ref, a.facets, "attribute '" + a.name + "'");
        if (auto* v = n.attr("default")) {
            a.default_value = *v;
            try {
                check_value(a.type, *v);
            } catch (const ValueError& e) {
                throw SchemaError(std::string("bad default for attribute '") + a.name + "': " + e.what());
            }
        }
        return a;
    }

    Block block(const XmlNode& n) {
        Block b;
        if (n.name == "element") {
            check_attrs(n, {"name", "id", "optional", "type", "default", "min", "max", "number", "finite", "units"});
            b.kind = Block::Kind::Element;
            auto* name = n.attr("name");
            if (!name) throw SchemaError("element without name at line " + std::to_string(n.line));
            b.name = *name;
            if (auto* v = n.attr("id")) b.id = *v;
            b.optional = opt_flag(n);
            for (auto& c : n.children)
                if (c.name == "attribute") b.attrs.push_back(attribute(c));
            std::set<std::string> seen;
            for (auto& a : b.attrs)
                if (!seen.insert(a.name).second)
                    throw SchemaError("duplicate attribute '" + a.name + "' on element '" + b.name + "'");
            auto* type = n.attr("type");
            FacetText f = facets_of(n);
            const XmlNode* def_node = nullptr;
            for (auto& c : n.children)
                if (c.name == "default") def_node = &c;
            if (type && *type == "*") {
                b.content = Block::Content::Wildcard;
                if (!f.empty()) throw SchemaError("wildcard element '" + b.name + "' cannot carry facets");
                if (!blocks(n).empty()) throw SchemaError("wildcard element '" + b.name + "' has children");
                if (n.attr("default") || def_node)
                    throw SchemaError("wildcard element '" + b.name + "' cannot have a default");
            } else if (type) {
                b.content = Block::Content::Primitive;
                Block d;
                d.kind = Block::Kind::Data;
                d.type_ref = *type;
                d.facets = f;
                d.type = derive_type(set, *type, f, "element '" + b.name + "'");
                if (!blocks(n).empty()) throw SchemaError("typed element '" + b.name + "' has child blocks");
                no_text(n);
                if (auto* v = n.attr("default")) b.default_value = *v;
                if (def_node) {
                    if (!def_node->children.empty())
                        throw SchemaError("structured <default> content is not supported (element '" + b.name +
                                          "')");
                    b.default_value = trim(def_node->text);
                }
                if (b.default_value) {
                    try {
                        check_value(d.type, *b.default_value);
                    } catch (const ValueError& e) {
                        throw SchemaError(std::string("bad default for element '") + b.name + "': " + e.what());
                    }
                }
                b.children.push_back(std::move(d));
            } else {
                if (!f.empty()) throw SchemaError("untyped element '" + b.name + "' cannot carry facets");
                if (n.attr("default") || def_node)
                    throw SchemaError("structured <default> content is not supported (element '" + b.name + "')");
                no_text(n);
                b.children = blocks(n);
            }
        } else if (n.name == "sequence" || n.name == "selection") {
            check_attrs(n, {"id", "optional"});
            b.kind = n.name == "sequence" ? Block::Kind::Sequence : Block::Kind::Selection;
            if (auto* v = n.attr("id")) b.id = *v;
            b.optional = opt_flag(n);
            no_text(n);
            b.children = blocks(n);
        } else if (n.name == "repetition") {
            check_attrs(n, {"id", "optional", "min", "max"});
            b.kind = Block::Kind::Repetition;
            if (auto* v = n.attr("id")) b.id = *v;
            b.optional = opt_flag(n);
            long long v;
            if (auto* m = n.attr("min")) {
                if (!parse_int(*m, v) || v < 0) throw SchemaError("bad repetition min '" + *m + "'");
                b.min = unsigned(v);
            }
            if (auto* m = n.attr("max")) {
                if (*m != "inf" && *m != "unbounded") {
                    if (!parse_int(*m, v) || v < 0) throw SchemaError("bad repetition max '" + *m + "'");
                    b.max = unsigned(v);
                }
            }
            if (b.max && b.min > *b.max) throw SchemaError("repetition min > max");
            no_text(n);
            b.children = blocks(n);
        } else if (n.name == "ref") {
            check_attrs(n, {"id"});
            b.kind = Block::Kind::Ref;
            auto* id = n.attr("id");
            if (!id) throw SchemaError("ref without id at line " + std::to_string(n.line));
            b.ref = *id;
        } else if (n.name == "code") {
            check_attrs(n, {"language", "component", "role"});
            b.kind = Block::Kind::Code;
            b.text = trim(n.text);
            if (auto* v = n.attr("language")) b.language = *v;
            if (auto* v = n.attr("component")) b.component = *v;
            if (auto* v = n.attr("role")) {
                if (*v == "unit") b.role = Block::Role::UnitConv;
                else if (*v == "filter") b.role = Block::Role::Filter;
                else if (*v == "default") b.role = Block::Role::DefaultFill;
                else if (*v != "user") throw SchemaError("unknown code role '" + *v + "'");
            }
            for (auto& c : n.children)
                throw SchemaError("markup inside <code> is not supported (<" + c.name + ">)");
        }
        return b;
    }
};

void collect_ids(const Block& b, std::set<std::string>& ids) {
    if (!b.id.empty() && b.kind != Block::Kind::Ref) {
        if (!ids.insert(b.id).second) throw SchemaError("duplicate id '" + b.id + "'");
    }
    for (auto& c : b.children) collect_ids(c, ids);
}

void check_refs(const SchemaSet& set, const Block& b) {
    if (b.kind == Block::Kind::Ref && !set.resolve(b.ref)) throw SchemaError("unresolved ref '" + b.ref + "'");
    if (b.kind == Block::Kind::Element && b.content == Block::Content::Wildcard && !b.children.empty())
        throw SchemaError("wildcard element '" + b.name + "' has children");
    if (b.kind == Block::Kind::Repetition && b.max && b.min > *b.max) throw SchemaError("repetition min > max");
    for (auto& c : b.children) check_refs(set, c);
}

}  // namespace

void validate_schema_set(const SchemaSet& set) {
    std::set<std::string> ids, types;
    for (auto& t : set.types)
        if (!types.insert(t.id).second) throw SchemaError("duplicate type id '" + t.id + "'");
    for (auto& s : set.schemas) {
        if (!ids.insert(s.id).second) throw SchemaError("duplicate id '" + s.id + "'");
        collect_ids(s.root, ids);
    }
    for (auto& s : set.schemas) check_refs(set, s.root);
}

SchemaSet parse_schema_set(const XmlNode& root) {
    if (root.name != "schemas") throw SchemaError("root element must be <schemas>, got <" + root.name + ">");
    SchemaSet set;
    Loader ld{set};
    // types may be declared in any order; resolve on demand with cycle detection
    std::map<std::string, const XmlNode*> raw;
    std::vector<std::string> order;
    for (auto& c : root.children)
        if (c.name == "type") {
            auto* id = c.attr("id");
            auto* base = c.attr("base");
            if (!id || !base) throw SchemaError("type needs id and base (line " + std::to_string(c.line) + ")");
            if (raw.count(*id)) throw SchemaError("duplicate type id '" + *id + "'");
            raw[*id] = &c;
            order.push_back(*id);
        }
    std::set<std::string> busy;
    std::function<void(const std::string&)> resolve_type = [&](const std::string& id) {
        if (set.find_type(id)) return;
        if (busy.count(id)) throw SchemaError("cyclic type derivation at '" + id + "'");
        busy.insert(id);
        const XmlNode& n = *raw.at(id);
        Loader::check_attrs(n, {"id", "base", "min", "max", "number", "finite", "units"});
        std::string base = *n.attr("base");
        if (raw.count(base)) resolve_type(base);
        PrimitiveType t = derive_type(set, base, ld.facets_of(n), "type '" + id + "'");
        t.id = id;
        set.types.push_back(std::move(t));
        busy.erase(id);
    };
    for (auto& id : order) resolve_type(id);
    // keep declaration order
    std::vector<PrimitiveType> sorted;
    for (auto& id : order) sorted.push_back(*set.find_type(id));
    set.types = std::move(sorted);

    for (auto& c : root.children) {
        if (c.name == "type" || c.name == "description") continue;
        if (c.name != "schema") throw SchemaError("unexpected <" + c.name + "> in <schemas>");
        Loader::check_attrs(c, {"id"});
        auto* id = c.attr("id");
        if (!id) throw SchemaError("schema without id (line " + std::to_string(c.line) + ")");
        Loader::no_text(c);
        Schema s;
        s.id = *id;
        s.root.kind = Block::Kind::Sequence;
        s.root.children = ld.blocks(c);
        set.schemas.push_back(std::move(s));
    }
    validate_schema_set(set);
    return set;
}

SchemaSet parse_schema_set(const std::string& xml_text) {
    return parse_schema_set(parse_xml(xml_text));
}

namespace {

void put_facets(std::ostringstream& o, const FacetText& f) {
    if (f.min) o << " min='" << xml_escape(*f.min, true) << "'";
    if (f.max) o << " max='" << xml_escape(*f.max, true) << "'";
    if (f.number) o << " number='" << xml_escape(*f.number, true) << "'";
    if (f.finite) o << " finite='" << xml_escape(*f.finite, true) << "'";
    if (f.units) o << " units='" << xml_escape(*f.units, true) << "'";
}

void put_values(std::ostringstream& o, const std::optional<std::vector<std::string>>& v, const std::string& pad) {
    if (!v) return;
    o << pad << "<values>";
    for (auto& x : *v) o << "<value>" << xml_escape(x) << "</value>";
    o << "</values>\n";
}

void write_block(std::ostringstream& o, const Block& b, int indent) {
    std::string pad(std::size_t(indent) * 2, ' ');
    std::string inner(std::size_t(indent + 1) * 2, ' ');
    auto id_opt = [&] {
        if (!b.id.empty()) o << " id='" << xml_escape(b.id, true) << "'";
        if (b.optional) o << " optional='true'";
    };
    switch (b.kind) {
        case Block::Kind::Element: {
            o << pad << "<element name='" << xml_escape(b.name, true) << "'";
            if (!b.id.empty()) o << " id='" << xml_escape(b.id, true) << "'";
            if (b.optional) o << " optional='true'";
            const Block* data = nullptr;
            if (b.content == Block::Content::Wildcard) o << " type='*'";
            if (b.content == Block::Content::Primitive) {
                data = &b.children.at(0);
                o << " type='" << xml_escape(data->type_ref, true) << "'";
                FacetText f = data->facets;
                f.values.reset();
                put_facets(o, f);
            }
            if (b.default_value) o << " default='" << xml_escape(*b.default_value, true) << "'";
            bool has_body = !b.attrs.empty() || (data && data->facets.values) ||
                            (b.content == Block::Content::Children && !b.children.empty());
            if (!has_body) {
                o << "/>\n";
                break;
            }
            o << ">\n";
            for (auto& a : b.attrs) {
                o << inner << "<attribute name='" << xml_escape(a.name, true) << "'";
                if (a.id) o << " id='" << xml_escape(*a.id, true) << "'";
                if (a.type_ref != "string") o << " type='" << xml_escape(a.type_ref, true) << "'";
                FacetText f = a.facets;
                f.values.reset();
                put_facets(o, f);
                if (a.default_value) o << " default='" << xml_escape(*a.default_value, true) << "'";
                if (a.facets.values) {
                    o << ">\n";
                    put_values(o, a.facets.values, inner + "  ");
                    o << inner << "</attribute>\n";
                } else {
                    o << "/>\n";
                }
            }
            if (data) put_values(o, data->facets.values, inner);
            if (b.content == Block::Content::Children)
                for (auto& c : b.children) write_block(o, c, indent + 1);
            o << pad << "</element>\n";
            break;
        }
        case Block::Kind::Sequence:
        case Block::Kind::Selection:
        case Block::Kind::Repetition: {
            const char* tag = b.kind == Block::Kind::Sequence    ? "sequence"
                              : b.kind == Block::Kind::Selection ? "selection"
                                                                 : "repetition";
            o << pad << "<" << tag;
            id_opt();
            if (b.kind == Block::Kind::Repetition) {
                if (b.min != 0) o << " min='" << b.min << "'";
                if (b.max) o << " max='" << *b.max << "'";
            }
            if (b.children.empty()) {
                o << "/>\n";
                break;
            }
            o << ">\n";
            for (auto& c : b.children) write_block(o, c, indent + 1);
            o << pad << "</" << tag << ">\n";
            break;
        }
        case Block::Kind::Ref:
            o << pad << "<ref id='" << xml_escape(b.ref, true) << "'/>\n";
            break;
        case Block::Kind::Code:
            o << pad << "<code";
            if (b.language) o << " language='" << xml_escape(*b.language, true) << "'";
            if (b.component) o << " component='" << xml_escape(*b.component, true) << "'";
            if (b.role == Block::Role::UnitConv) o << " role='unit'";
            if (b.role == Block::Role::Filter) o << " role='filter'";
            if (b.role == Block::Role::DefaultFill) o << " role='default'";
            o << ">" << xml_escape(b.text) << "</code>\n";
            break;
        case Block::Kind::Data:
            break;
    }
}

}  // namespace

std::string serialize_block(const Block& b, int indent) {
    std::ostringstream o;
    write_block(o, b, indent);
    return o.str();
}

std::string serialize(const SchemaSet& set) {
    std::ostringstream o;
    o << "<schemas>\n";
    for (auto& t : set.types) {
        o << "  <type id='" << xml_escape(t.id, true) << "' base='" << base_name(t.base) << "'";
        if (t.min) o << " min='" << xml_escape(*t.min, true) << "'";
        if (t.max) o << " max='" << xml_escape(*t.max, true) << "'";
        if (t.number) o << " number='true'";
        if (t.finite) o << " finite='true'";
        if (t.units) o << " units='" << xml_escape(*t.units, true) << "'";
        if (t.values) {
            o << ">\n";
            put_values(o, t.values, "    ");
            o << "  </type>\n";
        } else {
            o << "/>\n";
        }
    }
    for (auto& s : set.schemas) {
        o << "  <schema id='" << xml_escape(s.id, true) << "'>\n";
        for (auto& c : s.root.children) write_block(o, c, 2);
        o << "  </schema>\n";
    }
    o << "</schemas>\n";
    return o.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace bsml
