// bsmlc: schema compiler, validator, binder and converter.
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "bsml/conversion.hpp"
#include "bsml/error.hpp"
#include "bsml/grammar.hpp"
#include "bsml/runtime.hpp"

namespace {

using namespace bsml;

constexpr int kUsage = 64;

struct Common {
    std::string schema, id, language, component;

    CodeFilter filter() const {
        CodeFilter f;
        if (!language.empty()) f.language = language;
        if (!component.empty()) f.component = component;
        return f;
    }
};

void add_common(CLI::App* c, Common& o) {
    c->add_option("schema", o.schema, "schema set file")->required()->check(CLI::ExistingFile);
    c->add_option("--id", o.id, "schema id (default: first schema in the file)");
    c->add_option("--language", o.language, "activate codes of this language");
    c->add_option("--component", o.component, "activate codes of this component");
}

std::string pick_id(const SchemaSet& set, const std::string& id) {
    if (!id.empty()) return id;
    if (set.schemas.empty()) throw SchemaError("schema set has no schemas");
    return set.schemas.front().id;
}

SchemaSet load(const std::string& path) {
    SchemaSet s = parse_schema_set(read_file(path));
    validate_schema_set(s);
    return s;
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BSML schema compiler and streaming data engine"};
    app.require_subcommand(1);

    Common g;
    std::string stage = "final";
    auto* grammar = app.add_subcommand("grammar", "print the grammar at a pipeline stage");
    add_common(grammar, g);
    grammar->add_option("--stage", stage, "raw|trivial|no-left-recursion|factored|cleaned|final")
        ->check(CLI::IsMember({"raw", "trivial", "no-left-recursion", "factored", "cleaned", "final"}));

    Common t;
    auto* table = app.add_subcommand("table", "print the predictive parsing table");
    add_common(table, t);

    Common v;
    std::string vdata;
    auto* validate = app.add_subcommand("validate", "validate a document");
    add_common(validate, v);
    validate->add_option("data", vdata, "XML document")->required()->check(CLI::ExistingFile);

    Common b;
    std::string bdata, emit;
    bool count = false;
    auto* bind = app.add_subcommand("bind", "validate a document and run its codes");
    add_common(bind, b);
    bind->add_option("data", bdata, "XML document")->required()->check(CLI::ExistingFile);
    bind->add_option("--emit", emit, "emission file (default: standard output)");
    bind->add_flag("--count-actions", count, "callback mode: print how often each code ran");

    std::string actual, required, actual_id, required_id, filters, units_file, out;
    int k = 2;
    auto* convert = app.add_subcommand("convert", "synthesize a conversion schema");
    convert->add_option("--actual", actual, "actual schema set")->required()->check(CLI::ExistingFile);
    convert->add_option("--required", required, "required schema set")->required()->check(CLI::ExistingFile);
    convert->add_option("--actual-id", actual_id, "actual schema id");
    convert->add_option("--required-id", required_id, "required schema id");
    convert->add_option("--filters", filters, "filter library")->check(CLI::ExistingFile);
    convert->add_option("--units", units_file, "extra unit definitions")->check(CLI::ExistingFile);
    convert->add_option("--k", k, "bound on generalization/restriction runs")->check(CLI::NonNegativeNumber);
    convert->add_option("-o,--output", out, "conversion schema file (default: standard output)");
    bool proof = false;
    convert->add_flag("--proof", proof, "print the proof tree on standard error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (*grammar) {
            SchemaSet set = load(g.schema);
            Compiled c = compile(set, pick_id(set, g.id), g.filter());
            const Grammar* gr = &c.final;
            if (stage == "raw") gr = &c.raw;
            if (stage == "trivial") gr = &c.trivial;
            if (stage == "no-left-recursion") gr = &c.no_left_recursion;
            if (stage == "factored") gr = &c.factored;
            if (stage == "cleaned") gr = &c.cleaned;
            std::cout << gr->dump();
            return 0;
        }
        if (*table) {
            SchemaSet set = load(t.schema);
            std::cout << compile(set, pick_id(set, t.id), t.filter()).table.dump();
            return 0;
        }
        if (*validate) {
            SchemaSet set = load(v.schema);
            Compiled c = compile(set, pick_id(set, v.id), v.filter());
            std::ifstream in(vdata, std::ios::binary);
            NullSink sink;
            ParseResult r = parse_stream(c.table, in, sink);
            if (!r.accepted) {
                std::cerr << vdata << ": " << r.describe() << "\n";
                return 1;
            }
            return 0;
        }
        if (*bind) {
            SchemaSet set = load(b.schema);
            Compiled c = compile(set, pick_id(set, b.id), b.filter());
            std::ifstream in(bdata, std::ios::binary);
            ParseResult r;
            if (count) {
                std::map<int, long> counts;
                std::map<int, Callback> reg;
                const auto& acts = c.table.g.ctx->actions;
                for (std::size_t i = 0; i < acts.size(); ++i)
                    if (acts[i].kind == ActionInfo::User) reg[int(i)] = [&counts](int id, const EnvSnapshot&) { ++counts[id]; };
                CallbackSink sink(std::move(reg));
                r = parse_stream(c.table, in, sink);
                std::ostringstream o;
                for (auto& [id, n] : counts) o << "code#" << id << " " << n << "\n";
                write_out(emit, o.str());
            } else if (emit.empty()) {
                TextSink sink(std::cout);
                r = parse_stream(c.table, in, sink);
            } else {
                std::ofstream f(emit, std::ios::binary);
                if (!f) throw Error("cannot write " + emit);
                TextSink sink(f);
                r = parse_stream(c.table, in, sink);
            }
            if (!r.accepted) {
                std::cerr << bdata << ": " << r.describe() << "\n";
                return 1;
            }
            return 0;
        }
        if (*convert) {
            SchemaSet a = load(actual);
            SchemaSet r = load(required);
            UnitTable units;
            if (!units_file.empty()) units.load(read_file(units_file));
            std::vector<ConversionFilter> fl;
            if (!filters.empty()) {
                SchemaSet types = a;
                for (auto& ty : r.types)
                    if (!types.find_type(ty.id)) types.types.push_back(ty);
                fl = parse_filters(read_file(filters), types);
            }
            DeterminesProof p = determines(a, pick_id(a, actual_id), r, pick_id(r, required_id), k, fl, units);
            if (proof) std::cerr << p.dump();
            write_out(out, serialize(synthesize(a, r, p)));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "bsmlc: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "bsmlc: " << e.what() << "\n";
        return 2;
    }
    return kUsage;
}
