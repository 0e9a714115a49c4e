#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bsml/expr.hpp"
#include "bsml/schema.hpp"
#include "bsml/template.hpp"

namespace bsml {

struct Sym {
    enum Kind : unsigned char { Start, End, Data, Wild, Eof, NT, Act };
    Kind kind = Eof;
    int id = 0;   // Start/Wild: start-info index; End: name index; Data: data index; NT; Act: action index

    bool is_terminal() const { return kind != NT && kind != Act; }
    auto operator<=>(const Sym&) const = default;
};

struct StartInfo {
    int name = 0;   // index into Context::names
    std::vector<AttributeDecl> attrs;
};

struct ActionInfo {
    enum Kind { User, Begin, Append, End, Default, Convert };
    Kind kind = User;
    std::string text;
    CodeTemplate tmpl;                // User
    std::vector<Assignment> assigns;  // Convert
    Block::Role role = Block::Role::User;
    int rep = -1;                     // Begin/Append/End
    unsigned min = 0;
    std::optional<unsigned> max;
    std::string elem, value;          // Default: element name and literal
};

// Interned terminals and actions shared by every grammar derived from one lowering.
struct Context {
    std::vector<std::string> names;
    std::vector<StartInfo> starts;
    std::vector<PrimitiveType> datas;
    std::vector<ActionInfo> actions;
    int reps = 0;

    int name_id(const std::string& n);
    int find_name(const std::string& n) const;   // -1 when absent
    int start_id(const std::string& name, const std::vector<AttributeDecl>& attrs);
    int data_id(const PrimitiveType& t);
    int user_action(const std::string& text, Block::Role role);

    const std::string& start_name(int start) const { return names[std::size_t(starts[std::size_t(start)].name)]; }
    std::string sym_text(const Sym& s) const;

private:
    std::map<std::string, int> name_ix_, start_ix_, user_ix_;
};

using Production = std::vector<Sym>;

struct Grammar {
    std::shared_ptr<Context> ctx;
    std::vector<std::string> nt;                 // nonterminal names
    std::vector<std::vector<Production>> prods;  // per nonterminal
    int start = 0;

    int add_nt(const std::string& base);
    std::string dump() const;
    std::size_t production_count() const;
};

// Code activation: absent attributes and the 'bsml' language are always active.
struct CodeFilter {
    std::optional<std::string> language, component;
    bool active(const Block& code) const;
};

// Terminal classes: 0 = EOF, 1 = d, 2+2n = s(name n) (wildcards included), 3+2n = e(name n).
int term_class(const Context& ctx, const Sym& s);
std::string class_text(const Context& ctx, int cls);
constexpr int kEofClass = 0;
constexpr int kDataClass = 1;

Grammar lower(const SchemaSet& set, const std::string& schema_id, const CodeFilter& filter = {});
Grammar eliminate_trivial(const Grammar& g);
Grammar eliminate_left_recursion(const Grammar& g);
Grammar left_factor(const Grammar& g);
Grammar cleanup(const Grammar& g);
// Empty productions first, unreachable nonterminals dropped.
Grammar finalize(const Grammar& g);

struct Analysis {
    std::vector<bool> nullable;
    std::vector<std::set<int>> first, follow;
};
Analysis analyze(const Grammar& g);
// FIRST of a symbol string; nullable reported through the flag.
std::set<int> first_of(const Grammar& g, const Analysis& a, const Production& p, std::size_t from, bool& nullable);

struct ParseTable {
    Grammar g;
    std::vector<std::map<int, int>> cells;   // per nonterminal: class -> production index
    int cell(int nt, int cls) const;
    std::vector<int> columns() const;
    std::string dump() const;
};

// Raises LL1Conflict.
ParseTable build_table(const Grammar& g);

struct Compiled {
    Grammar raw, trivial, no_left_recursion, factored, cleaned, final;
    ParseTable table;
};

Compiled compile(const SchemaSet& set, const std::string& schema_id, const CodeFilter& filter = {});

}  // namespace bsml
