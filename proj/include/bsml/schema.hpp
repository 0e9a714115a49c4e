#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bsml/xml.hpp"

namespace bsml {

enum class Base { Integer, String, Double, Boolean };

const char* base_name(Base b);

struct PrimitiveType {
    std::string id;   // empty for anonymous (inline) types
    Base base = Base::String;
    std::optional<std::string> min, max;
    bool number = false;
    bool finite = false;
    std::optional<std::string> units;
    std::optional<std::vector<std::string>> values;

    bool operator==(const PrimitiveType&) const = default;
};

// Facet overrides written directly on a type/element/attribute.
struct FacetText {
    std::optional<std::string> min, max, number, finite, units;
    std::optional<std::vector<std::string>> values;
    bool empty() const { return !min && !max && !number && !finite && !units && !values; }
    bool operator==(const FacetText&) const = default;
};

struct TypedValue {
    Base base = Base::String;
    std::string text;   // trimmed literal as read
    long long i = 0;
    double d = 0;
    bool b = false;
};

// Raises ValueError when the literal does not satisfy the type.
TypedValue check_value(const PrimitiveType& t, const std::string& literal);

struct AttributeDecl {
    std::string name;
    std::optional<std::string> id;
    std::string type_ref = "string";
    FacetText facets;
    PrimitiveType type;   // resolved
    std::optional<std::string> default_value;

    bool operator==(const AttributeDecl&) const = default;
};

struct Block {
    enum class Kind { Element, Sequence, Selection, Repetition, Ref, Code, Data };
    enum class Content { Children, Primitive, Wildcard };
    enum class Role { User, UnitConv, Filter, DefaultFill };

    Kind kind = Kind::Sequence;
    std::string id;
    bool optional = false;

    // element
    std::string name;
    Content content = Content::Children;
    std::optional<std::string> default_value;
    std::vector<AttributeDecl> attrs;

    // repetition
    unsigned min = 0;
    std::optional<unsigned> max;   // nullopt = unbounded

    // code
    std::string text;
    std::optional<std::string> language, component;
    Role role = Role::User;

    // data (child of a primitive element)
    std::string type_ref;
    FacetText facets;
    PrimitiveType type;

    // ref
    std::string ref;

    std::vector<Block> children;

    bool operator==(const Block&) const = default;

    static Block element(std::string name, std::vector<Block> kids = {});
    static Block primitive(std::string name, const PrimitiveType& t, std::string type_ref = {});
    static Block sequence(std::vector<Block> kids);
    static Block selection(std::vector<Block> kids);
    static Block repetition(unsigned min, std::optional<unsigned> max, std::vector<Block> kids);
    static Block code(std::string text);
    static Block reference(std::string id);
};

std::string block_label(const Block& b);

struct Schema {
    std::string id;
    Block root;   // implicit sequence holding the schema's codes and blocks
    bool operator==(const Schema&) const = default;
};

struct SchemaSet {
    std::vector<PrimitiveType> types;   // declaration order
    std::vector<Schema> schemas;

    const PrimitiveType* find_type(const std::string& id) const;
    const Schema* find_schema(const std::string& id) const;
    // Resolves a block id or schema id. Schema ids map onto the schema root.
    const Block* resolve(const std::string& id) const;
    bool operator==(const SchemaSet&) const = default;
};

PrimitiveType builtin_type(Base b);

// Resolves a named type or builtin, applies facet overrides and checks narrowing.
PrimitiveType derive_type(const SchemaSet& set, const std::string& type_ref, const FacetText& f,
                          const std::string& context);

SchemaSet parse_schema_set(const std::string& xml_text);
SchemaSet parse_schema_set(const XmlNode& root);
std::string serialize(const SchemaSet& set);
std::string serialize_block(const Block& b, int indent = 0);

// Checks ref resolution, id uniqueness and structural invariants.
void validate_schema_set(const SchemaSet& set);

std::string read_file(const std::string& path);

}  // namespace bsml
