#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bsml/expr.hpp"
#include "bsml/schema.hpp"
#include "bsml/units.hpp"

namespace bsml {

// Numeric function from named actual elements to named required elements.
struct ConversionFilter {
    struct Port {
        std::string name;
        std::string type_ref;
        PrimitiveType type;
        std::string expr_text;               // outputs only
        std::shared_ptr<const Expr> expr;    // outputs only
    };
    std::string name;
    std::vector<Port> inputs, outputs;
};

// `<filters><filter name=..><in name type/>..<out name type>expr</out>..</filter></filters>`.
// Types resolve against `types`; raises SchemaError.
std::vector<ConversionFilter> parse_filters(const std::string& xml_text, const SchemaSet& types);

struct CompiledFilter {
    ConversionFilter filter;
    std::string code_text;   // `out = expr; ...`, evaluated simultaneously
    std::vector<double> run(const std::vector<double>& inputs) const;
};

CompiledFilter compile_filter(const ConversionFilter& f);

struct ProofNode {
    // D_r E E_g E_r P P_g P_r C C_g R R_g F Q UnitConv Filter DefaultFill Unmatched Wildcard A
    std::string rule;
    const Block* a = nullptr;
    const Block* r = nullptr;
    std::vector<ProofNode> kids;

    // Q: operand lists; actual attributes come first as primitive pseudo elements
    std::vector<const Block*> alist, rlist;
    int attrs_a = 0;
    // position of a Q child inside its Q
    int ai = -1, ri = -1;
    std::vector<int> ais, ris;   // Filter
    int filter = -1;
    std::optional<UnitConversion> conv;
    std::string ref_a, ref_r;   // F
    bool assumed = false;       // F closed by coinduction

    std::string dump(int indent = 0) const;
    void rules(std::set<std::string>& out) const;
};

struct DeterminesProof {
    ProofNode root;
    std::string actual_id, required_id;
    std::vector<ConversionFilter> filters;
    std::shared_ptr<std::deque<Block>> owned;   // pseudo elements the tree points into

    std::string dump() const { return root.dump(); }
    std::set<std::string> rules() const;
};

// Decides S_a ⪰ᵏ S_r. Raises NoProof or Ambiguous. Both sets must outlive the proof.
DeterminesProof determines(const SchemaSet& actual, const std::string& actual_id, const SchemaSet& required,
                           const std::string& required_id, int k, const std::vector<ConversionFilter>& filters = {},
                           const UnitTable& units = builtin_units());

// Conversion schema: actual structure, required codes, conversion codes.
// The main schema keeps the actual id. Raises DelayImpossible.
SchemaSet synthesize(const SchemaSet& actual, const SchemaSet& required, const DeterminesProof& proof);

}  // namespace bsml
