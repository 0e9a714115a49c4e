#pragma once

#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bsml/grammar.hpp"
#include "bsml/xml.hpp"

namespace bsml {

// Untyped capture of a wildcard subtree. Text nodes carry is_text and value.
struct GenericTree {
    bool is_text = false;
    std::string value;   // element name, or text
    Attributes attrs;
    std::vector<GenericTree> children;

    std::string to_xml() const;
    bool operator==(const GenericTree&) const = default;
};

struct Value {
    std::string text;                          // primitive literal as read
    std::shared_ptr<const GenericTree> tree;   // wildcard content
    std::string render() const { return tree ? tree->to_xml() : text; }
};

// Bindings carry the element depth they belong to. Closing an element at
// depth d drops everything at depth >= d+2, so a name stays readable until
// its grandparent closes.
class Env {
public:
    struct Binding {
        std::string name;
        Value value;
        int depth;
    };

    void bind(const std::string& name, Value v, int depth);
    const Binding* find(const std::string& name) const;
    Binding* find(const std::string& name);
    void close(int depth);
    const std::vector<Binding>& all() const { return b_; }
    std::size_t bytes() const;
    void clear() { b_.clear(); }

private:
    std::vector<Binding> b_;
};

using EnvSnapshot = std::vector<std::pair<std::string, std::string>>;
EnvSnapshot snapshot(const Env& env);

class ActionSink {
public:
    virtual ~ActionSink() = default;
    virtual void on_action(int code_id, const ActionInfo& action, const Env& env) = 0;
    virtual void emit(std::string_view) {}
};

// Expands each code and writes it followed by one LF.
class TextSink : public ActionSink {
public:
    explicit TextSink(std::ostream& out) : out_(out) {}
    void on_action(int code_id, const ActionInfo& action, const Env& env) override;
    void emit(std::string_view text) override { out_ << text; }

private:
    std::ostream& out_;
};

using Callback = std::function<void(int code_id, const EnvSnapshot& env)>;

// Procedural binding: each code id dispatches to a registered procedure.
class CallbackSink : public ActionSink {
public:
    explicit CallbackSink(std::map<int, Callback> registry) : reg_(std::move(registry)) {}
    void on_action(int code_id, const ActionInfo& action, const Env& env) override;

private:
    std::map<int, Callback> reg_;
};

enum class SinkMode { Text, Callbacks };
std::unique_ptr<ActionSink> make_sink(SinkMode mode, std::ostream* out = nullptr, std::map<int, Callback> registry = {});

std::string expand(const CodeTemplate& t, const Env& env);

struct Violation {
    int action = -1;
    std::string name;
    std::string path;   // nonterminal chain from the start to the offending production
};

// Every %name read by an action (and every variable of a conversion
// expression) must be bound on all paths reaching it.
std::vector<Violation> check_l_attributed(const Grammar& g);

}  // namespace bsml
