#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include "bsml/binding.hpp"
#include "bsml/grammar.hpp"
#include "bsml/xml.hpp"

namespace bsml {

struct ParseResult {
    bool accepted = false;
    std::size_t ordinal = 0;   // event ordinal of the rejection
    std::string path;          // open element path, e.g. /pdp/ray
    std::string expected, got, message;
    std::size_t events = 0;
    std::size_t peak_retained = 0;   // bytes of parser state, excluding the sink

    std::string describe() const;
};

using EventSource = std::function<bool(Event&)>;

// Consumes the balanced subtree whose StartElement is `start`.
GenericTree capture_wildcard(const EventSource& pull, const Event& start);

// Table-driven predictive interpreter. One instance per stream.
class Parser {
public:
    Parser(const ParseTable& table, ActionSink& sink) : t_(table), sink_(sink) {}
    ParseResult run(const EventSource& pull, const std::function<std::size_t()>& source_bytes = {});

private:
    const ParseTable& t_;
    ActionSink& sink_;
};

ParseResult parse_stream(const ParseTable& table, std::istream& in, ActionSink& sink);
ParseResult parse_events(const ParseTable& table, const std::vector<Event>& events, ActionSink& sink);
ParseResult parse_text(const ParseTable& table, const std::string& xml, ActionSink& sink);

// Sink that ignores every action; validation only.
class NullSink : public ActionSink {
public:
    void on_action(int, const ActionInfo&, const Env&) override {}
};

}  // namespace bsml
