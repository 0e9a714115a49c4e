#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bsml {

using Attributes = std::vector<std::pair<std::string, std::string>>;

struct Event {
    enum Kind { StartElement, EndElement, CharData, EndOfStream };
    Kind kind = EndOfStream;
    std::string name;   // element name, or text for CharData
    Attributes attrs;
    std::size_t line = 0;
    std::size_t ordinal = 0;
};

// Pull tokenizer over a byte stream. Keeps only the open-tag stack and
// the pending character data; everything else is streamed.
class Tokenizer {
public:
    explicit Tokenizer(std::istream& in, bool keep_whitespace = false);
    bool next(Event& ev);   // false once EndOfStream has been delivered
    std::size_t depth() const { return open_.size(); }
    std::size_t retained_bytes() const;

private:
    int peek();
    int get();
    [[noreturn]] void fail(const std::string& msg);
    void expect(const char* lit);
    std::string read_name();
    void skip_ws();
    void read_entity(std::string& out);
    void read_markup(Event& ev);
    bool flush_text(Event& ev);

    std::istream& in_;
    bool keep_ws_;
    std::vector<char> buf_;
    std::size_t pos_ = 0, len_ = 0;
    std::size_t line_ = 1, col_ = 1;
    std::vector<std::string> open_;
    std::string text_;
    bool text_has_content_ = false;
    bool pending_end_ = false;   // self-closing tag awaiting its end event
    std::string pending_name_;
    bool root_seen_ = false, done_ = false;
    std::size_t ordinal_ = 0;
    std::unique_ptr<Event> parked_;
};

struct XmlNode {
    std::string name;
    Attributes attrs;
    std::vector<XmlNode> children;   // element children
    std::string text;                // concatenated direct character data
    std::size_t line = 0;
    const std::string* attr(const std::string& key) const;
};

XmlNode parse_xml(const std::string& text);
std::vector<Event> tokenize_all(const std::string& text);
std::string xml_escape(const std::string& s, bool attribute = false);

}  // namespace bsml
