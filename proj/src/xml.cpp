#include "bsml/xml.hpp"

#include <cstdint>
#include <sstream>

#include "bsml/error.hpp"

namespace bsml {

namespace {
bool is_ws(int c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_name_start(int c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || c >= 0x80;
}
bool is_name_char(int c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}
void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += char(cp);
    } else if (cp < 0x800) {
        out += char(0xC0 | (cp >> 6));
        out += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += char(0xE0 | (cp >> 12));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    } else {
        out += char(0xF0 | (cp >> 18));
        out += char(0x80 | ((cp >> 12) & 0x3F));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    }
}
}  // namespace

Tokenizer::Tokenizer(std::istream& in, bool keep_whitespace)
    : in_(in), keep_ws_(keep_whitespace), buf_(1 << 16) {}

std::size_t Tokenizer::retained_bytes() const {
    std::size_t n = text_.capacity() + pending_name_.capacity();
    for (auto& s : open_) n += s.capacity() + sizeof(std::string);
    return n;
}

int Tokenizer::peek() {
    if (pos_ == len_) {
        in_.read(buf_.data(), std::streamsize(buf_.size()));
        len_ = std::size_t(in_.gcount());
        pos_ = 0;
        if (len_ == 0) return -1;
    }
    return (unsigned char)buf_[pos_];
}

int Tokenizer::get() {
    int c = peek();
    if (c < 0) return c;
    ++pos_;
    if (c == '\n') {
        ++line_;
        col_ = 1;
    } else {
        ++col_;
    }
    return c;
}

void Tokenizer::fail(const std::string& msg) { throw XmlError(msg, line_, col_); }

void Tokenizer::expect(const char* lit) {
    for (const char* p = lit; *p; ++p) {
        int c = get();
        if (c != (unsigned char)*p) fail(std::string("expected '") + lit + "'");
    }
}

void Tokenizer::skip_ws() {
    while (is_ws(peek())) get();
}

std::string Tokenizer::read_name() {
    std::string s;
    if (!is_name_start(peek())) fail("expected a name");
    while (is_name_char(peek())) s += char(get());
    return s;
}

void Tokenizer::read_entity(std::string& out) {
    std::string ent;
    for (;;) {
        int c = get();
        if (c < 0) fail("unterminated entity reference");
        if (c == ';') break;
        ent += char(c);
        if (ent.size() > 16) fail("bad entity reference");
    }
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "apos") out += '\'';
    else if (ent == "quot") out += '"';
    else if (!ent.empty() && ent[0] == '#') {
        std::uint32_t cp = 0;
        try {
            if (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                cp = std::uint32_t(std::stoul(ent.substr(2), nullptr, 16));
            else
                cp = std::uint32_t(std::stoul(ent.substr(1), nullptr, 10));
        } catch (...) {
            fail("bad character reference &" + ent + ";");
        }
        append_utf8(out, cp);
    } else {
        fail("unknown entity &" + ent + ";");
    }
}

bool Tokenizer::flush_text(Event& ev) {
    if (text_.empty()) return false;
    if (!text_has_content_ && (!keep_ws_ || open_.empty())) {
        text_.clear();
        return false;
    }
    if (open_.empty()) fail("character data outside the root element");
    ev = Event{};
    ev.kind = Event::CharData;
    ev.name = std::move(text_);
    ev.line = line_;
    ev.ordinal = ++ordinal_;
    text_.clear();
    text_has_content_ = false;
    return true;
}

void Tokenizer::read_markup(Event& ev) {
    // positioned just after '<'
    int c = peek();
    if (c == '/') {
        get();
        std::string name = read_name();
        skip_ws();
        if (get() != '>') fail("expected '>'");
        if (open_.empty()) fail("unexpected end tag </" + name + ">");
        if (open_.back() != name) fail("mismatched end tag </" + name + ">, expected </" + open_.back() + ">");
        open_.pop_back();
        ev = Event{};
        ev.kind = Event::EndElement;
        ev.name = std::move(name);
        return;
    }
    if (root_seen_ && open_.empty()) fail("content after the root element");
    std::string name = read_name();
    ev = Event{};
    ev.kind = Event::StartElement;
    ev.name = name;
    for (;;) {
        bool had_ws = is_ws(peek());
        skip_ws();
        c = peek();
        if (c == '>') {
            get();
            open_.push_back(name);
            break;
        }
        if (c == '/') {
            get();
            if (get() != '>') fail("expected '>'");
            pending_end_ = true;
            pending_name_ = name;
            break;
        }
        if (c < 0) fail("premature end of input inside tag");
        if (!had_ws) fail("expected whitespace before attribute");
        std::string an = read_name();
        skip_ws();
        if (get() != '=') fail("expected '=' after attribute name");
        skip_ws();
        int q = get();
        if (q != '"' && q != '\'') fail("expected quoted attribute value");
        std::string val;
        for (;;) {
            int d = get();
            if (d < 0) fail("premature end of input in attribute value");
            if (d == q) break;
            if (d == '<') fail("'<' in attribute value");
            if (d == '&') read_entity(val);
            else val += char(d);
        }
        for (auto& a : ev.attrs)
            if (a.first == an) fail("duplicate attribute " + an);
        ev.attrs.emplace_back(std::move(an), std::move(val));
    }
    root_seen_ = true;
}

bool Tokenizer::next(Event& ev) {
    if (done_) return false;
    if (parked_) {
        ev = std::move(*parked_);
        parked_.reset();
        ev.ordinal = ++ordinal_;
        return true;
    }
    if (pending_end_) {
        pending_end_ = false;
        ev = Event{};
        ev.kind = Event::EndElement;
        ev.name = std::move(pending_name_);
        pending_name_.clear();
        ev.line = line_;
        ev.ordinal = ++ordinal_;
        return true;
    }
    for (;;) {
        int c = peek();
        if (c < 0) {
            if (!open_.empty()) fail("premature end of input, <" + open_.back() + "> not closed");
            Event t;
            if (flush_text(t)) {
                ev = std::move(t);
                return true;
            }
            ev = Event{};
            ev.kind = Event::EndOfStream;
            ev.line = line_;
            ev.ordinal = ++ordinal_;
            done_ = true;
            return true;
        }
        if (c == '<') {
            get();
            int d = peek();
            if (d == '?') {
                // processing instruction or XML declaration
                int prev = 0;
                for (;;) {
                    int e = get();
                    if (e < 0) fail("unterminated processing instruction");
                    if (prev == '?' && e == '>') break;
                    prev = e;
                }
                continue;
            }
            if (d == '!') {
                get();
                if (peek() == '-') {
                    expect("--");
                    int a = 0, b = 0;
                    for (;;) {
                        int e = get();
                        if (e < 0) fail("unterminated comment");
                        if (a == '-' && b == '-' && e == '>') break;
                        a = b;
                        b = e;
                    }
                    continue;
                }
                if (peek() == '[') {
                    expect("[CDATA[");
                    if (open_.empty()) fail("CDATA outside the root element");
                    int a = 0, b = 0;
                    for (;;) {
                        int e = get();
                        if (e < 0) fail("unterminated CDATA section");
                        if (a == ']' && b == ']' && e == '>') {
                            text_.resize(text_.size() - 2);
                            break;
                        }
                        text_ += char(e);
                        if (!is_ws(e)) text_has_content_ = true;
                        a = b;
                        b = e;
                    }
                    continue;
                }
                // DOCTYPE and friends: skipped, internal subset included
                int nest = 0;
                for (;;) {
                    int e = get();
                    if (e < 0) fail("unterminated declaration");
                    if (e == '[') ++nest;
                    else if (e == ']') --nest;
                    else if (e == '>' && nest <= 0) break;
                }
                continue;
            }
            Event t;
            std::size_t line = line_;
            if (flush_text(t)) {
                // re-deliver the markup on the next call by reading it now
                // and parking it as a pending event
                Event m;
                read_markup(m);
                m.line = line;
                parked_ = std::make_unique<Event>(std::move(m));
                ev = std::move(t);
                return true;
            }
            read_markup(ev);
            ev.line = line;
            ev.ordinal = ++ordinal_;
            return true;
        }
        get();
        if (c == '&') {
            if (open_.empty()) fail("character data outside the root element");
            read_entity(text_);
            text_has_content_ = true;
            continue;
        }
        if (open_.empty() && !is_ws(c)) fail("character data outside the root element");
        text_ += char(c);
        if (!is_ws(c)) text_has_content_ = true;
    }
}

const std::string* XmlNode::attr(const std::string& key) const {
    for (auto& a : attrs)
        if (a.first == key) return &a.second;
    return nullptr;
}

XmlNode parse_xml(const std::string& text) {
    std::istringstream in(text);
    Tokenizer tok(in, true);
    Event ev;
    std::vector<XmlNode> stack;
    XmlNode root;
    bool have_root = false;
    while (tok.next(ev)) {
        switch (ev.kind) {
            case Event::StartElement: {
                XmlNode n;
                n.name = ev.name;
                n.attrs = std::move(ev.attrs);
                n.line = ev.line;
                stack.push_back(std::move(n));
                break;
            }
            case Event::EndElement: {
                XmlNode n = std::move(stack.back());
                stack.pop_back();
                if (stack.empty()) {
                    root = std::move(n);
                    have_root = true;
                } else {
                    stack.back().children.push_back(std::move(n));
                }
                break;
            }
            case Event::CharData:
                if (!stack.empty()) stack.back().text += ev.name;
                break;
            case Event::EndOfStream:
                break;
        }
    }
    if (!have_root) throw XmlError("no root element", 1, 1);
    return root;
}

std::vector<Event> tokenize_all(const std::string& text) {
    std::istringstream in(text);
    Tokenizer tok(in);
    std::vector<Event> out;
    Event ev;
    while (tok.next(ev)) out.push_back(ev);
    return out;
}

std::string xml_escape(const std::string& s, bool attribute) {
    std::string o;
    o.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '\'': o += attribute ? "&apos;" : "'"; break;
            case '"': o += attribute ? "&quot;" : "\""; break;
            default: o += c;
        }
    }
    return o;
}

}  // namespace bsml
