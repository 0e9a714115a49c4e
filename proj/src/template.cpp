#include "bsml/template.hpp"

#include "bsml/error.hpp"

namespace bsml {

namespace {
bool name_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool name_char(char c) { return name_start(c) || (c >= '0' && c <= '9'); }
}  // namespace

CodeTemplate CodeTemplate::parse(const std::string& text) {
    CodeTemplate t;
    t.raw = text;
    std::string lit;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '%') {
            lit += c;
            continue;
        }
        if (i + 1 < text.size() && text[i + 1] == '%') {
            lit += '%';
            ++i;
            continue;
        }
        if (i + 1 < text.size() && name_start(text[i + 1])) {
            if (!lit.empty()) t.segments.push_back({false, std::move(lit)});
            lit.clear();
            std::string name;
            std::size_t j = i + 1;
            while (j < text.size() && name_char(text[j])) name += text[j++];
            t.segments.push_back({true, std::move(name)});
            i = j - 1;
            continue;
        }
        lit += '%';
    }
    if (!lit.empty()) t.segments.push_back({false, std::move(lit)});
    return t;
}

std::vector<std::string> CodeTemplate::refs() const {
    std::vector<std::string> out;
    for (auto& s : segments)
        if (s.ref) out.push_back(s.text);
    return out;
}

std::string CodeTemplate::expand(const std::function<const std::string*(const std::string&)>& lookup) const {
    std::string out;
    for (auto& s : segments) {
        if (!s.ref) {
            out += s.text;
            continue;
        }
        const std::string* v = lookup(s.text);
        if (!v) throw ValueError("unbound reference %" + s.text);
        out += *v;
    }
    return out;
}

}  // namespace bsml
