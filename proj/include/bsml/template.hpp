#pragma once

#include <functional>
#include <string>
#include <vector>

namespace bsml {

// Code text split into literal runs and %name references; %% is a literal %.
struct CodeTemplate {
    struct Segment {
        bool ref = false;
        std::string text;
        bool operator==(const Segment&) const = default;
    };
    std::string raw;
    std::vector<Segment> segments;

    static CodeTemplate parse(const std::string& text);
    std::vector<std::string> refs() const;
    // lookup returns nullptr for unbound names; expansion then raises Error
    std::string expand(const std::function<const std::string*(const std::string&)>& lookup) const;
};

}  // namespace bsml
