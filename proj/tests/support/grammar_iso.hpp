#pragma once

// Grammar comparison under nonterminal renaming and repetition/code relabeling.
// Works on the textual dump format `A -> x , y , z` (one production per line).

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace bsml::testing {

struct TextGrammar {
    std::vector<std::string> nts;   // first = start
    std::map<std::string, std::vector<std::vector<std::string>>> prods;

    static TextGrammar parse(const std::string& dump) {
        TextGrammar g;
        std::istringstream in(dump);
        std::string line;
        while (std::getline(in, line)) {
            auto arrow = line.find(" -> ");
            if (arrow == std::string::npos) continue;
            std::string lhs = line.substr(0, arrow);
            std::vector<std::string> body;
            std::string rest = line.substr(arrow + 4);
            std::size_t p = 0;
            while (p <= rest.size()) {
                auto q = rest.find(" , ", p);
                if (q == std::string::npos) q = rest.size();
                std::string tok = rest.substr(p, q - p);
                if (!tok.empty() && tok != "eps") body.push_back(tok);
                p = q + 3;
            }
            if (!g.prods.count(lhs)) g.nts.push_back(lhs);
            g.prods[lhs].push_back(body);
        }
        return g;
    }
};

namespace detail {

inline bool is_terminal(const std::string& t) {
    return t == "d" || t.rfind("s(", 0) == 0 || t.rfind("e(", 0) == 0 || t.rfind("w(", 0) == 0;
}

// `{B#3}` -> ("B", "3"), `{code#1}` -> ("code", "1")
inline bool action_parts(const std::string& t, std::string& kind, std::string& label) {
    if (t.size() < 3 || t.front() != '{' || t.back() != '}') return false;
    auto h = t.find('#');
    if (h == std::string::npos) return false;
    kind = t.substr(1, h - 1);
    label = t.substr(h + 1, t.size() - h - 2);
    return true;
}

struct Labels {
    std::map<std::string, std::string> fwd, back;   // keys "kind:label" grouped by rep/code namespace
    bool bind(const std::string& a, const std::string& b) {
        auto f = fwd.find(a);
        auto r = back.find(b);
        if (f != fwd.end() || r != back.end()) return f != fwd.end() && r != back.end() && f->second == b;
        fwd[a] = b;
        back[b] = a;
        return true;
    }
};

inline std::string ns_of(const std::string& kind) { return kind == "B" || kind == "A" || kind == "E" ? "rep" : kind; }

inline bool match_prod(const std::vector<std::string>& x, const std::vector<std::string>& y,
                       const std::map<std::string, std::string>& ntmap, Labels& lab) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::string &a = x[i], &b = y[i];
        std::string ka, la, kb, lb;
        if (action_parts(a, ka, la)) {
            if (!action_parts(b, kb, lb) || ka != kb) return false;
            if (!lab.bind(ns_of(ka) + ":" + la, ns_of(kb) + ":" + lb)) return false;
        } else if (is_terminal(a)) {
            if (a != b) return false;
        } else {
            auto it = ntmap.find(a);
            if (it == ntmap.end() || it->second != b) return false;
        }
    }
    return true;
}

inline bool match_lists(const std::vector<std::pair<const std::vector<std::string>*, std::string>>& xs,
                        std::size_t i, const TextGrammar& y, std::map<std::string, std::vector<bool>>& used, const std::map<std::string, std::string>& ntmap,
                        Labels lab) {
    if (i == xs.size()) return true;
    const auto& [px, lhs] = xs[i];
    const auto& cands = y.prods.at(ntmap.at(lhs));
    auto& u = used[ntmap.at(lhs)];
    for (std::size_t j = 0; j < cands.size(); ++j) {
        if (u[j]) continue;
        Labels l2 = lab;
        if (!match_prod(*px, cands[j], ntmap, l2)) continue;
        u[j] = true;
        if (match_lists(xs, i + 1, y, used, ntmap, l2)) return true;
        u[j] = false;
    }
    return false;
}

}  // namespace detail

struct IsoResult {
    bool ok = false;
    std::map<std::string, std::string> ntmap;   // x nonterminal -> y nonterminal
    std::string why;
};

// x and y are isomorphic when a bijection of nonterminals (start to start)
// and of repetition/code labels maps the production multisets onto each other.
inline IsoResult isomorphic(const TextGrammar& x, const TextGrammar& y) {
    IsoResult res;
    if (x.nts.size() != y.nts.size()) {
        res.why = "nonterminal count " + std::to_string(x.nts.size()) + " vs " + std::to_string(y.nts.size());
        return res;
    }
    std::vector<std::pair<const std::vector<std::string>*, std::string>> xs;
    for (auto& n : x.nts)
        for (auto& p : x.prods.at(n)) xs.push_back({&p, n});

    std::map<std::string, std::string> ntmap;
    std::map<std::string, bool> taken;
    auto shape_ok = [&](const std::string& a, const std::string& b) {
        auto pa = x.prods.at(a), pb = y.prods.at(b);
        if (pa.size() != pb.size()) return false;
        auto lens = [](std::vector<std::vector<std::string>> v) {
            std::vector<std::size_t> l;
            for (auto& p : v) l.push_back(p.size());
            std::sort(l.begin(), l.end());
            return l;
        };
        return lens(pa) == lens(pb);
    };
    std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
        if (i == x.nts.size()) {
            std::map<std::string, std::vector<bool>> used;
            for (auto& n : y.nts) used[n] = std::vector<bool>(y.prods.at(n).size(), false);
            return detail::match_lists(xs, 0, y, used, ntmap, {});
        }
        const std::string& a = x.nts[i];
        for (std::size_t j = 0; j < y.nts.size(); ++j) {
            const std::string& b = y.nts[j];
            if ((i == 0) != (j == 0) || taken[b] || !shape_ok(a, b)) continue;
            ntmap[a] = b;
            taken[b] = true;
            if (assign(i + 1)) return true;
            taken[b] = false;
            ntmap.erase(a);
        }
        return false;
    };
    res.ok = assign(0);
    if (res.ok) res.ntmap = ntmap;
    else res.why = "no nonterminal bijection maps the production multisets onto each other";
    return res;
}

// Octree grammar transcribed from the published figure (attributes omitted there and here).
inline const char* kOctreeFigure =
    "S -> s(octree) , s(oi) , T , C , e(oi) , e(octree)\n"
    "T -> eps\n"
    "T -> {B#t} , s(tr) , {B#v} , s(v) , e(v) , {A#v} , V , {E#v} , e(tr) , {A#t} , T' , {E#t}\n"
    "T' -> eps\n"
    "T' -> s(tr) , {B#v} , s(v) , e(v) , {A#v} , V , {E#v} , e(tr) , {A#t} , T'\n"
    "V -> eps\n"
    "V -> s(v) , e(v) , {A#v} , V\n"
    "C -> eps\n"
    "C -> {B#i} , C' , {A#i} , C'' , {E#i}\n"
    "C' -> s(oi) , T , C , e(oi)\n"
    "C' -> s(ol) , T , e(ol)\n"
    "C'' -> eps\n"
    "C'' -> I\n"
    "I -> s(oi) , T , I'\n"
    "I -> s(ol) , T , e(ol) , {A#i} , C''\n"
    "I' -> {B#i} , C' , {A#i} , C'' , {E#i} , e(oi) , {A#i} , C''\n"
    "I' -> e(oi) , {A#i} , C''\n";

}  // namespace bsml::testing
