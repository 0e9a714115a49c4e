// One line per acceptance criterion; exit status 1 when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "bsml/conversion.hpp"
#include "bsml/error.hpp"
#include "bsml/runtime.hpp"
#include "support/grammar_iso.hpp"
#include "support/paths.hpp"
#include "support/property.hpp"
#include "support/ulp.hpp"

using namespace bsml;
using namespace bsml::testing;

namespace {

// tolerances and limits
constexpr double kC1Seconds = 1.0;
constexpr double kC2Seconds = 1.0;
constexpr double kC3Seconds = 1.0;
constexpr std::uint64_t kC5Ulps = 1;
constexpr int kC8Schemas = 200;
constexpr int kC8MaxBlocks = 6;
constexpr double kC8Seconds = 60.0;
constexpr int kC9Rays = 100000;
constexpr int kC9BaselineRays = 10;
constexpr double kC9Factor = 10.0;
constexpr double kC9Seconds = 10.0;
constexpr std::uint64_t kC10Ulps = 1;
constexpr int kC10Samples = 1000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = f();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %-34s %.3fs  %s\n", n, o.pass ? "PASS" : "FAIL", title.c_str(), s, o.detail.c_str());
    std::fflush(stdout);
}

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string emit(const SchemaSet& set, const std::string& id, const std::string& doc, bool& ok) {
    Compiled c = compile(set, id);
    std::ostringstream out;
    TextSink sink(out);
    ok = parse_text(c.table, doc, sink).accepted;
    return out.str();
}

std::vector<ConversionFilter> filters(const std::string& file, const SchemaSet& a, const SchemaSet& r) {
    SchemaSet t = a;
    for (auto& ty : r.types)
        if (!t.find_type(ty.id)) t.types.push_back(ty);
    return parse_filters(data(file), t);
}

void collect_codes(const Block& b, std::vector<const Block*>& out) {
    if (b.kind == Block::Kind::Code) out.push_back(&b);
    for (auto& k : b.children) collect_codes(k, out);
}

std::vector<std::string> words(const std::string& line) {
    std::vector<std::string> w;
    std::istringstream in(line);
    std::string t;
    while (in >> t) {
        while (!t.empty() && (t.front() == '"' || t.front() == ':')) t.erase(t.begin());
        while (!t.empty() && (t.back() == '"' || t.back() == ':')) t.pop_back();
        w.push_back(t);
    }
    return w;
}

bool number(const std::string& s, double& d) {
    try {
        std::size_t used = 0;
        d = std::stod(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::string same_to_ulps(const std::string& a, const std::string& b, std::uint64_t ulps) {
    std::istringstream x(a), y(b);
    std::string la, lb;
    for (int n = 1;; ++n) {
        bool ga = bool(std::getline(x, la)), gb = bool(std::getline(y, lb));
        if (ga != gb) return "line count differs at " + std::to_string(n);
        if (!ga) return "";
        auto wa = words(la), wb = words(lb);
        if (wa.size() != wb.size()) return "line " + std::to_string(n) + " differs";
        for (std::size_t i = 0; i < wa.size(); ++i) {
            double p, q;
            if (number(wa[i], p) && number(wb[i], q)) {
                if (ulp_distance(p, q) > ulps) return "line " + std::to_string(n) + ": " + wa[i] + " vs " + wb[i];
            } else if (wa[i] != wb[i]) {
                return "line " + std::to_string(n) + ": " + wa[i] + " vs " + wb[i];
            }
        }
    }
}

// Document source producing `<pdp>` with n rays without materializing it.
class RayStream : public std::streambuf {
public:
    explicit RayStream(int n) : n_(n) { refill(); }

private:
    int underflow() override {
        if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
        if (!refill()) return traits_type::eof();
        return traits_type::to_int_type(*gptr());
    }
    bool refill() {
        buf_.clear();
        if (i_ == -1) buf_ = "<pdp><rds>23.0998</rds>";
        else if (i_ < n_) buf_ = "<ray><time>" + std::to_string(i_) + "</time><power>-80.25</power></ray>";
        else if (i_ == n_) buf_ = "</pdp>";
        else return false;
        ++i_;
        setg(buf_.data(), buf_.data(), buf_.data() + buf_.size());
        return true;
    }
    int n_, i_ = -1;
    std::string buf_;
};

}  // namespace

int main() {
    report(1, "PDP binding golden", [] {
        auto t0 = std::chrono::steady_clock::now();
        bool ok;
        std::string out = emit(schema("pdp.xml"), "pdp", data("pdp_data.xml"), ok);
        std::string want = data("pdp_expected.txt");
        double s = since(t0);
        int rows = 0;
        for (char c : out) rows += c == '\n';
        return Outcome{ok && out == want && s < kC1Seconds,
                       std::to_string(rows - 2) + " data rows, " + (out == want ? "bytes equal" : "bytes differ")};
    });

    report(2, "PDP parse table", [] {
        auto t0 = std::chrono::steady_clock::now();
        Compiled c = compile(schema("pdp.xml"), "pdp");
        // figure row -> (column, production) with the canonical map S,R,M,P,C,X -> pdp,rds,med,pp,rep,rep'
        const std::vector<std::pair<std::string, std::vector<std::pair<std::string, int>>>> fig{
            {"pdp", {{"s(pdp)", 1}}},
            {"rds", {{"s(rds)", 2}, {"s(med)", 1}, {"s(pp)", 1}, {"s(ray)", 1}, {"e(pdp)", 1}}},
            {"med", {{"s(med)", 2}, {"s(pp)", 1}, {"s(ray)", 1}, {"e(pdp)", 1}}},
            {"pp", {{"s(pp)", 2}, {"s(ray)", 1}, {"e(pdp)", 1}}},
            {"rep", {{"s(ray)", 2}, {"e(pdp)", 1}}},
            {"rep'", {{"s(ray)", 2}, {"e(pdp)", 1}}}};
        const Grammar& g = c.table.g;
        int cells = 0;
        for (std::size_t a = 0; a < g.nt.size(); ++a) cells += int(c.table.cells[a].size());
        bool ok = g.nt.size() == fig.size() && c.table.columns().size() == 6;
        int want_cells = 0;
        for (auto& [row, cs] : fig) {
            auto it = std::find(g.nt.begin(), g.nt.end(), row);
            if (it == g.nt.end()) {
                ok = false;
                continue;
            }
            std::size_t a = std::size_t(it - g.nt.begin());
            for (auto& [col, prod] : cs) {
                ++want_cells;
                bool found = false;
                for (auto& [cls, p] : c.table.cells[a])
                    if (class_text(*g.ctx, cls) == col) found = p + 1 == prod;
                ok = ok && found;
            }
        }
        ok = ok && cells == want_cells && since(t0) < kC2Seconds;
        return Outcome{ok, std::to_string(g.nt.size()) + " rows, " + std::to_string(cells) + "/" +
                               std::to_string(want_cells) + " cells"};
    });

    report(3, "octree grammar isomorphism", [] {
        auto t0 = std::chrono::steady_clock::now();
        Compiled c = compile(schema("octree.xml"), "octree");
        IsoResult r = isomorphic(TextGrammar::parse(kOctreeFigure), TextGrammar::parse(c.final.dump()));
        return Outcome{r.ok && since(t0) < kC3Seconds,
                       r.ok ? "isomorphic" : r.why + " (generated " + std::to_string(c.final.nt.size()) + ", figure 9)"};
    });

    report(4, "binding-blocked schemas", [] {
        auto blocked = [](const char* f, const char* id) {
            try {
                compile(schema(f), id);
                return -1;
            } catch (const CodeBlocksRewrite& e) {
                return e.exit_code();
            }
        };
        auto compiles = [](const char* f, const char* id) {
            try {
                compile(schema(f), id);
                return true;
            } catch (const Error&) {
                return false;
            }
        };
        int e1 = blocked("ex1.xml", "ex1"), e2 = blocked("ex2.xml", "ex2");
        bool n1 = compiles("ex1_nocode.xml", "ex1"), n2 = compiles("ex2_nocode.xml", "ex2");
        return Outcome{e1 == 2 && e2 == 2 && n1 && n2, "exit " + std::to_string(e1) + "/" + std::to_string(e2) +
                                                           ", code-free " + (n1 && n2 ? "compile" : "fail")};
    });

    report(5, "antenna conversion", [] {
        SchemaSet a = schema("antenna_actual.xml"), r = schema("antenna_required.xml");
        DeterminesProof p = determines(a, "antennas", r, "antennas", 2, filters("polar_filters.xml", a, r));
        SchemaSet c = synthesize(a, r, p);
        std::vector<const Block*> cs, rs;
        for (auto& s : c.schemas) collect_codes(s.root, cs);
        for (auto& s : r.schemas) collect_codes(s.root, rs);
        int filt = 0, def = 0, unit = 0;
        std::vector<std::string> user, req;
        for (auto* b : cs) {
            if (b->role == Block::Role::Filter) {
                auto as = parse_assignments(b->text);
                std::set<std::string> in;
                for (auto& x : as) x.expr->vars(in);
                filt += as.size() == 2 && in.size() == 3;
            }
            if (b->role == Block::Role::DefaultFill) def += b->text == "gain = 0";
            if (b->role == Block::Role::UnitConv) {
                auto as = parse_assignments(b->text);
                unit += as.size() == 1 && b->text == as[0].target + " = " + as[0].target + " * 25.4";
            }
            if (b->role == Block::Role::User) user.push_back(b->text);
        }
        // output codes of the matched required blocks (the converted-schema figure shows these two)
        for (auto* b : rs)
            if (b->text.find("pyramidal") == std::string::npos) req.push_back(b->text);
        bool shape = filt == 1 && def == 1 && unit == 2 && user == req && cs.size() == 4 + req.size();

        std::string doc = data("antenna_data.xml");
        bool ok1, ok2;
        std::string got = emit(c, "antennas", doc, ok1);
        XmlNode root = parse_xml(doc);
        std::ostringstream h;
        h << "<antennas>";
        for (auto& an : root.children) {
            auto val = [](const XmlNode& n, const std::string& name) {
                for (auto& k : n.children)
                    if (k.name == name) return k.text;
                return std::string();
            };
            double x = std::stod(val(an, "x")), y = std::stod(val(an, "y")), z = std::stod(val(an, "z"));
            const XmlNode& wg = an.children.back();
            h << "<antenna><id>" << val(an, "id") << "</id><phi>" << format_double(std::atan2(y, x)) << "</phi><theta>"
              << format_double(std::acos(z / std::sqrt(x * x + y * y + z * z))) << "</theta><waveguide><width>"
              << format_double(std::stod(val(wg, "width")) * 254 / 10) << "</width><height>"
              << format_double(std::stod(val(wg, "height")) * 254 / 10) << "</height></waveguide></antenna>";
        }
        h << "</antennas>";
        std::string want = emit(r, "antennas", h.str(), ok2);
        std::string diff = same_to_ulps(got, want, kC5Ulps);
        return Outcome{shape && ok1 && ok2 && diff.empty(),
                       std::to_string(filt) + " filter, " + std::to_string(def) + " default, " + std::to_string(unit) +
                           " unit, " + std::to_string(user.size()) + " output codes; emission " +
                           (diff.empty() ? "equal" : diff)};
    });

    report(6, "mandated rejections", [] {
        auto rejects = [](const char* fa, const char* fr, const char* id) {
            try {
                determines(schema(fa), id, schema(fr), id, 2);
                return -1;
            } catch (const NoProof& e) {
                return e.exit_code();
            }
        };
        int a = rejects("tx_gain.xml", "snr.xml", "gain"), b = rejects("pdp_rays.xml", "pdp_single.xml", "pdp");
        return Outcome{a == 1 && b == 1, "renaming exit " + std::to_string(a) + ", repetition exit " + std::to_string(b)};
    });

    report(7, "STTD bidirectional at k=1", [] {
        SchemaSet o = schema("sttd_old.xml"), n = schema("sttd_new.xml");
        auto on = determines(o, "transmitter", n, "transmitter", 1).rules();
        auto no = determines(n, "transmitter", o, "transmitter", 1).rules();
        bool ok = on.count("E_g") && no.count("E_r");
        return Outcome{ok, std::string("old>=new ") + (on.count("E_g") ? "E_g" : "no E_g") + ", new>=old " +
                               (no.count("E_r") ? "E_r" : "no E_r")};
    });

    report(8, "property suite", [] {
        auto t0 = std::chrono::steady_clock::now();
        PropertyReport r;
        SchemaGen gen(20240601u, kC8MaxBlocks);
        std::mt19937 rng(20240601u ^ 0x9e3779b9u);
        for (int i = 0; i < 20000 && r.schemas < kC8Schemas; ++i) check_schema(gen.next(), rng, r);
        double s = since(t0);
        return Outcome{r.schemas >= kC8Schemas && r.counterexamples.empty() && s < kC8Seconds,
                       std::to_string(r.schemas) + " schemas, " + std::to_string(r.strings) + " strings, " +
                           std::to_string(r.counterexamples.size()) + " counterexamples (" +
                           std::to_string(r.skipped_compile) + " not LL(1))"};
    });

    report(9, "streaming bound", [] {
        auto t0 = std::chrono::steady_clock::now();
        Compiled c = compile(schema("pdp.xml"), "pdp");
        auto run = [&](int rays) {
            RayStream buf(rays);
            std::istream in(&buf);
            NullSink sink;
            ParseResult r = parse_stream(c.table, in, sink);
            return r.accepted ? r.peak_retained : std::size_t(0);
        };
        std::size_t base = run(kC9BaselineRays), big = run(kC9Rays);
        double s = since(t0);
        bool ok = base > 0 && big > 0 && double(big) < kC9Factor * double(base) && s < kC9Seconds;
        return Outcome{ok, std::to_string(big) + " B peak vs " + std::to_string(base) + " B baseline"};
    });

    report(10, "units", [] {
        UnitConversion inmm = conversion(parse_units("in"), parse_units("mm"));
        UnitConversion dbm = conversion(parse_units("dBm"), parse_units("dBW"));
        const Rational factor = Rational(1000) / (Rational(45359237, 100000) / (Rational(254, 10000) * Rational(254, 10000)));
        UnitConversion area = conversion(parse_units("kg/m^2"), parse_units("lb/in^2"));
        bool ok = inmm.a == Rational(254, 10) && inmm.b == 0 && dbm.a == 1 && dbm.b == -30 && area.a == factor;
        std::mt19937_64 rng(10);
        std::uniform_real_distribution<double> e(-6, 6);
        std::uint64_t worst = 0;
        const std::pair<const char*, const char*> pairs[] = {{"in", "mm"}, {"kg/m^2", "lb/in^2"}, {"ns", "s"}, {"mW", "W"}};
        for (int i = 0; i < kC10Samples; ++i) {
            double x = (i % 2 ? -1 : 1) * std::pow(10.0, e(rng));
            worst = std::max(worst, ulp_distance(area.apply(x), static_cast<double>(Rational(x) * factor)));
            for (auto [a, r] : pairs) {
                UnitConversion f = conversion(parse_units(a), parse_units(r)), g = conversion(parse_units(r), parse_units(a));
                worst = std::max(worst, ulp_distance(g.apply(f.apply(x)), x));
            }
        }
        ok = ok && worst <= kC10Ulps;
        return Outcome{ok, "worst " + std::to_string(worst) + " ulp over " + std::to_string(kC10Samples) + " samples"};
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures ? 1 : 0;
}
