#include <gtest/gtest.h>

#include <chrono>

#include "support/property.hpp"

using namespace bsml::testing;

TEST(Properties, RandomSchemasPreserveLanguageAndMatchRuntime) {
    auto t0 = std::chrono::steady_clock::now();
    PropertyReport r = run_property_suite(20240601u, 200);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_GE(r.schemas, 200);
    EXPECT_TRUE(r.counterexamples.empty()) << r.counterexamples.front();
    EXPECT_GT(r.strings, 1000);
    EXPECT_LT(secs, 60.0);
    RecordProperty("schemas", r.schemas);
    RecordProperty("strings", r.strings);
}

TEST(Properties, SeveralSeeds) {
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        PropertyReport r = run_property_suite(seed, 200);
        EXPECT_GE(r.schemas, 200) << seed;
        EXPECT_TRUE(r.counterexamples.empty()) << seed << "\n" << r.counterexamples.front();
    }
}

TEST(Properties, EnumeratorFindsKnownLanguage) {
    bsml::SchemaSet s = bsml::parse_schema_set(
        "<schemas><schema id='r'><element name='l'><repetition min='1' max='2'><element name='i'/></repetition>"
        "</element></schema></schemas>");
    bsml::Compiled c = bsml::compile(s, "r");
    Enumeration e = enumerate(c.final);
    std::set<Sentence> valid;
    for (auto& x : e.sentences)
        if (bounds_hold(*c.final.ctx, x)) valid.insert(terminals_of(x));
    // s(l) (s(i) e(i)){1,2} e(l) with l = name 0, i = name 1
    EXPECT_EQ(valid, (std::set<Sentence>{{2, 4, 5, 3}, {2, 4, 5, 4, 5, 3}}));
    EXPECT_TRUE(e.complete);
}
