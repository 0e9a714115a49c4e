#include <gtest/gtest.h>

#include <random>

#include "bsml/error.hpp"
#include "bsml/units.hpp"
#include "support/ulp.hpp"

using namespace bsml;
using namespace bsml::testing;

namespace {

constexpr std::uint64_t kUlp = 1;
constexpr int kSamples = 1000;

std::vector<double> samples(unsigned seed, double lo_exp, double hi_exp) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> e(lo_exp, hi_exp);
    std::vector<double> v;
    for (int i = 0; i < kSamples; ++i) v.push_back((i % 2 ? -1 : 1) * std::pow(10.0, e(rng)));
    return v;
}

}  // namespace

TEST(Units, InchToMillimetreIsExact) {
    UnitConversion c = conversion(parse_units("in"), parse_units("mm"));
    EXPECT_EQ(c.a, Rational(254, 10));
    EXPECT_EQ(c.b, 0);
    EXPECT_EQ(c.a_double(), 25.4);
}

TEST(Units, DbmToDbwOffset) {
    UnitConversion c = conversion(parse_units("dBm"), parse_units("dBW"));
    EXPECT_EQ(c.a, 1);
    EXPECT_EQ(c.b, -30);
    EXPECT_EQ(c.apply(-50.0), -80.0);
}

TEST(Units, AreaDensityMatchesRationalOracle) {
    // oracle from definitions: 1 kg = 1000 g, 1 lb = 453.59237 g, 1 in = 0.0254 m
    const Rational kg(1000), lb(45359237, 100000), in(254, 10000);
    const Rational factor = kg / (lb / (in * in));
    UnitConversion c = conversion(parse_units("kg/m^2"), parse_units("lb/in^2"));
    EXPECT_EQ(c.a, factor);
    for (double x : samples(7, -6, 6)) {
        double want = static_cast<double>(Rational(x) * factor);
        EXPECT_LE(ulp_distance(c.apply(x), want), kUlp) << x;
    }
}

TEST(Units, IdentityAndIncompatible) {
    EXPECT_TRUE(conversion(parse_units("m"), parse_units("m")).identity());
    EXPECT_THROW(conversion(parse_units("m"), parse_units("s")), UnitError);
    EXPECT_THROW(conversion(parse_units("dBW"), parse_units("W")), UnitError);
    EXPECT_THROW(parse_units("furlong"), UnitError);
    EXPECT_THROW(parse_units("dB*m"), UnitError);
}

TEST(Units, LinearRoundTripsToOneUlp) {
    const std::pair<const char*, const char*> pairs[] = {
        {"in", "mm"}, {"kg/m^2", "lb/in^2"}, {"ns", "s"}, {"mW", "W"}, {"km", "in"}, {"m/s", "km/ns"}};
    for (auto [a, r] : pairs) {
        UnitConversion f = conversion(parse_units(a), parse_units(r)), g = conversion(parse_units(r), parse_units(a));
        EXPECT_EQ(f.a * g.a, 1) << a;
        for (double x : samples(11, -6, 6)) EXPECT_LE(ulp_distance(g.apply(f.apply(x)), x), kUlp) << a << " " << x;
    }
}

TEST(Units, DecibelRoundTripsToOneUlpOfLargerOperand) {
    UnitConversion f = conversion(parse_units("dBm"), parse_units("dBW")), g = conversion(parse_units("dBW"), parse_units("dBm"));
    EXPECT_EQ(f.b + g.b, 0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-150, 50);
    for (int i = 0; i < kSamples; ++i) {
        double x = d(rng), y = f.apply(x), back = g.apply(y);
        // an offset rounds relative to the larger magnitude
        double scale = std::max(std::fabs(x), std::fabs(y));
        EXPECT_LE(std::fabs(back - x), std::nextafter(scale, INFINITY) - scale) << x;
    }
}

TEST(Units, CanonicalIdempotentAndCompatibilityIsEquivalence) {
    const char* us[] = {"m", "mm", "in", "kg/m^2", "lb/in^2", "dBW", "dBm", "W", "m*s/s", "1"};
    for (auto u : us) EXPECT_EQ(canonical(canonical(parse_units(u))), canonical(parse_units(u))) << u;
    for (auto a : us)
        for (auto b : us) {
            EXPECT_EQ(compatible(parse_units(a), parse_units(b)), compatible(parse_units(b), parse_units(a)));
            for (auto c : us)
                if (compatible(parse_units(a), parse_units(b)) && compatible(parse_units(b), parse_units(c))) {
                    EXPECT_TRUE(compatible(parse_units(a), parse_units(c)));
                }
        }
    EXPECT_TRUE(compatible(parse_units("m*s/s"), parse_units("in")));
}

TEST(Units, UserTableExtends) {
    UnitTable t;
    t.load("ft = 3048/10000 m\n");
    EXPECT_EQ(conversion(t.parse("ft"), t.parse("in")).a, 12);
}
