#include <gtest/gtest.h>

#include <random>

#include "bsml/error.hpp"
#include "bsml/schema.hpp"
#include "bsml/xml.hpp"
#include "support/paths.hpp"

using namespace bsml;
using namespace bsml::testing;

namespace {

std::string kinds(const std::vector<Event>& ev) {
    std::string s;
    for (auto& e : ev) {
        switch (e.kind) {
            case Event::StartElement: s += "s(" + e.name + ")"; break;
            case Event::EndElement: s += "e(" + e.name + ")"; break;
            case Event::CharData: s += "d(" + e.name + ")"; break;
            case Event::EndOfStream: s += "$"; break;
        }
    }
    return s;
}

SchemaSet types(const std::string& body) { return parse_schema_set("<schemas>" + body + "</schemas>"); }

}  // namespace

TEST(Xml, TokenizesPdpPrefix) {
    auto ev = tokenize_all("<pdp><rds>23.0998</rds></pdp>");
    EXPECT_EQ(kinds(ev), "s(pdp)s(rds)d(23.0998)e(rds)e(pdp)$");
}

TEST(Xml, EmptyElementAndWhitespace) {
    EXPECT_EQ(kinds(tokenize_all("<a/>")), "s(a)e(a)$");
    EXPECT_EQ(kinds(tokenize_all("<a>\n  <b/>\n</a>")), "s(a)s(b)e(b)e(a)$");
}

TEST(Xml, AttributeOrderAndEntities) {
    auto ev = tokenize_all("<a z='1' b=\"&lt;&amp;\">x&gt;y</a>");
    ASSERT_EQ(ev.size(), 4u);
    EXPECT_EQ(ev[0].attrs, (Attributes{{"z", "1"}, {"b", "<&"}}));
    EXPECT_EQ(ev[1].name, "x>y");
}

TEST(Xml, MalformedInputRejected) {
    EXPECT_THROW(tokenize_all("<a><b></a>"), XmlError);
    EXPECT_THROW(tokenize_all("<a>"), XmlError);
    EXPECT_THROW(tokenize_all("<a></a><b/>"), XmlError);
}

TEST(Xml, TokenizerStreams) {
    std::string doc = "<l>";
    for (int i = 0; i < 20000; ++i) doc += "<i>v</i>";
    doc += "</l>";
    std::istringstream in(doc);
    Tokenizer t(in);
    Event e;
    std::size_t peak = 0, n = 0;
    while (t.next(e)) ++n, peak = std::max(peak, t.retained_bytes());
    EXPECT_EQ(n, 60003u);   // with end of stream
    EXPECT_LT(peak, 200000u);
}

TEST(Schema, PdpParses) {
    SchemaSet s = schema("pdp.xml");
    ASSERT_EQ(s.schemas.size(), 1u);
    const Block& pdp = s.schemas[0].root.children.at(0);
    EXPECT_EQ(pdp.name, "pdp");
    EXPECT_EQ(pdp.children.size(), 6u);
    EXPECT_TRUE(pdp.children[0].optional);
    EXPECT_EQ(pdp.children[0].children.at(0).type.units, "ns");
    EXPECT_EQ(pdp.children[4].kind, Block::Kind::Repetition);
    EXPECT_FALSE(pdp.children[4].max.has_value());
}

TEST(Schema, RoundTrip) {
    for (auto f : {"pdp.xml", "octree.xml", "antenna_required.xml", "antenna_actual.xml", "sttd_new.xml", "ex1.xml"}) {
        SchemaSet a = schema(f);
        SchemaSet b = parse_schema_set(serialize(a));
        EXPECT_EQ(a, b) << f;
    }
}

TEST(Schema, DerivedTypesNarrow) {
    SchemaSet s = types("<type id='small' base='integer' min='0' max='10'/><type id='tiny' base='small' max='3'/>");
    const PrimitiveType* t = s.find_type("tiny");
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(t->min, "0");
    EXPECT_EQ(t->max, "3");
    EXPECT_THROW(types("<type id='small' base='integer' max='10'/><type id='big' base='small' max='30'/>"), SchemaError);
    EXPECT_THROW(types("<type id='a' base='double' number='true'/><type id='b' base='a' number='false'/>"), SchemaError);
    EXPECT_THROW(types("<type id='a' base='b'/><type id='b' base='a'/>"), SchemaError);
}

TEST(Schema, DerivedValueSetIsSubsetOfBase) {
    SchemaSet s = types("<type id='small' base='integer' min='-5' max='5'/><type id='tiny' base='small' min='0' max='3'/>"
                        "<type id='pos' base='double' min='0' number='true'/><type id='unit' base='pos' max='1'/>");
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> ints(-20, 20);
    std::uniform_real_distribution<double> reals(-3, 3);
    auto ok = [](const PrimitiveType& t, const std::string& v) {
        try {
            check_value(t, v);
            return true;
        } catch (const ValueError&) {
            return false;
        }
    };
    for (int i = 0; i < 500; ++i) {
        std::string iv = std::to_string(ints(rng)), dv = std::to_string(reals(rng));
        if (ok(*s.find_type("tiny"), iv)) {
            EXPECT_TRUE(ok(*s.find_type("small"), iv)) << iv;
        }
        if (ok(*s.find_type("small"), iv)) {
            EXPECT_TRUE(ok(builtin_type(Base::Integer), iv)) << iv;
        }
        if (ok(*s.find_type("unit"), dv)) {
            EXPECT_TRUE(ok(*s.find_type("pos"), dv)) << dv;
        }
    }
}

TEST(Schema, CheckValue) {
    PrimitiveType d = builtin_type(Base::Double);
    EXPECT_NO_THROW(check_value(d, "-88.0937"));
    EXPECT_NO_THROW(check_value(d, "inf"));
    d.number = true;
    EXPECT_THROW(check_value(d, "nan"), ValueError);
    d.finite = true;
    EXPECT_THROW(check_value(d, "inf"), ValueError);
    PrimitiveType b = builtin_type(Base::Boolean);
    EXPECT_NO_THROW(check_value(b, "true"));
    EXPECT_THROW(check_value(b, "yes"), ValueError);
    PrimitiveType e = builtin_type(Base::String);
    e.values = std::vector<std::string>{"red", "green"};
    EXPECT_NO_THROW(check_value(e, "red"));
    EXPECT_THROW(check_value(e, "blue"), ValueError);
    EXPECT_THROW(check_value(builtin_type(Base::Integer), "1.5"), ValueError);
}

TEST(Schema, StructuralErrors) {
    EXPECT_THROW(parse_schema_set("<schema/>"), SchemaError);
    EXPECT_THROW(validate_schema_set(types("<schema id='x'><ref id='nowhere'/></schema>")), SchemaError);
    EXPECT_THROW(types("<schema id='x'><repetition min='3' max='2'><element name='a'/></repetition></schema>"), SchemaError);
    EXPECT_THROW(validate_schema_set(types("<schema id='x'><element name='a' id='d'/><element name='b' id='d'/></schema>")),
                 SchemaError);
    EXPECT_THROW(types("<schema id='x'><element name='a' type='*'><element name='b'/></element></schema>"), SchemaError);
    EXPECT_THROW(types("<schema id='x'><element name='a' type='integer' default='x'/></schema>"), SchemaError);
}

TEST(Schema, SchemaIdResolvesToRoot) {
    SchemaSet s = schema("octree.xml");
    EXPECT_EQ(s.resolve("triangles"), &s.find_schema("triangles")->root);
    ASSERT_NE(s.resolve("oi"), nullptr);
    EXPECT_EQ(s.resolve("oi")->name, "oi");
}
