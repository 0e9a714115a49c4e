#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "support/paths.hpp"

using namespace bsml::testing;
namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code;
    std::string out, err;
};

Invocation bsmlc(const std::string& args) {
    static int n = 0;
    fs::path dir = fs::temp_directory_path() / ("bsmlc_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    fs::path o = dir / ("out" + std::to_string(n)), e = dir / ("err" + std::to_string(n++));
    std::string cmd = std::string(BSMLC_PATH) + " " + args + " > " + o.string() + " 2> " + e.string();
    int st = std::system(cmd.c_str());
    Invocation r{WIFEXITED(st) ? WEXITSTATUS(st) : -1, bsml::read_file(o.string()), bsml::read_file(e.string())};
    return r;
}

std::string d(const std::string& f) { return data_path(f); }

std::string temp_file(const std::string& name, const std::string& text) {
    fs::path p = fs::temp_directory_path() / ("bsmlc_test_" + std::to_string(::getpid())) / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
    return p.string();
}

}  // namespace

TEST(Cli, BindPdpGolden) {
    Invocation r = bsmlc("bind " + d("pdp.xml") + " " + d("pdp_data.xml"));
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, data("pdp_expected.txt"));
}

TEST(Cli, BindEmitFile) {
    std::string out = temp_file("emit.txt", "");
    Invocation r = bsmlc("bind " + d("pdp.xml") + " " + d("pdp_data.xml") + " --emit " + out);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(bsml::read_file(out), data("pdp_expected.txt"));
}

TEST(Cli, CountActions) {
    Invocation r = bsmlc("bind " + d("pdp.xml") + " " + d("pdp_data.xml") + " --count-actions");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(" 22\n"), std::string::npos) << r.out;
}

TEST(Cli, ValidateExitCodes) {
    EXPECT_EQ(bsmlc("validate " + d("pdp.xml") + " " + d("pdp_data.xml")).code, 0);
    Invocation r = bsmlc("validate " + d("octree.xml") + " --id octree " + d("triangle_2v.xml"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("/octree/oi/tr"), std::string::npos) << r.err;
    std::string opt = temp_file("opt.xml", "<schemas><schema id='x'><element name='a' optional='true'/></schema></schemas>");
    EXPECT_EQ(bsmlc("validate " + opt + " " + temp_file("empty.xml", "")).code, 0);
}

TEST(Cli, GrammarStagesAndErrors) {
    Invocation r = bsmlc("grammar " + d("pdp.xml") + " --stage raw");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("D -> d"), std::string::npos);
    Invocation e = bsmlc("grammar " + d("ex1.xml"));
    EXPECT_EQ(e.code, 2);
    EXPECT_NE(e.err.find("left recursion"), std::string::npos) << e.err;
    EXPECT_EQ(bsmlc("grammar " + d("ex2.xml")).code, 2);
    EXPECT_EQ(bsmlc("grammar " + d("ex1_nocode.xml")).code, 0);
}

TEST(Cli, TableIsDeterministic) {
    Invocation a = bsmlc("table " + d("pdp.xml")), b = bsmlc("table " + d("pdp.xml"));
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("rds/2"), std::string::npos);
}

TEST(Cli, ConvertExitCodes) {
    Invocation ok = bsmlc("convert --actual " + d("antenna_actual.xml") + " --required " + d("antenna_required.xml") +
                   " --filters " + d("polar_filters.xml") + " --k 2");
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("role='filter'"), std::string::npos) << ok.out;
    EXPECT_EQ(bsmlc("convert --actual " + d("tx_gain.xml") + " --required " + d("snr.xml")).code, 1);
    EXPECT_EQ(bsmlc("convert --actual " + d("pdp_rays.xml") + " --required " + d("pdp_single.xml")).code, 1);
    EXPECT_EQ(bsmlc("convert --actual " + d("delay_actual.xml") + " --required " + d("delay_required.xml") +
                    " --actual-id s --required-id s --filters " + d("delay_filters.xml")).code, 1);
    Invocation p = bsmlc("convert --actual " + d("sttd_old.xml") + " --required " + d("sttd_new.xml") +
                  " --actual-id transmitter --required-id transmitter --k 1 --proof");
    EXPECT_EQ(p.code, 0) << p.err;
    EXPECT_NE(p.err.find("E_g"), std::string::npos) << p.err;
}

TEST(Cli, ConvertOutputCompilesAndBinds) {
    std::string out = temp_file("sc.xml", "");
    ASSERT_EQ(bsmlc("convert --actual " + d("antenna_actual.xml") + " --required " + d("antenna_required.xml") +
                    " --filters " + d("polar_filters.xml") + " -o " + out).code, 0);
    Invocation r = bsmlc("bind " + out + " " + d("antenna_data.xml"));
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("waveguide: 22.86 10.16"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(bsmlc("").code, 64);
    EXPECT_EQ(bsmlc("frobnicate").code, 64);
    EXPECT_EQ(bsmlc("grammar").code, 64);
    EXPECT_EQ(bsmlc("grammar " + d("pdp.xml") + " --stage bogus").code, 64);
    EXPECT_EQ(bsmlc("convert --actual " + d("pdp.xml")).code, 64);
}

TEST(Cli, SchemaErrorsExitTwo) {
    EXPECT_EQ(bsmlc("grammar " + temp_file("bad.xml", "<schemas><schema id='x'><ref id='q'/></schema></schemas>")).code, 2);
    EXPECT_EQ(bsmlc("grammar " + temp_file("broken.xml", "<schemas>")).code, 2);
}
