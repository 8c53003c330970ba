#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "common.hpp"

using namespace wmmd;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "wmmd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("wmmd_cli_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
    write("a.csv", "0\n");
    write("b.csv", "1\n");
    write("c.csv", "0\n2\n");
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& n) const { return (dir_ / n).string(); }
  void write(const std::string& n, const std::string& text) const { std::ofstream(path(n)) << text; }
  std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, MmdTwoDiracs) {
  const Invocation r = run({"mmd", "--kernel", "{\"family\":\"gaussian\",\"sigma\":1,\"d\":1}", path("a.csv"), path("b.csv")});
  ASSERT_EQ(r.code, cli::kExitPass) << r.err;
  EXPECT_NEAR(std::stod(r.out), std::sqrt(2.0 - 2.0 * std::exp(-0.5)), 1e-15);
}

TEST_F(CliTest, WassOneD) {
  const Invocation r = run({"wass", "--p", "1", path("a.csv"), path("c.csv")});
  ASSERT_EQ(r.code, cli::kExitPass) << r.err;
  EXPECT_NEAR(std::stod(r.out), 1.0, 1e-15);
}

TEST_F(CliTest, ErrorsUseExitOneAndPrefix) {
  Invocation r = run({"sketch", path("c.csv")});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_EQ(r.err.rfind("E: ", 0), 0u) << r.err;
  r = run({"mmd", path("a.csv"), path("missing.csv")});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_EQ(r.err.rfind("E: ", 0), 0u);
  r = run({"nosuch"});
  EXPECT_EQ(r.code, cli::kExitError);
  r = run({"lab", "nosuch", "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitError);
}

TEST_F(CliTest, ViolationExitsTwo) {
  const Invocation r = run({"lab", "fourier-bound", "--seed", "1", "--pairs", "3"});
  EXPECT_EQ(r.code, cli::kExitViolation) << r.err;
  EXPECT_FALSE(json::parse(r.out)["pass"].get<bool>());
}

TEST_F(CliTest, LabWritesReportAndSummary) {
  const Invocation r = run({"lab", "segment", "-o", path("seg.csv")});
  ASSERT_EQ(r.code, cli::kExitPass) << r.err;
  EXPECT_TRUE(std::filesystem::exists(path("seg.csv")));
  const json s = cli::read_json_file(path("seg.csv.summary.json"));
  EXPECT_TRUE(s["pass"].get<bool>());
  EXPECT_EQ(s["seed"].get<std::uint64_t>(), 0u);
}

TEST(CliConfig, RoundTripIsIdempotent) {
  const json j = json::parse(R"({"command":"lab","experiment":"counterexample","k":4,"p":1.0,"delta":0.5,
      "seed":9,"grid":[64,128],"kernel":{"family":"gaussian","sigma":1.0,"d":1},"threads":2,"center":[0.0,1.5],
      "decoder":{"starts":3},"binary":true,"inputs":["x.csv"],"output":"o.csv"})");
  EXPECT_EQ(cli::to_json(cli::config_from_json(j)), j);
  const json once = cli::to_json(cli::config_from_json(j));
  EXPECT_EQ(cli::to_json(cli::config_from_json(once)), once);
}

TEST(CliConfig, UnknownKeyRejected) {
  EXPECT_ERRC(cli::config_from_json(json::parse(R"({"bogus":1})")), Errc::Parse);
  EXPECT_ERRC(cli::config_from_json(json::parse(R"({"k":"four"})")), Errc::Parse);
  EXPECT_ERRC(cli::config_from_json(json::parse("[1]")), Errc::Parse);
}

TEST_F(CliTest, FlagsOverrideConfig) {
  write("cfg.json", R"({"command":"lab","experiment":"counterexample","k":2})");
  Invocation r = run({"lab", "--config", path("cfg.json")});
  ASSERT_EQ(r.code, cli::kExitPass) << r.err;
  EXPECT_EQ(json::parse(r.out)["k"].get<int>(), 2);
  r = run({"lab", "--config", path("cfg.json"), "--k", "4"});
  ASSERT_EQ(r.code, cli::kExitPass) << r.err;
  EXPECT_EQ(json::parse(r.out)["k"].get<int>(), 4);
  write("bad.json", R"({"command":"lab","bogus":true})");
  r = run({"lab", "counterexample", "--config", path("bad.json")});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("Parse"), std::string::npos);
  r = run({"mmd", "--config", path("cfg.json"), path("a.csv"), path("b.csv")});
  EXPECT_EQ(r.code, cli::kExitError);
}

TEST_F(CliTest, SketchDeterministicAndMergeable) {
  write("d.csv", "0.5,1\n-1,2\n3,0.25\n");
  ASSERT_EQ(run({"sketch", "--m", "8", "--seed", "7", path("d.csv"), "-o", path("s1.json")}).code, 0);
  ASSERT_EQ(run({"sketch", "--m", "8", "--seed", "7", path("d.csv"), "-o", path("s2.json")}).code, 0);
  std::ifstream a(path("s1.json")), b(path("s2.json"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  const Invocation m = run({"merge", path("s1.json"), path("s2.json"), "-o", path("m.json")});
  EXPECT_EQ(m.code, 0) << m.err;
}
