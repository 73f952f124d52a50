#include <topodistill/cli.hpp>
#include <topodistill/io.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace topodistill;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("topodistill_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
  fs::path dir;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrors) {
  auto r = cli({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"ph"}).code, 2);
  EXPECT_EQ(cli({"ph", "x.csv", "--k", "three"}).code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli({"--help"}).code, 0); }

TEST(Cli, RuntimeFailureExitsOne) {
  auto r = cli({"distill", "/nonexistent/manifest.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, PhUnitSquare) {
  std::ofstream(p("sq.csv")) << "x,y\n0,0\n1,0\n0,1\n1,1\n";
  const auto r = cli({"ph", p("sq.csv"), "--k", "3", "--eps-max", "2", "--out", p("ph")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1,1,1.4142135623731,0"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(dir / "ph" / "diagram.csv"), r.out);
  for (const char* f : {"betti.csv", "graph.csv", "pi_0.csv", "pi_1.json"}) EXPECT_TRUE(fs::exists(dir / "ph" / f));
}

TEST_F(CliTest, GenToyDistillRetrieveAnalyze) {
  auto r = cli({"gen-toy", "two-ring", p("toy.csv"), "--per-class", "12", "--size", "6", "--format", "csv",
                "--manifest", p("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = load_manifest(dir / "m.json");
  m.config.ipc = 3;
  m.config.budget_B = 12;
  m.config.k_nn = 3;
  save_manifest(m, dir / "m.json");

  r = cli({"distill", p("m.json"), "--out", p("run1")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"distill", p("m.json"), "--out", p("run2")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "run1" / "losses.csv"), slurp(dir / "run2" / "losses.csv"));
  EXPECT_EQ(slurp(dir / "run1" / "synthetic/class_001/img_0002.pgm"),
            slurp(dir / "run2" / "synthetic/class_001/img_0002.pgm"));

  // replay from the emitted manifest
  r = cli({"distill", p("run1/manifest.json"), "--out", p("run3")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "run1" / "losses.csv"), slurp(dir / "run3" / "losses.csv"));

  r = cli({"retrieve", p("m.json"), "--class", "1", "--image", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("index,source_id,distance2,complexity,score\n", 0), 0u);
  EXPECT_NE(r.out.find("\nselected,"), std::string::npos);
  EXPECT_EQ(cli({"retrieve", p("m.json"), "--class", "5", "--image", "0"}).code, 1);

  r = cli({"analyze", p("run1")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("kappa"), std::string::npos);
}

TEST(Cli, VerifyQuick) {
  auto r = cli({"verify", "--quick"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = TOPODISTILL_CLI_PATH;
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " frobnicate >/dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " ph /nonexistent.csv >/dev/null 2>&1").c_str())), 1);
}
