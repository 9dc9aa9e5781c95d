#include <gtest/gtest.h>

#include "pem/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("pem_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int pem(const std::string& args) {
    const std::string cmd = std::string(PEM_CLI_PATH) + " -j 1 " + args + " > " + (dir_ / "out.txt").string() +
                            " 2> " + (dir_ / "err.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }
  std::string out() const { return slurp(dir_ / "out.txt"); }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, SignIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(pem("gen --blocks 40 --n 1 --seed 3 -o " + path("corpus")), 0);
  const std::string f = path("corpus/f0_0.pem");
  ASSERT_TRUE(fs::exists(f));
  ASSERT_EQ(pem("sign --budget 20 " + f + " -o " + path("a.json")), 0);
  ASSERT_EQ(pem("sign --budget 20 " + f + " -o " + path("b.json")), 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_NO_THROW(pem::read_signature(path("a.json")));
}

TEST_F(Cli, RenamedProgramComparesAsIdentical) {
  ASSERT_EQ(pem("gen --blocks 40 --n 1 --seed 4 -o " + path("corpus")), 0);
  const std::string f = path("corpus/f0_0.pem");
  ASSERT_EQ(pem("transform " + f + " --plan rename --seed 9 -o " + path("r.pem")), 0);
  ASSERT_EQ(pem("compare --budget 20 " + f + " " + path("r.pem")), 0);
  EXPECT_NE(out().find("1.0"), std::string::npos) << out();
}

TEST_F(Cli, DoneOnlyProgramHasEmptySignature) {
  std::ofstream(path("d.pem")) << "main:\n  done\n";
  ASSERT_EQ(pem("sign " + path("d.pem") + " -o " + path("d.json")), 0);
  EXPECT_TRUE(pem::read_signature(path("d.json")).values.empty());
}

TEST_F(Cli, EvalAgainstItselfIsPerfect) {
  ASSERT_EQ(pem("gen --blocks 30 --n 4 --family-size 2 --seed 5 -o " + path("corpus")), 0);
  ASSERT_EQ(pem("sign --budget 10 " + path("corpus") + " -o " + path("sigs")), 0);
  ASSERT_EQ(pem("eval --queries " + path("sigs") + " --pool " + path("sigs") + " -o " + path("r.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_DOUBLE_EQ(j.at("pr1").get<double>(), 1.0);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(pem("--version"), 0);
  EXPECT_EQ(pem("sign"), 1);                                // missing argument
  EXPECT_EQ(pem("frobnicate"), 1);                          // unknown subcommand
  EXPECT_EQ(pem("sign " + path("missing.pem") + " -o " + path("m.json")), 2);       // missing file
  std::ofstream(path("bad.pem")) << "main:\n  li r99, 1\n";
  EXPECT_EQ(pem("asm " + path("bad.pem")), 2);               // parse error
  EXPECT_EQ(pem("theory pk --t 0.7 --q 0.6"), 1);           // invalid parameters
  EXPECT_EQ(pem("theory pk --t 0.1 --q 0.1 --kmax 3"), 0);
  EXPECT_NE(out().find("0.64"), std::string::npos) << out();
}

}  // namespace
