#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace pdegensol;

namespace {

struct Outcome {
  int code;
  std::string out;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(PDEGENSOL_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string f; std::getline(in, f, sep);) out.push_back(f);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("pdegensol_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, List) {
  const Outcome r = cli("list");
  ASSERT_EQ(r.code, 0);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 26u);  // header + 25
  EXPECT_EQ(rows[1].rfind("3.1 ", 0), 0u);
  bool saw51 = false, saw63 = false;
  for (const auto& row : rows) {
    if (row.rfind("5.1 ", 0) == 0) {
      saw51 = true;
      std::istringstream in(row);
      std::string id, order, vars;
      in >> id >> order >> vars;
      EXPECT_EQ(vars, "4");
    }
    if (row.rfind("6.3 ", 0) == 0) {
      saw63 = true;
      EXPECT_NE(row.find("b != 0"), std::string::npos);
    }
  }
  EXPECT_TRUE(saw51 && saw63);
}

TEST_F(Cli, Show) {
  const Outcome r = cli("show 3.1");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("exp(exp(b*t)*G(x))"), std::string::npos);
  EXPECT_NE(r.out.find("F(t), G(x)"), std::string::npos);
  EXPECT_NE(r.out.find("= 0"), std::string::npos);

  const Outcome r71 = cli("show 7.1");
  ASSERT_EQ(r71.code, 0);
  EXPECT_NE(r71.out.find("deriv(F, 1)(t)"), std::string::npos);

  EXPECT_EQ(cli("show 0").code, 2);
  EXPECT_EQ(cli("show").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST_F(Cli, VerifyExitCodes) {
  EXPECT_EQ(cli("verify 3.1 --seed 7 --scenarios 2 --points 10").code, 0);
  EXPECT_EQ(cli("verify 3.3 --seed 7 --scenarios 2 --points 10").code, 1);
  // No tolerance above the noise floor can be met or refuted at 1e-30.
  EXPECT_EQ(cli("verify 3.1 --seed 7 --scenarios 1 --points 5 --tol 1e-30").code, 3);
  EXPECT_EQ(cli("verify 3.1 --tol 0.5").code, 2);
  EXPECT_EQ(cli("verify 9.9").code, 2);
  EXPECT_EQ(cli("verify 3.1 --scenarios 1 --points 5 --json " + path("missing/dir/out.json")).code, 4);
}

TEST_F(Cli, VerifyOutputs) {
  const std::string json_path = path("r.json");
  const Outcome r = cli("verify 6.1 --seed 3 --scenarios 2 --points 6 --json " + json_path);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  std::ifstream in(json_path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto reports = reports_from_json(buf.str());
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].family, "6.1");
  EXPECT_EQ(reports[0].verdict, Verdict::Pass);
  EXPECT_EQ(reports[0].seed, 3u);

  const Outcome csv = cli("verify 6.1 --seed 3 --scenarios 2 --points 6 --format csv");
  ASSERT_EQ(csv.code, 0);
  const auto rows = lines(csv.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(split(rows[0], ',')[0], "family");
  EXPECT_EQ(split(rows[1], ',')[1], "PASS");

  const Outcome js = cli("verify 6.1 --seed 3 --scenarios 2 --points 6 --format json");
  ASSERT_EQ(js.code, 0);
  EXPECT_EQ(reports_from_json(js.out), reports);
}

TEST_F(Cli, SampleWritesGridAndSidecar) {
  const std::string csv = path("s61.csv");
  const Outcome r = cli("sample 6.1 --grid t=0.3:1.1:5,x=0.4:1.0:5 --seed 4 --out " + csv);
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(csv);
  std::vector<std::string> rows;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) rows.push_back(l);
  ASSERT_EQ(rows.size(), 26u);
  EXPECT_EQ(rows[0], "t,x,w");

  // The sidecar alone reproduces every value: w = G/(F + H)^2.
  std::ifstream side(path("s61.json"));
  const json j = json::parse(side);
  const Scenario s = j.get<Scenario>();
  EXPECT_EQ(s.family_id, "6.1");
  EXPECT_TRUE(j.contains("engine_version"));
  EXPECT_TRUE(j.contains("grid"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i], ',');
    const double t = std::stod(f[0]), x = std::stod(f[1]), w = std::stod(f[2]);
    const double F = s.functions.at("F").value(std::span<const double>(&t, 1));
    const double G = s.functions.at("G").value(std::span<const double>(&x, 1));
    const double H = s.functions.at("H").value(std::span<const double>(&x, 1));
    EXPECT_NEAR(w, G / ((F + H) * (F + H)), 1e-12 * std::abs(w));
  }
}

TEST_F(Cli, SampleFourVariables) {
  const std::string csv = path("s53.csv");
  const Outcome r = cli("sample 5.3 --grid x1=0.3:0.9:2,x2=0.3:0.9:2,x3=0.3:0.9:2,x4=0.3:0.9:2 --out " + csv);
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x1,x2,x3,x4,w");
}

TEST_F(Cli, SampleErrors) {
  EXPECT_EQ(cli("sample 6.1 --grid t=5:9:3,x=0.4:1.0:3 --out " + path("o.csv")).code, 2);
  EXPECT_EQ(cli("sample 6.1 --grid t=0.3:0.5 --out " + path("o.csv")).code, 2);
  EXPECT_EQ(cli("sample 6.1 --grid t=0.3:0.5:3,x=0.4:1.0:3 --out " + path("none/o.csv")).code, 4);
}
