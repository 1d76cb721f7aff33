#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using divbound::cli::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "divbound");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = divbound::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("divbound_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    const auto p = path_ / name;
    if (!content.empty()) std::ofstream(p) << content;
    return p.string();
  }

 private:
  fs::path path_;
};

}  // namespace

TEST(Cli, UsageAndHelp) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"student-normal-tv", "--nu", "3", "--n", "10..2"}).code, 2);
  EXPECT_EQ(run({"student-normal-tv", "--nu", "3", "--n", "x"}).code, 2);
  EXPECT_EQ(run({"student-normal-tv", "--n", "4"}).code, 2);
  EXPECT_EQ(run({"student-normal-tv", "--nu", "3", "--n", "4..6000"}).code, 2);
  EXPECT_EQ(run({"student-normal-tv", "--nu", "-1", "--n", "4"}).code, 2);
  EXPECT_EQ(run({"gamma-tv"}).code, 2);
  EXPECT_EQ(run({"oracle", "mc-tv", "--preset", "nope"}).code, 2);
}

TEST(Cli, SweepRowsAreOrderedAndStable) {
  const auto r = run({"student-normal-tv", "--nu", "1", "--d-range", "0.5", "0.6", "--d-seed", "3", "--n", "2..40..2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "n,lower,upper,regime,n0,lower_clipped,upper_clipped,regime_change,nu,d_minus,d_plus,reason");
  EXPECT_EQ(r.out.back(), '\n');
  bool saw_gap = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), rows[0].size());
    EXPECT_EQ(std::stoul(rows[i][0]), 2 * i);
    if (rows[i][1].empty()) {
      saw_gap = true;
      EXPECT_EQ(rows[i][11], "n below n0");
      EXPECT_LT(std::stoul(rows[i][0]), std::stoul(rows[i][4]));
    } else {
      EXPECT_LE(std::stod(rows[i][1]), std::stod(rows[i][2]));
    }
  }
  EXPECT_TRUE(saw_gap);
  EXPECT_NE(r.err.find("generated scales"), std::string::npos);
  EXPECT_EQ(run({"student-normal-tv", "--nu", "1", "--d-range", "0.5", "0.6", "--d-seed", "3", "--n", "2..40..2",
                 "--threads", "1"})
                .out,
            r.out);
}

TEST(Cli, OracleIsReproducible) {
  const std::vector<std::string> args = {"oracle", "mc-tv", "--preset", "student-normal", "--nu", "3",
                                         "--n", "4", "--samples", "50000", "--seed", "42"};
  const auto a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  auto with_threads = args;
  with_threads.insert(with_threads.end(), {"--threads", "3"});
  EXPECT_EQ(run(with_threads).out, a.out);
  const auto k = run({"oracle", "mc-kl", "--preset", "normal-student", "--nu", "3", "--n", "2", "--samples", "20000"});
  EXPECT_EQ(k.code, 0) << k.err;
}

TEST(Cli, GammaIdenticalLaws) {
  TempDir dir;
  const auto spec = dir.file("spec.json", R"({"alpha":[2,3],"beta":[2,3],"lambda":[1,1],"mu":[1,1]})");
  const auto r = run({"gamma-tv", "--spec", spec, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  const auto& row = doc["rows"][0];
  EXPECT_EQ(row["point"].get<double>(), 0.0);
  EXPECT_EQ(row["lower"].get<double>(), 0.0);
  EXPECT_EQ(row["upper"].get<double>(), 0.0);
}

TEST(Cli, ConfigFileAndOverrides) {
  TempDir dir;
  const auto d = dir.file("d.json", "[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]");
  const auto out = dir.file("curve.csv");
  const auto cfg = dir.file("run.json", R"({"nu": 3, "d_file": ")" + d + R"(", "n": [2, 6, 2], "out": ")" + out + R"("})");
  const auto r = run({"student-normal-tv", "--config", cfg});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto rows = parse_csv(text);
  ASSERT_EQ(rows.size(), 4u);
  // Equal scales: the bounds collapse.
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NEAR(std::stod(rows[i][1]), std::stod(rows[i][2]), 1e-9);
  const auto over = run({"student-normal-tv", "--config", cfg, "--n", "4", "--out", dir.file("o2.csv")});
  ASSERT_EQ(over.code, 0) << over.err;
  std::ifstream in2(dir.file("o2.csv"));
  std::string header, line, extra;
  std::getline(in2, header);
  std::getline(in2, line);
  EXPECT_EQ(line.substr(0, 2), "4,");
  EXPECT_FALSE(std::getline(in2, extra));
}

TEST(Cli, GeneratedScalesSidecar) {
  TempDir dir;
  const auto out = dir.file("fig.csv");
  const auto r = run({"student-normal-tv", "--nu", "3", "--d-range", "0.95", "1.01", "--d-seed", "7", "--n",
                      "10..100..10", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto side = json::parse(std::ifstream(out + ".d.json"));
  EXPECT_EQ(side["d"].size(), 100u);
  EXPECT_EQ(side["d_seed"].get<int>(), 7);
  for (double v : side["d"].get<std::vector<double>>()) {
    EXPECT_GE(v, 0.95);
    EXPECT_LE(v, 1.01);
  }
}

TEST(Cli, OtherCommands) {
  TempDir dir;
  const auto a = dir.file("a.json", "[[2, 0], [0, 1]]");
  const auto b = dir.file("b.json", "[[1, 0.2], [0.2, 1]]");
  const auto red = run({"reduce", "--sigma1", a, "--sigma2", b});
  EXPECT_EQ(red.code, 0) << red.err;
  EXPECT_EQ(parse_csv(red.out).size(), 3u);
  const auto bad = dir.file("c.json", "[[1, 2], [2, 1]]");
  EXPECT_EQ(run({"reduce", "--sigma1", bad, "--sigma2", b}).code, 2);
  const auto kl = run({"student-normal-kl", "--nu", "2", "--n", "1..3", "--format", "json"});
  ASSERT_EQ(kl.code, 0) << kl.err;
  EXPECT_EQ(json::parse(kl.out)["rows"][0]["forward"], "inf");
  const auto el = run({"elliptical", "--g1", "student:5", "--g2", "normal", "--n", "3"});
  EXPECT_EQ(el.code, 0) << el.err;
}
