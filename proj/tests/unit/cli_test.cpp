// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the alforge binary.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "alforge/cli.hpp"
#include "alforge/synthetic.hpp"
#include "test_support.hpp"

using namespace alforge;
using alforge::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

Outcome run_cli(const std::string& args, const TempDir& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd =
      quoted(ALFORGE_CLI_PATH) + " " + args + " >" + quoted(out.string()) + " 2>" + quoted(err.string());
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path make_fixture(const fs::path& dir, std::size_t n = 240) {
  BlobSpec spec;
  spec.num_train = n;
  spec.num_test = 120;
  spec.dim = 5;
  spec.num_classes = 3;
  spec.budget = 30;
  spec.seed = 11;
  write_dataset(make_blobs(spec), dir);
  return dir;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  out << j.dump(2);
}

nlohmann::json small_grid(std::size_t parallelism, const std::string& out_dir) {
  return {{"datasets", {"data"}},
          {"ips", {"random"}},
          {"strategies", {"random", "margin"}},
          {"seeds", {0, 1}},
          {"cycles", 2},
          {"output_dir", out_dir},
          {"parallelism", parallelism}};
}

}  // namespace

TEST(Cli, ValidateAcceptsWellFormedDataset) {
  TempDir dir;
  make_fixture(dir / "data");
  const auto r = run_cli("validate " + quoted((dir / "data").string()), dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok:"), std::string::npos);
}

TEST(Cli, ValidateRejectsCorruptedPayload) {
  TempDir dir;
  const auto data = make_fixture(dir / "data");
  {
    std::fstream f(data / "test.emb", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);  // inside the float payload, past the header
    f.put('\x5a');
  }
  const auto r = run_cli("validate " + quoted(data.string()), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("checksum"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("test.emb"), std::string::npos) << r.err;
}

TEST(Cli, ValidateRejectsCorruptedHeader) {
  TempDir dir;
  const auto data = make_fixture(dir / "data");
  {
    std::fstream f(data / "train.emb", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(17);  // embedding dimension field
    f.put('\x5a');
  }
  const auto r = run_cli("validate " + quoted(data.string()), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.emb"), std::string::npos) << r.err;
}

TEST(Cli, ValidateRejectsMissingManifest) {
  TempDir dir;
  const auto data = make_fixture(dir / "data");
  fs::remove(data / "manifest.json");
  const auto r = run_cli("validate " + quoted(data.string()), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("manifest.json"), std::string::npos) << r.err;
}

TEST(Cli, RunWritesOneRowPerCellAndCycle) {
  TempDir dir;
  make_fixture(dir / "data");
  write_json(dir / "grid.json", small_grid(2, "out"));
  const auto r = run_cli("run --config " + quoted((dir / "grid.json").string()), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = read_results_csv(dir / "out" / "results.csv");
  EXPECT_EQ(table.rows.size(), 12u);  // 2 strategies x 2 seeds x (T + 1) cycles
  EXPECT_TRUE(fs::exists(dir / "out" / "config.resolved.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "run_manifest.json"));
  EXPECT_EQ(manifest.at("rows"), 12);
  EXPECT_TRUE(manifest.at("errors").empty());
  EXPECT_FALSE(fs::exists(dir / "out" / "errors.log"));
}

TEST(Cli, RunIsDeterministicAcrossReruns) {
  TempDir dir;
  make_fixture(dir / "data");
  write_json(dir / "a.json", small_grid(1, "a"));
  write_json(dir / "b.json", small_grid(8, "b"));
  ASSERT_EQ(run_cli("run --config " + quoted((dir / "a.json").string()), dir).code, 0);
  const auto first = strip_timing(slurp(dir / "a" / "results.csv"));
  ASSERT_EQ(run_cli("run --config " + quoted((dir / "a.json").string()), dir).code, 0);
  EXPECT_EQ(strip_timing(slurp(dir / "a" / "results.csv")), first);
  ASSERT_EQ(run_cli("run --config " + quoted((dir / "b.json").string()), dir).code, 0);
  EXPECT_EQ(strip_timing(slurp(dir / "b" / "results.csv")), first);
  const auto ma = nlohmann::json::parse(slurp(dir / "a" / "run_manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(dir / "b" / "run_manifest.json"));
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
}

TEST(Cli, RunRejectsUnknownStrategy) {
  TempDir dir;
  make_fixture(dir / "data");
  auto grid = small_grid(1, "out");
  grid["strategies"] = {"oracle"};
  write_json(dir / "grid.json", grid);
  const auto r = run_cli("run --config " + quoted((dir / "grid.json").string()), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(dir / "out" / "results.csv"));
}

TEST(Cli, RunRejectsBudgetBelowCycles) {
  TempDir dir;
  make_fixture(dir / "data");
  auto grid = small_grid(1, "out");
  grid["cycles"] = 30;
  write_json(dir / "grid.json", grid);
  const auto r = run_cli("run --config " + quoted((dir / "grid.json").string()), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("budget"), std::string::npos) << r.err;
}

TEST(Cli, SweepWritesOneRowPerStrategySizeSeed) {
  TempDir dir;
  make_fixture(dir / "data");
  write_json(dir / "sweep.json", {{"datasets", {"data"}},
                                  {"ips", {"random", "typiclust"}},
                                  {"sizes", {10, 40}},
                                  {"seeds", {0, 1, 2}},
                                  {"output_dir", "sweep"},
                                  {"parallelism", 2}});
  const auto r = run_cli("sweep --config " + quoted((dir / "sweep.json").string()), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_results_csv(dir / "sweep" / "results.csv").rows.size(), 12u);
}

TEST(Cli, ReportAndAnalyzeConsumeRunOutput) {
  TempDir dir;
  make_fixture(dir / "data");
  write_json(dir / "grid.json", small_grid(2, "out"));
  ASSERT_EQ(run_cli("run --config " + quoted((dir / "grid.json").string()), dir).code, 0);
  const auto results = quoted((dir / "out" / "results.csv").string());
  const auto rep = run_cli("report --results " + results + " --out " + quoted((dir / "rep").string()), dir);
  ASSERT_EQ(rep.code, 0) << rep.err;
  const auto index = nlohmann::json::parse(slurp(dir / "rep" / "index.json"));
  EXPECT_FALSE(index.at("artifacts").empty());
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "run_manifest.json"));
  EXPECT_EQ(index.at("inputs").at(0), manifest.at("config_hash"));
  EXPECT_TRUE(fs::exists(dir / "rep" / "win_rates_ips-random.csv"));

  const auto an = run_cli("analyze --results " + results, dir);
  ASSERT_EQ(an.code, 0) << an.err;
  EXPECT_NE(an.out.find("strategy,opponent,win_rate"), std::string::npos);
}

TEST(Cli, ReportRejectsMissingResults) {
  TempDir dir;
  const auto r = run_cli("report --results " + quoted((dir / "nope.csv").string()) + " --out " +
                             quoted((dir / "rep").string()),
                         dir);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SynthThenValidate) {
  TempDir dir;
  const auto data = quoted((dir / "syn").string());
  ASSERT_EQ(run_cli("synth --out " + data + " --train 50 --test 20 --dim 3 --classes 2 --budget 10", dir).code, 0);
  const auto r = run_cli("validate " + data, dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("train/test   50 / 20"), std::string::npos) << r.out;
}

TEST(Cli, IngestBuildsValidDataset) {
  TempDir dir;
  {
    std::ofstream tr(dir / "train.csv"), te(dir / "test.csv");
    for (int i = 0; i < 20; ++i) tr << (i % 2) << ',' << i * 0.5 << ',' << -i << '\n';
    for (int i = 0; i < 6; ++i) te << (i % 2) << ',' << i << ',' << 1.5 << '\n';
  }
  const auto r = run_cli("ingest --train " + quoted((dir / "train.csv").string()) + " --test " +
                             quoted((dir / "test.csv").string()) + " --out " + quoted((dir / "ing").string()) +
                             " --name toy --model enc --classes 2 --budget 8",
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = load_dataset(dir / "ing");
  EXPECT_EQ(ds.manifest.num_train, 20u);
  EXPECT_EQ(ds.manifest.embedding_dim, 2u);
  EXPECT_FLOAT_EQ(ds.train.row(3)[0], 1.5f);
}

TEST(Cli, UnknownSubcommandFails) {
  TempDir dir;
  EXPECT_NE(run_cli("frobnicate", dir).code, 0);
}
