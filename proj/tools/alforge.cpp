// SPDX-License-Identifier: Apache-2.0
//
// alforge: command-line entry point for the active-learning benchmark.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "alforge/cli.hpp"
#include "alforge/synthetic.hpp"

namespace fs = std::filesystem;
using namespace alforge;

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning benchmark over frozen embeddings"};
  app.require_subcommand(1);

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "Check a dataset directory");
  validate->add_option("dir", validate_dir, "Dataset directory")->required();

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run an experiment grid");
  run->add_option("--config", run_config, "Grid config (JSON)")->required();

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Initial-pool-selection sweep");
  sweep->add_option("--config", sweep_config, "Sweep config (JSON)")->required();

  std::vector<std::string> report_results;
  std::string report_out;
  bool per_seed = false;
  auto* report = app.add_subcommand("report", "Render analysis tables and plots");
  report->add_option("--results", report_results, "results.csv files")->required();
  report->add_option("--out", report_out, "Output directory")->required();
  report->add_flag("--per-seed", per_seed, "Count win rates per seed instead of per unit mean");

  std::vector<std::string> analyze_results;
  bool analyze_per_seed = false;
  auto* analyze = app.add_subcommand("analyze", "Print win rates and top performers");
  analyze->add_option("--results", analyze_results, "results.csv files")->required();
  analyze->add_flag("--per-seed", analyze_per_seed, "Count win rates per seed instead of per unit mean");

  std::string ingest_train, ingest_test, ingest_out, ingest_pooling = "CLS";
  DatasetManifest ingest_manifest;
  auto* ingest = app.add_subcommand("ingest", "Build a dataset directory from label,features CSV files");
  ingest->add_option("--train", ingest_train, "Train CSV")->required();
  ingest->add_option("--test", ingest_test, "Test CSV")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--name", ingest_manifest.dataset_name, "Dataset name")->required();
  ingest->add_option("--model", ingest_manifest.model_name, "Embedding model name")->required();
  ingest->add_option("--pooling", ingest_pooling, "CLS, EOS or MEAN");
  ingest->add_option("--classes", ingest_manifest.num_classes, "Number of classes")->required();
  ingest->add_option("--budget", ingest_manifest.budget, "Label budget B")->required();

  BlobSpec blobs;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-blob dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--name", blobs.dataset_name, "Dataset name");
  synth->add_option("--train", blobs.num_train, "Train rows");
  synth->add_option("--test", blobs.num_test, "Test rows");
  synth->add_option("--dim", blobs.dim, "Embedding dimension");
  synth->add_option("--classes", blobs.num_classes, "Number of classes");
  synth->add_option("--blobs", blobs.num_blobs, "Number of blobs (0 = one per class)");
  synth->add_option("--box", blobs.center_box, "Half-width of the center box");
  synth->add_option("--noise", blobs.noise, "Per-coordinate noise sd");
  synth->add_option("--budget", blobs.budget, "Label budget B");
  synth->add_option("--seed", blobs.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cli::cmd_validate(validate_dir, std::cout, std::cerr);
    if (*run) return cli::cmd_run(cli::load_grid_config(run_config), std::cout, std::cerr);
    if (*sweep) {
      const fs::path p(sweep_config);
      return cli::cmd_sweep(cli::parse_sweep_config(cli::detail::read_json(p),
                                                    p.parent_path().empty() ? fs::path(".") : p.parent_path()),
                            std::cout, std::cerr);
    }
    if (*report) {
      std::vector<fs::path> paths(report_results.begin(), report_results.end());
      return cli::cmd_report(paths, report_out, std::cout, std::cerr,
                             per_seed ? SeedRule::PerSeed : SeedRule::MeanDifference);
    }
    if (*analyze) {
      std::vector<fs::path> paths(analyze_results.begin(), analyze_results.end());
      return cli::cmd_analyze(paths, std::cout, std::cerr,
                              analyze_per_seed ? SeedRule::PerSeed : SeedRule::MeanDifference);
    }
    if (*ingest) {
      ingest_manifest.pooling = parse_pooling(ingest_pooling);
      return cli::cmd_ingest(ingest_train, ingest_test, ingest_manifest, ingest_out, std::cout, std::cerr);
    }
    if (*synth) {
      const auto ds = make_blobs(blobs);
      const auto m = write_dataset(ds, synth_out);
      std::cout << "wrote " << synth_out << " (checksum " << m.source_checksum << ")\n";
      return cli::kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInputError;
  }
  return cli::kExitOk;
}
