// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alforge/analysis.hpp"
#include "alforge/dataset.hpp"
#include "alforge/report.hpp"
#include "alforge/results.hpp"
#include "alforge/runner.hpp"
#include "alforge/sha256.hpp"

namespace alforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitInputError = 2;

namespace fs = std::filesystem;
using nlohmann::json;

struct DatasetOverride {
  std::optional<std::size_t> budget;
  std::optional<std::size_t> k0;
};

// Experiment grid: datasets x IPS strategies x query strategies x seeds.
struct GridConfig {
  std::vector<fs::path> datasets;
  std::vector<std::string> ips{"random"};
  std::vector<std::string> strategies{"random"};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t cycles = 20;
  std::map<std::string, DatasetOverride> overrides;  // keyed by dataset path as written in the config
  fs::path output_dir = "results";
  std::size_t parallelism = 1;
  FitConfig fit;
  std::size_t typiclust_knn = 20;
  std::size_t typiclust_max_clusters = 500;
  StrategyParams strategy_params;
};

struct SweepGrid {
  std::vector<fs::path> datasets;
  std::vector<std::string> ips{"random", "coreset", "typiclust"};
  std::vector<std::size_t> sizes{20, 50, 100, 250, 500, 1000, 2500, 5000};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  fs::path output_dir = "sweep";
  std::size_t parallelism = 1;
  FitConfig fit;
  std::size_t typiclust_knn = 20;
  std::size_t typiclust_max_clusters = 500;
};

namespace detail {

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

inline FitConfig parse_fit(const json& j) {
  FitConfig f;
  if (!j.is_object()) return f;
  f.l2_inverse_strength = value_or(j, "l2_inverse_strength", f.l2_inverse_strength);
  f.max_iterations = value_or(j, "max_iterations", f.max_iterations);
  f.gradient_tolerance = value_or(j, "gradient_tolerance", f.gradient_tolerance);
  f.check();
  return f;
}

inline json fit_json(const FitConfig& f) {
  return {{"l2_inverse_strength", f.l2_inverse_strength},
          {"max_iterations", f.max_iterations},
          {"gradient_tolerance", f.gradient_tolerance}};
}

inline StrategyParams parse_strategy_params(const json& j) {
  StrategyParams p;
  if (!j.is_object()) return p;
  if (j.contains("probcover_delta")) {
    const auto& d = j.at("probcover_delta");
    if (d.is_string()) {
      if (d.get<std::string>() != "auto") throw ConfigError("probcover_delta must be a number or \"auto\"");
    } else if (d.is_number()) {
      p.probcover_delta = d.get<double>();
    } else {
      throw ConfigError("probcover_delta must be a number or \"auto\"");
    }
  }
  p.probcover_purity_threshold = value_or(j, "probcover_purity_threshold", p.probcover_purity_threshold);
  p.probcover_normalize = value_or(j, "probcover_normalize", p.probcover_normalize);
  p.probcover_grid_size = value_or(j, "probcover_grid_size", p.probcover_grid_size);
  p.probcover_grid_min = value_or(j, "probcover_grid_min", p.probcover_grid_min);
  p.probcover_grid_max = value_or(j, "probcover_grid_max", p.probcover_grid_max);
  p.dropquery_masks = value_or(j, "dropquery_masks", p.dropquery_masks);
  p.dropquery_rate = value_or(j, "dropquery_rate", p.dropquery_rate);
  const auto first = value_or<std::string>(j, "badge_first_pick", "maxnorm");
  if (first == "maxnorm") p.badge_first_pick = FirstPick::MaxNorm;
  else if (first == "random") p.badge_first_pick = FirstPick::Random;
  else throw ConfigError("badge_first_pick must be \"maxnorm\" or \"random\"");
  p.check();
  return p;
}

inline json strategy_params_json(const StrategyParams& p) {
  json j{{"probcover_purity_threshold", p.probcover_purity_threshold},
         {"probcover_normalize", p.probcover_normalize},
         {"probcover_grid_size", p.probcover_grid_size},
         {"probcover_grid_min", p.probcover_grid_min},
         {"probcover_grid_max", p.probcover_grid_max},
         {"dropquery_masks", p.dropquery_masks},
         {"dropquery_rate", p.dropquery_rate},
         {"badge_first_pick", p.badge_first_pick == FirstPick::MaxNorm ? "maxnorm" : "random"}};
  if (p.probcover_delta) j["probcover_delta"] = *p.probcover_delta;
  else j["probcover_delta"] = "auto";
  return j;
}

inline std::size_t thread_cap(std::size_t requested) {
  std::size_t threads = std::max<std::size_t>(1, requested);
  if (const char* env = std::getenv("ALFORGE_THREADS")) {
    try {
      const auto cap = static_cast<std::size_t>(std::stoul(env));
      if (cap >= 1) threads = std::min(threads, cap);
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return threads;
}

inline void write_text(const fs::path& path, const std::string& text) { alforge::detail::write_text(path, text); }

}  // namespace detail

// Relative paths resolve against `base` (normally the config file directory).
inline GridConfig parse_grid_config(const json& j, const fs::path& base = ".") {
  if (!j.is_object()) throw ConfigError("grid config must be a JSON object");
  GridConfig g;
  for (const auto& p : detail::value_or<std::vector<std::string>>(j, "datasets", {}))
    g.datasets.push_back(detail::resolve(base, p));
  g.ips = detail::value_or(j, "ips", g.ips);
  g.strategies = detail::value_or(j, "strategies", g.strategies);
  g.seeds = detail::value_or(j, "seeds", g.seeds);
  g.cycles = detail::value_or(j, "cycles", g.cycles);
  g.output_dir = detail::resolve(base, detail::value_or<std::string>(j, "output_dir", g.output_dir.string()));
  g.parallelism = detail::value_or(j, "parallelism", g.parallelism);
  if (j.contains("overrides")) {
    for (const auto& [key, o] : j.at("overrides").items()) {
      DatasetOverride ov;
      if (o.contains("budget")) ov.budget = o.at("budget").get<std::size_t>();
      if (o.contains("k0")) ov.k0 = o.at("k0").get<std::size_t>();
      g.overrides[detail::resolve(base, key).string()] = ov;
    }
  }
  g.fit = detail::parse_fit(j.value("fit", json::object()));
  const auto tc = j.value("typiclust", json::object());
  g.typiclust_knn = detail::value_or(tc, "knn", g.typiclust_knn);
  g.typiclust_max_clusters = detail::value_or(tc, "max_clusters", g.typiclust_max_clusters);
  g.strategy_params = detail::parse_strategy_params(j.value("strategy_params", json::object()));
  g.strategy_params.typiclust_knn = g.typiclust_knn;
  g.strategy_params.typiclust_max_clusters = g.typiclust_max_clusters;

  if (g.datasets.empty()) throw ConfigError("grid: datasets must be non-empty");
  if (g.ips.empty()) throw ConfigError("grid: ips must be non-empty");
  if (g.strategies.empty()) throw ConfigError("grid: strategies must be non-empty");
  if (g.seeds.empty()) throw ConfigError("grid: seeds must be non-empty");
  for (const auto& s : g.ips) (void)parse_ips_strategy(s);
  for (const auto& s : g.strategies) (void)parse_strategy(s);
  if (g.parallelism == 0) throw ConfigError("grid: parallelism must be >= 1");
  return g;
}

inline GridConfig load_grid_config(const fs::path& path) {
  return parse_grid_config(detail::read_json(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// Fully materialized config (every default written out).
inline json resolved_json(const GridConfig& g) {
  json overrides = json::object();
  for (const auto& [k, o] : g.overrides) {
    json e = json::object();
    if (o.budget) e["budget"] = *o.budget;
    if (o.k0) e["k0"] = *o.k0;
    overrides[k] = e;
  }
  std::vector<std::string> datasets;
  for (const auto& d : g.datasets) datasets.push_back(d.string());
  return {{"datasets", datasets},
          {"ips", g.ips},
          {"strategies", g.strategies},
          {"seeds", g.seeds},
          {"cycles", g.cycles},
          {"overrides", overrides},
          {"output_dir", g.output_dir.string()},
          {"parallelism", g.parallelism},
          {"fit", detail::fit_json(g.fit)},
          {"typiclust", {{"knn", g.typiclust_knn}, {"max_clusters", g.typiclust_max_clusters}}},
          {"strategy_params", detail::strategy_params_json(g.strategy_params)}};
}

inline SweepGrid parse_sweep_config(const json& j, const fs::path& base = ".") {
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  SweepGrid g;
  for (const auto& p : detail::value_or<std::vector<std::string>>(j, "datasets", {}))
    g.datasets.push_back(detail::resolve(base, p));
  g.ips = detail::value_or(j, "ips", g.ips);
  g.sizes = detail::value_or(j, "sizes", g.sizes);
  g.seeds = detail::value_or(j, "seeds", g.seeds);
  g.output_dir = detail::resolve(base, detail::value_or<std::string>(j, "output_dir", g.output_dir.string()));
  g.parallelism = detail::value_or(j, "parallelism", g.parallelism);
  g.fit = detail::parse_fit(j.value("fit", json::object()));
  const auto tc = j.value("typiclust", json::object());
  g.typiclust_knn = detail::value_or(tc, "knn", g.typiclust_knn);
  g.typiclust_max_clusters = detail::value_or(tc, "max_clusters", g.typiclust_max_clusters);
  if (g.datasets.empty() || g.ips.empty() || g.sizes.empty() || g.seeds.empty())
    throw ConfigError("sweep: datasets, ips, sizes and seeds must be non-empty");
  for (const auto& s : g.ips) (void)parse_ips_strategy(s);
  if (g.parallelism == 0) throw ConfigError("sweep: parallelism must be >= 1");
  return g;
}

inline json resolved_json(const SweepGrid& g) {
  std::vector<std::string> datasets;
  for (const auto& d : g.datasets) datasets.push_back(d.string());
  return {{"datasets", datasets},
          {"ips", g.ips},
          {"sizes", g.sizes},
          {"seeds", g.seeds},
          {"output_dir", g.output_dir.string()},
          {"parallelism", g.parallelism},
          {"fit", detail::fit_json(g.fit)},
          {"typiclust", {{"knn", g.typiclust_knn}, {"max_clusters", g.typiclust_max_clusters}}}};
}

// ---------------------------------------------------------------------------

inline int cmd_validate(const fs::path& dir, std::ostream& out, std::ostream& err) {
  try {
    const auto ds = load_dataset(dir);
    const auto& m = ds.manifest;
    out << "ok: " << dir.string() << "\n"
        << "  dataset      " << m.dataset_name << "\n"
        << "  model        " << m.model_name << " (" << to_string(m.pooling) << " pooling)\n"
        << "  train/test   " << m.num_train << " / " << m.num_test << "\n"
        << "  classes      " << m.num_classes << "\n"
        << "  dim          " << m.embedding_dim << "\n"
        << "  budget       " << m.budget << "\n"
        << "  checksum     " << m.source_checksum << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInputError;
  }
}

// Hash of the experiment-defining fields; parallelism and output location
// are left out.
inline std::string config_hash(json resolved) {
  resolved.erase("parallelism");
  resolved.erase("output_dir");
  return sha256_hex(resolved.dump());
}

inline void write_run_outputs(const fs::path& out_dir, const ResultsTable& table, const json& resolved,
                              const std::string& config_hash, const json& extra) {
  write_results_csv(table, out_dir / "results.csv");
  json errors = json::array();
  std::string log;
  for (const auto& e : table.errors) {
    errors.push_back({{"dataset", e.dataset},
                      {"model", e.model},
                      {"ips", e.ips},
                      {"strategy", e.strategy},
                      {"seed", e.seed},
                      {"message", e.message}});
    log += e.dataset + " " + e.model + " " + e.ips + " " + e.strategy + " seed=" + std::to_string(e.seed) + ": " +
           e.message + "\n";
  }
  if (!log.empty()) detail::write_text(out_dir / "errors.log", log);
  json manifest{{"config", resolved},
                {"config_hash", config_hash},
                {"started_at", table.started_at},
                {"finished_at", table.finished_at},
                {"rows", table.rows.size()},
                {"errors", errors}};
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  detail::write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

inline int cmd_run(const GridConfig& g, std::ostream& out, std::ostream& err) {
  try {
    const json resolved = resolved_json(g);
    const std::string hash = config_hash(resolved);
    fs::create_directories(g.output_dir);
    detail::write_text(g.output_dir / "config.resolved.json", resolved.dump(2) + "\n");

    std::vector<EmbeddingDataset> datasets;
    for (const auto& p : g.datasets) datasets.push_back(load_dataset(p));

    struct Cell {
      std::size_t dataset;
      ExperimentConfig cfg;
      std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      ExperimentConfig base;
      base.cycles = g.cycles;
      base.fit = g.fit;
      base.params = g.strategy_params;
      base.typiclust_knn = g.typiclust_knn;
      base.typiclust_max_clusters = g.typiclust_max_clusters;
      if (auto it = g.overrides.find(g.datasets[d].string()); it != g.overrides.end()) {
        base.budget = it->second.budget;
        base.k0 = it->second.k0;
      }
      (void)resolve_plan(base, datasets[d].manifest);  // fail fast on budget errors
      for (const auto& ips : g.ips)
        for (const auto& strategy : g.strategies)
          for (auto seed : g.seeds) {
            ExperimentConfig cfg = base;
            cfg.ips = parse_ips_strategy(ips);
            cfg.strategy = parse_strategy(strategy);
            cfg.seeds = {seed};
            cells.push_back({d, cfg, seed});
          }
    }

    const std::size_t threads = detail::thread_cap(g.parallelism);
    out << "running " << cells.size() << " cells on " << threads << " thread(s)\n";
    DeltaCache deltas;
    std::vector<std::vector<ResultRow>> rows(cells.size());
    std::vector<std::optional<std::string>> failures(cells.size());
    ResultsTable table;
    table.started_at = utc_timestamp();
    parallel_for(cells.size(), threads, [&](std::size_t i) {
      try {
        rows[i] = run_seed(datasets[cells[i].dataset], cells[i].cfg, cells[i].seed, &deltas);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& ds = datasets[cells[i].dataset];
      if (failures[i]) {
        table.errors.push_back({ds.manifest.dataset_name, ds.manifest.model_name,
                                std::string(to_string(cells[i].cfg.ips)), std::string(to_string(cells[i].cfg.strategy)),
                                cells[i].seed, *failures[i]});
        continue;
      }
      table.rows.insert(table.rows.end(), rows[i].begin(), rows[i].end());
    }
    table.finished_at = utc_timestamp();
    table.config_hash = hash;
    table.sort();
    table.check_unique_keys();

    // Datasets are read-only for the whole run.
    for (std::size_t d = 0; d < datasets.size(); ++d)
      if (payload_checksum(datasets[d]) != datasets[d].manifest.source_checksum)
        throw Error("dataset " + g.datasets[d].string() + " was modified during the run");

    json extra = json::object();
    json delta_json = json::object();
    for (const auto& [key, est] : deltas.entries()) {
      auto name = key;
      std::replace(name.begin(), name.end(), '\n', '/');
      delta_json[name] = {{"delta", est.delta}, {"purity", est.purity}, {"warning", est.warning}};
    }
    extra["probcover_deltas"] = delta_json;
    write_run_outputs(g.output_dir, table, resolved, hash, extra);
    out << "wrote " << table.rows.size() << " rows to " << (g.output_dir / "results.csv").string() << "\n";
    for (const auto& e : table.errors)
      err << "cell failed: " << e.dataset << " " << e.ips << " " << e.strategy << " seed " << e.seed << ": "
          << e.message << "\n";
    return table.errors.empty() ? kExitOk : kExitPartialFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

inline int cmd_sweep(const SweepGrid& g, std::ostream& out, std::ostream& err) {
  try {
    const json resolved = resolved_json(g);
    const std::string hash = config_hash(resolved);
    fs::create_directories(g.output_dir);
    detail::write_text(g.output_dir / "config.resolved.json", resolved.dump(2) + "\n");

    SweepConfig sc;
    sc.sizes = g.sizes;
    sc.seeds = g.seeds;
    sc.fit = g.fit;
    sc.typiclust_knn = g.typiclust_knn;
    sc.typiclust_max_clusters = g.typiclust_max_clusters;
    sc.strategies.clear();
    for (const auto& s : g.ips) sc.strategies.push_back(parse_ips_strategy(s));

    const std::size_t threads = detail::thread_cap(g.parallelism);
    ResultsTable table;
    table.started_at = utc_timestamp();
    for (const auto& p : g.datasets) table.append(run_ips_sweep(load_dataset(p), sc, threads));
    table.finished_at = utc_timestamp();
    table.config_hash = hash;
    table.sort();
    table.check_unique_keys();
    write_run_outputs(g.output_dir, table, resolved, hash, json::object());
    out << "wrote " << table.rows.size() << " rows to " << (g.output_dir / "results.csv").string() << "\n";
    for (const auto& e : table.errors)
      err << "cell failed: " << e.dataset << " " << e.ips << " seed " << e.seed << ": " << e.message << "\n";
    return table.errors.empty() ? kExitOk : kExitPartialFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

// Loads and merges results files; input hashes come from the neighbouring
// run_manifest.json when present, otherwise from the CSV bytes.
inline ResultsTable load_results(const std::vector<fs::path>& paths, std::vector<std::string>& hashes) {
  ResultsTable merged;
  for (const auto& p : paths) {
    merged.append(read_results_csv(p));
    const auto manifest = p.parent_path() / "run_manifest.json";
    std::string hash;
    if (fs::exists(manifest)) {
      try {
        hash = detail::read_json(manifest).value("config_hash", "");
      } catch (const Error&) {
      }
    }
    if (hash.empty()) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      hash = sha256_hex(ss.str());
    }
    hashes.push_back(hash);
  }
  merged.sort();
  merged.check_unique_keys();
  return merged;
}

// Builds every analysis the merged table supports.
inline Analyses build_analyses(const ResultsTable& merged, SeedRule rule = SeedRule::MeanDifference) {
  Analyses a;
  ResultsTable al;  // rows from active-learning runs (sweep rows excluded)
  for (const auto& r : merged.rows)
    if (r.strategy != kNoQueryStrategy) al.rows.push_back(r);
  if (al.rows.empty()) return a;

  std::set<std::string> ips_values;
  for (const auto& r : al.rows) ips_values.insert(r.ips);
  for (const auto& ips : ips_values) {
    ResultFilter f;
    f.ips = ips;
    a.win_rates.emplace_back("ips-" + ips, pairwise_win_rates(al, f, rule));
  }
  for (GroupBy g : {GroupBy::Cycle, GroupBy::Model, GroupBy::Dataset}) a.top_performers.push_back(top_performer_frequency(al, g));
  if (ips_values.count("typiclust") && ips_values.count("random")) {
    ResultsTable typ, rnd;
    for (const auto& r : al.rows) {
      if (r.ips == "typiclust") typ.rows.push_back(r);
      else if (r.ips == "random") rnd.rows.push_back(r);
    }
    a.ips_differences = ips_difference_curves(typ, rnd);
  }
  a.curves = accuracy_curves(al);
  return a;
}

inline int cmd_report(const std::vector<fs::path>& results, const fs::path& out_dir, std::ostream& out,
                      std::ostream& err, SeedRule rule = SeedRule::MeanDifference) {
  try {
    std::vector<std::string> hashes;
    const auto merged = load_results(results, hashes);
    auto analyses = build_analyses(merged, rule);
    analyses.input_hashes = hashes;
    const auto files = render_report(analyses, out_dir);
    out << "wrote " << files.size() << " artifacts to " << out_dir.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

// Text summary of win rates and top performers on stdout.
inline int cmd_analyze(const std::vector<fs::path>& results, std::ostream& out, std::ostream& err,
                       SeedRule rule = SeedRule::MeanDifference) {
  try {
    std::vector<std::string> hashes;
    const auto analyses = build_analyses(load_results(results, hashes), rule);
    for (const auto& [name, m] : analyses.win_rates) {
      out << "win rates (" << name << ")\n" << win_rates_csv(m);
    }
    for (const auto& t : analyses.top_performers) out << "top performer by " << to_string(t.group_by) << "\n" << top_performer_csv(t);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

// Builds a dataset directory from two CSV files whose rows are
// `label,f1,...,fD`.
inline int cmd_ingest(const fs::path& train_csv, const fs::path& test_csv, DatasetManifest manifest,
                      const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  auto read = [](const fs::path& p, EmbeddingMatrix& x, LabelVector& y) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::string line;
    std::vector<float> values;
    std::size_t dim = 0, rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t col = 0;
      while (std::getline(ss, cell, ',')) {
        try {
          if (col == 0) y.push_back(static_cast<Label>(std::stoul(cell)));
          else values.push_back(std::stof(cell));
        } catch (const std::exception&) {
          throw ValidationError(p.string() + ": row " + std::to_string(rows + 1) + ": bad value '" + cell + "'");
        }
        ++col;
      }
      if (col < 2) throw ValidationError(p.string() + ": row " + std::to_string(rows + 1) + " has no features");
      if (rows == 0) dim = col - 1;
      else if (col - 1 != dim) throw ShapeError(p.string() + ": ragged row " + std::to_string(rows + 1));
      ++rows;
    }
    x = EmbeddingMatrix(rows, dim, std::move(values));
  };
  try {
    EmbeddingDataset ds;
    read(train_csv, ds.train, ds.train_labels);
    read(test_csv, ds.test, ds.test_labels);
    manifest.num_train = ds.train.rows;
    manifest.num_test = ds.test.rows;
    manifest.embedding_dim = ds.train.dim;
    const auto written = write_dataset(manifest, ds.train, ds.train_labels, ds.test, ds.test_labels, out_dir);
    out << "wrote " << out_dir.string() << " (checksum " << written.source_checksum << ")\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace alforge::cli
