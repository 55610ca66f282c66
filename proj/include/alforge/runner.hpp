// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "alforge/dataset.hpp"
#include "alforge/error.hpp"
#include "alforge/ips.hpp"
#include "alforge/probe.hpp"
#include "alforge/query.hpp"
#include "alforge/results.hpp"
#include "alforge/rng.hpp"

namespace alforge {

struct BatchPlan {
  std::size_t k0 = 0;
  std::size_t batch = 0;
};

// b = floor(B / (T + 1)), k0 = B - T * b, so k0 + T * b = B and k0 >= b.
inline BatchPlan derive_batch_size(std::size_t budget, std::size_t cycles) {
  if (budget < cycles + 1)
    throw ConfigError("budget " + std::to_string(budget) + " is smaller than cycles + 1 = " +
                      std::to_string(cycles + 1));
  BatchPlan plan;
  plan.batch = budget / (cycles + 1);
  plan.k0 = budget - cycles * plan.batch;
  return plan;
}

struct ExperimentConfig {
  IpsStrategy ips = IpsStrategy::Random;
  std::size_t typiclust_knn = 20;
  std::size_t typiclust_max_clusters = 500;
  Strategy strategy = Strategy::Random;
  StrategyParams params;
  std::size_t cycles = 20;
  std::optional<std::size_t> budget;  // default: manifest budget
  std::optional<std::size_t> k0;      // default: derived from the budget
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  FitConfig fit;
};

// Resolves (k0, b) for a dataset and checks k0 + T*b <= num_train.
inline BatchPlan resolve_plan(const ExperimentConfig& cfg, const DatasetManifest& m) {
  const std::size_t budget = cfg.budget.value_or(m.budget);
  BatchPlan plan;
  if (cfg.k0) {
    if (*cfg.k0 < 1 || *cfg.k0 > budget) throw ConfigError("k0 must lie in [1, budget]");
    plan.k0 = *cfg.k0;
    plan.batch = cfg.cycles == 0 ? 0 : (budget - plan.k0) / cfg.cycles;
  } else {
    plan = derive_batch_size(budget, cfg.cycles);
  }
  if (cfg.cycles > 0 && plan.batch < 1) throw ConfigError("batch size must be >= 1");
  if (plan.k0 + cfg.cycles * plan.batch > m.num_train) throw ConfigError("k0 + T*b exceeds num_train");
  return plan;
}

// ProbCover radii estimated once per (dataset, model) and shared by all seeds
// and worker threads.
class DeltaCache {
 public:
  double get(const EmbeddingDataset& ds, const StrategyParams& params) {
    const auto key = ds.manifest.dataset_name + '\n' + ds.manifest.model_name;
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second.delta;
    Rng rng(derive_seed(0, "probcover", "delta"));
    auto est = estimate_probcover_delta(ds.train, ds.num_classes(), params, rng);
    return cache_.emplace(key, std::move(est)).first->second.delta;
  }

  std::vector<std::pair<std::string, DeltaEstimate>> entries() const {
    std::lock_guard lock(mu_);
    return {cache_.begin(), cache_.end()};
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, DeltaEstimate> cache_;
};

namespace detail {

inline LabelVector gather_labels(const LabelVector& labels, std::span<const Index> idx) {
  LabelVector out;
  out.reserve(idx.size());
  for (Index i : idx) out.push_back(labels[i]);
  return out;
}

inline std::uint64_t elapsed_ms(std::chrono::steady_clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - since).count());
}

}  // namespace detail

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One seed of the active-learning loop: select L(0), record cycle 0, then
// for t = 1..T query, reveal labels, refit from scratch and record.
inline std::vector<ResultRow> run_seed(const EmbeddingDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed,
                                       DeltaCache* deltas = nullptr) {
  const auto plan = resolve_plan(cfg, ds.manifest);
  StrategyParams params = cfg.params;
  params.check();
  if (cfg.strategy == Strategy::ProbCover && !params.probcover_delta) {
    DeltaCache local;
    params.probcover_delta = (deltas ? *deltas : local).get(ds, params);
  }
  const std::string ips_name(to_string(cfg.ips));
  const std::string strategy_name(to_string(cfg.strategy));
  const std::size_t C = ds.num_classes();

  IpsConfig ips_cfg{cfg.ips, plan.k0, seed, cfg.typiclust_knn, cfg.typiclust_max_clusters};
  auto start = std::chrono::steady_clock::now();
  auto pool = PoolState::from_initial(ds.train.rows, select_initial(ds.train, ips_cfg));
  Rng rng(derive_seed(seed, strategy_name, "query"));

  std::vector<ResultRow> rows;
  std::vector<Index> batch;
  ProbeParams probe;
  for (std::size_t t = 0; t <= cfg.cycles; ++t) {
    if (t > 0) {
      start = std::chrono::steady_clock::now();
      QueryContext ctx{ds.train, pool, probe, plan.batch, rng, params};
      batch = query(cfg.strategy, ctx);
      pool.apply_batch(batch);
    }
    const auto y = detail::gather_labels(ds.train_labels, pool.labeled);
    auto fitted = fit(MatrixView(ds.train, pool.labeled), y, C, cfg.fit);
    probe = std::move(fitted.params);
    pool.check(ds.train.rows, plan.k0, plan.batch);

    ResultRow row;
    row.dataset = ds.manifest.dataset_name;
    row.model = ds.manifest.model_name;
    row.ips = ips_name;
    row.strategy = strategy_name;
    row.seed = seed;
    row.cycle = t;
    row.labeled_size = pool.labeled.size();
    row.accuracy = evaluate_accuracy(probe, ds.test, ds.test_labels);
    row.probe_iterations = fitted.iterations;
    row.batch = t > 0 ? batch : pool.labeled;
    row.wall_ms = detail::elapsed_ms(start);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : workers) th.join();
}

// All seeds of one (dataset, ips, strategy) configuration. A failing seed is
// recorded in `errors` and does not affect the other seeds.
inline ResultsTable run_experiment(const EmbeddingDataset& ds, const ExperimentConfig& cfg, std::size_t threads = 1,
                                   DeltaCache* deltas = nullptr) {
  DeltaCache local;
  DeltaCache& cache = deltas ? *deltas : local;
  std::vector<std::vector<ResultRow>> per_seed(cfg.seeds.size());
  std::vector<std::optional<std::string>> failures(cfg.seeds.size());
  ResultsTable table;
  table.started_at = utc_timestamp();
  parallel_for(cfg.seeds.size(), threads, [&](std::size_t i) {
    try {
      per_seed[i] = run_seed(ds, cfg, cfg.seeds[i], &cache);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (failures[i]) {
      table.errors.push_back({ds.manifest.dataset_name, ds.manifest.model_name, std::string(to_string(cfg.ips)),
                              std::string(to_string(cfg.strategy)), cfg.seeds[i], *failures[i]});
      continue;
    }
    table.rows.insert(table.rows.end(), per_seed[i].begin(), per_seed[i].end());
  }
  table.finished_at = utc_timestamp();
  table.sort();
  return table;
}

struct SweepConfig {
  std::vector<IpsStrategy> strategies{IpsStrategy::Random, IpsStrategy::CoreSet, IpsStrategy::TypiClust};
  std::vector<std::size_t> sizes{20, 50, 100, 250, 500, 1000, 2500, 5000};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t typiclust_knn = 20;
  std::size_t typiclust_max_clusters = 500;
  FitConfig fit;
};

// Accuracy of a probe trained on L(0) alone, one row per (strategy, k0, seed).
inline ResultsTable run_ips_sweep(const EmbeddingDataset& ds, const SweepConfig& cfg, std::size_t threads = 1) {
  for (auto k0 : cfg.sizes)
    if (k0 < 1 || k0 > ds.train.rows) throw ConfigError("sweep: size " + std::to_string(k0) + " outside [1, num_train]");
  struct Cell {
    IpsStrategy strategy;
    std::size_t k0;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto s : cfg.strategies)
    for (auto k0 : cfg.sizes)
      for (auto seed : cfg.seeds) cells.push_back({s, k0, seed});

  std::vector<std::optional<ResultRow>> out(cells.size());
  std::vector<std::optional<std::string>> failures(cells.size());
  ResultsTable table;
  table.started_at = utc_timestamp();
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    try {
      const auto start = std::chrono::steady_clock::now();
      IpsConfig ips{cell.strategy, cell.k0, cell.seed, cfg.typiclust_knn, cfg.typiclust_max_clusters};
      const auto labeled = select_initial(ds.train, ips);
      const auto y = detail::gather_labels(ds.train_labels, labeled);
      const auto fitted = fit(MatrixView(ds.train, labeled), y, ds.num_classes(), cfg.fit);
      ResultRow row;
      row.dataset = ds.manifest.dataset_name;
      row.model = ds.manifest.model_name;
      row.ips = std::string(to_string(cell.strategy));
      row.strategy = std::string(kNoQueryStrategy);
      row.seed = cell.seed;
      row.cycle = 0;
      row.labeled_size = labeled.size();
      row.accuracy = evaluate_accuracy(fitted.params, ds.test, ds.test_labels);
      row.probe_iterations = fitted.iterations;
      row.wall_ms = detail::elapsed_ms(start);
      out[i] = std::move(row);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (out[i]) table.rows.push_back(std::move(*out[i]));
    if (failures[i])
      table.errors.push_back({ds.manifest.dataset_name, ds.manifest.model_name,
                              std::string(to_string(cells[i].strategy)), std::string(kNoQueryStrategy), cells[i].seed,
                              "k0=" + std::to_string(cells[i].k0) + ": " + *failures[i]});
  }
  table.finished_at = utc_timestamp();
  table.sort();
  return table;
}

}  // namespace alforge
