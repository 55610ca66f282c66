// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alforge/error.hpp"
#include "alforge/kmeans.hpp"
#include "alforge/matrix.hpp"
#include "alforge/rng.hpp"

namespace alforge {

// Disjoint labeled/unlabeled partition of the training indices. `labeled` keeps
// acquisition order; `unlabeled` is kept ascending.
struct PoolState {
  std::vector<Index> labeled;
  std::vector<Index> unlabeled;
  std::size_t cycle = 0;

  static PoolState from_initial(std::size_t num_train, std::span<const Index> initial) {
    PoolState pool;
    pool.labeled.assign(initial.begin(), initial.end());
    std::vector<char> mask(num_train, 0);
    for (Index i : initial) {
      if (i >= num_train) throw ValidationError("pool: index out of range");
      if (mask[i]) throw ValidationError("pool: duplicate index in initial pool");
      mask[i] = 1;
    }
    for (Index i = 0; i < num_train; ++i)
      if (!mask[i]) pool.unlabeled.push_back(i);
    return pool;
  }

  std::size_t size() const { return labeled.size() + unlabeled.size(); }

  std::vector<char> labeled_mask() const {
    std::vector<char> mask(size(), 0);
    for (Index i : labeled) mask[i] = 1;
    return mask;
  }

  // U <- U \ batch, L <- L + batch, t <- t + 1.
  void apply_batch(std::span<const Index> batch) {
    std::vector<Index> sorted(batch.begin(), batch.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("pool: batch contains duplicate indices");
    std::vector<Index> remaining;
    remaining.reserve(unlabeled.size());
    std::set_difference(unlabeled.begin(), unlabeled.end(), sorted.begin(), sorted.end(),
                        std::back_inserter(remaining));
    if (remaining.size() + sorted.size() != unlabeled.size())
      throw ValidationError("pool: batch contains indices outside the unlabeled pool");
    unlabeled = std::move(remaining);
    labeled.insert(labeled.end(), batch.begin(), batch.end());
    ++cycle;
  }

  // Partition invariant plus |L| = k0 + t*b.
  void check(std::size_t num_train, std::size_t k0, std::size_t batch_size) const {
    if (size() != num_train) throw Error("pool invariant: |L| + |U| != num_train");
    std::vector<char> seen(num_train, 0);
    for (auto* part : {&labeled, &unlabeled})
      for (Index i : *part) {
        if (i >= num_train || seen[i]) throw Error("pool invariant: L and U overlap or contain bad indices");
        seen[i] = 1;
      }
    if (labeled.size() != k0 + cycle * batch_size) throw Error("pool invariant: |L| != k0 + t*b");
  }
};

enum class IpsStrategy { Random, CoreSet, TypiClust };

inline std::string_view to_string(IpsStrategy s) {
  switch (s) {
    case IpsStrategy::Random: return "random";
    case IpsStrategy::CoreSet: return "coreset";
    case IpsStrategy::TypiClust: return "typiclust";
  }
  return "?";
}

inline IpsStrategy parse_ips_strategy(std::string_view s) {
  if (s == "random") return IpsStrategy::Random;
  if (s == "coreset") return IpsStrategy::CoreSet;
  if (s == "typiclust") return IpsStrategy::TypiClust;
  throw ConfigError("unknown IPS strategy '" + std::string(s) + "'");
}

struct IpsConfig {
  IpsStrategy strategy = IpsStrategy::Random;
  std::size_t k0 = 1;
  std::uint64_t seed = 0;
  std::size_t typiclust_knn = 20;
  std::size_t typiclust_max_clusters = 500;
};

// k-center greedy over `candidates`: repeatedly add the candidate farthest
// (Euclidean) from its nearest center. With no initial centers the first pick
// is drawn uniformly via rng. Ties go to the lowest index.
inline std::vector<Index> kcenter_greedy(MatrixView x, std::span<const Index> initial_centers,
                                         std::span<const Index> candidates, std::size_t k, Rng& rng) {
  if (candidates.empty()) throw ConfigError("kcenter_greedy: empty candidate set");
  if (k > candidates.size()) throw ConfigError("kcenter_greedy: k exceeds the candidate count");
  std::vector<Index> picks;
  picks.reserve(k);
  if (k == 0) return picks;

  std::vector<double> mind(candidates.size(), std::numeric_limits<double>::infinity());
  std::vector<char> taken(candidates.size(), 0);
  auto absorb = [&](Index center) {
    auto c = x.row(center);
    for (std::size_t j = 0; j < candidates.size(); ++j)
      if (!taken[j]) mind[j] = std::min(mind[j], squared_distance(x.row(candidates[j]), c));
  };
  for (Index c : initial_centers) absorb(c);

  if (initial_centers.empty()) {
    const std::size_t j = static_cast<std::size_t>(rng.below(candidates.size()));
    taken[j] = 1;
    picks.push_back(candidates[j]);
    absorb(candidates[j]);
  }
  while (picks.size() < k) {
    std::size_t best = candidates.size();
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (taken[j]) continue;
      if (best == candidates.size() || mind[j] > mind[best] ||
          (mind[j] == mind[best] && candidates[j] < candidates[best]))
        best = j;
    }
    taken[best] = 1;
    picks.push_back(candidates[best]);
    absorb(candidates[best]);
  }
  return picks;
}

// Typicality of each point of `neighborhood`: inverse mean Euclidean distance
// to its min(K, |neighborhood| - 1) nearest neighbors inside the
// neighborhood. Zero mean distance yields +infinity.
inline std::vector<double> typicality(MatrixView x, std::span<const Index> neighborhood, std::size_t K) {
  const std::size_t m = neighborhood.size();
  if (m < 2) throw ConfigError("typicality: neighborhood needs at least 2 points");
  if (K == 0) throw ConfigError("typicality: K must be >= 1");
  const std::size_t k = std::min(K, m - 1);
  std::vector<double> out(m);
  std::vector<double> d;
  d.reserve(m - 1);
  for (std::size_t a = 0; a < m; ++a) {
    d.clear();
    auto xa = x.row(neighborhood[a]);
    for (std::size_t b = 0; b < m; ++b)
      if (b != a) d.push_back(std::sqrt(squared_distance(xa, x.row(neighborhood[b]))));
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    std::sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += d[j];
    const double mean = sum / static_cast<double>(k);
    out[a] = mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
  }
  return out;
}

// TypiClust selection shared by initial-pool selection and the query strategy.
// Clusters all rows with k = min(|L| + b, max_clusters), visits clusters
// without labeled points first (largest first, ties by cluster id), then the
// remaining clusters the same way, and takes each visited cluster's most
// typical eligible point. Visits repeat round-robin until b picks exist.
inline std::vector<Index> typiclust_select(MatrixView x, std::span<const char> labeled_mask, std::size_t b,
                                           std::size_t knn, std::size_t max_clusters, Rng& rng) {
  const std::size_t n = x.rows();
  std::size_t num_labeled = 0;
  for (char c : labeled_mask) num_labeled += c ? 1 : 0;
  if (b > n - num_labeled) throw ConfigError("typiclust: batch exceeds the unlabeled pool");
  std::vector<Index> picks;
  if (b == 0) return picks;

  const std::size_t k = std::min({num_labeled + b, std::max<std::size_t>(max_clusters, 1), n});
  const auto km = kmeans(x, k, rng);
  const auto members = km.members();

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<char> covered(k, 0);
  for (std::size_t c = 0; c < k; ++c)
    for (Index i : members[c])
      if (labeled_mask[i]) covered[c] = 1;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    if (covered[a] != covered[c]) return covered[a] < covered[c];
    return members[a].size() > members[c].size();
  });

  std::vector<std::vector<double>> typ(k);
  std::vector<char> picked(n, 0);
  while (picks.size() < b) {
    const std::size_t before = picks.size();
    for (std::size_t c : order) {
      if (picks.size() == b) break;
      const auto& mem = members[c];
      if (mem.empty()) continue;
      if (typ[c].empty()) typ[c] = mem.size() >= 2 ? typicality(x, mem, knn) : std::vector<double>{0.0};
      std::size_t best = mem.size();
      for (std::size_t j = 0; j < mem.size(); ++j) {
        if (labeled_mask[mem[j]] || picked[mem[j]]) continue;
        if (best == mem.size() || typ[c][j] > typ[c][best] || (typ[c][j] == typ[c][best] && mem[j] < mem[best]))
          best = j;
      }
      if (best == mem.size()) continue;
      picked[mem[best]] = 1;
      picks.push_back(mem[best]);
    }
    if (picks.size() == before) break;
  }
  return picks;
}

// Initial labeled pool L(0) of exactly k0 distinct training indices.
// Deterministic given (features, cfg).
inline std::vector<Index> select_initial(MatrixView train, const IpsConfig& cfg) {
  const std::size_t n = train.rows();
  if (cfg.k0 < 1) throw ConfigError("ips: k0 must be >= 1");
  if (cfg.k0 > n) throw ConfigError("ips: k0 exceeds num_train");
  Rng rng(derive_seed(cfg.seed, to_string(cfg.strategy), "ips"));
  switch (cfg.strategy) {
    case IpsStrategy::Random: {
      std::vector<Index> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = 0; i < cfg.k0; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
      }
      perm.resize(cfg.k0);
      return perm;
    }
    case IpsStrategy::CoreSet: {
      std::vector<Index> all(n);
      std::iota(all.begin(), all.end(), 0);
      return kcenter_greedy(train, {}, all, cfg.k0, rng);
    }
    case IpsStrategy::TypiClust: {
      const std::vector<char> none(n, 0);
      return typiclust_select(train, none, cfg.k0, cfg.typiclust_knn, cfg.typiclust_max_clusters, rng);
    }
  }
  throw ConfigError("ips: unknown strategy");
}

}  // namespace alforge
