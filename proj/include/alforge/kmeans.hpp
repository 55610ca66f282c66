// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "alforge/error.hpp"
#include "alforge/matrix.hpp"
#include "alforge/rng.hpp"

namespace alforge {

// Draws an index with probability proportional to weights[i]. Zero-weight
// entries are never drawn. Returns weights.size() when the total mass is 0.
inline std::size_t sample_proportional(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double u = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last_positive = i;
    if (u < cum) return i;
  }
  return last_positive;  // rounding at the upper end
}

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;       // k x dim
  std::vector<std::size_t> assignment;  // one cluster id per row
  std::size_t iterations = 0;

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignment) ++sizes[a];
    return sizes;
  }

  std::vector<std::vector<Index>> members() const {
    std::vector<std::vector<Index>> out(k);
    for (Index i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
    return out;
  }
};

namespace detail {

inline double sq_dist_to_centroid(std::span<const float> x, const double* c) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = static_cast<double>(x[j]) - c[j];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Lloyd's k-means with k-means++ seeding. Iterates until the assignment is a
// fixpoint or max_iterations is reached. An empty cluster is re-seeded with
// the point farthest from its current centroid.
inline KMeansResult kmeans(MatrixView x, std::size_t k, Rng& rng, std::size_t max_iterations = 100) {
  const std::size_t n = x.rows();
  const std::size_t d = x.dim();
  if (k == 0 || k > n) throw ConfigError("kmeans: k must be in [1, rows]");

  KMeansResult res;
  res.k = k;
  res.dim = d;
  res.centroids.assign(k * d, 0.0);
  auto set_centroid = [&](std::size_t c, Index i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) res.centroids[c * d + j] = row[j];
  };

  // k-means++ seeding.
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  Index first = static_cast<Index>(rng.below(n));
  set_centroid(0, first);
  chosen[first] = 1;
  for (std::size_t c = 1; c < k; ++c) {
    const double* prev = res.centroids.data() + (c - 1) * d;
    for (Index i = 0; i < n; ++i) mind[i] = chosen[i] ? 0.0 : std::min(mind[i], detail::sq_dist_to_centroid(x.row(i), prev));
    Index pick = sample_proportional(mind, rng);
    if (pick == n) pick = static_cast<Index>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    chosen[pick] = 1;
    set_centroid(c, pick);
  }

  res.assignment.assign(n, k);  // sentinel: unassigned
  std::vector<double> dist(n, 0.0);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      auto row = x.row(i);
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dc = detail::sq_dist_to_centroid(row, res.centroids.data() + c * d);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      dist[i] = best_d;
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    res.iterations = iter + 1;
    if (!changed) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (Index i = 0; i < n; ++i) {
      const std::size_t c = res.assignment[i];
      ++counts[c];
      auto row = x.row(i);
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += row[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) res.centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      Index far = n;
      for (Index i = 0; i < n; ++i) {
        if (counts[res.assignment[i]] <= 1) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n || dist[far] <= 0.0) continue;  // every point sits on a centroid
      --counts[res.assignment[far]];
      ++counts[c];
      res.assignment[far] = c;
      dist[far] = 0.0;
      set_centroid(c, far);
    }
  }
  return res;
}

}  // namespace alforge
