// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alforge/error.hpp"
#include "alforge/ips.hpp"
#include "alforge/kmeans.hpp"
#include "alforge/matrix.hpp"
#include "alforge/probe.hpp"
#include "alforge/rng.hpp"

namespace alforge {

enum class Strategy { Random, Margin, Entropy, CoreSet, ProbCover, TypiClust, Badge, DropQuery };

inline constexpr std::array<Strategy, 8> kAllStrategies{Strategy::Random,    Strategy::Margin,    Strategy::Entropy,
                                                        Strategy::CoreSet,   Strategy::ProbCover, Strategy::TypiClust,
                                                        Strategy::Badge,     Strategy::DropQuery};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Margin: return "margin";
    case Strategy::Entropy: return "entropy";
    case Strategy::CoreSet: return "coreset";
    case Strategy::ProbCover: return "probcover";
    case Strategy::TypiClust: return "typiclust";
    case Strategy::Badge: return "badge";
    case Strategy::DropQuery: return "dropquery";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (Strategy st : kAllStrategies)
    if (to_string(st) == s) return st;
  throw ConfigError("unknown query strategy '" + std::string(s) + "'");
}

enum class FirstPick { MaxNorm, Random };

struct StrategyParams {
  std::optional<double> probcover_delta;  // nullopt = estimate from purity
  double probcover_purity_threshold = 0.95;
  bool probcover_normalize = true;
  std::size_t probcover_grid_size = 30;
  double probcover_grid_min = 0.05;
  double probcover_grid_max = 1.0;
  std::size_t dropquery_masks = 10;
  double dropquery_rate = 0.5;
  std::size_t typiclust_knn = 20;
  std::size_t typiclust_max_clusters = 500;
  FirstPick badge_first_pick = FirstPick::MaxNorm;

  void check() const {
    if (probcover_delta && !(*probcover_delta > 0.0)) throw ConfigError("probcover_delta must be positive");
    if (!(probcover_purity_threshold >= 0.0 && probcover_purity_threshold <= 1.0))
      throw ConfigError("probcover_purity_threshold must lie in [0, 1]");
    if (probcover_grid_size == 0 || !(probcover_grid_min > 0.0) || probcover_grid_max < probcover_grid_min)
      throw ConfigError("probcover delta grid is invalid");
    if (!(dropquery_rate > 0.0 && dropquery_rate < 1.0)) throw ConfigError("dropquery_rate must lie in (0, 1)");
    if (typiclust_knn == 0 || typiclust_max_clusters == 0) throw ConfigError("typiclust parameters must be >= 1");
  }
};

struct QueryContext {
  const EmbeddingMatrix& train;
  const PoolState& pool;
  const ProbeParams& probe;
  std::size_t batch_size;
  Rng& rng;
  const StrategyParams& params;
};

// ---------------------------------------------------------------------------
// Uncertainty scores

inline std::vector<double> score_entropy(const ProbabilityMatrix& probs) {
  std::vector<double> out(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    double h = 0.0;
    for (double p : probs.row(i))
      if (p > 0.0) h -= p * std::log(p);
    out[i] = h;
  }
  return out;
}

inline std::vector<double> score_margin(const ProbabilityMatrix& probs) {
  if (probs.num_classes < 2) throw ConfigError("margin needs at least 2 classes");
  std::vector<double> out(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    double first = -1.0, second = -1.0;
    for (double p : probs.row(i)) {
      if (p > first) {
        second = first;
        first = p;
      } else if (p > second) {
        second = p;
      }
    }
    out[i] = first - second;
  }
  return out;
}

// Positions of the b largest (or smallest) scores; ties by lowest position.
inline std::vector<std::size_t> select_extreme(std::span<const double> scores, std::size_t b, bool largest) {
  if (b > scores.size()) throw ConfigError("batch size exceeds the number of scored rows");
  std::vector<std::size_t> pos(scores.size());
  std::iota(pos.begin(), pos.end(), 0);
  auto cmp = [&](std::size_t a, std::size_t c) {
    if (scores[a] != scores[c]) return largest ? scores[a] > scores[c] : scores[a] < scores[c];
    return a < c;
  };
  std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(b), pos.end(), cmp);
  pos.resize(b);
  return pos;
}

// ---------------------------------------------------------------------------
// BADGE

// Dense row-major matrix of doubles; one point per row.
struct DenseRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::size_t size() const { return rows; }
  double sq_norm(std::size_t i) const {
    double s = 0.0;
    for (double v : row(i)) s += v * v;
    return s;
  }
  double sq_dist(std::size_t i, std::size_t j) const {
    auto a = row(i), b = row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return s;
  }
};

// Points of the form a_i (x) h_i held in factored form. Squared distances use
// ||a (x) h - a' (x) h'||^2 = |a|^2 |h|^2 + |a'|^2 |h'|^2 - 2 (a.a')(h.h').
struct KroneckerRows {
  std::size_t rows = 0;
  std::size_t left_dim = 0;
  std::size_t right_dim = 0;
  std::vector<double> left;   // rows x left_dim
  std::vector<double> right;  // rows x right_dim
  std::vector<double> left_sq, right_sq;

  std::size_t size() const { return rows; }
  double sq_norm(std::size_t i) const { return left_sq[i] * right_sq[i]; }
  double sq_dist(std::size_t i, std::size_t j) const {
    double la = 0.0, ra = 0.0;
    for (std::size_t k = 0; k < left_dim; ++k) la += left[i * left_dim + k] * left[j * left_dim + k];
    for (std::size_t k = 0; k < right_dim; ++k) ra += right[i * right_dim + k] * right[j * right_dim + k];
    return std::max(0.0, sq_norm(i) + sq_norm(j) - 2.0 * la * ra);
  }
};

// Factors (p_hat - onehot(argmax p_hat), h(x)) for every row of `features`.
inline KroneckerRows badge_factors(const ProbeParams& probe, MatrixView features) {
  const auto probs = predict_proba(probe, features);
  KroneckerRows out;
  out.rows = features.rows();
  out.left_dim = probe.num_classes;
  out.right_dim = probe.dim;
  out.left.resize(out.rows * out.left_dim);
  out.right.resize(out.rows * out.right_dim);
  out.left_sq.resize(out.rows);
  out.right_sq.resize(out.rows);
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto p = probs.row(i);
    const std::size_t yhat = argmax(p);
    double ls = 0.0;
    for (std::size_t c = 0; c < out.left_dim; ++c) {
      const double a = p[c] - (c == yhat ? 1.0 : 0.0);
      out.left[i * out.left_dim + c] = a;
      ls += a * a;
    }
    auto h = features.row(i);
    double rs = 0.0;
    for (std::size_t k = 0; k < out.right_dim; ++k) {
      out.right[i * out.right_dim + k] = h[k];
      rs += static_cast<double>(h[k]) * h[k];
    }
    out.left_sq[i] = ls;
    out.right_sq[i] = rs;
  }
  return out;
}

// g(x) = (p_hat - onehot(y_hat)) (x) h(x), flattened class-major: entry
// c * D + k. This is the gradient of the unregularized cross-entropy with
// respect to W at the hypothetical label y_hat = argmax p_hat.
inline DenseRows badge_gradient_embeddings(const ProbeParams& probe, MatrixView features) {
  const auto f = badge_factors(probe, features);
  DenseRows g{f.rows, f.left_dim * f.right_dim, std::vector<double>(f.rows * f.left_dim * f.right_dim)};
  for (std::size_t i = 0; i < f.rows; ++i)
    for (std::size_t c = 0; c < f.left_dim; ++c)
      for (std::size_t k = 0; k < f.right_dim; ++k)
        g.values[i * g.cols + c * f.right_dim + k] = f.left[i * f.left_dim + c] * f.right[i * f.right_dim + k];
  return g;
}

// k-means++ seeding as a batch selector. The first pick is the largest-norm
// row (MaxNorm) or uniform (Random); each further pick is drawn with
// probability proportional to the squared distance to the nearest pick. Once
// the distance mass is zero, remaining picks are the lowest unchosen rows.
template <class Points>
std::vector<std::size_t> kmeanspp_select(const Points& pts, std::size_t b, Rng& rng, FirstPick first_pick) {
  const std::size_t n = pts.size();
  if (b > n) throw ConfigError("kmeanspp_select: b exceeds the number of rows");
  std::vector<std::size_t> picks;
  if (b == 0) return picks;
  std::vector<char> chosen(n, 0);

  std::size_t first = 0;
  if (first_pick == FirstPick::MaxNorm) {
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = pts.sq_norm(i);
      if (v > best) {
        best = v;
        first = i;
      }
    }
  } else {
    first = static_cast<std::size_t>(rng.below(n));
  }
  chosen[first] = 1;
  picks.push_back(first);

  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  while (picks.size() < b) {
    const std::size_t last = picks.back();
    for (std::size_t i = 0; i < n; ++i) mind[i] = chosen[i] ? 0.0 : std::min(mind[i], pts.sq_dist(i, last));
    const std::size_t next = sample_proportional(mind, rng);
    if (next == n) {
      for (std::size_t i = 0; i < n && picks.size() < b; ++i)
        if (!chosen[i]) {
          chosen[i] = 1;
          picks.push_back(i);
        }
      break;
    }
    chosen[next] = 1;
    picks.push_back(next);
  }
  return picks;
}

// ---------------------------------------------------------------------------
// ProbCover

struct DeltaEstimate {
  double delta = 0.0;
  double purity = 0.0;
  std::string warning;
};

inline std::vector<double> probcover_delta_grid(const StrategyParams& p) {
  std::vector<double> grid(p.probcover_grid_size);
  if (grid.size() == 1) {
    grid[0] = p.probcover_grid_max;
    return grid;
  }
  const double lo = std::log(p.probcover_grid_min), hi = std::log(p.probcover_grid_max);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1));
  grid.front() = p.probcover_grid_min;
  grid.back() = p.probcover_grid_max;
  return grid;
}

// Largest grid delta whose ball purity reaches `purity_threshold`. Purity uses
// k-means pseudo-labels (k = C): the ball around x is pure iff every point
// within delta shares x's pseudo-label.
inline DeltaEstimate estimate_probcover_delta(MatrixView features, std::size_t num_classes,
                                              const StrategyParams& params, Rng& rng) {
  if (num_classes < 2) throw ConfigError("estimate_probcover_delta: needs C >= 2");
  EmbeddingMatrix normalized;
  MatrixView x = features;
  if (params.probcover_normalize) {
    normalized = unit_normalized(features);
    x = normalized;
  }
  const std::size_t n = x.rows();
  const auto km = kmeans(x, std::min(num_classes, n), rng);

  // A ball of radius delta around i is pure iff delta < distance to the
  // nearest point with a different pseudo-label.
  std::vector<double> impure_at(n, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (km.assignment[i] == km.assignment[j]) continue;
      const double d = squared_distance(x.row(i), x.row(j));
      impure_at[i] = std::min(impure_at[i], d);
      impure_at[j] = std::min(impure_at[j], d);
    }

  const auto grid = probcover_delta_grid(params);
  DeltaEstimate est;
  bool found = false;
  for (double delta : grid) {
    std::size_t pure = 0;
    for (double d2 : impure_at)
      if (d2 > delta * delta) ++pure;
    const double purity = static_cast<double>(pure) / static_cast<double>(n);
    if (purity >= params.probcover_purity_threshold) {
      est.delta = delta;
      est.purity = purity;
      found = true;
    }
  }
  if (!found) {
    est.delta = grid.front();
    std::size_t pure = 0;
    for (double d2 : impure_at)
      if (d2 > est.delta * est.delta) ++pure;
    est.purity = static_cast<double>(pure) / static_cast<double>(n);
    est.warning = "no delta on the grid reaches purity threshold; using smallest grid value";
  }
  return est;
}

// Greedy max coverage over the relation ||x - y|| <= delta. Points within
// delta of a labeled point start covered. Each step picks the unlabeled point
// covering the most uncovered points (ties lowest index); when nothing is
// left to cover the batch is filled with the lowest unpicked indices.
// Coverage counts are updated incrementally; no edge list is stored.
inline std::vector<Index> probcover_greedy(MatrixView x, std::span<const Index> labeled,
                                           std::span<const Index> unlabeled, double delta, std::size_t b) {
  if (!(delta > 0.0)) throw ConfigError("probcover: delta must be positive");
  if (b > unlabeled.size()) throw ConfigError("probcover: batch exceeds the unlabeled pool");
  const std::size_t n = x.rows();
  const double r2 = delta * delta;
  auto within = [&](Index a, Index c) { return squared_distance(x.row(a), x.row(c)) <= r2; };

  std::vector<char> covered(n, 0);
  for (Index l : labeled)
    for (Index y = 0; y < n; ++y)
      if (!covered[y] && within(l, y)) covered[y] = 1;

  std::vector<std::size_t> count(unlabeled.size(), 0);
  for (std::size_t j = 0; j < unlabeled.size(); ++j)
    for (Index y = 0; y < n; ++y)
      if (!covered[y] && within(unlabeled[j], y)) ++count[j];

  std::vector<char> taken(unlabeled.size(), 0);
  std::vector<Index> picks;
  picks.reserve(b);
  while (picks.size() < b) {
    std::size_t best = unlabeled.size();
    for (std::size_t j = 0; j < unlabeled.size(); ++j) {
      if (taken[j]) continue;
      if (best == unlabeled.size() || count[j] > count[best] ||
          (count[j] == count[best] && unlabeled[j] < unlabeled[best]))
        best = j;
    }
    if (count[best] == 0) {
      // Nothing left to cover: lowest-index fill.
      std::vector<Index> rest;
      for (std::size_t j = 0; j < unlabeled.size(); ++j)
        if (!taken[j]) rest.push_back(unlabeled[j]);
      std::sort(rest.begin(), rest.end());
      for (std::size_t j = 0; picks.size() < b; ++j) picks.push_back(rest[j]);
      break;
    }
    taken[best] = 1;
    picks.push_back(unlabeled[best]);
    for (Index y = 0; y < n; ++y) {
      if (covered[y] || !within(unlabeled[best], y)) continue;
      covered[y] = 1;
      for (std::size_t j = 0; j < unlabeled.size(); ++j)
        if (!taken[j] && within(unlabeled[j], y)) --count[j];
    }
  }
  return picks;
}

inline std::vector<Index> query_probcover(const QueryContext& ctx) {
  EmbeddingMatrix normalized;
  MatrixView x = ctx.train;
  if (ctx.params.probcover_normalize) {
    normalized = unit_normalized(ctx.train);
    x = normalized;
  }
  double delta = 0.0;
  if (ctx.params.probcover_delta) {
    delta = *ctx.params.probcover_delta;
  } else {
    delta = estimate_probcover_delta(ctx.train, ctx.probe.num_classes, ctx.params, ctx.rng).delta;
  }
  return probcover_greedy(x, ctx.pool.labeled, ctx.pool.unlabeled, delta, ctx.batch_size);
}

// ---------------------------------------------------------------------------
// DropQuery

// Number of dropout masks (out of `masks`) under which the predicted class of
// each row changes. Each mask zeroes every feature independently with
// probability `rate` and rescales survivors by 1 / (1 - rate).
inline std::vector<std::size_t> dropquery_inconsistency(const ProbeParams& probe, MatrixView features,
                                                        std::size_t masks, double rate, Rng& rng) {
  if (features.dim() != probe.dim) throw ShapeError("dropquery: feature dim != probe dim");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<std::size_t> out(features.rows(), 0);
  std::vector<float> masked(features.dim());
  std::vector<double> z(probe.num_classes);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto x = features.row(i);
    logits_into(probe, x, z);
    const std::size_t base = argmax(z);
    for (std::size_t m = 0; m < masks; ++m) {
      for (std::size_t k = 0; k < x.size(); ++k)
        masked[k] = rng.uniform() < rate ? 0.0f : static_cast<float>(x[k] * keep_scale);
      logits_into(probe, masked, z);
      if (argmax(z) != base) ++out[i];
    }
  }
  return out;
}

namespace detail {

inline std::vector<Index> random_subset(std::vector<Index> pool, std::size_t b, Rng& rng) {
  if (b > pool.size()) throw ConfigError("batch exceeds the unlabeled pool");
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(b);
  return pool;
}

}  // namespace detail

// Candidates are unlabeled rows with any inconsistency. With at least b
// candidates, k-means (k = b) over the candidate embeddings picks the most
// inconsistent member per cluster; otherwise every candidate is taken and the
// rest of the batch is drawn uniformly from the remaining unlabeled rows.
inline std::vector<Index> query_dropquery(const QueryContext& ctx) {
  const auto& U = ctx.pool.unlabeled;
  const std::size_t b = ctx.batch_size;
  if (b > U.size()) throw ConfigError("dropquery: batch exceeds the unlabeled pool");
  if (b == 0) return {};
  const auto inc = dropquery_inconsistency(ctx.probe, MatrixView(ctx.train, U), ctx.params.dropquery_masks,
                                           ctx.params.dropquery_rate, ctx.rng);
  std::vector<Index> cand;
  std::vector<std::size_t> cand_inc;
  std::vector<Index> rest;
  for (std::size_t j = 0; j < U.size(); ++j) {
    if (inc[j] > 0) {
      cand.push_back(U[j]);
      cand_inc.push_back(inc[j]);
    } else {
      rest.push_back(U[j]);
    }
  }

  if (cand.size() < b) {
    auto fill = detail::random_subset(std::move(rest), b - cand.size(), ctx.rng);
    cand.insert(cand.end(), fill.begin(), fill.end());
    return cand;
  }

  const auto km = kmeans(MatrixView(ctx.train, cand), b, ctx.rng);
  std::vector<std::size_t> best(b, cand.size());
  for (std::size_t j = 0; j < cand.size(); ++j) {
    std::size_t& cur = best[km.assignment[j]];
    if (cur == cand.size() || cand_inc[j] > cand_inc[cur] || (cand_inc[j] == cand_inc[cur] && cand[j] < cand[cur]))
      cur = j;
  }
  std::vector<Index> picks;
  std::vector<char> used(cand.size(), 0);
  for (std::size_t c = 0; c < b; ++c)
    if (best[c] != cand.size()) {
      picks.push_back(cand[best[c]]);
      used[best[c]] = 1;
    }
  if (picks.size() < b) {
    // Empty clusters: top up by inconsistency, then index.
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < cand.size(); ++j)
      if (!used[j]) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
      if (cand_inc[a] != cand_inc[c]) return cand_inc[a] > cand_inc[c];
      return cand[a] < cand[c];
    });
    for (std::size_t j = 0; picks.size() < b; ++j) picks.push_back(cand[order[j]]);
  }
  return picks;
}

// ---------------------------------------------------------------------------
// Remaining strategies

inline std::vector<Index> query_random(const QueryContext& ctx) {
  return detail::random_subset(ctx.pool.unlabeled, ctx.batch_size, ctx.rng);
}

inline std::vector<Index> query_coreset(const QueryContext& ctx) {
  if (ctx.batch_size == 0) return {};
  return kcenter_greedy(ctx.train, ctx.pool.labeled, ctx.pool.unlabeled, ctx.batch_size, ctx.rng);
}

inline std::vector<Index> query_typiclust(const QueryContext& ctx) {
  const auto mask = ctx.pool.labeled_mask();
  return typiclust_select(ctx.train, mask, ctx.batch_size, ctx.params.typiclust_knn,
                          ctx.params.typiclust_max_clusters, ctx.rng);
}

namespace detail {

inline std::vector<Index> by_uncertainty(const QueryContext& ctx, Strategy s) {
  const auto& U = ctx.pool.unlabeled;
  const auto probs = predict_proba(ctx.probe, MatrixView(ctx.train, U));
  const auto scores = s == Strategy::Margin ? score_margin(probs) : score_entropy(probs);
  const auto pos = select_extreme(scores, ctx.batch_size, /*largest=*/s == Strategy::Entropy);
  std::vector<Index> out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(U[p]);
  return out;
}

}  // namespace detail

inline std::vector<Index> query_margin(const QueryContext& ctx) { return detail::by_uncertainty(ctx, Strategy::Margin); }
inline std::vector<Index> query_entropy(const QueryContext& ctx) { return detail::by_uncertainty(ctx, Strategy::Entropy); }

inline std::vector<Index> query_badge(const QueryContext& ctx) {
  const auto& U = ctx.pool.unlabeled;
  const auto factors = badge_factors(ctx.probe, MatrixView(ctx.train, U));
  const auto pos = kmeanspp_select(factors, ctx.batch_size, ctx.rng, ctx.params.badge_first_pick);
  std::vector<Index> out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(U[p]);
  return out;
}

// Runs one strategy and checks the batch contract: exactly b distinct indices
// drawn from the unlabeled pool.
inline std::vector<Index> query(Strategy s, const QueryContext& ctx) {
  ctx.params.check();
  if (ctx.batch_size > ctx.pool.unlabeled.size()) throw ConfigError("batch size exceeds the unlabeled pool");
  std::vector<Index> batch;
  switch (s) {
    case Strategy::Random: batch = query_random(ctx); break;
    case Strategy::Margin: batch = query_margin(ctx); break;
    case Strategy::Entropy: batch = query_entropy(ctx); break;
    case Strategy::CoreSet: batch = query_coreset(ctx); break;
    case Strategy::ProbCover: batch = query_probcover(ctx); break;
    case Strategy::TypiClust: batch = query_typiclust(ctx); break;
    case Strategy::Badge: batch = query_badge(ctx); break;
    case Strategy::DropQuery: batch = query_dropquery(ctx); break;
  }
  if (batch.size() != ctx.batch_size)
    throw Error(std::string(to_string(s)) + ": returned " + std::to_string(batch.size()) + " indices, expected " +
                std::to_string(ctx.batch_size));
  std::vector<Index> sorted = batch;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error(std::string(to_string(s)) + ": returned duplicate indices");
  if (!std::includes(ctx.pool.unlabeled.begin(), ctx.pool.unlabeled.end(), sorted.begin(), sorted.end()))
    throw Error(std::string(to_string(s)) + ": returned indices outside the unlabeled pool");
  return batch;
}

}  // namespace alforge
