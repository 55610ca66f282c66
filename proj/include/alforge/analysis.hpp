// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "alforge/error.hpp"
#include "alforge/results.hpp"

namespace alforge {

// A comparison unit: one (dataset, model, ips, cycle) cell. `ips` keeps
// tables holding several initial-pool strategies from mixing.
struct Unit {
  std::string dataset;
  std::string model;
  std::string ips;
  std::size_t cycle = 0;

  auto tie() const { return std::tie(dataset, model, ips, cycle); }
  friend bool operator<(const Unit& a, const Unit& b) { return a.tie() < b.tie(); }
  friend bool operator==(const Unit& a, const Unit& b) { return a.tie() == b.tie(); }
};

struct ResultFilter {
  std::optional<std::string> dataset;
  std::optional<std::string> model;
  std::optional<std::string> ips;
  std::optional<std::size_t> min_cycle;
  std::optional<std::size_t> max_cycle;
  std::vector<std::string> strategies;  // empty = all, otherwise also fixes matrix order

  bool accepts(const ResultRow& r) const {
    if (dataset && r.dataset != *dataset) return false;
    if (model && r.model != *model) return false;
    if (ips && r.ips != *ips) return false;
    if (min_cycle && r.cycle < *min_cycle) return false;
    if (max_cycle && r.cycle > *max_cycle) return false;
    if (!strategies.empty() && std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end())
      return false;
    return true;
  }
};

// unit -> strategy -> seed -> accuracy
using UnitIndex = std::map<Unit, std::map<std::string, std::map<std::uint64_t, double>>>;

inline UnitIndex index_units(const ResultsTable& t, const ResultFilter& filter = {}) {
  UnitIndex idx;
  for (const auto& r : t.rows) {
    if (!filter.accepts(r)) continue;
    auto& seeds = idx[Unit{r.dataset, r.model, r.ips, r.cycle}][r.strategy];
    if (!seeds.emplace(r.seed, r.accuracy).second)
      throw ValidationError("results: duplicate row for (" + r.dataset + ", " + r.model + ", " + r.ips + ", " +
                            r.strategy + ", seed " + std::to_string(r.seed) + ", cycle " + std::to_string(r.cycle) +
                            ")");
  }
  return idx;
}

inline std::vector<std::string> strategies_of(const ResultsTable& t, const ResultFilter& filter = {}) {
  if (!filter.strategies.empty()) return filter.strategies;
  std::set<std::string> s;
  for (const auto& r : t.rows)
    if (filter.accepts(r)) s.insert(r.strategy);
  return {s.begin(), s.end()};
}

enum class SeedRule {
  MeanDifference,  // one verdict per unit: sign of the mean paired difference
  PerSeed,         // one verdict per (unit, seed)
};

// Pairwise win rates. beats[a][b] counts comparisons a won; ties are exact
// zero differences. counts[a][b] = beats[a][b] + beats[b][a] + ties[a][b]
// and wins[a][b] = beats[a][b] / (counts[a][b] - ties[a][b]), ties excluded
// from the denominator. Diagonal entries are absent.
struct WinRateMatrix {
  std::vector<std::string> strategies;
  std::vector<std::optional<double>> wins;
  std::vector<std::size_t> beats;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> tie_counts;
  std::vector<std::size_t> skipped_units;  // units lacking pairing data

  std::size_t size() const { return strategies.size(); }
  std::size_t at(std::size_t a, std::size_t b) const { return a * strategies.size() + b; }
  std::optional<double> win(std::size_t a, std::size_t b) const { return wins[at(a, b)]; }
  std::size_t decided(std::size_t a, std::size_t b) const { return counts[at(a, b)] - tie_counts[at(a, b)]; }
};

inline WinRateMatrix pairwise_win_rates(const ResultsTable& t, const ResultFilter& filter = {},
                                        SeedRule rule = SeedRule::MeanDifference) {
  const auto idx = index_units(t, filter);
  WinRateMatrix m;
  m.strategies = strategies_of(t, filter);
  const std::size_t S = m.size();
  m.wins.assign(S * S, std::nullopt);
  m.beats.assign(S * S, 0);
  m.counts.assign(S * S, 0);
  m.tie_counts.assign(S * S, 0);
  m.skipped_units.assign(S * S, 0);

  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t b = a + 1; b < S; ++b) {
      std::size_t a_wins = 0, b_wins = 0, ties = 0, skipped = 0;
      auto record = [&](double diff) {
        if (diff > 0.0) ++a_wins;
        else if (diff < 0.0) ++b_wins;
        else ++ties;
      };
      for (const auto& [unit, by_strategy] : idx) {
        const auto ia = by_strategy.find(m.strategies[a]);
        const auto ib = by_strategy.find(m.strategies[b]);
        if (ia == by_strategy.end() || ib == by_strategy.end()) {
          ++skipped;
          continue;
        }
        double sum = 0.0;
        std::size_t shared = 0;
        for (const auto& [seed, acc_a] : ia->second) {
          const auto jt = ib->second.find(seed);
          if (jt == ib->second.end()) continue;
          ++shared;
          if (rule == SeedRule::PerSeed) record(acc_a - jt->second);
          else sum += acc_a - jt->second;
        }
        if (shared == 0) {
          ++skipped;
          continue;
        }
        // The sign of the sum equals the sign of the mean.
        if (rule == SeedRule::MeanDifference) record(sum);
      }
      m.beats[m.at(a, b)] = a_wins;
      m.beats[m.at(b, a)] = b_wins;
      m.tie_counts[m.at(a, b)] = m.tie_counts[m.at(b, a)] = ties;
      m.counts[m.at(a, b)] = m.counts[m.at(b, a)] = a_wins + b_wins + ties;
      m.skipped_units[m.at(a, b)] = m.skipped_units[m.at(b, a)] = skipped;
      const std::size_t decided = a_wins + b_wins;
      if (decided > 0) {
        m.wins[m.at(a, b)] = static_cast<double>(a_wins) / static_cast<double>(decided);
        m.wins[m.at(b, a)] = static_cast<double>(b_wins) / static_cast<double>(decided);
      }
    }
  return m;
}

enum class GroupBy { Cycle, Model, Dataset };

inline std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::Cycle: return "cycle";
    case GroupBy::Model: return "model";
    case GroupBy::Dataset: return "dataset";
  }
  return "?";
}

struct GroupFrequency {
  std::string group;
  std::map<std::string, std::size_t> units_won;
  std::map<std::string, double> share;
  std::size_t decided_units = 0;
  std::size_t excluded_ties = 0;
};

struct TopPerformerTable {
  GroupBy group_by = GroupBy::Cycle;
  std::vector<GroupFrequency> groups;  // ordered by group key
  std::size_t excluded_ties = 0;
};

// Per group, the share of units in which each strategy had the strictly
// highest seed-mean accuracy (seeds shared by all strategies of the unit).
// Units with a tie at the top are excluded.
inline TopPerformerTable top_performer_frequency(const ResultsTable& t, GroupBy group_by,
                                                 const ResultFilter& filter = {}) {
  const auto idx = index_units(t, filter);
  TopPerformerTable out;
  out.group_by = group_by;
  std::map<std::string, GroupFrequency> groups;
  std::map<std::string, std::size_t> cycle_keys;  // numeric order for cycles
  for (const auto& [unit, by_strategy] : idx) {
    std::string key;
    switch (group_by) {
      case GroupBy::Cycle: key = std::to_string(unit.cycle); break;
      case GroupBy::Model: key = unit.model; break;
      case GroupBy::Dataset: key = unit.dataset; break;
    }
    cycle_keys[key] = unit.cycle;
    std::set<std::uint64_t> shared;
    bool first = true;
    for (const auto& [name, seeds] : by_strategy) {
      std::set<std::uint64_t> s;
      for (const auto& kv : seeds) s.insert(kv.first);
      if (first) {
        shared = std::move(s);
        first = false;
      } else {
        std::set<std::uint64_t> inter;
        std::set_intersection(shared.begin(), shared.end(), s.begin(), s.end(), std::inserter(inter, inter.begin()));
        shared = std::move(inter);
      }
    }
    if (shared.empty()) continue;

    auto& g = groups[key];
    g.group = key;
    double best = -1.0;
    std::string winner;
    std::size_t at_best = 0;
    for (const auto& [name, seeds] : by_strategy) {
      g.units_won.try_emplace(name, 0);
      double sum = 0.0;
      for (auto seed : shared) sum += seeds.at(seed);
      const double mean = sum / static_cast<double>(shared.size());
      if (mean > best) {
        best = mean;
        winner = name;
        at_best = 1;
      } else if (mean == best) {
        ++at_best;
      }
    }
    if (at_best > 1) {
      ++g.excluded_ties;
      ++out.excluded_ties;
      continue;
    }
    ++g.units_won[winner];
    ++g.decided_units;
  }
  for (auto& [key, g] : groups) {
    if (g.decided_units > 0)
      for (const auto& [name, n] : g.units_won)
        g.share[name] = static_cast<double>(n) / static_cast<double>(g.decided_units);
    out.groups.push_back(std::move(g));
  }
  if (group_by == GroupBy::Cycle)
    std::stable_sort(out.groups.begin(), out.groups.end(), [&](const GroupFrequency& a, const GroupFrequency& b) {
      return cycle_keys[a.group] < cycle_keys[b.group];
    });
  return out;
}

struct DifferencePoint {
  std::string dataset;
  std::string model;
  std::string strategy;
  std::size_t cycle = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single seed
  std::size_t seeds = 0;
};

// Paired per-seed differences (first minus second) aggregated per
// (dataset, model, strategy, cycle). Positive means the first table is better.
inline std::vector<DifferencePoint> ips_difference_curves(const ResultsTable& typiclust_ips,
                                                          const ResultsTable& random_ips) {
  using Key = std::tuple<std::string, std::string, std::string, std::size_t, std::uint64_t>;
  auto collect = [](const ResultsTable& t) {
    std::map<Key, double> m;
    for (const auto& r : t.rows)
      if (!m.emplace(Key{r.dataset, r.model, r.strategy, r.cycle, r.seed}, r.accuracy).second)
        throw ValidationError("ips_difference_curves: duplicate row in input table");
    return m;
  };
  const auto a = collect(typiclust_ips);
  const auto b = collect(random_ips);
  std::string missing;
  auto describe = [](const Key& k) {
    return "(" + std::get<0>(k) + ", " + std::get<1>(k) + ", " + std::get<2>(k) + ", cycle " +
           std::to_string(std::get<3>(k)) + ", seed " + std::to_string(std::get<4>(k)) + ")";
  };
  for (const auto& [k, v] : a)
    if (!b.count(k)) missing += " missing in second table " + describe(k) + ";";
  for (const auto& [k, v] : b)
    if (!a.count(k)) missing += " missing in first table " + describe(k) + ";";
  if (!missing.empty()) throw ValidationError("ips_difference_curves: seed mismatch:" + missing);

  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, std::vector<double>> diffs;
  for (const auto& [k, v] : a)
    diffs[{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)}].push_back(v - b.at(k));

  std::vector<DifferencePoint> out;
  for (const auto& [k, d] : diffs) {
    DifferencePoint p{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), 0.0, 0.0, d.size()};
    double sum = 0.0;
    for (double v : d) sum += v;
    p.mean = sum / static_cast<double>(d.size());
    if (d.size() > 1) {
      double ss = 0.0;
      for (double v : d) ss += (v - p.mean) * (v - p.mean);
      p.sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct CurvePoint {
  std::string dataset;
  std::string model;
  std::string ips;
  std::string strategy;
  std::size_t cycle = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t seeds = 0;
};

// Mean and sample sd of accuracy over seeds for every
// (dataset, model, ips, strategy, cycle).
inline std::vector<CurvePoint> accuracy_curves(const ResultsTable& t) {
  std::map<std::tuple<std::string, std::string, std::string, std::string, std::size_t>, std::vector<double>> acc;
  for (const auto& r : t.rows) acc[{r.dataset, r.model, r.ips, r.strategy, r.cycle}].push_back(r.accuracy);
  std::vector<CurvePoint> out;
  for (const auto& [k, v] : acc) {
    CurvePoint p{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), 0.0, 0.0, v.size()};
    double sum = 0.0;
    for (double x : v) sum += x;
    p.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - p.mean) * (x - p.mean);
      p.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace alforge
