// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "alforge/analysis.hpp"

using namespace alforge;

namespace {

ResultRow row(const std::string& strategy, std::uint64_t seed, std::size_t cycle, double acc,
              const std::string& model = "m", const std::string& ips = "random", const std::string& dataset = "d") {
  ResultRow r;
  r.dataset = dataset;
  r.model = model;
  r.ips = ips;
  r.strategy = strategy;
  r.seed = seed;
  r.cycle = cycle;
  r.labeled_size = 10 + cycle;
  r.accuracy = acc;
  return r;
}

// Three strategies, three cycles, two seeds. Accuracies are binary fractions
// so paired differences cancel exactly where the table intends a tie.
ResultsTable three_way_table() {
  ResultsTable t;
  auto add = [&](const std::string& s, std::size_t c, double a0, double a1) {
    t.rows.push_back(row(s, 0, c, a0));
    t.rows.push_back(row(s, 1, c, a1));
  };
  add("A", 0, 0.75, 0.5);     // mean .625
  add("B", 0, 0.625, 0.625);  // mean .625 -> ties A
  add("C", 0, 0.25, 0.25);
  add("A", 1, 0.5, 0.5);
  add("B", 1, 0.75, 0.75);
  add("C", 1, 0.625, 0.625);
  add("A", 2, 0.875, 0.875);
  add("B", 2, 0.25, 0.5);  // mean .375 -> ties C
  add("C", 2, 0.375, 0.375);
  return t;
}

std::size_t idx(const WinRateMatrix& m, const std::string& s) {
  return static_cast<std::size_t>(std::find(m.strategies.begin(), m.strategies.end(), s) - m.strategies.begin());
}

}  // namespace

TEST(WinRates, StrategyAgainstItsCopyIsAllTies) {
  ResultsTable t;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::uint64_t s = 0; s < 3; ++s) {
      const double acc = 0.5 + 0.125 * double((c + s) % 3);
      t.rows.push_back(row("A", s, c, acc));
      t.rows.push_back(row("A2", s, c, acc));
    }
  const auto m = pairwise_win_rates(t);
  EXPECT_EQ(m.tie_counts[m.at(0, 1)], 4u);
  EXPECT_EQ(m.counts[m.at(0, 1)], 4u);
  EXPECT_EQ(m.decided(0, 1), 0u);
  EXPECT_FALSE(m.win(0, 1).has_value());
  EXPECT_FALSE(m.win(0, 0).has_value());
}

TEST(WinRates, DominantStrategyWinsEverything) {
  ResultsTable t;
  for (std::size_t c = 0; c < 5; ++c)
    for (std::uint64_t s = 0; s < 2; ++s) {
      t.rows.push_back(row("A", s, c, 0.9));
      t.rows.push_back(row("B", s, c, 0.6 + 0.01 * double(c)));
    }
  const auto m = pairwise_win_rates(t);
  EXPECT_EQ(*m.win(idx(m, "A"), idx(m, "B")), 1.0);
  EXPECT_EQ(*m.win(idx(m, "B"), idx(m, "A")), 0.0);
  EXPECT_EQ(m.counts[m.at(0, 1)], 5u);
}

TEST(WinRates, ThreeStrategyHandEnumeration) {
  const auto m = pairwise_win_rates(three_way_table());
  ASSERT_EQ(m.strategies, (std::vector<std::string>{"A", "B", "C"}));
  // A vs B: tie, B, A.  A vs C: A, C, A.  B vs C: B, B, tie.
  EXPECT_EQ(m.beats[m.at(0, 1)], 1u);
  EXPECT_EQ(m.beats[m.at(1, 0)], 1u);
  EXPECT_EQ(m.tie_counts[m.at(0, 1)], 1u);
  EXPECT_EQ(*m.win(0, 1), 0.5);
  EXPECT_EQ(*m.win(0, 2), 2.0 / 3.0);
  EXPECT_EQ(*m.win(2, 0), 1.0 / 3.0);
  EXPECT_EQ(*m.win(1, 2), 1.0);
  EXPECT_EQ(*m.win(2, 1), 0.0);
  EXPECT_EQ(m.tie_counts[m.at(1, 2)], 1u);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) {
        EXPECT_EQ(m.counts[m.at(a, b)], 3u);
      }
}

TEST(WinRates, PerSeedRuleCountsEverySeed) {
  const auto m = pairwise_win_rates(three_way_table(), {}, SeedRule::PerSeed);
  // A vs B per seed: cycle 0 (A, B), cycle 1 (B, B), cycle 2 (A, A).
  EXPECT_EQ(m.beats[m.at(0, 1)], 3u);
  EXPECT_EQ(m.beats[m.at(1, 0)], 3u);
  EXPECT_EQ(m.counts[m.at(0, 1)], 6u);
  // B vs C per seed: cycle 0 (B, B), cycle 1 (B, B), cycle 2 (C, B).
  EXPECT_EQ(m.beats[m.at(1, 2)], 5u);
  EXPECT_EQ(m.beats[m.at(2, 1)], 1u);
}

TEST(WinRates, UnpairedUnitsAreSkipped) {
  auto t = three_way_table();
  t.rows.push_back(row("A", 0, 7, 0.5));
  const auto m = pairwise_win_rates(t);
  EXPECT_EQ(m.skipped_units[m.at(0, 1)], 1u);
  EXPECT_EQ(m.counts[m.at(0, 1)], 3u);
}

TEST(WinRates, FilterRestrictsUnitsAndOrder) {
  ResultFilter f;
  f.min_cycle = 1;
  f.strategies = {"C", "A"};
  const auto m = pairwise_win_rates(three_way_table(), f);
  ASSERT_EQ(m.strategies, (std::vector<std::string>{"C", "A"}));
  EXPECT_EQ(*m.win(0, 1), 0.5);
  EXPECT_EQ(m.counts[m.at(0, 1)], 2u);
}

TEST(WinRates, DuplicateRowsAreRejected) {
  auto t = three_way_table();
  t.rows.push_back(t.rows.front());
  EXPECT_THROW(pairwise_win_rates(t), ValidationError);
}

TEST(WinRates, FuzzedTablesSatisfyIdentities) {
  std::mt19937_64 gen(2718);
  const std::vector<std::string> names{"random", "margin", "entropy", "badge", "coreset"};
  for (int trial = 0; trial < 300; ++trial) {
    ResultsTable t;
    const std::size_t cycles = 1 + gen() % 6, seeds = 1 + gen() % 4;
    for (const auto& s : names)
      for (std::size_t c = 0; c < cycles; ++c)
        for (std::uint64_t seed = 0; seed < seeds; ++seed) {
          if (gen() % 7 == 0) continue;  // missing rows
          const double acc = double(gen() % 5) / 4.0;  // coarse grid forces ties
          t.rows.push_back(row(s, seed, c, acc, gen() % 2 ? "m1" : "m2"));
        }
    for (auto rule : {SeedRule::MeanDifference, SeedRule::PerSeed}) {
      const auto m = pairwise_win_rates(t, {}, rule);
      for (std::size_t a = 0; a < m.size(); ++a) {
        EXPECT_FALSE(m.win(a, a).has_value());
        for (std::size_t b = 0; b < m.size(); ++b) {
          if (a == b) continue;
          const auto ab = m.at(a, b), ba = m.at(b, a);
          ASSERT_EQ(m.counts[ab], m.counts[ba]);
          ASSERT_EQ(m.tie_counts[ab], m.tie_counts[ba]);
          ASSERT_EQ(m.beats[ab] + m.beats[ba] + m.tie_counts[ab], m.counts[ab]);
          if (m.decided(a, b) == 0) {
            ASSERT_FALSE(m.win(a, b).has_value());
            continue;
          }
          ASSERT_EQ(*m.win(a, b) + *m.win(b, a), 1.0);
          ASSERT_EQ(*m.win(a, b), double(m.beats[ab]) / double(m.decided(a, b)));
        }
      }
    }
  }
}

TEST(WinRates, RowOrderDoesNotMatter) {
  auto t = three_way_table();
  const auto base = pairwise_win_rates(t);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(t.rows.begin(), t.rows.end(), gen);
    const auto m = pairwise_win_rates(t);
    EXPECT_EQ(m.beats, base.beats);
    EXPECT_EQ(m.counts, base.counts);
    EXPECT_EQ(m.wins, base.wins);
  }
}

TEST(TopPerformer, SingleStrategyAlwaysWins) {
  ResultsTable t;
  for (std::size_t c = 0; c < 3; ++c) t.rows.push_back(row("margin", 0, c, 0.5));
  const auto tab = top_performer_frequency(t, GroupBy::Cycle);
  ASSERT_EQ(tab.groups.size(), 3u);
  for (const auto& g : tab.groups) EXPECT_EQ(g.share.at("margin"), 1.0);
}

TEST(TopPerformer, IdenticalStrategiesAreAllExcluded) {
  ResultsTable t;
  for (std::size_t c = 0; c < 4; ++c) {
    t.rows.push_back(row("A", 0, c, 0.5));
    t.rows.push_back(row("B", 0, c, 0.5));
  }
  const auto tab = top_performer_frequency(t, GroupBy::Model);
  EXPECT_EQ(tab.excluded_ties, 4u);
  ASSERT_EQ(tab.groups.size(), 1u);
  EXPECT_EQ(tab.groups[0].decided_units, 0u);
  EXPECT_TRUE(tab.groups[0].share.empty());
}

TEST(TopPerformer, HandEnumerationByCycleAndModel) {
  const auto t = three_way_table();
  const auto by_cycle = top_performer_frequency(t, GroupBy::Cycle);
  ASSERT_EQ(by_cycle.groups.size(), 3u);
  EXPECT_EQ(by_cycle.groups[0].excluded_ties, 1u);  // A and B tie at the top
  EXPECT_EQ(by_cycle.groups[1].share.at("B"), 1.0);
  EXPECT_EQ(by_cycle.groups[2].share.at("A"), 1.0);
  EXPECT_EQ(by_cycle.groups[2].share.at("C"), 0.0);

  const auto by_model = top_performer_frequency(t, GroupBy::Model);
  ASSERT_EQ(by_model.groups.size(), 1u);
  const auto& g = by_model.groups[0];
  EXPECT_EQ(g.decided_units, 2u);
  EXPECT_EQ(g.excluded_ties, 1u);
  EXPECT_EQ(g.share.at("A"), 0.5);
  EXPECT_EQ(g.share.at("B"), 0.5);
  EXPECT_EQ(g.share.at("C"), 0.0);
}

TEST(TopPerformer, CyclesAreOrderedNumerically) {
  ResultsTable t;
  for (std::size_t c : {10u, 2u, 1u}) t.rows.push_back(row("A", 0, c, 0.5));
  const auto tab = top_performer_frequency(t, GroupBy::Cycle);
  ASSERT_EQ(tab.groups.size(), 3u);
  EXPECT_EQ(tab.groups[0].group, "1");
  EXPECT_EQ(tab.groups[1].group, "2");
  EXPECT_EQ(tab.groups[2].group, "10");
}

TEST(IpsDifference, IdenticalTablesGiveZeroCurves) {
  const auto t = three_way_table();
  for (const auto& p : ips_difference_curves(t, t)) {
    EXPECT_EQ(p.mean, 0.0);
    EXPECT_EQ(p.sd, 0.0);
    EXPECT_EQ(p.seeds, 2u);
  }
}

TEST(IpsDifference, ConstantShift) {
  const auto rnd = three_way_table();
  auto typ = rnd;
  for (auto& r : typ.rows) {
    r.ips = "typiclust";
    r.accuracy += 0.02;
  }
  const auto pts = ips_difference_curves(typ, rnd);
  EXPECT_EQ(pts.size(), 9u);
  for (const auto& p : pts) {
    EXPECT_NEAR(p.mean, 0.02, 1e-12);
    EXPECT_NEAR(p.sd, 0.0, 1e-12);
  }
}

TEST(IpsDifference, TwoSeedHandArithmetic) {
  ResultsTable typ, rnd;
  typ.rows = {row("margin", 0, 0, 0.75, "m", "typiclust"), row("margin", 1, 0, 0.875, "m", "typiclust")};
  rnd.rows = {row("margin", 0, 0, 0.625), row("margin", 1, 0, 0.5)};
  const auto pts = ips_difference_curves(typ, rnd);
  ASSERT_EQ(pts.size(), 1u);
  // Differences 0.125 and 0.375: mean 0.25, sample sd sqrt(2 * 0.125^2) = 0.1767767.
  EXPECT_EQ(pts[0].mean, 0.25);
  EXPECT_NEAR(pts[0].sd, 0.125 * std::sqrt(2.0), 1e-15);
  EXPECT_EQ(pts[0].strategy, "margin");
}

TEST(IpsDifference, SeedMismatchListsMissingPairs) {
  ResultsTable typ, rnd;
  typ.rows = {row("margin", 0, 0, 0.75), row("margin", 1, 0, 0.875)};
  rnd.rows = {row("margin", 0, 0, 0.625)};
  try {
    ips_difference_curves(typ, rnd);
    FAIL() << "expected a seed mismatch";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("seed 1"), std::string::npos) << e.what();
  }
}

TEST(Curves, MeanAndSampleSd) {
  ResultsTable t;
  t.rows = {row("margin", 0, 3, 0.5), row("margin", 1, 3, 0.75), row("margin", 2, 3, 1.0)};
  const auto c = accuracy_curves(t);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].mean, 0.75);
  EXPECT_DOUBLE_EQ(c[0].sd, 0.25);
  EXPECT_EQ(c[0].seeds, 3u);
}
