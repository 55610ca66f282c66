// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "alforge/error.hpp"
#include "alforge/matrix.hpp"

namespace alforge {

inline constexpr std::string_view kResultsHeader =
    "dataset,model,ips,strategy,seed,cycle,labeled_size,accuracy,wall_ms";

// Strategy column value for rows produced by the initial-pool sweep.
inline constexpr std::string_view kNoQueryStrategy = "none";

struct ResultRow {
  std::string dataset;
  std::string model;
  std::string ips;
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t cycle = 0;
  std::size_t labeled_size = 0;
  double accuracy = 0.0;
  std::uint64_t wall_ms = 0;
  // Not persisted in results.csv.
  std::size_t probe_iterations = 0;
  std::vector<Index> batch;

  // labeled_size is part of the key so that initial-pool sweeps (cycle 0 at
  // several k0) stay unique.
  auto key() const { return std::tie(dataset, model, ips, strategy, seed, cycle, labeled_size); }
};

struct CellError {
  std::string dataset;
  std::string model;
  std::string ips;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string message;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<CellError> errors;
  std::string config_hash;
  std::string started_at;
  std::string finished_at;

  void append(const ResultsTable& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    errors.insert(errors.end(), other.errors.begin(), other.errors.end());
  }

  void sort() {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
    std::stable_sort(errors.begin(), errors.end(), [](const CellError& a, const CellError& b) {
      return std::tie(a.dataset, a.model, a.ips, a.strategy, a.seed) <
             std::tie(b.dataset, b.model, b.ips, b.strategy, b.seed);
    });
  }

  void check_unique_keys() const {
    std::set<std::tuple<std::string, std::string, std::string, std::string, std::uint64_t, std::size_t, std::size_t>>
        seen;
    for (const auto& r : rows)
      if (!seen.emplace(r.key()).second)
        throw ValidationError("results: duplicate key (" + r.dataset + ", " + r.model + ", " + r.ips + ", " +
                              r.strategy + ", seed " + std::to_string(r.seed) + ", cycle " + std::to_string(r.cycle) +
                              ")");
  }
};

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string to_csv(const ResultsTable& table) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : table.rows) {
    out += r.dataset + ',' + r.model + ',' + r.ips + ',' + r.strategy + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.cycle) + ',' + std::to_string(r.labeled_size) + ',' + format_double(r.accuracy) + ',' +
           std::to_string(r.wall_ms) + '\n';
  }
  return out;
}

// results.csv text with the wall_ms column removed; the remaining bytes are
// deterministic for a fixed configuration.
inline std::string strip_timing(std::string_view csv) {
  std::string out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    const auto line = csv.substr(pos, eol - pos);
    const auto comma = line.rfind(',');
    out += comma == std::string_view::npos ? line : line.substr(0, comma);
    out += '\n';
    pos = eol + 1;
  }
  return out;
}

inline void write_results_csv(const ResultsTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << to_csv(table);
  if (!out) throw IoError("write failed on " + path.string());
}

inline ResultsTable parse_results_csv(std::string_view text, const std::string& name = "results.csv") {
  ResultsTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw ValidationError(name + ": unexpected header");
  std::size_t lineno = 1;
  auto parse_u64 = [&](const std::string& s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ValidationError(name + ":" + std::to_string(lineno) + ": bad integer '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto c = line.find(',', pos);
      f.push_back(line.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    if (f.size() != 9) throw ValidationError(name + ":" + std::to_string(lineno) + ": expected 9 fields");
    ResultRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.ips = f[2];
    r.strategy = f[3];
    r.seed = parse_u64(f[4]);
    r.cycle = parse_u64(f[5]);
    r.labeled_size = parse_u64(f[6]);
    auto res = std::from_chars(f[7].data(), f[7].data() + f[7].size(), r.accuracy);
    if (res.ec != std::errc() || res.ptr != f[7].data() + f[7].size())
      throw ValidationError(name + ":" + std::to_string(lineno) + ": bad accuracy '" + f[7] + "'");
    r.wall_ms = parse_u64(f[8]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

inline ResultsTable read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_results_csv(ss.str(), path.string());
}

}  // namespace alforge
