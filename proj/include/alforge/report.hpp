// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alforge/analysis.hpp"
#include "alforge/error.hpp"

namespace alforge {

struct Analyses {
  std::vector<std::pair<std::string, WinRateMatrix>> win_rates;
  std::vector<TopPerformerTable> top_performers;
  std::vector<DifferencePoint> ips_differences;
  std::vector<CurvePoint> curves;
  std::vector<std::string> input_hashes;
};

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

inline const char* palette(std::size_t i) {
  static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kColors[i % 10];
}

// Blue for 1, red for 0, white at 0.5.
inline std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  int r, g, b;
  if (v >= 0.5) {
    const double t = (v - 0.5) * 2.0;
    r = static_cast<int>(255 - t * (255 - 33));
    g = static_cast<int>(255 - t * (255 - 102));
    b = static_cast<int>(255 - t * (255 - 172));
  } else {
    const double t = (0.5 - v) * 2.0;
    r = static_cast<int>(255 - t * (255 - 178));
    g = static_cast<int>(255 - t * (255 - 24));
    b = static_cast<int>(255 - t * (255 - 43));
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), ascending x
};

inline std::string line_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series) {
  const double W = 720, H = 420, left = 70, right = 170, top = 40, bottom = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"420\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"720\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed6(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
  svg += "<rect x=\"" + fixed6(left) + "\" y=\"" + fixed6(top) + "\" width=\"" + fixed6(pw) + "\" height=\"" + fixed6(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    svg += "<text x=\"" + fixed6(left - 6) + "\" y=\"" + fixed6(py(y) + 4) + "\" text-anchor=\"end\">" + fixed6(y).substr(0, 6) +
           "</text>\n";
  }
  svg += "<text x=\"" + fixed6(left + pw / 2) + "\" y=\"" + fixed6(H - 12) + "\" text-anchor=\"middle\">cycle</text>\n";
  svg += "<text x=\"16\" y=\"" + fixed6(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fixed6(top + ph / 2) + ")\">" + xml_escape(y_label) + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (auto [x, y] : series[i].points) pts += fixed6(px(x)) + "," + fixed6(py(y)) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(palette(i)) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(i) + 8;
    svg += "<line x1=\"" + fixed6(W - right + 12) + "\" y1=\"" + fixed6(ly) + "\" x2=\"" + fixed6(W - right + 32) + "\" y2=\"" +
           fixed6(ly) + "\" stroke=\"" + palette(i) + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed6(W - right + 38) + "\" y=\"" + fixed6(ly + 4) + "\">" + xml_escape(series[i].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string heatmap_svg(const std::string& title, const WinRateMatrix& m) {
  const std::size_t S = m.size();
  const double cell = 56, left = 110, top = 60;
  const double W = left + cell * static_cast<double>(S) + 20, H = top + cell * static_cast<double>(S) + 20;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed6(W) + "\" height=\"" + fixed6(H) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"" + fixed6(W) + "\" height=\"" + fixed6(H) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"10\" y=\"20\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
  for (std::size_t j = 0; j < S; ++j)
    svg += "<text x=\"" + fixed6(left + cell * (static_cast<double>(j) + 0.5)) + "\" y=\"" + fixed6(top - 8) +
           "\" text-anchor=\"middle\">" + xml_escape(m.strategies[j]) + "</text>\n";
  for (std::size_t i = 0; i < S; ++i) {
    const double y = top + cell * static_cast<double>(i);
    svg += "<text x=\"" + fixed6(left - 6) + "\" y=\"" + fixed6(y + cell / 2 + 4) + "\" text-anchor=\"end\">" +
           xml_escape(m.strategies[i]) + "</text>\n";
    for (std::size_t j = 0; j < S; ++j) {
      const double x = left + cell * static_cast<double>(j);
      const auto w = m.win(i, j);
      const std::string fill = w ? heat_color(*w) : "#dddddd";
      svg += "<rect class=\"cell\" x=\"" + fixed6(x) + "\" y=\"" + fixed6(y) + "\" width=\"" + fixed6(cell) + "\" height=\"" +
             fixed6(cell) + "\" fill=\"" + fill + "\" stroke=\"white\"/>\n";
      if (w)
        svg += "<text x=\"" + fixed6(x + cell / 2) + "\" y=\"" + fixed6(y + cell / 2 + 4) + "\" text-anchor=\"middle\">" +
               fixed6(*w).substr(0, 4) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace detail

inline std::string win_rates_csv(const WinRateMatrix& m) {
  std::string out = "strategy,opponent,win_rate,beats,comparisons,ties,skipped_units\n";
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = 0; b < m.size(); ++b) {
      if (a == b) continue;
      const auto w = m.win(a, b);
      out += m.strategies[a] + ',' + m.strategies[b] + ',' + (w ? detail::fixed6(*w) : std::string()) + ',' +
             std::to_string(m.beats[m.at(a, b)]) + ',' + std::to_string(m.counts[m.at(a, b)]) + ',' +
             std::to_string(m.tie_counts[m.at(a, b)]) + ',' + std::to_string(m.skipped_units[m.at(a, b)]) + '\n';
    }
  return out;
}

inline std::string top_performer_csv(const TopPerformerTable& t) {
  std::string out = std::string(to_string(t.group_by)) + ",strategy,share,units_won,decided_units,excluded_ties\n";
  for (const auto& g : t.groups)
    for (const auto& [name, n] : g.units_won) {
      const auto it = g.share.find(name);
      out += g.group + ',' + name + ',' + (it == g.share.end() ? std::string() : detail::fixed6(it->second)) + ',' +
             std::to_string(n) + ',' + std::to_string(g.decided_units) + ',' + std::to_string(g.excluded_ties) + '\n';
    }
  return out;
}

inline std::string difference_csv(const std::vector<DifferencePoint>& pts) {
  std::string out = "dataset,model,strategy,cycle,mean_difference,sd,seeds\n";
  for (const auto& p : pts)
    out += p.dataset + ',' + p.model + ',' + p.strategy + ',' + std::to_string(p.cycle) + ',' + detail::fixed6(p.mean) +
           ',' + detail::fixed6(p.sd) + ',' + std::to_string(p.seeds) + '\n';
  return out;
}

inline std::string curves_csv(const std::vector<CurvePoint>& pts) {
  std::string out = "dataset,model,ips,strategy,cycle,mean_accuracy,sd,seeds\n";
  for (const auto& p : pts)
    out += p.dataset + ',' + p.model + ',' + p.ips + ',' + p.strategy + ',' + std::to_string(p.cycle) + ',' +
           detail::fixed6(p.mean) + ',' + detail::fixed6(p.sd) + ',' + std::to_string(p.seeds) + '\n';
  return out;
}

// Writes CSV tables, SVG plots and index.json into out_dir. Returns the
// artifact file names in the order written.
inline std::vector<std::string> render_report(const Analyses& a, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  nlohmann::json artifacts = nlohmann::json::array();
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& kind, const std::string& text) {
    detail::write_text(out_dir / name, text);
    artifacts.push_back({{"file", name}, {"kind", kind}});
    files.push_back(name);
  };

  for (const auto& [name, m] : a.win_rates) {
    const auto base = "win_rates_" + detail::safe_name(name);
    emit(base + ".csv", "win_rate_table", win_rates_csv(m));
    emit(base + ".svg", "win_rate_heatmap", detail::heatmap_svg("Pairwise win rates: " + name, m));
  }
  for (const auto& t : a.top_performers)
    emit("top_performer_" + std::string(to_string(t.group_by)) + ".csv", "top_performer_table", top_performer_csv(t));

  if (!a.ips_differences.empty()) {
    emit("ips_difference.csv", "ips_difference_table", difference_csv(a.ips_differences));
    std::map<std::pair<std::string, std::string>, std::map<std::string, detail::Series>> plots;
    for (const auto& p : a.ips_differences) {
      auto& s = plots[{p.dataset, p.model}][p.strategy];
      s.name = p.strategy;
      s.points.emplace_back(static_cast<double>(p.cycle), p.mean);
    }
    for (const auto& [dm, by_strategy] : plots) {
      std::vector<detail::Series> series;
      for (const auto& [_, s] : by_strategy) series.push_back(s);
      emit("ips_difference_" + detail::safe_name(dm.first + "_" + dm.second) + ".svg", "ips_difference_plot",
           detail::line_chart_svg("TypiClust IPS minus random IPS: " + dm.first + " / " + dm.second,
                                  "accuracy difference", series));
    }
  }

  if (!a.curves.empty()) {
    emit("accuracy_curves.csv", "accuracy_table", curves_csv(a.curves));
    std::map<std::tuple<std::string, std::string, std::string>, std::map<std::string, detail::Series>> plots;
    for (const auto& p : a.curves) {
      auto& s = plots[{p.dataset, p.model, p.ips}][p.strategy];
      s.name = p.strategy;
      s.points.emplace_back(static_cast<double>(p.cycle), p.mean);
    }
    for (const auto& [key, by_strategy] : plots) {
      const auto& [dataset, model, ips] = key;
      std::vector<detail::Series> series;
      for (const auto& [_, s] : by_strategy) series.push_back(s);
      emit("accuracy_" + detail::safe_name(dataset + "_" + model + "_" + ips) + ".svg", "accuracy_plot",
           detail::line_chart_svg("Accuracy: " + dataset + " / " + model + " (IPS " + ips + ")", "test accuracy",
                                  series));
    }
  }

  const nlohmann::json index{{"artifacts", artifacts}, {"inputs", a.input_hashes}};
  detail::write_text(out_dir / "index.json", index.dump(2) + "\n");
  return files;
}

}  // namespace alforge
