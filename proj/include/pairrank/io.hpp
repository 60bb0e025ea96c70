#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pairrank/flrmodel.hpp"
#include "pairrank/prefcore.hpp"

namespace pairrank {

/// Shortest round-trip decimal representation (std::to_chars), so every CSV
/// written here parses back to the identical double and identical inputs
/// produce byte-identical files.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_long(long v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("bad number '" + std::string(s) + "' in " + context);
  return v;
}

inline long parse_long(std::string_view s, const std::string& context) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("bad integer '" + std::string(s) + "' in " + context);
  return v;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

// --- features: header row, then one row per item: item_id, f_1 .. f_d -----

inline void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  std::string text = "item_id";
  for (int k = 1; k <= features.dim(); ++k) text += ",f_" + std::to_string(k);
  text += '\n';
  for (int i = 0; i < features.items(); ++i) {
    text += fmt_long(i);
    for (int k = 0; k < features.dim(); ++k) text += ',' + fmt_double(features.F()(k, i));
    text += '\n';
  }
  detail::write_text(path, text);
}

inline FeatureSet read_features(const std::filesystem::path& path) {
  auto lines = detail::read_lines(path);
  if (lines.size() < 2) throw DataError("features file needs a header and at least one item");
  const auto header = detail::split_csv(lines[0]);
  if (header.size() < 2 || header[0] != "item_id")
    throw DataError("features file must start with an item_id header row");
  const int d = static_cast<int>(header.size()) - 1;
  const int n = static_cast<int>(lines.size()) - 1;
  Eigen::MatrixXd f(d, n);
  for (int i = 0; i < n; ++i) {
    auto cells = detail::split_csv(lines[i + 1]);
    if (static_cast<int>(cells.size()) != d + 1)
      throw DataError("features row has wrong column count: " + lines[i + 1]);
    long id = detail::parse_long(cells[0], "features item_id");
    if (id != i) throw DataError("features item ids must be 0..n-1 in order");
    for (int k = 0; k < d; ++k) f(k, i) = detail::parse_double(cells[k + 1], "features");
  }
  return FeatureSet(std::move(f));
}

// --- comparisons: one row per pair: i, j, wins_i, trials -------------------

inline void write_comparisons(const std::filesystem::path& path, const ComparisonDataset& data) {
  std::string text;
  for (std::size_t k = 0; k < data.pairs(); ++k) {
    auto [i, j] = data.support()[k];
    text += fmt_long(i) + ',' + fmt_long(j) + ',' + fmt_long(data.wins()[k]) + ',' +
            fmt_long(data.trials()[k]) + '\n';
  }
  detail::write_text(path, text);
}

inline ComparisonDataset read_comparisons(const std::filesystem::path& path,
                                          FeatureSet features) {
  auto lines = detail::read_lines(path);
  std::vector<std::pair<int, int>> support;
  std::vector<long> wins, trials;
  for (const auto& line : lines) {
    auto cells = detail::split_csv(line);
    if (cells.size() != 4) throw DataError("comparisons row needs i,j,wins_i,trials: " + line);
    support.emplace_back(static_cast<int>(detail::parse_long(cells[0], "comparisons")),
                         static_cast<int>(detail::parse_long(cells[1], "comparisons")));
    wins.push_back(detail::parse_long(cells[2], "comparisons"));
    trials.push_back(detail::parse_long(cells[3], "comparisons"));
  }
  return ComparisonDataset(std::move(features), std::move(support), std::move(wins),
                           std::move(trials));
}

// --- orders: one row per user, item ids in preference order ----------------

inline void write_orders(const std::filesystem::path& path,
                         const std::vector<std::vector<int>>& orders) {
  std::string text;
  for (const auto& order : orders) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k) text += ',';
      text += fmt_long(order[k]);
    }
    text += '\n';
  }
  detail::write_text(path, text);
}

inline std::vector<std::vector<int>> read_orders(const std::filesystem::path& path) {
  auto lines = detail::read_lines(path);
  std::vector<std::vector<int>> orders;
  for (const auto& line : lines) {
    std::vector<int> order;
    for (auto cell : detail::split_csv(line))
      order.push_back(static_cast<int>(detail::parse_long(cell, "orders")));
    orders.push_back(std::move(order));
  }
  return orders;
}

// --- dense matrices (ground-truth preference) -------------------------------

inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string text;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) text += ',';
      text += fmt_double(m(i, j));
    }
    text += '\n';
  }
  detail::write_text(path, text);
}

inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  auto lines = detail::read_lines(path);
  if (lines.empty()) throw DataError("matrix file is empty: " + path.string());
  const auto cols = detail::split_csv(lines[0]).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto cells = detail::split_csv(lines[i]);
    if (cells.size() != cols) throw DataError("ragged matrix row: " + lines[i]);
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::parse_double(cells[j], "matrix");
  }
  return m;
}

inline void write_preference(const std::filesystem::path& path, const PreferenceMatrix& p) {
  write_matrix(path, p.entries());
}

inline PreferenceMatrix read_preference(const std::filesystem::path& path) {
  return PreferenceMatrix::from_matrix(read_matrix(path));
}

// --- rankings: item ids, best first, one per line ---------------------------

inline void write_ranking(const std::filesystem::path& path, const Ranking& sigma) {
  std::string text;
  for (int item : sigma.order()) text += fmt_long(item) + '\n';
  detail::write_text(path, text);
}

inline Ranking read_ranking(const std::filesystem::path& path) {
  auto lines = detail::read_lines(path);
  std::vector<int> order;
  for (const auto& line : lines)
    order.push_back(static_cast<int>(detail::parse_long(line, "ranking")));
  return Ranking::from_order(order);
}

// --- solver traces ----------------------------------------------------------

inline void write_trace(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::string text = "iteration,objective\n";
  for (std::size_t k = 0; k < trace.size(); ++k)
    text += fmt_long(static_cast<long>(k)) + ',' + fmt_double(trace[k]) + '\n';
  detail::write_text(path, text);
}

// --- metrics ----------------------------------------------------------------

inline constexpr const char* kMetricsHeader =
    "algorithm,model,n,d,m,K,seed,dist,solver_iters,wall_ms,error";

struct MetricsRow {
  std::string algorithm;
  int model = 0;
  long n = 0, d = 0, m = 0, K = 0;
  std::string seed;  // an integer, or "mean" for aggregate rows
  double dist = 0.0;
  double solver_iters = 0.0;
  double wall_ms = 0.0;
  std::string error;
};

inline std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string text = std::string(kMetricsHeader) + '\n';
  for (const auto& r : rows) {
    text += r.algorithm + ',' + fmt_long(r.model) + ',' + fmt_long(r.n) + ',' + fmt_long(r.d) +
            ',' + fmt_long(r.m) + ',' + fmt_long(r.K) + ',' + r.seed + ',' + fmt_double(r.dist) +
            ',' + fmt_double(r.solver_iters) + ',' + fmt_double(r.wall_ms) + ',' + r.error + '\n';
  }
  return text;
}

inline std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw DataError("metrics CSV must start with the documented header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_csv(line);
    if (cells.size() != 11) throw DataError("metrics row has wrong column count: " + line);
    MetricsRow r;
    r.algorithm = std::string(cells[0]);
    r.model = static_cast<int>(detail::parse_long(cells[1], "metrics"));
    r.n = detail::parse_long(cells[2], "metrics");
    r.d = detail::parse_long(cells[3], "metrics");
    r.m = detail::parse_long(cells[4], "metrics");
    r.K = detail::parse_long(cells[5], "metrics");
    r.seed = std::string(cells[6]);
    r.dist = detail::parse_double(cells[7], "metrics");
    r.solver_iters = detail::parse_double(cells[8], "metrics");
    r.wall_ms = detail::parse_double(cells[9], "metrics");
    r.error = std::string(cells[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace pairrank
