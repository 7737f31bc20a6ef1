#pragma once

#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "karma/core.hpp"
#include "karma/model_io.hpp"  // format_g17 / parse helpers

namespace karma {

struct CsvOptions {
  std::string label_column = "label";
  // Written for missing cells. On read, this token and the empty cell both
  // count as missing.
  std::string missing_token = "?";
  // Rescale the whole dataset so max_i ||P_o x_i|| = 1; the factor is
  // reported in Dataset::scale.
  bool rescale = false;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  double scale = 1.0;
  int dim = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace detail

/// Applies max ||P_o x|| = 1 scaling in place; returns the factor.
inline double rescale_to_unit_observed_norm(std::vector<LabeledExample>& examples) {
  double maxn = 0.0;
  for (const auto& ex : examples) maxn = std::max(maxn, ex.input.observed_norm());
  if (!(maxn > 0)) throw std::runtime_error("rescale: no observed mass in dataset");
  const double c = 1.0 / maxn;
  for (auto& ex : examples) {
    std::vector<double> vals = ex.input.values();
    for (double& v : vals) v *= c;
    ex.input = ObservedVector(ex.input.dim(), ex.input.observed(), std::move(vals));
  }
  return c;
}

inline Dataset load_csv(std::istream& in, const CsvOptions& opt = {}) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
  std::vector<std::string> header = detail::split_csv_line(line);
  int label_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == opt.label_column) {
      if (label_col >= 0) throw std::runtime_error("load_csv: duplicate label column");
      label_col = static_cast<int>(c);
    } else {
      feature_cols.push_back(c);
    }
  }
  if (label_col < 0) throw std::runtime_error("load_csv: missing label column '" + opt.label_column + "'");
  if (feature_cols.empty()) throw std::runtime_error("load_csv: no feature columns");

  Dataset ds;
  ds.dim = static_cast<int>(feature_cols.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    std::vector<int> idx;
    std::vector<double> val;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& cell = cells[feature_cols[k]];
      if (cell.empty() || cell == opt.missing_token) continue;
      val.push_back(parse_double(cell, "load_csv row " + std::to_string(row) + " column " +
                                           header[feature_cols[k]]));
      idx.push_back(static_cast<int>(k));
    }
    const std::string& lc = cells[static_cast<std::size_t>(label_col)];
    if (lc.empty() || lc == opt.missing_token)
      throw std::runtime_error("load_csv: row " + std::to_string(row) + ": missing label");
    double y = parse_double(lc, "load_csv row " + std::to_string(row) + " label");
    ds.examples.emplace_back(ObservedVector(ds.dim, std::move(idx), std::move(val)), y);
  }
  if (opt.rescale && !ds.examples.empty()) ds.scale = rescale_to_unit_observed_norm(ds.examples);
  return ds;
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  return load_csv(in, opt);
}

inline void save_csv(std::ostream& out, std::span<const LabeledExample> examples,
                     const CsvOptions& opt = {}) {
  int d = examples.empty() ? 0 : examples.front().input.dim();
  for (const auto& ex : examples)
    if (ex.input.dim() != d) throw std::invalid_argument("save_csv: dimension mismatch");
  for (int c = 0; c < d; ++c) out << 'x' << c << ',';
  out << opt.label_column << "\n";
  for (const auto& ex : examples) {
    std::size_t k = 0;
    const auto& idx = ex.input.observed();
    for (int c = 0; c < d; ++c) {
      if (k < idx.size() && idx[k] == c) {
        out << format_g17(ex.input.values()[k]);
        ++k;
      } else {
        out << opt.missing_token;
      }
      out << ',';
    }
    out << format_g17(ex.label) << "\n";
  }
}

inline void save_csv(const std::string& path, std::span<const LabeledExample> examples,
                     const CsvOptions& opt = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  save_csv(out, examples, opt);
  if (!out) throw std::runtime_error("save_csv: write failed on " + path);
}

}  // namespace karma
