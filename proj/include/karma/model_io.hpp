#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "karma/learner.hpp"

namespace karma {

/// Shortest 17-significant-digit decimal form; round-trips doubles exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": cannot parse number '" + s + "'");
  }
  if (pos != s.size()) throw std::runtime_error(where + ": trailing characters in number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": cannot parse integer '" + s + "'");
  }
  if (pos != s.size()) throw std::runtime_error(where + ": trailing characters in integer '" + s + "'");
  return v;
}

// Versioned text format. One line per support vector:
//   sv <alpha> <avg_alpha> <count> <index>:<value> ...
inline void save_model(std::ostream& out, const KarmaModel& model) {
  out << "karma-model 1\n";
  out << "d " << model.dim() << "\n";
  out << "gamma " << model.config().gamma << "\n";
  out << "rho " << format_g17(model.config().rho) << "\n";
  out << "loss " << loss_kind_name(model.config().loss.kind) << "\n";
  out << "lipschitz " << format_g17(model.config().loss.lipschitz) << "\n";
  out << "support " << model.support_size() << "\n";
  std::vector<double> a = model.alpha();
  std::vector<double> avg = model.avg_alpha();
  for (std::size_t i = 0; i < model.support_size(); ++i) {
    const ObservedVector& x = model.support(i);
    out << "sv " << format_g17(a[i]) << ' ' << format_g17(avg[i]) << ' ' << x.observed_count();
    for (std::size_t k = 0; k < x.observed_count(); ++k)
      out << ' ' << x.observed()[k] << ':' << format_g17(x.values()[k]);
    out << "\n";
  }
}

inline void save_model(const std::string& path, const KarmaModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  save_model(out, model);
  if (!out) throw std::runtime_error("save_model: write failed on " + path);
}

inline KarmaModel load_model(std::istream& in) {
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw std::runtime_error(std::string("load_model: missing ") + what);
    return line;
  };
  auto field = [&](const char* key) {
    next_line(key);
    std::istringstream ss(line);
    std::string k, v;
    ss >> k >> v;
    if (k != key) throw std::runtime_error(std::string("load_model: expected '") + key + "', got '" + k + "'");
    return v;
  };

  next_line("header");
  if (line != "karma-model 1") throw std::runtime_error("load_model: unsupported format: " + line);
  const int d = static_cast<int>(parse_int(field("d"), "load_model d"));
  const int gamma = static_cast<int>(parse_int(field("gamma"), "load_model gamma"));
  const double rho = parse_double(field("rho"), "load_model rho");
  const LossKind kind = loss_kind_from_name(field("loss"));
  const double lipschitz = parse_double(field("lipschitz"), "load_model lipschitz");
  const auto nsup = static_cast<std::size_t>(parse_int(field("support"), "load_model support"));

  std::vector<ObservedVector> support;
  std::vector<double> alpha, avg;
  for (std::size_t i = 0; i < nsup; ++i) {
    next_line("support vector");
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "sv") throw std::runtime_error("load_model: expected 'sv' line, got: " + line);
    std::string sa, sv;
    std::size_t cnt = 0;
    ss >> sa >> sv >> cnt;
    if (!ss) throw std::runtime_error("load_model: malformed sv line: " + line);
    alpha.push_back(parse_double(sa, "load_model alpha"));
    avg.push_back(parse_double(sv, "load_model avg_alpha"));
    std::vector<int> idx;
    std::vector<double> val;
    for (std::size_t k = 0; k < cnt; ++k) {
      std::string pair;
      ss >> pair;
      if (!ss) throw std::runtime_error("load_model: truncated sv line: " + line);
      auto colon = pair.find(':');
      if (colon == std::string::npos) throw std::runtime_error("load_model: bad index:value '" + pair + "'");
      idx.push_back(static_cast<int>(parse_int(pair.substr(0, colon), "load_model index")));
      val.push_back(parse_double(pair.substr(colon + 1), "load_model value"));
    }
    support.emplace_back(d, std::move(idx), std::move(val));
  }
  LossSpec loss{kind, lipschitz};
  return KarmaModel::from_parts(d, gamma, rho, loss, std::move(support), std::move(alpha), std::move(avg));
}

inline KarmaModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  return load_model(in);
}

}  // namespace karma
