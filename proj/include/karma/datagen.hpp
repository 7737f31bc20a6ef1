#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "karma/core.hpp"
#include "karma/csv.hpp"
#include "karma/regularity.hpp"
#include "karma/subspace.hpp"

namespace karma {

struct GeneratorConfig {
  int d = 10;
  int rank = 2;
  double lambda0 = 0.2;  // target certified regularity constant
  int n = 100;
  // Mask distribution: per-coordinate keep probability, or a fixed pattern
  // list sampled uniformly when non-empty. The guarantees are worst-case over
  // masks, so this is purely an artifact choice.
  double keep_prob = 0.7;
  std::vector<std::vector<int>> patterns;

  enum class LabelRule { margin_sign, linear_noise };
  LabelRule label_rule = LabelRule::margin_sign;
  double margin = 0.0;       // |w* . x| >= margin enforced by rejection (unit-norm x)
  double noise_sigma = 0.0;  // for linear_noise labels

  std::uint64_t seed = 0;
  std::uint64_t max_attempts_factor = 500;  // work budget: attempts <= factor * n

  void validate() const {
    if (d < 1) throw std::invalid_argument("GeneratorConfig: d must be >= 1");
    if (rank < 1 || rank > d) throw std::invalid_argument("GeneratorConfig: need 1 <= rank <= d");
    if (n < 1) throw std::invalid_argument("GeneratorConfig: n must be >= 1");
    if (!(lambda0 > 0) || lambda0 > 1) throw std::invalid_argument("GeneratorConfig: lambda0 must be in (0,1]");
    if (patterns.empty() && !(keep_prob > 0 && keep_prob <= 1))
      throw std::invalid_argument("GeneratorConfig: keep_prob must be in (0,1]");
    if (margin < 0) throw std::invalid_argument("GeneratorConfig: margin must be >= 0");
  }
};

struct GroundTruth {
  SubspaceSpec subspace;
  Eigen::VectorXd wstar;  // ||w*|| <= 1
  std::vector<Eigen::VectorXd> full_vectors;
  double scale = 1.0;  // factor that was applied to reach max ||P_o x|| = 1
  std::uint64_t seed = 0;
};

struct GeneratedData {
  std::vector<LabeledExample> examples;
  GroundTruth truth;
};

/// Samples a hidden subspace, unit vectors inside it, masks accepted by the
/// regularity check at lambda0, and labels; then rescales the dataset so
/// max_i ||P_{o_i} x_i|| = 1 (a global factor, preserving the linear
/// structure). Deterministic under the seed.
inline GeneratedData generate(const GeneratorConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution keep(cfg.patterns.empty() ? cfg.keep_prob : 0.5);
  std::uniform_int_distribution<std::size_t> pick_pattern(
      0, cfg.patterns.empty() ? 0 : cfg.patterns.size() - 1);

  // hidden subspace; gaussian bases are full rank almost surely
  Eigen::MatrixXd cand(cfg.d, cfg.rank);
  SubspaceSpec subspace(cfg.d, Eigen::MatrixXd::Identity(cfg.d, 1));
  for (int tries = 0; tries < 64; ++tries) {
    for (Eigen::Index i = 0; i < cand.rows(); ++i)
      for (Eigen::Index j = 0; j < cand.cols(); ++j) cand(i, j) = gauss(rng);
    subspace = SubspaceSpec(cfg.d, cand);
    if (subspace.rank() == cfg.rank) break;
    if (tries == 63) throw std::runtime_error("generate: could not sample a rank-" + std::to_string(cfg.rank) + " basis");
  }
  const Eigen::MatrixXd& basis = subspace.basis();

  // comparator direction inside E, unit norm
  Eigen::VectorXd wstar;
  for (int tries = 0;; ++tries) {
    Eigen::VectorXd g(cfg.rank);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
    wstar = basis * g;
    double n = wstar.norm();
    if (n > 1e-9) {
      wstar /= n;
      break;
    }
    if (tries > 64) throw std::runtime_error("generate: degenerate w* draws");
  }

  std::map<std::vector<int>, double> pattern_cache;  // pattern -> lambda (0 = rejected)
  auto pattern_ok = [&](const std::vector<int>& pat) {
    if (pat.empty()) return false;
    auto it = pattern_cache.find(pat);
    if (it == pattern_cache.end()) it = pattern_cache.emplace(pat, pattern_lambda(pat, subspace)).first;
    return it->second >= cfg.lambda0;
  };

  struct Draw {
    std::vector<int> mask;
    Eigen::VectorXd x;
    double signal = 0.0;  // w* . x (unit-norm x)
    double noise = 0.0;
  };
  std::vector<Draw> draws;
  draws.reserve(static_cast<std::size_t>(cfg.n));
  const std::uint64_t budget = cfg.max_attempts_factor * static_cast<std::uint64_t>(cfg.n);
  std::uint64_t attempts = 0;
  while (draws.size() < static_cast<std::size_t>(cfg.n)) {
    if (++attempts > budget)
      throw std::runtime_error(
          "generate: rejection rate too high (budget " + std::to_string(budget) +
          " attempts for n=" + std::to_string(cfg.n) +
          "); lower lambda0, raise keep_prob, or loosen the margin");
    Draw dr;
    if (cfg.patterns.empty()) {
      for (int i = 0; i < cfg.d; ++i)
        if (keep(rng)) dr.mask.push_back(i);
    } else {
      dr.mask = cfg.patterns[pick_pattern(rng)];
    }
    if (!pattern_ok(dr.mask)) continue;
    Eigen::VectorXd z(cfg.rank);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    dr.x = basis * z;
    double xn = dr.x.norm();
    if (xn < 1e-12) continue;
    dr.x /= xn;
    dr.signal = wstar.dot(dr.x);
    if (cfg.label_rule == GeneratorConfig::LabelRule::margin_sign) {
      if (std::abs(dr.signal) < cfg.margin) continue;
    } else {
      dr.noise = gauss(rng);
    }
    draws.push_back(std::move(dr));
  }

  double max_obs_norm = 0.0;
  for (const auto& dr : draws) {
    double s = 0.0;
    for (int i : dr.mask) s += dr.x(i) * dr.x(i);
    max_obs_norm = std::max(max_obs_norm, std::sqrt(s));
  }
  if (!(max_obs_norm > 0)) throw std::runtime_error("generate: no observed mass in any sample");
  const double scale = 1.0 / max_obs_norm;

  GeneratedData out{{}, GroundTruth{subspace, wstar, {}, scale, cfg.seed}};
  out.examples.reserve(draws.size());
  out.truth.full_vectors.reserve(draws.size());
  for (auto& dr : draws) {
    Eigen::VectorXd xs = scale * dr.x;
    std::vector<double> vals;
    vals.reserve(dr.mask.size());
    for (int i : dr.mask) vals.push_back(xs(i));
    double y;
    if (cfg.label_rule == GeneratorConfig::LabelRule::margin_sign) {
      y = dr.signal >= 0 ? 1.0 : -1.0;
    } else {
      y = wstar.dot(xs) + cfg.noise_sigma * dr.noise;
    }
    out.examples.emplace_back(ObservedVector(cfg.d, dr.mask, std::move(vals)), y);
    out.truth.full_vectors.push_back(std::move(xs));
  }

  // regularity holds by construction; re-verify independently
  std::vector<ObservedVector> inputs;
  inputs.reserve(out.examples.size());
  for (const auto& ex : out.examples) inputs.push_back(ex.input);
  RegularityReport rep = check_regularity(inputs, subspace, out.truth.full_vectors);
  if (!rep.kernel_ok || rep.lambda < cfg.lambda0 - 1e-8 || !rep.norm_ok ||
      rep.support_ok != CheckStatus::ok)
    throw std::logic_error("generate: emitted dataset failed its own regularity check");
  return out;
}

// ---------------------------------------------------------------------------
// The rank-2 four-column demo fixture: three observed instance types
//   [1, *, 1, *] -> +1,   [*, -1, *, -1] -> -1,   [1, -1, 1, -1] -> +1,
// values scaled by 1/2 so that ||P_o x|| <= 1. Classification on it is easy
// even though the pattern {0,2} makes the underlying subspace unrecoverable.
// ---------------------------------------------------------------------------

inline std::vector<LabeledExample> matrix_m_fixture(int per_type = 1) {
  if (per_type < 1) throw std::invalid_argument("matrix_m_fixture: per_type must be >= 1");
  const double s = 0.5;
  std::vector<LabeledExample> out;
  out.reserve(3 * static_cast<std::size_t>(per_type));
  for (int k = 0; k < per_type; ++k) {
    out.emplace_back(ObservedVector(4, {0, 2}, {s, s}), 1.0);
    out.emplace_back(ObservedVector(4, {1, 3}, {-s, -s}), -1.0);
    out.emplace_back(ObservedVector(4, {0, 1, 2, 3}, {s, -s, s, -s}), 1.0);
  }
  return out;
}

inline GroundTruth matrix_m_ground_truth(int per_type = 1) {
  if (per_type < 1) throw std::invalid_argument("matrix_m_ground_truth: per_type must be >= 1");
  Eigen::MatrixXd basis(4, 2);
  basis << 1, 0, 0, 1, 1, 0, 0, 1;
  SubspaceSpec subspace(4, basis);
  Eigen::VectorXd wstar(4);
  wstar << 1, 0, 1, 0;
  wstar /= wstar.norm();
  GroundTruth gt{subspace, wstar, {}, 0.5, 0};
  Eigen::VectorXd f1(4), f2(4), f3(4);
  f1 << 0.5, 0.5, 0.5, 0.5;
  f2 = -f1;
  f3 << 0.5, -0.5, 0.5, -0.5;
  for (int k = 0; k < per_type; ++k) {
    gt.full_vectors.push_back(f1);
    gt.full_vectors.push_back(f2);
    gt.full_vectors.push_back(f3);
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Ground-truth companion file (versioned text)
// ---------------------------------------------------------------------------

inline void save_ground_truth(std::ostream& out, const GroundTruth& gt) {
  const int d = gt.subspace.dim();
  const int r = gt.subspace.rank();
  out << "karma-truth 1\n";
  out << "d " << d << "\n";
  out << "rank " << r << "\n";
  out << "scale " << format_g17(gt.scale) << "\n";
  out << "seed " << gt.seed << "\n";
  out << "wstar";
  for (int i = 0; i < d; ++i) out << ' ' << format_g17(gt.wstar(i));
  out << "\n";
  for (int j = 0; j < r; ++j) {
    out << "basis";
    for (int i = 0; i < d; ++i) out << ' ' << format_g17(gt.subspace.basis()(i, j));
    out << "\n";
  }
  out << "full " << gt.full_vectors.size() << "\n";
  for (const auto& x : gt.full_vectors) {
    for (int i = 0; i < d; ++i) out << (i ? " " : "") << format_g17(x(i));
    out << "\n";
  }
}

inline void save_ground_truth(const std::string& path, const GroundTruth& gt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_ground_truth: cannot open " + path);
  save_ground_truth(out, gt);
  if (!out) throw std::runtime_error("save_ground_truth: write failed on " + path);
}

inline GroundTruth load_ground_truth(std::istream& in) {
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw std::runtime_error(std::string("load_ground_truth: missing ") + what);
  };
  next("header");
  if (line != "karma-truth 1") throw std::runtime_error("load_ground_truth: unsupported format: " + line);
  auto kv = [&](const char* key) {
    next(key);
    std::istringstream ss(line);
    std::string k, v;
    ss >> k >> v;
    if (k != key) throw std::runtime_error(std::string("load_ground_truth: expected '") + key + "', got: " + line);
    return v;
  };
  const int d = static_cast<int>(parse_int(kv("d"), "load_ground_truth d"));
  const int r = static_cast<int>(parse_int(kv("rank"), "load_ground_truth rank"));
  const double scale = parse_double(kv("scale"), "load_ground_truth scale");
  const auto seed = static_cast<std::uint64_t>(parse_int(kv("seed"), "load_ground_truth seed"));

  auto read_vec = [&](const char* key, int len) {
    next(key);
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw std::runtime_error(std::string("load_ground_truth: expected '") + key + "' row, got: " + line);
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) {
      std::string cell;
      ss >> cell;
      if (!ss) throw std::runtime_error(std::string("load_ground_truth: truncated ") + key + " row");
      v(i) = parse_double(cell, std::string("load_ground_truth ") + key);
    }
    return v;
  };

  Eigen::VectorXd wstar = read_vec("wstar", d);
  Eigen::MatrixXd basis(d, r);
  for (int j = 0; j < r; ++j) basis.col(j) = read_vec("basis", d);
  const auto nfull = static_cast<std::size_t>(parse_int(kv("full"), "load_ground_truth full"));
  std::vector<Eigen::VectorXd> fulls;
  fulls.reserve(nfull);
  for (std::size_t k = 0; k < nfull; ++k) {
    next("full vector");
    std::istringstream ss(line);
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) {
      std::string cell;
      ss >> cell;
      if (!ss) throw std::runtime_error("load_ground_truth: truncated full vector row");
      v(i) = parse_double(cell, "load_ground_truth full vector");
    }
    fulls.push_back(std::move(v));
  }
  GroundTruth gt{SubspaceSpec(d, basis), std::move(wstar), std::move(fulls), scale, seed};
  if (gt.subspace.rank() != r) throw std::runtime_error("load_ground_truth: basis rank mismatch");
  return gt;
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_ground_truth: cannot open " + path);
  return load_ground_truth(in);
}

}  // namespace karma
