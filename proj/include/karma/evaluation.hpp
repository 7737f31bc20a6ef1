#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "karma/core.hpp"
#include "karma/datagen.hpp"
#include "karma/learner.hpp"
#include "karma/reference.hpp"
#include "karma/regularity.hpp"

namespace karma {

using Predictor = std::function<double(const ObservedVector&)>;

inline Predictor predictor_from(const KarmaModel& model, bool use_average) {
  return [&model, use_average](const ObservedVector& x) { return model.predict(x, use_average); };
}

struct Metrics {
  double mean_loss = 0.0;
  double zero_one_error = 0.0;  // sign(prediction) vs label; p = 0 counts as an error
  std::size_t n = 0;
};

inline Metrics evaluate(const Predictor& predictor, std::span<const LabeledExample> data,
                        const LossSpec& loss) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty data");
  Metrics m;
  m.n = data.size();
  std::size_t wrong = 0;
  for (const auto& ex : data) {
    double p = predictor(ex.input);
    m.mean_loss += loss_value(loss, p, ex.label);
    if (ex.label * p <= 0.0) ++wrong;
  }
  m.mean_loss /= static_cast<double>(m.n);
  m.zero_one_error = static_cast<double>(wrong) / static_cast<double>(m.n);
  return m;
}

// ---------------------------------------------------------------------------
// Imputation baselines: fill the missing coordinates, then run the same
// regularized subgradient schedule in dense form. Zero-filling reproduces the
// gamma = 1 kernel learner update for update; the mean filler is estimated on
// the training set and stored for test time.
// ---------------------------------------------------------------------------

struct ImputingBaseline {
  Eigen::VectorXd weights;      // last iterate
  Eigen::VectorXd avg_weights;  // average of the entering iterates
  Eigen::VectorXd fill;         // imputation vector (zeros for 0-imputation)
};

inline double predict(const ImputingBaseline& b, const ObservedVector& x, bool use_average = false) {
  if (x.dim() != b.weights.size()) throw std::invalid_argument("predict: dimension mismatch");
  Eigen::VectorXd xd = b.fill;
  for (std::size_t k = 0; k < x.observed_count(); ++k) xd(x.observed()[k]) = x.values()[k];
  return (use_average ? b.avg_weights : b.weights).dot(xd);
}

namespace detail {

inline ImputingBaseline train_imputing(int dim, std::span<const LabeledExample> sample,
                                       std::uint64_t rounds, const KarmaConfig& config,
                                       std::uint64_t seed, bool mean_impute) {
  if (sample.empty()) throw std::invalid_argument("train_imputing: empty sample");
  config.validate();
  ImputingBaseline b;
  b.fill = Eigen::VectorXd::Zero(dim);
  if (mean_impute) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(dim);
    for (const auto& ex : sample) {
      for (std::size_t k = 0; k < ex.input.observed_count(); ++k) {
        sums(ex.input.observed()[k]) += ex.input.values()[k];
        counts(ex.input.observed()[k]) += 1.0;
      }
    }
    // a coordinate never observed in train keeps fill 0
    for (int i = 0; i < dim; ++i)
      if (counts(i) > 0) b.fill(i) = sums(i) / counts(i);
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd usum = Eigen::VectorXd::Zero(dim);
  std::uint64_t t = 0;
  for (std::size_t idx : batch_order(sample.size(), rounds, seed)) {
    const auto& ex = sample[idx];
    ++t;
    Eigen::VectorXd xd = b.fill;
    for (std::size_t k = 0; k < ex.input.observed_count(); ++k)
      xd(ex.input.observed()[k]) = ex.input.values()[k];
    usum += u;  // entering iterate
    double p = u.dot(xd);
    double g = loss_subgradient(config.loss, p, ex.label);
    double eta = config.schedule.eta(t, config.rho);
    u = (1.0 - eta * config.rho) * u - eta * g * xd;
  }
  b.weights = u;
  b.avg_weights = usum / static_cast<double>(t);
  return b;
}

}  // namespace detail

inline ImputingBaseline zero_impute_baseline(int dim, std::span<const LabeledExample> sample,
                                             std::uint64_t rounds, const KarmaConfig& config,
                                             std::uint64_t seed = 0) {
  return detail::train_imputing(dim, sample, rounds, config, seed, false);
}

inline ImputingBaseline mean_impute_baseline(int dim, std::span<const LabeledExample> sample,
                                             std::uint64_t rounds, const KarmaConfig& config,
                                             std::uint64_t seed = 0) {
  return detail::train_imputing(dim, sample, rounds, config, seed, true);
}

// ---------------------------------------------------------------------------
// Holdout selection over gamma
// ---------------------------------------------------------------------------

struct GammaTrial {
  int gamma = 1;
  Metrics holdout;
};

struct GammaSelectionReport {
  int selected_gamma = 1;
  std::vector<GammaTrial> trials;
};

/// Trains one model per gamma in the grid and picks the smallest holdout mean
/// loss; ties break toward smaller gamma. The grid must contain 1, so the
/// winner never does worse on the holdout than the 0-imputation-equivalent
/// depth.
inline GammaSelectionReport holdout_select_gamma(int dim, std::span<const LabeledExample> train,
                                                 std::span<const LabeledExample> holdout,
                                                 std::span<const int> gamma_grid,
                                                 const KarmaConfig& base, std::uint64_t rounds,
                                                 std::uint64_t seed = 0) {
  if (gamma_grid.empty()) throw std::invalid_argument("holdout_select_gamma: empty grid");
  if (std::find(gamma_grid.begin(), gamma_grid.end(), 1) == gamma_grid.end())
    throw std::invalid_argument("holdout_select_gamma: grid must contain gamma = 1");
  if (holdout.empty()) throw std::invalid_argument("holdout_select_gamma: empty holdout");
  std::vector<int> grid(gamma_grid.begin(), gamma_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  GammaSelectionReport rep;
  double best = std::numeric_limits<double>::infinity();
  for (int g : grid) {
    KarmaConfig cfg = base;
    cfg.gamma = g;
    KarmaModel model = train_batch(dim, train, rounds, cfg, seed);
    GammaTrial trial;
    trial.gamma = g;
    trial.holdout = evaluate(predictor_from(model, true), holdout, base.loss);
    if (trial.holdout.mean_loss < best) {
      best = trial.holdout.mean_loss;
      rep.selected_gamma = g;
    }
    rep.trials.push_back(trial);
  }
  return rep;
}

/// Deterministic train/holdout split (shuffles indices with the seed).
inline std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> split_holdout(
    std::span<const LabeledExample> data, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0) || !(holdout_fraction < 1))
    throw std::invalid_argument("split_holdout: fraction must be in (0,1)");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto nh = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(data.size())));
  nh = std::max<std::size_t>(1, std::min(nh, data.size() - 1));
  std::vector<LabeledExample> train, holdout;
  for (std::size_t k = 0; k < idx.size(); ++k)
    (k < nh ? holdout : train).push_back(data[idx[k]]);
  return {std::move(train), std::move(holdout)};
}

// ---------------------------------------------------------------------------
// Regret harness
// ---------------------------------------------------------------------------

struct RegretConfig {
  std::optional<int> gamma;   // default ceil(log(T)/lambda)
  std::optional<double> rho;  // default L X sqrt(Gamma) / sqrt(B T)
  std::optional<double> comparator_norm_bound;  // B >= ||v*||^2; defaulted from the lift
  LossSpec loss = LossSpec::hinge();
  double embed_cap = 1e6;  // above this, B falls back to Gamma ||w||^2
};

struct RegretRecord {
  double algorithm_loss = 0.0;
  double comparator_loss = 0.0;
  double regret = 0.0;
  double bound = 0.0;
  // resolved parameters
  std::uint64_t rounds = 0;
  int gamma = 1;
  double rho = 0.0;
  double lambda = 0.0;
  double x_inf = 0.0;
  double embed_dim = 0.0;
  double comparator_norm_bound = 0.0;
  double lipschitz = 0.0;
  std::vector<double> per_round_algorithm;   // loss increments
  std::vector<double> per_round_comparator;  // loss increments
};

/// Runs the online learner on the stream and compares its cumulative loss
/// against the fixed subspace comparator built from the ground truth
/// (w = P_E w*, Q = P_E). Using the known w* instead of the in-hindsight
/// minimizer over ||w|| <= 1 can only raise the comparator loss, so the
/// reported regret is a lower bound on the quantity the guarantee limits and
/// the bound check stays conservative-valid.
inline RegretRecord regret_harness(std::span<const LabeledExample> stream, const GroundTruth& truth,
                                   const RegretConfig& cfg = {}) {
  RegretRecord rec;
  rec.rounds = stream.size();
  rec.lipschitz = cfg.loss.lipschitz;
  if (stream.empty()) return rec;
  const int d = truth.subspace.dim();
  if (truth.full_vectors.size() != stream.size())
    throw std::invalid_argument("regret_harness: ground truth must carry one full vector per round");

  std::vector<ObservedVector> inputs;
  inputs.reserve(stream.size());
  for (const auto& ex : stream) inputs.push_back(ex.input);
  RegularityReport rep = check_regularity(inputs, truth.subspace, truth.full_vectors);
  if (!(rep.lambda > 0))
    throw std::runtime_error("regret_harness: stream is not regular w.r.t. the ground-truth subspace");
  rec.lambda = rep.lambda;

  double x_inf = 0.0;
  for (const auto& x : truth.full_vectors) x_inf = std::max(x_inf, x.cwiseAbs().maxCoeff());
  rec.x_inf = x_inf;

  const auto T = static_cast<double>(stream.size());
  rec.gamma = cfg.gamma.value_or(
      std::max(1, static_cast<int>(std::ceil(std::log(T) / rec.lambda))));
  GammaDims dims = gamma_dims(d, rec.gamma);
  rec.embed_dim = dims.embed_dim;

  Eigen::VectorXd w = truth.subspace.projection() * truth.wstar;
  if (cfg.comparator_norm_bound) {
    rec.comparator_norm_bound = *cfg.comparator_norm_bound;
  } else if (dims.embed_dim <= cfg.embed_cap) {
    Eigen::MatrixXd complement =
        Eigen::MatrixXd::Identity(d, d) - truth.subspace.projection();
    rec.comparator_norm_bound = lift_to_embedding(w, complement, rec.gamma, cfg.embed_cap).squaredNorm();
  } else {
    rec.comparator_norm_bound = dims.embed_dim * w.squaredNorm();
  }

  const double L = cfg.loss.lipschitz;
  rec.rho = cfg.rho.value_or(L * x_inf * std::sqrt(dims.embed_dim) /
                             std::sqrt(std::max(rec.comparator_norm_bound, 1e-300) * T));

  KarmaConfig kcfg;
  kcfg.gamma = rec.gamma;
  kcfg.rho = rec.rho;
  kcfg.loss = cfg.loss;
  auto [model, trace] = train_online(d, stream, kcfg);
  rec.per_round_algorithm = trace.losses;
  rec.algorithm_loss = trace.cumulative_loss.empty() ? 0.0 : trace.cumulative_loss.back();

  PinvPredictor comparator{w, truth.subspace};
  for (const auto& ex : stream) {
    double lv = loss_value(cfg.loss, predict(comparator, ex.input), ex.label);
    rec.per_round_comparator.push_back(lv);
    rec.comparator_loss += lv;
  }
  rec.regret = rec.algorithm_loss - rec.comparator_loss;
  rec.bound = 2.0 * L * L * x_inf * x_inf * dims.embed_dim * (1.0 + std::log(T)) / rec.rho +
              0.5 * rec.rho * T * rec.comparator_norm_bound +
              std::exp(-rec.lambda * rec.gamma) * L * T / rec.lambda;
  return rec;
}

}  // namespace karma
