#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "karma/core.hpp"
#include "karma/kernel.hpp"

namespace karma {

/// Step-size rule t -> eta_t. The default is eta_t = 1/(rho t), under which
/// the shrinkage factors (1 - eta_s rho) = (s-1)/s telescope and coefficients
/// admit a closed form.
struct StepSchedule {
  std::function<double(std::uint64_t, double)> custom;  // (t, rho) -> eta_t; empty = default

  static StepSchedule inverse_t() { return {}; }
  static StepSchedule with(std::function<double(std::uint64_t, double)> fn) {
    StepSchedule s;
    s.custom = std::move(fn);
    return s;
  }
  bool is_default() const { return !custom; }
  double eta(std::uint64_t t, double rho) const {
    double e = custom ? custom(t, rho) : 1.0 / (rho * static_cast<double>(t));
    if (!(e > 0) || !std::isfinite(e)) throw std::runtime_error("StepSchedule: eta_t must be positive and finite");
    return e;
  }
};

struct KarmaConfig {
  int gamma = 1;
  double rho = 1.0;
  LossSpec loss = LossSpec::hinge();
  StepSchedule schedule{};
  // Gram-based iterate-norm assertion after every step; O(support^2), only
  // sensible on small test runs.
  bool check_iterate_norm = false;

  void validate() const {
    if (gamma < 1) throw std::invalid_argument("KarmaConfig: gamma must be >= 1");
    if (!(rho > 0) || !std::isfinite(rho)) throw std::invalid_argument("KarmaConfig: rho must be positive");
  }
};

struct StepResult {
  double prediction = 0.0;
  double loss = 0.0;
};

struct TrainTrace {
  std::vector<double> predictions;
  std::vector<double> losses;
  std::vector<double> cumulative_loss;
  std::vector<double> iterate_norms;  // filled when check_iterate_norm is set
};

/// Online kernelized regularized subgradient learner over the implicit
/// sequence embedding. The iterate v_t = sum_i alpha_i phi_gamma(x^i) is
/// represented by the stored support examples and their coefficients; the
/// running average vbar = (1/T) sum_{t=1..T} v_t (entering iterates, so
/// v_1 = 0 counts) is maintained alongside.
///
/// Under the default schedule the coefficients are kept in telescoped closed
/// form: alpha_i after round t equals alpha_i^{(i)} * i / t, and the average
/// accumulates through harmonic numbers, O(1) per round per entry. A custom
/// schedule falls back to explicit O(support) rescaling per round.
class KarmaModel {
 public:
  KarmaModel(int dim, KarmaConfig config) : dim_(dim), config_(std::move(config)) {
    if (dim_ < 1) throw std::invalid_argument("KarmaModel: dim must be >= 1");
    config_.validate();
    mode_ = config_.schedule.is_default() ? Mode::lazy : Mode::explicit_;
  }

  /// Rebuild a model from persisted state. The result predicts but cannot be
  /// trained further (the schedule bookkeeping is not stored).
  static KarmaModel from_parts(int dim, int gamma, double rho, LossSpec loss,
                               std::vector<ObservedVector> support, std::vector<double> alpha,
                               std::vector<double> avg_alpha) {
    KarmaConfig cfg;
    cfg.gamma = gamma;
    cfg.rho = rho;
    cfg.loss = loss;
    KarmaModel m(dim, cfg);
    if (support.size() != alpha.size() || support.size() != avg_alpha.size())
      throw std::invalid_argument("from_parts: coefficient count mismatch");
    m.mode_ = Mode::frozen;
    m.rounds_ = support.size();
    for (std::size_t i = 0; i < support.size(); ++i) {
      Entry e;
      e.x = std::move(support[i]);
      e.alpha = alpha[i];
      e.avg = avg_alpha[i];
      m.entries_.push_back(std::move(e));
    }
    return m;
  }

  int dim() const { return dim_; }
  const KarmaConfig& config() const { return config_; }
  std::uint64_t rounds() const { return rounds_; }
  std::size_t support_size() const { return entries_.size(); }
  bool frozen() const { return mode_ == Mode::frozen; }

  const ObservedVector& support(std::size_t i) const { return entries_[i].x; }

  std::vector<ObservedVector> support_vectors() const {
    std::vector<ObservedVector> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.x);
    return out;
  }

  /// Current coefficients (of v_{t+1} after t rounds).
  std::vector<double> alpha() const {
    std::vector<double> out(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) out[i] = current_alpha(entries_[i]);
    return out;
  }

  /// Coefficients of the averaged iterate vbar.
  std::vector<double> avg_alpha() const {
    std::vector<double> out(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) out[i] = average_alpha(entries_[i]);
    return out;
  }

  double predict(const ObservedVector& x, bool use_average = false) const {
    if (x.dim() != dim_) throw std::invalid_argument("predict: dimension mismatch");
    double acc = 0.0;
    for (const auto& e : entries_) {
      double c = use_average ? average_alpha(e) : current_alpha(e);
      if (c != 0.0) acc += c * kernel(e.x, x, config_.gamma);
    }
    return acc;
  }

  /// One round: predict, suffer loss (returned, pre-update), shrink existing
  /// coefficients by (1 - eta_t rho), append the new example with
  /// alpha_t = -eta_t l'(prediction, label). Examples whose coefficient is
  /// exactly 0 (inactive hinge rounds) are not stored.
  StepResult step(const LabeledExample& ex) {
    if (mode_ == Mode::frozen) throw std::runtime_error("step: model was loaded for prediction only");
    if (ex.input.dim() != dim_) throw std::invalid_argument("step: dimension mismatch");
    const std::uint64_t t = rounds_ + 1;
    const double p = predict(ex.input, false);
    if (!std::isfinite(p)) throw std::runtime_error("step: non-finite prediction at round " + std::to_string(t));
    const double lv = loss_value(config_.loss, p, ex.label);
    const double g = loss_subgradient(config_.loss, p, ex.label);
    if (!std::isfinite(g)) throw std::runtime_error("step: non-finite subgradient at round " + std::to_string(t));
    const double eta = config_.schedule.eta(t, config_.rho);
    x_inf_ = std::max(x_inf_, ex.input.observed_inf_norm());

    if (mode_ == Mode::lazy) {
      // H_prev becomes H_{t-1}
      if (rounds_ >= 1) harmonic_prev_ += 1.0 / static_cast<double>(rounds_);
    } else {
      const double shrink = 1.0 - eta * config_.rho;
      for (auto& e : entries_) {
        e.avg_sum += e.alpha;  // coefficient in the entering iterate v_t
        e.alpha *= shrink;
      }
    }

    const double a_t = -eta * g;
    if (a_t != 0.0) {
      Entry e;
      e.x = ex.input;
      if (mode_ == Mode::lazy) {
        e.c = a_t * static_cast<double>(t);
        e.h0 = harmonic_prev_;
      } else {
        e.alpha = a_t;
        e.avg_sum = 0.0;
      }
      entries_.push_back(std::move(e));
    }
    rounds_ = t;

    if (config_.check_iterate_norm) assert_iterate_norm();
    return {p, lv};
  }

  /// ||v_{t+1}|| via alpha^T G alpha over the support. O(support^2).
  double iterate_norm() const { return coef_norm(alpha()); }
  /// ||vbar||.
  double average_norm() const { return coef_norm(avg_alpha()); }

  /// max ||P_o x||_inf over the rounds seen; observable stand-in for X.
  double observed_inf_bound() const { return x_inf_; }

 private:
  enum class Mode { lazy, explicit_, frozen };

  struct Entry {
    ObservedVector x;
    // lazy (default schedule): alpha_i(t) = c / t, avg-sum = c * (H_{t-1} - h0)
    double c = 0.0;
    double h0 = 0.0;
    // explicit (custom schedule) and frozen state
    double alpha = 0.0;
    double avg_sum = 0.0;  // holds avg_alpha directly when frozen
    double avg = 0.0;
  };

  double current_alpha(const Entry& e) const {
    switch (mode_) {
      case Mode::lazy: return rounds_ ? e.c / static_cast<double>(rounds_) : 0.0;
      case Mode::explicit_: return e.alpha;
      case Mode::frozen: return e.alpha;
    }
    return 0.0;
  }

  double average_alpha(const Entry& e) const {
    if (rounds_ == 0) return 0.0;
    switch (mode_) {
      case Mode::lazy: return e.c * (harmonic_prev_ - e.h0) / static_cast<double>(rounds_);
      case Mode::explicit_: return e.avg_sum / static_cast<double>(rounds_);
      case Mode::frozen: return e.avg;
    }
    return 0.0;
  }

  double coef_norm(const std::vector<double>& coef) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      for (std::size_t j = 0; j < entries_.size(); ++j) {
        if (coef[i] != 0.0 && coef[j] != 0.0)
          acc += coef[i] * coef[j] * kernel(entries_[i].x, entries_[j].x, config_.gamma);
      }
    }
    return std::sqrt(std::max(0.0, acc));
  }

  void assert_iterate_norm() {
    // valid for the default schedule with any rho: ||v_t|| <= L X sqrt(Gamma) / min(1, rho)
    if (!config_.schedule.is_default()) return;
    const double root_gamma = std::sqrt(gamma_dims(dim_, config_.gamma).embed_dim);
    const double bound =
        config_.loss.lipschitz * x_inf_ * root_gamma / std::min(1.0, config_.rho) + 1e-6;
    if (iterate_norm() > bound)
      throw std::runtime_error("iterate norm exceeds the schedule bound: " +
                               std::to_string(iterate_norm()) + " > " + std::to_string(bound));
  }

  int dim_;
  KarmaConfig config_;
  Mode mode_ = Mode::lazy;
  std::uint64_t rounds_ = 0;
  double harmonic_prev_ = 0.0;  // H_{rounds_ - 1}
  double x_inf_ = 0.0;
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Driving loops
// ---------------------------------------------------------------------------

inline std::pair<KarmaModel, TrainTrace> train_online(int dim, std::span<const LabeledExample> stream,
                                                      const KarmaConfig& config) {
  KarmaModel model(dim, config);
  TrainTrace trace;
  double cum = 0.0;
  for (const auto& ex : stream) {
    StepResult r = model.step(ex);
    cum += r.loss;
    trace.predictions.push_back(r.prediction);
    trace.losses.push_back(r.loss);
    trace.cumulative_loss.push_back(cum);
    if (config.check_iterate_norm) trace.iterate_norms.push_back(model.iterate_norm());
  }
  return {std::move(model), std::move(trace)};
}

/// Round order for batch training: the sample in order for the first pass,
/// then freshly shuffled passes from the seeded generator.
inline std::vector<std::size_t> batch_order(std::size_t m, std::uint64_t rounds, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("batch_order: empty sample");
  std::vector<std::size_t> order;
  order.reserve(rounds);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  bool first = true;
  while (order.size() < rounds) {
    if (!first) std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < m && order.size() < rounds; ++i) order.push_back(perm[i]);
    first = false;
  }
  return order;
}

/// Batch mode: T rounds of the online update over the sample; the averaged
/// iterate is what the returned model predicts with when use_average is set.
inline KarmaModel train_batch(int dim, std::span<const LabeledExample> sample, std::uint64_t rounds,
                              const KarmaConfig& config, std::uint64_t seed = 0) {
  if (sample.empty()) throw std::invalid_argument("train_batch: empty sample");
  if (rounds == 0) throw std::invalid_argument("train_batch: rounds must be >= 1");
  KarmaModel model(dim, config);
  for (std::size_t idx : batch_order(sample.size(), rounds, seed)) model.step(sample[idx]);
  return model;
}

/// (1/2)||vbar||^2 + (C/m) sum_i loss(vbar . phi(x_i), y_i); the batch
/// objective the averaged iterate approximately minimizes, computable through
/// the Gram matrix for diagnostics.
inline double regularized_objective(const KarmaModel& model, std::span<const LabeledExample> sample,
                                    double c_param) {
  if (sample.empty()) throw std::invalid_argument("regularized_objective: empty sample");
  double norm = model.average_norm();
  double losssum = 0.0;
  for (const auto& ex : sample) losssum += loss_value(model.config().loss, model.predict(ex.input, true), ex.label);
  return 0.5 * norm * norm + c_param * losssum / static_cast<double>(sample.size());
}

}  // namespace karma
