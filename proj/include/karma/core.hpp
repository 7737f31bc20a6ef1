#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace karma {

/// A d-dimensional real vector of which only the coordinates listed in
/// `observed` carry values. Missingness is structural (an index set), never a
/// sentinel value, so unobserved coordinates simply do not exist in memory.
class ObservedVector {
 public:
  ObservedVector() = default;

  ObservedVector(int dim, std::vector<int> observed, std::vector<double> values)
      : dim_(dim), observed_(std::move(observed)), values_(std::move(values)) {
    if (dim_ < 1) throw std::invalid_argument("ObservedVector: dim must be >= 1");
    if (observed_.size() != values_.size())
      throw std::invalid_argument("ObservedVector: index/value count mismatch");
    int prev = -1;
    for (int i : observed_) {
      if (i <= prev) throw std::invalid_argument("ObservedVector: indices must be strictly increasing");
      if (i >= dim_) throw std::invalid_argument("ObservedVector: index out of range");
      prev = i;
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("ObservedVector: non-finite value");
    }
  }

  /// Fully observed vector.
  static ObservedVector dense(std::vector<double> values) {
    const int d = static_cast<int>(values.size());
    std::vector<int> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return ObservedVector(d, std::move(idx), std::move(values));
  }

  int dim() const { return dim_; }
  const std::vector<int>& observed() const { return observed_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t observed_count() const { return observed_.size(); }
  bool fully_observed() const { return observed_.size() == static_cast<std::size_t>(dim_); }

  /// ||P_o x||.
  double observed_norm() const {
    double s = 0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  /// max |x_i| over observed coordinates; 0 when nothing is observed.
  double observed_inf_norm() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Dense copy with unobserved coordinates set from `fill` (zeros by default).
  std::vector<double> to_dense(const std::vector<double>* fill = nullptr) const {
    std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
    if (fill) {
      if (fill->size() != out.size()) throw std::invalid_argument("to_dense: fill size mismatch");
      out = *fill;
    }
    for (std::size_t k = 0; k < observed_.size(); ++k) out[static_cast<std::size_t>(observed_[k])] = values_[k];
    return out;
  }

 private:
  int dim_ = 1;
  std::vector<int> observed_;
  std::vector<double> values_;
};

struct LabeledExample {
  ObservedVector input;
  double label = 0.0;

  LabeledExample() = default;
  LabeledExample(ObservedVector x, double y) : input(std::move(x)), label(y) {
    if (!std::isfinite(label)) throw std::invalid_argument("LabeledExample: non-finite label");
  }
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind { hinge, logistic, squared };

/// A convex L-Lipschitz scalar loss (Lipschitz in the prediction argument).
/// The squared loss is not globally Lipschitz; callers declare an operating
/// bound L which is used only for step-size and bound arithmetic, predictions
/// are never clipped.
struct LossSpec {
  LossKind kind = LossKind::hinge;
  double lipschitz = 1.0;

  static LossSpec hinge() { return {LossKind::hinge, 1.0}; }
  static LossSpec logistic() { return {LossKind::logistic, 1.0}; }
  static LossSpec squared(double lipschitz_bound) {
    if (!(lipschitz_bound > 0)) throw std::invalid_argument("squared loss needs a positive Lipschitz bound");
    return {LossKind::squared, lipschitz_bound};
  }
};

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::hinge: return "hinge";
    case LossKind::logistic: return "logistic";
    case LossKind::squared: return "squared";
  }
  return "?";
}

inline LossKind loss_kind_from_name(const std::string& name) {
  if (name == "hinge") return LossKind::hinge;
  if (name == "logistic") return LossKind::logistic;
  if (name == "squared") return LossKind::squared;
  throw std::invalid_argument("unknown loss kind: " + name);
}

inline double loss_value(const LossSpec& spec, double prediction, double label) {
  switch (spec.kind) {
    case LossKind::hinge:
      return std::max(0.0, 1.0 - label * prediction);
    case LossKind::logistic: {
      // log(1 + exp(-y p)), overflow-safe
      double z = -label * prediction;
      return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    case LossKind::squared: {
      double r = prediction - label;
      return r * r;
    }
  }
  return 0.0;
}

/// Subgradient of loss_value in the prediction argument. At the hinge kink
/// (y p == 1) returns 0, which keeps updates sparse; any value in the
/// subdifferential would be valid.
inline double loss_subgradient(const LossSpec& spec, double prediction, double label) {
  switch (spec.kind) {
    case LossKind::hinge:
      return label * prediction < 1.0 ? -label : 0.0;
    case LossKind::logistic: {
      double z = label * prediction;
      // -y * sigmoid(-z), computed stably for large |z|
      return -label / (1.0 + std::exp(z));
    }
    case LossKind::squared:
      return 2.0 * (prediction - label);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Embedding dimension bookkeeping
// ---------------------------------------------------------------------------

/// Dimensions of the depth-gamma sequence embedding: embed_dim is
/// sum_{k=1}^{gamma} d^k, kept as a double since it overflows integers
/// quickly; `exact` flags when the value is an exactly represented integer.
struct GammaDims {
  int d = 1;
  int gamma = 1;
  double embed_dim = 1.0;
  bool exact = true;
};

inline GammaDims gamma_dims(int d, int gamma) {
  if (d < 1) throw std::invalid_argument("gamma_dims: d must be >= 1");
  if (gamma < 1) throw std::invalid_argument("gamma_dims: gamma must be >= 1");
  GammaDims out;
  out.d = d;
  out.gamma = gamma;
  double sum = 0.0, term = 1.0;
  unsigned long long isum = 0, iterm = 1;
  bool int_ok = true;
  const unsigned long long kMaxExact = 1ull << 53;
  for (int k = 1; k <= gamma; ++k) {
    term *= d;
    sum += term;
    if (int_ok) {
      if (iterm > kMaxExact / static_cast<unsigned long long>(d)) {
        int_ok = false;
      } else {
        iterm *= static_cast<unsigned long long>(d);
        if (isum > kMaxExact - iterm) int_ok = false;
        else isum += iterm;
      }
    }
  }
  out.embed_dim = int_ok ? static_cast<double>(isum) : sum;
  out.exact = int_ok;
  return out;
}

}  // namespace karma
