#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "karma/core.hpp"

namespace karma {

namespace detail {

// sum_{l=0}^{gamma-1} m^l, the multiplicity factor of the missing-data kernel.
// Evaluated as the explicit geometric sum: no m == 1 branch, no precision loss
// near it, and for huge m^gamma it saturates to +inf together with the closed
// form (m^gamma - 1)/(m - 1).
inline double overlap_factor(std::size_t m, int gamma) {
  double f = 0.0, p = 1.0;
  const double md = static_cast<double>(m);
  for (int l = 0; l < gamma; ++l) {
    f += p;
    p *= md;
  }
  return f;
}

}  // namespace detail

/// The missing-data kernel k_gamma: the inner product of the depth-gamma
/// sequence embeddings, computed in closed form from the overlap of the two
/// observation sets. Empty overlap gives 0 without evaluating the factor.
inline double kernel(const ObservedVector& a, const ObservedVector& b, int gamma) {
  if (a.dim() != b.dim()) throw std::invalid_argument("kernel: dimension mismatch");
  if (gamma < 1) throw std::invalid_argument("kernel: gamma must be >= 1");
  const auto& ia = a.observed();
  const auto& ib = b.observed();
  double s = 0.0;
  std::size_t m = 0;
  std::size_t p = 0, q = 0;
  while (p < ia.size() && q < ib.size()) {
    if (ia[p] == ib[q]) {
      s += a.values()[p] * b.values()[q];
      ++m;
      ++p;
      ++q;
    } else if (ia[p] < ib[q]) {
      ++p;
    } else {
      ++q;
    }
  }
  if (m == 0) return 0.0;
  return detail::overlap_factor(m, gamma) * s;
}

/// Cosine-normalized variant k(a,b)/sqrt(k(a,a) k(b,b)); 0 whenever either
/// self-kernel vanishes. Off by default everywhere: the analysis uses the raw
/// kernel.
inline double normalized_kernel(const ObservedVector& a, const ObservedVector& b, int gamma) {
  double kaa = kernel(a, a, gamma);
  double kbb = kernel(b, b, gamma);
  if (kaa <= 0.0 || kbb <= 0.0) return 0.0;
  return kernel(a, b, gamma) / std::sqrt(kaa * kbb);
}

/// Gram matrix G[i][j] = k_gamma(x_i, x_j). Symmetric by construction (the
/// merge over sorted index sets performs identical arithmetic for (a,b) and
/// (b,a)), PSD up to roundoff since the kernel is an explicit inner product.
inline Eigen::MatrixXd gram(std::span<const ObservedVector> examples, int gamma,
                            bool normalized = false) {
  const std::size_t n = examples.size();
  for (const auto& e : examples) {
    if (!examples.empty() && e.dim() != examples.front().dim())
      throw std::invalid_argument("gram: dimension mismatch");
  }
  Eigen::MatrixXd g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          normalized ? normalized_kernel(examples[i], examples[j], gamma)
                     : kernel(examples[i], examples[j], gamma);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Explicit embedding (test oracle; only constructible at small embed_dim)
// ---------------------------------------------------------------------------

/// Coordinates are indexed by all sequences of length 1..gamma over
/// {0..d-1}, ordered lexicographically by (length, elements). Coordinate s
/// carries x_{s_end} when every element of s is observed, else 0.
struct ExplicitEmbedding {
  GammaDims dims;
  Eigen::VectorXd coords;
};

namespace detail {

inline void check_embed_cap(const GammaDims& dims, double cap, const char* who) {
  if (!(dims.embed_dim <= cap)) {
    throw std::length_error(std::string(who) + ": embedding dimension Gamma = " +
                            std::to_string(dims.embed_dim) + " exceeds cap " + std::to_string(cap));
  }
}

}  // namespace detail

/// Index of sequence s in the (length, elements)-lexicographic order of the
/// embedding coordinates. Valid only when the total dimension fits in size_t.
inline std::size_t sequence_index(std::span<const int> s, int d) {
  if (s.empty()) throw std::invalid_argument("sequence_index: empty sequence");
  std::size_t off = 0, block = 1;
  for (std::size_t l = 1; l < s.size(); ++l) {
    block *= static_cast<std::size_t>(d);
    off += block;
  }
  std::size_t rel = 0;
  for (int e : s) {
    if (e < 0 || e >= d) throw std::invalid_argument("sequence_index: element out of range");
    rel = rel * static_cast<std::size_t>(d) + static_cast<std::size_t>(e);
  }
  return off + rel;
}

/// Inverse of sequence_index.
inline std::vector<int> sequence_at(std::size_t index, int d, int gamma) {
  std::size_t block = 1, off = 0;
  for (int l = 1; l <= gamma; ++l) {
    block *= static_cast<std::size_t>(d);
    if (index < off + block) {
      std::size_t rel = index - off;
      std::vector<int> s(static_cast<std::size_t>(l));
      for (int j = l - 1; j >= 0; --j) {
        s[static_cast<std::size_t>(j)] = static_cast<int>(rel % static_cast<std::size_t>(d));
        rel /= static_cast<std::size_t>(d);
      }
      return s;
    }
    off += block;
  }
  throw std::out_of_range("sequence_at: index beyond embedding dimension");
}

/// Materialize phi_gamma(x_o). Intended for tests and small problems; refuses
/// to build anything with embed_dim above `cap`.
inline ExplicitEmbedding embed(const ObservedVector& x, int gamma, double cap = 1e6) {
  GammaDims dims = gamma_dims(x.dim(), gamma);
  detail::check_embed_cap(dims, cap, "embed");
  const int d = x.dim();
  ExplicitEmbedding out;
  out.dims = dims;
  out.coords = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.embed_dim));

  std::vector<char> obs(static_cast<std::size_t>(d), 0);
  std::vector<double> val(static_cast<std::size_t>(d), 0.0);
  for (std::size_t k = 0; k < x.observed().size(); ++k) {
    obs[static_cast<std::size_t>(x.observed()[k])] = 1;
    val[static_cast<std::size_t>(x.observed()[k])] = x.values()[k];
  }

  std::size_t idx = 0;
  std::vector<int> seq;
  for (int l = 1; l <= gamma; ++l) {
    seq.assign(static_cast<std::size_t>(l), 0);
    bool done = false;
    while (!done) {
      bool all_obs = true;
      for (int e : seq)
        if (!obs[static_cast<std::size_t>(e)]) { all_obs = false; break; }
      if (all_obs) out.coords(static_cast<Eigen::Index>(idx)) = val[static_cast<std::size_t>(seq.back())];
      ++idx;
      // odometer increment (rightmost fastest = lexicographic within length)
      int pos = l - 1;
      while (pos >= 0) {
        if (++seq[static_cast<std::size_t>(pos)] < d) break;
        seq[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      done = pos < 0;
    }
  }
  return out;
}

inline double embedding_inner_product(const ExplicitEmbedding& a, const ExplicitEmbedding& b) {
  if (a.dims.d != b.dims.d || a.dims.gamma != b.dims.gamma)
    throw std::invalid_argument("embedding_inner_product: dimension mismatch");
  return a.coords.dot(b.coords);
}

}  // namespace karma
