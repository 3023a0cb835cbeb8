#pragma once

// Score functions: base detectors (MSP, MCM, Energy), the prototype score and
// class prediction. Every function here is pure.

#include <Eigen/Core>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dynproto/error.hpp"
#include "dynproto/features.hpp"

namespace dynproto {

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch,
         "dot of " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline bool is_unit(std::span<const double> v, double tol = 1e-6) {
  return std::abs(l2_norm(v) - 1.0) <= tol;
}

inline FeatureVector normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) fail(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  FeatureVector out(v.begin(), v.end());
  for (auto& x : out) x /= n;
  return out;
}

inline void normalize_rows(FeatureMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double n = l2_norm(r);
    if (!(n > 0.0)) fail(ErrorCode::ZeroVector, "row " + std::to_string(i) + " is all zeros");
    for (auto& x : r) x /= n;
  }
}

/// Dot product of unit vectors, clamped to [-1, 1].
inline double cosine(std::span<const double> a, std::span<const double> b) {
  assert(is_unit(a) && is_unit(b));
  return std::clamp(dot(a, b), -1.0, 1.0);
}

enum class PrototypeKind { ID, OOD };

struct Prototype {
  FeatureVector vector;
  PrototypeKind kind = PrototypeKind::ID;
  int source_class = 0;
  std::size_t member_count = 1;
};

/// C class prototypes followed by M test-time OOD prototypes.
struct PrototypeBank {
  std::vector<Prototype> id_protos;
  std::vector<Prototype> ood_protos;

  std::size_t num_classes() const noexcept { return id_protos.size(); }
  std::size_t num_ood() const noexcept { return ood_protos.size(); }
  std::size_t dim() const noexcept {
    return id_protos.empty() ? 0 : id_protos.front().vector.size();
  }

  FeatureMatrix pack_id() const { return pack(id_protos); }
  FeatureMatrix pack_ood() const { return pack(ood_protos); }

 private:
  FeatureMatrix pack(const std::vector<Prototype>& protos) const {
    FeatureMatrix m(dim());
    m.reserve(protos.size());
    for (const auto& p : protos) m.push_back(p.vector);
    return m;
  }
};

struct ScoreConfig {
  double tau = 1.0;
  double k_coef = 5.0;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorCode::InvalidConfig, "tau must be > 0");
    if (!(k_coef > 0.0) || !std::isfinite(k_coef)) {
      fail(ErrorCode::InvalidConfig, "K must be > 0");
    }
  }
};

/// A / (A + K*B) with A, B the exponentiated ID and OOD similarity sums.
/// Exponents are shifted by their maximum so tiny temperatures cannot overflow.
inline double prototype_score_from_cosines(std::span<const double> id_cos,
                                           std::span<const double> ood_cos,
                                           const ScoreConfig& cfg) {
  if (id_cos.empty()) fail(ErrorCode::InvalidConfig, "bank has no ID prototypes");
  if (ood_cos.empty()) return 1.0;
  const double inv_tau = 1.0 / cfg.tau;
  double mx = -std::numeric_limits<double>::infinity();
  for (double c : id_cos) mx = std::max(mx, c * inv_tau);
  for (double c : ood_cos) mx = std::max(mx, c * inv_tau);
  double a = 0.0;
  double b = 0.0;
  for (double c : id_cos) a += std::exp(c * inv_tau - mx);
  for (double c : ood_cos) b += std::exp(c * inv_tau - mx);
  return a / (a + cfg.k_coef * b);
}

inline double prototype_score(std::span<const double> v, const PrototypeBank& bank,
                              const ScoreConfig& cfg) {
  cfg.validate();
  if (bank.num_classes() == 0) fail(ErrorCode::InvalidConfig, "bank has no ID prototypes");
  std::vector<double> id_cos;
  std::vector<double> ood_cos;
  id_cos.reserve(bank.num_classes());
  ood_cos.reserve(bank.num_ood());
  for (const auto& p : bank.id_protos) id_cos.push_back(cosine(v, p.vector));
  for (const auto& p : bank.ood_protos) ood_cos.push_back(cosine(v, p.vector));
  return prototype_score_from_cosines(id_cos, ood_cos, cfg);
}

/// Maximum softmax probability.
inline double msp_score(std::span<const double> logits) {
  if (logits.empty()) fail(ErrorCode::EmptyInput, "no logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - mx);
  return 1.0 / denom;
}

/// MCM from precomputed anchor cosines: max softmax of cos / tau.
inline double mcm_score_from_cosines(std::span<const double> cosines, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidConfig, "tau must be > 0");
  if (cosines.empty()) fail(ErrorCode::EmptyInput, "no anchors");
  const double inv_tau = 1.0 / tau;
  double mx = -std::numeric_limits<double>::infinity();
  for (double c : cosines) mx = std::max(mx, c * inv_tau);
  double denom = 0.0;
  for (double c : cosines) denom += std::exp(c * inv_tau - mx);
  return 1.0 / denom;
}

inline double mcm_score(std::span<const double> v, const FeatureMatrix& anchors, double tau) {
  std::vector<double> cosines;
  cosines.reserve(anchors.rows());
  for (std::size_t i = 0; i < anchors.rows(); ++i) cosines.push_back(cosine(v, anchors.row(i)));
  return mcm_score_from_cosines(cosines, tau);
}

/// temperature * logsumexp(z / temperature). Higher means more ID-like.
inline double energy_score(std::span<const double> logits, double temperature = 1.0) {
  if (logits.empty()) fail(ErrorCode::EmptyInput, "no logits");
  if (!(temperature > 0.0)) fail(ErrorCode::InvalidConfig, "temperature must be > 0");
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : logits) mx = std::max(mx, z / temperature);
  double s = 0.0;
  for (double z : logits) s += std::exp(z / temperature - mx);
  return temperature * (mx + std::log(s));
}

/// Index of the maximum; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> xs) {
  if (xs.empty()) fail(ErrorCode::EmptyInput, "argmax of empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] > xs[best]) best = i;
  }
  return best;
}

inline std::size_t predict_class(std::span<const double> v, const PrototypeBank& bank,
                                 std::optional<std::span<const double>> logits = std::nullopt) {
  if (logits) {
    if (logits->size() != bank.num_classes()) {
      fail(ErrorCode::DimensionMismatch, "logit count differs from class count");
    }
    return argmax(*logits);
  }
  std::vector<double> cosines;
  cosines.reserve(bank.num_classes());
  for (const auto& p : bank.id_protos) cosines.push_back(cosine(v, p.vector));
  return argmax(cosines);
}

// ---------------------------------------------------------------------------
// Batched similarity kernel

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// cos(x_i, p_j) for rows [begin, end) of `x` against every row of `protos`.
/// Output row r corresponds to sample begin + r. Entries are clamped to [-1, 1].
inline RowMatrix cosine_block(const FeatureMatrix& x, std::size_t begin, std::size_t end,
                              const FeatureMatrix& protos) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  if (protos.rows() == 0 || n == 0) return RowMatrix(n, static_cast<Eigen::Index>(protos.rows()));
  if (x.dim() != protos.dim()) {
    fail(ErrorCode::DimensionMismatch, "features have dimension " + std::to_string(x.dim()) +
                                           ", prototypes " + std::to_string(protos.dim()));
  }
  const auto d = static_cast<Eigen::Index>(x.dim());
  Eigen::Map<const RowMatrix> xs(x.data().data() + begin * x.dim(), n, d);
  Eigen::Map<const RowMatrix> ps(protos.data().data(), static_cast<Eigen::Index>(protos.rows()), d);
  RowMatrix out = xs * ps.transpose();
  out = out.cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

}  // namespace dynproto
