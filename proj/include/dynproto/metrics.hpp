#pragma once

// Evaluation: the threshold decision, FPR at a fixed TPR, AUROC, and the
// per-class detected/undetected OOD similarity statistic. ID is the positive
// class and higher scores mean more ID-like.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dynproto/error.hpp"
#include "dynproto/features.hpp"
#include "dynproto/scoring.hpp"

namespace dynproto {

enum class Decision { ID, OOD };

inline Decision decide(double score, double gamma) {
  return score >= gamma ? Decision::ID : Decision::OOD;
}

struct ScoredSample {
  double score = 0.0;
  bool is_id = false;
  std::optional<std::size_t> predicted_class;
};

struct FprAtTpr {
  double fpr = 0.0;
  double gamma = 0.0;
};

namespace detail {

inline void split_scores(std::span<const ScoredSample> samples, std::vector<double>& id,
                         std::vector<double>& ood) {
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) fail(ErrorCode::InsufficientData, "non-finite score");
    (s.is_id ? id : ood).push_back(s.score);
  }
  if (id.empty() || ood.empty()) {
    fail(ErrorCode::InsufficientData, "need at least one ID and one OOD sample");
  }
}

}  // namespace detail

/// gamma is the largest threshold keeping at least `tpr_target` of ID scores
/// at or above it; fpr is the fraction of OOD scores at or above gamma.
inline FprAtTpr fpr_at_tpr(std::span<const ScoredSample> samples, double tpr_target = 0.95) {
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) fail(ErrorCode::InvalidConfig, "tpr in (0,1]");
  std::vector<double> id, ood;
  detail::split_scores(samples, id, ood);
  std::sort(id.begin(), id.end());
  const std::size_t n_id = id.size();
  auto need = static_cast<std::size_t>(std::ceil(tpr_target * static_cast<double>(n_id) - 1e-9));
  need = std::clamp<std::size_t>(need, 1, n_id);
  const double gamma = id[n_id - need];
  const auto above = std::count_if(ood.begin(), ood.end(), [&](double s) { return s >= gamma; });
  return {static_cast<double>(above) / static_cast<double>(ood.size()), gamma};
}

/// Mann-Whitney: P(ID > OOD) + P(tie) / 2, via average ranks.
inline double auroc(std::span<const ScoredSample> samples) {
  std::vector<double> id, ood;
  detail::split_scores(samples, id, ood);
  std::vector<std::pair<double, bool>> all;
  all.reserve(samples.size());
  for (double s : id) all.emplace_back(s, true);
  for (double s : ood) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_id = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    // Ranks i+1 .. j share their average.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) rank_sum_id += avg;
    }
    i = j;
  }
  const double n1 = static_cast<double>(id.size());
  const double n0 = static_cast<double>(ood.size());
  const double u = rank_sum_id - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n0);
}

struct EvalReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  double gamma95 = 0.0;
};

inline EvalReport evaluate(std::span<const ScoredSample> samples) {
  EvalReport r;
  const auto f = fpr_at_tpr(samples, 0.95);
  r.fpr95 = f.fpr;
  r.gamma95 = f.gamma;
  r.auroc = auroc(samples);
  for (const auto& s : samples) (s.is_id ? r.n_id : r.n_ood)++;
  return r;
}

struct ClassGroups {
  FeatureMatrix detected_ood;
  FeatureMatrix undetected_ood;
  FeatureMatrix id;
};

struct ClassDelta {
  std::size_t cls = 0;
  double delta = 0.0;
};

namespace detail {

inline double mean_cross_cosine(const FeatureMatrix& a, const FeatureMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) s += cosine(a.row(i), b.row(j));
  }
  return s / static_cast<double>(a.rows() * b.rows());
}

}  // namespace detail

/// Mean cos(detected, undetected) minus mean cos(detected, ID), per class.
/// Classes missing any of the three groups are skipped.
inline std::vector<ClassDelta> similarity_delta(const std::vector<ClassGroups>& per_class) {
  std::vector<ClassDelta> out;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& g = per_class[c];
    if (g.detected_ood.rows() == 0 || g.undetected_ood.rows() == 0 || g.id.rows() == 0) continue;
    out.push_back({c, detail::mean_cross_cosine(g.detected_ood, g.undetected_ood) -
                          detail::mean_cross_cosine(g.detected_ood, g.id)});
  }
  return out;
}

}  // namespace dynproto
