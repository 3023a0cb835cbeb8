#pragma once

// Fine-grained OOD pattern refinement: flat BIRCH clustering-feature
// absorption over each class cache, and prototype construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <span>
#include <vector>

#include "dynproto/capture.hpp"
#include "dynproto/error.hpp"
#include "dynproto/features.hpp"
#include "dynproto/scoring.hpp"

namespace dynproto {

/// BIRCH summary of a subcluster: member count, linear sum, sum of squared norms.
struct ClusteringFeature {
  std::size_t n = 0;
  std::vector<double> ls;
  double ss = 0.0;

  static ClusteringFeature of(std::span<const double> v) {
    return {1, std::vector<double>(v.begin(), v.end()), dot(v, v)};
  }

  void absorb(std::span<const double> v) {
    if (v.size() != ls.size()) fail(ErrorCode::DimensionMismatch, "absorb dimension");
    for (std::size_t i = 0; i < v.size(); ++i) ls[i] += v[i];
    ss += dot(v, v);
    ++n;
  }

  std::vector<double> centroid() const {
    std::vector<double> c(ls);
    for (auto& x : c) x /= static_cast<double>(n);
    return c;
  }

  double radius() const {
    double sq = 0.0;
    for (double x : ls) sq += x * x;
    const double nn = static_cast<double>(n);
    return std::sqrt(std::max(0.0, ss / nn - sq / (nn * nn)));
  }
};

/// Radius sqrt(ss'/n' - |ls'/n'|^2) the subcluster would have after absorbing v.
inline double cf_radius_after_merge(const ClusteringFeature& cf, std::span<const double> v) {
  if (v.size() != cf.ls.size()) fail(ErrorCode::DimensionMismatch, "merge dimension");
  const double n = static_cast<double>(cf.n + 1);
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = cf.ls[i] + v[i];
    sq += s * s;
  }
  const double ss = cf.ss + dot(v, v);
  return std::sqrt(std::max(0.0, ss / n - sq / (n * n)));
}

struct BirchParams {
  double radius_threshold = 0.5;
  std::size_t max_subclusters = 50;
};

/// Single pass in input order. A feature joins the nearest subcluster (by
/// centroid distance) when the merged radius stays within the threshold,
/// otherwise opens a new subcluster; at the subcluster cap it joins the
/// nearest one unconditionally.
inline std::vector<ClusteringFeature> birch_partition(std::span<const FeatureVector> features,
                                                      const BirchParams& params) {
  if (features.empty()) fail(ErrorCode::EmptyInput, "nothing to cluster");
  if (!(params.radius_threshold > 0.0)) fail(ErrorCode::InvalidConfig, "radius threshold <= 0");
  if (params.max_subclusters == 0) fail(ErrorCode::InvalidConfig, "max subclusters == 0");
  const std::size_t d = features.front().size();

  std::vector<ClusteringFeature> subs;
  std::vector<std::vector<double>> centroids;
  for (const auto& v : features) {
    if (v.size() != d) fail(ErrorCode::DimensionMismatch, "mixed feature dimensions");
    if (subs.empty()) {
      subs.push_back(ClusteringFeature::of(v));
      centroids.push_back(v);
      continue;
    }
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      double dist = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = v[i] - centroids[j][i];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        nearest = j;
      }
    }
    const bool fits = cf_radius_after_merge(subs[nearest], v) <= params.radius_threshold;
    if (fits || subs.size() >= params.max_subclusters) {
      subs[nearest].absorb(v);
      centroids[nearest] = subs[nearest].centroid();
    } else {
      subs.push_back(ClusteringFeature::of(v));
      centroids.push_back(v);
    }
  }
  return subs;
}

struct AggregateStats {
  std::size_t dropped_zero_centroid = 0;
};

/// One unit-norm OOD prototype per subcluster; zero-centroid subclusters are
/// dropped and counted in `stats`.
inline std::vector<Prototype> aggregate_prototypes(std::span<const ClusteringFeature> subclusters,
                                                   int source_class, AggregateStats* stats = nullptr) {
  if (subclusters.empty()) fail(ErrorCode::EmptyInput, "no subclusters");
  std::vector<Prototype> out;
  out.reserve(subclusters.size());
  for (const auto& cf : subclusters) {
    const double norm = l2_norm(cf.ls);
    if (!(norm > 1e-12 * static_cast<double>(cf.n))) {
      if (stats) ++stats->dropped_zero_centroid;
      continue;
    }
    FeatureVector v(cf.ls);
    for (auto& x : v) x /= norm;
    out.push_back(Prototype{std::move(v), PrototypeKind::OOD, source_class, cf.n});
  }
  return out;
}

/// Per-class mean of unit-normalized training features, renormalized.
inline std::vector<Prototype> build_id_prototypes(const std::vector<FeatureMatrix>& per_class) {
  if (per_class.empty()) fail(ErrorCode::MissingClass, "no classes");
  std::vector<Prototype> out;
  out.reserve(per_class.size());
  const std::size_t d = per_class.front().dim();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& rows = per_class[c];
    if (rows.rows() == 0) fail(ErrorCode::MissingClass, "class " + std::to_string(c) + " is empty");
    if (rows.dim() != d) fail(ErrorCode::DimensionMismatch, "class dimension differs");
    std::vector<double> sum(d, 0.0);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      auto u = normalize(rows.row(i));
      for (std::size_t k = 0; k < d; ++k) sum[k] += u[k];
    }
    out.push_back(Prototype{normalize(sum), PrototypeKind::ID, static_cast<int>(c), rows.rows()});
  }
  return out;
}

/// AP keeps one prototype per cache; None (cache-only ablation) turns every
/// cached feature into its own prototype.
enum class ClusterStrategy { BIRCH, AP, None };

struct RebuildStats {
  std::size_t dropped_zero_centroid = 0;
};

/// Prototypes for one class cache, in cache order.
inline std::vector<Prototype> cache_prototypes(const ClassCache& cache, int source_class,
                                               ClusterStrategy strategy, const BirchParams& params,
                                               RebuildStats* stats = nullptr) {
  std::vector<Prototype> out;
  if (cache.empty()) return out;
  std::vector<FeatureVector> feats;
  feats.reserve(cache.size());
  for (const auto& e : cache.entries()) feats.push_back(e.feature);

  AggregateStats agg;
  switch (strategy) {
    case ClusterStrategy::BIRCH: {
      auto subs = birch_partition(feats, params);
      out = aggregate_prototypes(subs, source_class, &agg);
      break;
    }
    case ClusterStrategy::AP: {
      ClusteringFeature all = ClusteringFeature::of(feats.front());
      for (std::size_t i = 1; i < feats.size(); ++i) all.absorb(feats[i]);
      out = aggregate_prototypes(std::span<const ClusteringFeature>(&all, 1), source_class, &agg);
      break;
    }
    case ClusterStrategy::None:
      for (auto& f : feats) {
        out.push_back(Prototype{std::move(f), PrototypeKind::OOD, source_class, 1});
      }
      break;
  }
  if (stats) stats->dropped_zero_centroid += agg.dropped_zero_centroid;
  return out;
}

/// Class order 0..C-1, cache order within a class.
inline std::vector<Prototype> rebuild_ood_prototypes(const CacheBank& bank, ClusterStrategy strategy,
                                                     const BirchParams& params,
                                                     RebuildStats* stats = nullptr) {
  std::vector<Prototype> out;
  for (std::size_t c = 0; c < bank.num_classes(); ++c) {
    auto protos = cache_prototypes(bank[c], static_cast<int>(c), strategy, params, stats);
    std::move(protos.begin(), protos.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace dynproto
