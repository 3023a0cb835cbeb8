#pragma once

// Streaming orchestration: per batch, score against the bank as of batch
// start, pick the admission threshold, capture suspicious samples into their
// predicted class cache, rebuild OOD prototypes once, then emit scores
// against the rebuilt bank.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynproto/capture.hpp"
#include "dynproto/error.hpp"
#include "dynproto/features.hpp"
#include "dynproto/parallel.hpp"
#include "dynproto/random.hpp"
#include "dynproto/refine.hpp"
#include "dynproto/scoring.hpp"

namespace dynproto {

enum class BaseDetector { MSP, MCM, Energy };

struct PipelineConfig {
  std::size_t m = 30;
  double beta = 5.0;
  double k_coef = 5.0;
  std::size_t t_cold = 5;
  std::size_t batch_size = 512;
  double tau = 1.0;
  double energy_temperature = 1.0;
  BaseDetector base_detector = BaseDetector::MCM;
  ClusterStrategy cluster = ClusterStrategy::BIRCH;
  BirchParams birch;
  CachePolicy cache_policy = CachePolicy::FIFO;
  CacheInit cache_init = CacheInit::Empty;
  std::size_t noise_per_batch = 0;
  std::uint64_t rng_seed = 0;
  // When false nothing is ever cached and the pipeline reduces to the base detector.
  bool caching = true;
  std::size_t threads = 1;

  ScoreConfig score_config() const { return {tau, k_coef}; }

  void validate() const {
    if (m == 0) fail(ErrorCode::InvalidConfig, "m must be positive");
    if (!(beta > 0.0 && beta < 100.0)) fail(ErrorCode::InvalidConfig, "beta must be in (0,100)");
    if (batch_size == 0) fail(ErrorCode::InvalidConfig, "batch size must be positive");
    if (!(energy_temperature > 0.0)) fail(ErrorCode::InvalidConfig, "energy temperature <= 0");
    if (!(birch.radius_threshold > 0.0) || birch.max_subclusters == 0) {
      fail(ErrorCode::InvalidConfig, "invalid BIRCH parameters");
    }
    score_config().validate();
  }
};

/// Everything `process_batch` needs that does not depend on the test stream.
struct Calibration {
  std::vector<Prototype> id_protos;
  FeatureMatrix anchors;  // MCM anchors; empty means the ID prototypes
  BaseDetector detector = BaseDetector::MCM;
  double beta = 5.0;
  double tau = 1.0;
  double energy_temperature = 1.0;
  double theta = 0.0;
};

struct BatchResult {
  std::vector<double> scores;
  std::vector<double> base_scores;
  std::vector<bool> dyn_used;
  std::vector<std::size_t> predicted;
  std::size_t cached_count = 0;
  std::optional<double> alpha_used;
  std::size_t m_ood = 0;
  Phase phase = Phase::ColdStart;
};

struct PipelineState {
  std::size_t t = 0;
  CacheBank caches;
  PrototypeBank bank;
  Thresholds thresholds;
  std::int64_t seq_counter = 0;
  PipelineConfig config;
  FeatureMatrix anchors;
  bool anchors_are_id = true;
  FeatureMatrix id_matrix;
  FeatureMatrix ood_matrix;
  std::vector<std::vector<Prototype>> class_protos;
  RebuildStats rebuild_stats;
  Rng noise_rng;

  std::size_t num_classes() const noexcept { return bank.num_classes(); }
  std::size_t dim() const noexcept { return bank.dim(); }
};

namespace detail {

inline double base_from_logits(BaseDetector det, std::span<const double> logits, double energy_t) {
  return det == BaseDetector::MSP ? msp_score(logits) : energy_score(logits, energy_t);
}

inline std::vector<double> base_scores(BaseDetector det, const FeatureMatrix& features,
                                       const FeatureMatrix* logits, const FeatureMatrix& anchors,
                                       double tau, double energy_t) {
  std::vector<double> out;
  out.reserve(features.rows());
  if (det == BaseDetector::MCM) {
    auto cos = cosine_block(features, 0, features.rows(), anchors);
    for (Eigen::Index i = 0; i < cos.rows(); ++i) {
      out.push_back(mcm_score_from_cosines({cos.row(i).data(), static_cast<std::size_t>(cos.cols())}, tau));
    }
    return out;
  }
  if (!logits) fail(ErrorCode::DetectorInputMissing, "logit-based detector needs logits");
  if (logits->rows() != features.rows()) {
    fail(ErrorCode::DimensionMismatch, "logit rows differ from feature rows");
  }
  for (std::size_t i = 0; i < logits->rows(); ++i) {
    out.push_back(base_from_logits(det, logits->row(i), energy_t));
  }
  return out;
}

/// Clamps a prototype score into the open interval required by the alpha search.
inline double open_unit(double s) {
  return std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

inline void rebuild_matrix(PipelineState& st) {
  st.bank.ood_protos.clear();
  for (const auto& protos : st.class_protos) {
    st.bank.ood_protos.insert(st.bank.ood_protos.end(), protos.begin(), protos.end());
  }
  st.ood_matrix = st.bank.pack_ood();
}

}  // namespace detail

/// ID prototypes from per-class training features, then theta as the
/// beta-th percentile of base-detector scores on those same training samples.
inline Calibration calibrate(const std::vector<FeatureMatrix>& id_train,
                             const std::vector<FeatureMatrix>* id_train_logits,
                             BaseDetector detector, double beta, double tau,
                             const FeatureMatrix* anchors = nullptr,
                             double energy_temperature = 1.0) {
  Calibration cal;
  cal.id_protos = build_id_prototypes(id_train);
  cal.detector = detector;
  cal.beta = beta;
  cal.tau = tau;
  cal.energy_temperature = energy_temperature;
  if (anchors) {
    cal.anchors = *anchors;
    normalize_rows(cal.anchors);
  }
  if (detector != BaseDetector::MCM) {
    if (!id_train_logits) fail(ErrorCode::DetectorInputMissing, "detector needs training logits");
    if (id_train_logits->size() != id_train.size()) {
      fail(ErrorCode::DimensionMismatch, "logit class count differs from feature class count");
    }
  }
  PrototypeBank bank{cal.id_protos, {}};
  const FeatureMatrix anchor_matrix = cal.anchors.empty() ? bank.pack_id() : cal.anchors;
  std::vector<double> scores;
  for (std::size_t c = 0; c < id_train.size(); ++c) {
    FeatureMatrix feats = id_train[c];
    normalize_rows(feats);
    const FeatureMatrix* lg = id_train_logits ? &(*id_train_logits)[c] : nullptr;
    auto s = detail::base_scores(detector, feats, lg, anchor_matrix, tau, energy_temperature);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  cal.theta = calibrate_theta(scores, beta);
  return cal;
}

inline PipelineState initialize(const Calibration& cal, PipelineConfig config,
                                const std::vector<std::vector<FeatureVector>>& seeds = {}) {
  config.base_detector = cal.detector;
  config.beta = cal.beta;
  config.tau = cal.tau;
  config.energy_temperature = cal.energy_temperature;
  config.validate();
  if (cal.id_protos.empty()) fail(ErrorCode::MissingClass, "calibration has no classes");

  PipelineState st;
  st.config = config;
  st.bank.id_protos = cal.id_protos;
  st.id_matrix = st.bank.pack_id();
  st.anchors_are_id = cal.anchors.empty();
  st.anchors = st.anchors_are_id ? st.id_matrix : cal.anchors;
  if (st.anchors.dim() != st.id_matrix.dim()) {
    fail(ErrorCode::DimensionMismatch, "anchor dimension differs from prototypes");
  }
  st.thresholds.theta = cal.theta;
  st.thresholds.beta = cal.beta;

  std::vector<std::vector<FeatureVector>> unit_seeds = seeds;
  for (auto& cls : unit_seeds) {
    for (auto& v : cls) v = normalize(v);
  }
  st.caches = init_caches(cal.id_protos.size(), config.m, config.cache_policy, config.cache_init,
                          unit_seeds);
  st.class_protos.resize(st.num_classes());
  for (std::size_t c = 0; c < st.num_classes(); ++c) {
    st.class_protos[c] = cache_prototypes(st.caches[c], static_cast<int>(c), config.cluster,
                                          config.birch, &st.rebuild_stats);
  }
  detail::rebuild_matrix(st);
  st.noise_rng = Rng(derive_seed(config.rng_seed, 0x6e6f697365ULL));
  return st;
}

inline PipelineState initialize(const std::vector<FeatureMatrix>& id_train,
                                const std::vector<FeatureMatrix>* id_train_logits,
                                const PipelineConfig& config,
                                const std::vector<std::vector<FeatureVector>>& seeds = {}) {
  config.validate();
  auto cal = calibrate(id_train, id_train_logits, config.base_detector, config.beta, config.tau,
                       nullptr, config.energy_temperature);
  return initialize(cal, config, seeds);
}

/// Unit-normalized isotropic Gaussian feature.
inline FeatureVector noise_feature(Rng& rng, std::size_t dim) {
  FeatureVector v(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (!(n2 > 0.0));
  const double n = std::sqrt(n2);
  for (auto& x : v) x /= n;
  return v;
}

inline BatchResult process_batch(PipelineState& st, const FeatureMatrix& features,
                                 const FeatureMatrix* logits = nullptr) {
  const auto& cfg = st.config;
  const std::size_t n_real = features.rows();
  const std::size_t C = st.num_classes();
  if (n_real > 0 && features.dim() != st.dim()) {
    fail(ErrorCode::DimensionMismatch, "batch dimension " + std::to_string(features.dim()) +
                                           " != " + std::to_string(st.dim()));
  }
  if (cfg.base_detector != BaseDetector::MCM && n_real > 0 && !logits) {
    fail(ErrorCode::DetectorInputMissing, "logit-based detector needs stream logits");
  }
  if (logits && (logits->rows() != n_real || (n_real > 0 && logits->dim() != C))) {
    fail(ErrorCode::DimensionMismatch, "stream logits must be rows x classes");
  }

  // Working set: real samples followed by synthetic noise samples.
  FeatureMatrix x(st.dim());
  x.reserve(n_real + cfg.noise_per_batch);
  for (std::size_t i = 0; i < n_real; ++i) x.push_back(features.row(i));
  normalize_rows(x);
  for (std::size_t k = 0; k < cfg.noise_per_batch; ++k) x.push_back(noise_feature(st.noise_rng, st.dim()));
  const std::size_t n = x.rows();

  const bool had_cache = !st.caches.all_empty();
  const auto score_cfg = cfg.score_config();

  // Phase A: scores against the bank as of batch start.
  std::vector<double> id_cos(n * C);
  std::vector<double> base(n), dyn(n, 1.0);
  std::vector<std::size_t> pred(n);
  constexpr std::size_t kBlock = 64;
  parallel_blocks(n, kBlock, cfg.threads, [&](std::size_t b, std::size_t e) {
    const auto ic = cosine_block(x, b, e, st.id_matrix);
    RowMatrix ac;
    if (cfg.base_detector == BaseDetector::MCM && !st.anchors_are_id) {
      ac = cosine_block(x, b, e, st.anchors);
    }
    RowMatrix oc;
    if (had_cache) oc = cosine_block(x, b, e, st.ood_matrix);
    for (std::size_t i = b; i < e; ++i) {
      const auto r = static_cast<Eigen::Index>(i - b);
      std::span<const double> row_id(ic.row(r).data(), C);
      std::copy(row_id.begin(), row_id.end(), id_cos.begin() + static_cast<std::ptrdiff_t>(i * C));
      const bool real_logits = logits && i < n_real;
      switch (cfg.base_detector) {
        case BaseDetector::MCM:
          base[i] = st.anchors_are_id
                        ? mcm_score_from_cosines(row_id, cfg.tau)
                        : mcm_score_from_cosines({ac.row(r).data(), static_cast<std::size_t>(ac.cols())}, cfg.tau);
          break;
        case BaseDetector::MSP:
        case BaseDetector::Energy:
          if (real_logits) {
            base[i] = detail::base_from_logits(cfg.base_detector, logits->row(i), cfg.energy_temperature);
          } else {
            // Noise has no backbone logits; use prototype similarities instead.
            std::vector<double> z(row_id.begin(), row_id.end());
            for (auto& v : z) v /= cfg.tau;
            base[i] = detail::base_from_logits(cfg.base_detector, z, cfg.energy_temperature);
          }
          break;
      }
      pred[i] = real_logits ? argmax(logits->row(i)) : argmax(row_id);
      if (had_cache) {
        dyn[i] = prototype_score_from_cosines(
            row_id, {oc.row(r).data(), static_cast<std::size_t>(oc.cols())}, score_cfg);
      }
    }
  });

  BatchResult res;
  res.phase = (st.t >= cfg.t_cold && had_cache) ? Phase::Adaptive : Phase::ColdStart;

  // Phase B: adaptive threshold over this batch's prototype scores (noise included).
  if (res.phase == Phase::Adaptive) {
    const double fallback = st.thresholds.alpha.value_or(detail::open_unit(st.thresholds.theta));
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = detail::open_unit(dyn[i]);
    st.thresholds.alpha = adaptive_alpha(s, fallback);
    res.alpha_used = st.thresholds.alpha;
  }

  // Phase D: capture in sample order.
  std::vector<bool> touched(C, false);
  if (cfg.caching) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!should_cache(res.phase, base[i], dyn[i], st.thresholds)) continue;
      ++res.cached_count;
      const double admission = res.phase == Phase::ColdStart ? base[i] : dyn[i];
      if (st.caches.insert(pred[i], x.row(i), admission, st.seq_counter++)) touched[pred[i]] = true;
    }
  }

  // Phase E: rebuild prototypes of the caches that changed.
  bool changed = false;
  for (std::size_t c = 0; c < C; ++c) {
    if (!touched[c]) continue;
    changed = true;
    st.class_protos[c] = cache_prototypes(st.caches[c], static_cast<int>(c), cfg.cluster,
                                          cfg.birch, &st.rebuild_stats);
  }
  if (changed) detail::rebuild_matrix(st);
  res.m_ood = st.bank.num_ood();

  // Phase F: emit.
  res.scores.resize(n_real);
  res.base_scores.assign(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(n_real));
  res.dyn_used.assign(n_real, false);
  res.predicted.assign(pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(n_real));
  if (st.caches.all_empty()) {
    std::copy(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(n_real), res.scores.begin());
  } else if (!changed && had_cache) {
    std::copy(dyn.begin(), dyn.begin() + static_cast<std::ptrdiff_t>(n_real), res.scores.begin());
    res.dyn_used.assign(n_real, true);
  } else {
    res.dyn_used.assign(n_real, true);
    parallel_blocks(n_real, kBlock, cfg.threads, [&](std::size_t b, std::size_t e) {
      const auto oc = cosine_block(x, b, e, st.ood_matrix);
      for (std::size_t i = b; i < e; ++i) {
        const auto r = static_cast<Eigen::Index>(i - b);
        std::span<const double> row_id(id_cos.data() + i * C, C);
        std::span<const double> row_ood(oc.row(r).data(), static_cast<std::size_t>(oc.cols()));
        res.scores[i] = prototype_score_from_cosines(row_id, row_ood, score_cfg);
      }
    });
  }
  ++st.t;
  return res;
}

struct Batch {
  FeatureMatrix features;
  std::optional<FeatureMatrix> logits;
};

struct BatchDiagnostics {
  std::size_t t = 0;
  std::optional<double> alpha;
  std::size_t m_ood = 0;
  std::size_t cached_count = 0;
  std::size_t size = 0;
  Phase phase = Phase::ColdStart;
};

struct StreamLog {
  std::vector<double> scores;
  std::vector<double> base_scores;
  std::vector<bool> dyn_used;
  std::vector<std::size_t> predicted;
  std::vector<BatchDiagnostics> batches;
};

/// Consecutive slices of `batch_size` rows; the last batch may be shorter.
inline std::vector<Batch> split_batches(const FeatureMatrix& features, const FeatureMatrix* logits,
                                        std::size_t batch_size) {
  if (batch_size == 0) fail(ErrorCode::InvalidConfig, "batch size must be positive");
  std::vector<Batch> out;
  for (std::size_t b = 0; b < features.rows(); b += batch_size) {
    const std::size_t e = std::min(features.rows(), b + batch_size);
    Batch batch{FeatureMatrix(features.dim()), std::nullopt};
    batch.features.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) batch.features.push_back(features.row(i));
    if (logits) {
      batch.logits = FeatureMatrix(logits->dim());
      for (std::size_t i = b; i < e; ++i) batch.logits->push_back(logits->row(i));
    }
    out.push_back(std::move(batch));
  }
  return out;
}

inline StreamLog process_stream(PipelineState& st, const std::vector<Batch>& stream) {
  StreamLog log;
  for (const auto& batch : stream) {
    auto r = process_batch(st, batch.features, batch.logits ? &*batch.logits : nullptr);
    log.batches.push_back(
        {st.t - 1, r.alpha_used, r.m_ood, r.cached_count, r.scores.size(), r.phase});
    log.scores.insert(log.scores.end(), r.scores.begin(), r.scores.end());
    log.base_scores.insert(log.base_scores.end(), r.base_scores.begin(), r.base_scores.end());
    log.dyn_used.insert(log.dyn_used.end(), r.dyn_used.begin(), r.dyn_used.end());
    log.predicted.insert(log.predicted.end(), r.predicted.begin(), r.predicted.end());
  }
  return log;
}

}  // namespace dynproto
