#pragma once

// Coarse OOD pattern capturing: per-class bounded caches of suspicious
// features, the cold-start threshold theta and the per-batch adaptive alpha.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "dynproto/error.hpp"
#include "dynproto/features.hpp"

namespace dynproto {

enum class CachePolicy { FIFO, RH };
enum class CacheInit { Empty, Seeded };
enum class Phase { ColdStart, Adaptive };

struct CacheEntry {
  FeatureVector feature;
  std::int64_t seq = 0;
  double admission_score = 0.0;
};

class ClassCache {
 public:
  explicit ClassCache(std::size_t capacity = 1) : capacity_(capacity) {
    if (capacity_ == 0) fail(ErrorCode::InvalidConfig, "cache capacity must be positive");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::deque<CacheEntry>& entries() const noexcept { return entries_; }

  /// Returns true if the cache content changed.
  bool insert(CacheEntry entry, CachePolicy policy) {
    if (policy == CachePolicy::FIFO) {
      entries_.push_back(std::move(entry));
      if (entries_.size() > capacity_) {
        auto oldest = std::min_element(entries_.begin(), entries_.end(),
                                       [](const auto& a, const auto& b) { return a.seq < b.seq; });
        entries_.erase(oldest);
      }
      return true;
    }
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(entry));
      return true;
    }
    // Replace-highest: first entry with the maximal admission score.
    auto highest = entries_.begin();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->admission_score > highest->admission_score) highest = it;
    }
    if (entry.admission_score < highest->admission_score) {
      *highest = std::move(entry);
      return true;
    }
    return false;
  }

 private:
  std::size_t capacity_;
  std::deque<CacheEntry> entries_;
};

class CacheBank {
 public:
  CacheBank() = default;
  CacheBank(std::size_t num_classes, std::size_t capacity, CachePolicy policy)
      : caches_(num_classes, ClassCache(capacity)), policy_(policy) {}

  std::size_t num_classes() const noexcept { return caches_.size(); }
  CachePolicy policy() const noexcept { return policy_; }
  std::size_t capacity() const noexcept { return caches_.empty() ? 0 : caches_[0].capacity(); }

  const ClassCache& operator[](std::size_t c) const { return caches_.at(c); }
  const std::vector<ClassCache>& caches() const noexcept { return caches_; }

  std::size_t total_size() const noexcept {
    std::size_t n = 0;
    for (const auto& c : caches_) n += c.size();
    return n;
  }
  bool all_empty() const noexcept { return total_size() == 0; }

  bool insert(std::size_t cls, std::span<const double> v, double score, std::int64_t seq) {
    if (cls >= caches_.size()) {
      fail(ErrorCode::ClassOutOfRange,
           "class " + std::to_string(cls) + " of " + std::to_string(caches_.size()));
    }
    return caches_[cls].insert(CacheEntry{FeatureVector(v.begin(), v.end()), seq, score}, policy_);
  }

 private:
  std::vector<ClassCache> caches_;
  CachePolicy policy_ = CachePolicy::FIFO;
};

/// Seeded entries get negative sequence numbers (evicted first under FIFO)
/// and an infinite admission score (replaced first under RH).
inline CacheBank init_caches(std::size_t num_classes, std::size_t capacity, CachePolicy policy,
                             CacheInit strategy,
                             const std::vector<std::vector<FeatureVector>>& seeds = {}) {
  CacheBank bank(num_classes, capacity, policy);
  if (strategy == CacheInit::Empty) return bank;
  if (seeds.size() > num_classes) {
    fail(ErrorCode::ClassOutOfRange, "seed lists for more classes than exist");
  }
  std::size_t total = 0;
  for (const auto& s : seeds) total += s.size();
  auto seq = -static_cast<std::int64_t>(total);
  for (std::size_t c = 0; c < seeds.size(); ++c) {
    if (seeds[c].size() > capacity) {
      fail(ErrorCode::SeedOverflow, "class " + std::to_string(c) + " seeded with " +
                                        std::to_string(seeds[c].size()) + " > " +
                                        std::to_string(capacity));
    }
    for (const auto& v : seeds[c]) {
      bank.insert(c, v, std::numeric_limits<double>::infinity(), seq++);
    }
  }
  return bank;
}

struct Thresholds {
  double theta = std::numeric_limits<double>::quiet_NaN();
  double beta = 5.0;
  std::optional<double> alpha;
};

/// Nearest-rank beta-th percentile.
inline double calibrate_theta(std::span<const double> scores, double beta) {
  if (!(beta > 0.0 && beta < 100.0)) fail(ErrorCode::InvalidConfig, "beta must be in (0,100)");
  if (scores.empty()) fail(ErrorCode::EmptyInput, "no calibration scores");
  const auto min_count = static_cast<std::size_t>(std::ceil(100.0 / beta - 1e-9));
  if (scores.size() < min_count) {
    fail(ErrorCode::EmptyInput, "percentile " + std::to_string(beta) + " needs at least " +
                                    std::to_string(min_count) + " scores");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) fail(ErrorCode::InvalidConfig, "non-finite calibration score");
  }
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(beta * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Within-group objective: population variance of {s > alpha} plus that of
/// {s <= alpha}. Returns +inf when either group is empty.
inline double split_variance_objective(std::span<const double> scores, double alpha) {
  double sum_hi = 0.0, sum_lo = 0.0;
  std::size_t n_hi = 0, n_lo = 0;
  for (double s : scores) {
    if (s > alpha) { sum_hi += s; ++n_hi; } else { sum_lo += s; ++n_lo; }
  }
  if (n_hi == 0 || n_lo == 0) return std::numeric_limits<double>::infinity();
  const double mu_hi = sum_hi / static_cast<double>(n_hi);
  const double mu_lo = sum_lo / static_cast<double>(n_lo);
  double v_hi = 0.0, v_lo = 0.0;
  for (double s : scores) {
    if (s > alpha) v_hi += (s - mu_hi) * (s - mu_hi); else v_lo += (s - mu_lo) * (s - mu_lo);
  }
  return v_hi / static_cast<double>(n_hi) + v_lo / static_cast<double>(n_lo);
}

/// The threshold objective with its outer sums taken over the whole batch,
/// i.e. every score's deviation from each group mean. Kept for comparison
/// with split_variance_objective; it does not drive the search.
inline double cross_deviation_objective(std::span<const double> scores, double alpha) {
  double sum_hi = 0.0, sum_lo = 0.0;
  std::size_t n_hi = 0, n_lo = 0;
  for (double s : scores) {
    if (s > alpha) { sum_hi += s; ++n_hi; } else { sum_lo += s; ++n_lo; }
  }
  if (n_hi == 0 || n_lo == 0) return std::numeric_limits<double>::infinity();
  const double mu_hi = sum_hi / static_cast<double>(n_hi);
  const double mu_lo = sum_lo / static_cast<double>(n_lo);
  double d_hi = 0.0, d_lo = 0.0;
  for (double s : scores) {
    d_hi += (s - mu_hi) * (s - mu_hi);
    d_lo += (s - mu_lo) * (s - mu_lo);
  }
  return d_hi / static_cast<double>(n_hi) + d_lo / static_cast<double>(n_lo);
}

struct AlphaSearch {
  double alpha;
  double objective;
};

inline constexpr double kObjectiveTieTolerance = 1e-12;

/// Exact minimizer of split_variance_objective over midpoints of consecutive
/// distinct sorted scores. nullopt when fewer than two distinct scores exist.
inline std::optional<AlphaSearch> search_alpha(std::span<const double> scores) {
  if (scores.empty()) fail(ErrorCode::EmptyInput, "no scores for alpha search");
  for (double s : scores) {
    if (!(s > 0.0 && s < 1.0)) {
      fail(ErrorCode::OutOfRange, "score " + std::to_string(s) + " outside (0,1)");
    }
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  // Centre before accumulating squares to keep the prefix variances accurate.
  const double shift = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sorted[i] - shift;
    s1[i + 1] = s1[i] + x;
    s2[i + 1] = s2[i] + x * x;
  }
  auto pop_var = [](double sum, double sq, double cnt) {
    const double mean = sum / cnt;
    return std::max(0.0, sq / cnt - mean * mean);
  };

  std::optional<AlphaSearch> best;
  for (std::size_t k = 1; k < n; ++k) {
    if (!(sorted[k - 1] < sorted[k])) continue;
    const double lo_n = static_cast<double>(k);
    const double hi_n = static_cast<double>(n - k);
    const double obj = pop_var(s1[k], s2[k], lo_n) +
                       pop_var(s1[n] - s1[k], s2[n] - s2[k], hi_n);
    if (!best || obj < best->objective - kObjectiveTieTolerance) {
      best = AlphaSearch{0.5 * (sorted[k - 1] + sorted[k]), obj};
    }
  }
  return best;
}

inline double adaptive_alpha(std::span<const double> scores, double fallback) {
  auto found = search_alpha(scores);
  return found ? found->alpha : fallback;
}

inline bool should_cache(Phase phase, double base_score, double dyn_score,
                         const Thresholds& thresholds) {
  if (phase == Phase::ColdStart) return base_score < thresholds.theta;
  if (!thresholds.alpha) fail(ErrorCode::MissingAlpha, "adaptive phase without alpha");
  return dyn_score < *thresholds.alpha;
}

}  // namespace dynproto
