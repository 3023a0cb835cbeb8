#pragma once

// The fixed desk-64 scenarios used by the acceptance suite and the pilot tool.

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dynproto/dataio.hpp"
#include "dynproto/harness.hpp"

namespace dynproto {

inline constexpr double kDeskTau = 0.05;
inline constexpr std::size_t kImbalanceNoise = 8;

inline double desk64_spread() { return kDesk64Spread; }

inline const std::vector<std::string>& desk64_ood_sources() {
  static const std::vector<std::string> names{"near0", "near1", "near2", "far0", "far1"};
  return names;
}

inline std::vector<std::uint64_t> five_seeds() { return {0, 1, 2, 3, 4}; }

/// Shuffled mix of all ID test samples with every OOD cluster, MCM base, defaults.
inline ScenarioSpec gain_scenario(double tau = kDeskTau) {
  ScenarioSpec s;
  s.name = "desk64-gain";
  s.ood_sources = desk64_ood_sources();
  s.seeds = five_seeds();
  s.pipeline.tau = tau;
  s.pipeline.base_detector = BaseDetector::MCM;
  return s;
}

/// ID-dominant ratios keep the full ID pool; OOD-dominant ones keep the full OOD pool.
inline std::vector<std::pair<std::size_t, std::size_t>> imbalance_ratios() {
  return {{500, 1}, {100, 1}, {1, 1}, {1, 50}, {1, 100}};
}

inline ScenarioSpec imbalance_scenario(double tau = kDeskTau) {
  ScenarioSpec s = gain_scenario(tau);
  s.name = "desk64-imbalance";
  return s;
}

/// Three strict OOD phases: near0, then near1, then far0.
inline ScenarioSpec drift_scenario(double tau = kDeskTau) {
  ScenarioSpec s = gain_scenario(tau);
  s.name = "desk64-drift";
  s.ordering = Ordering::Sequence;
  s.ood_sources = {"near0", "near1", "far0"};
  return s;
}

struct HypothesisResult {
  double cutoff = 0.0;
  std::vector<ClassDelta> deltas;
  double median = 0.0;
};

/// Per-class delta over the confusable clusters on a gain-scenario run
/// (seed 0): detected means a base-detector score below theta.
inline HypothesisResult hypothesis_statistic(const DatasetRegistry& reg, double tau = kDeskTau) {
  ScenarioSpec spec = gain_scenario(tau);
  spec.seeds = {0};
  const auto cal = calibrate_for(spec, reg);
  const auto run = run_seed(spec, reg, cal, 0);
  HypothesisResult h;
  h.cutoff = cal.theta;
  h.deltas = stream_similarity_delta(run, run.log.base_scores, h.cutoff, {0, 1, 2});
  if (!h.deltas.empty()) {
    std::vector<double> v;
    for (const auto& d : h.deltas) v.push_back(d.delta);
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    h.median = k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
  }
  return h;
}

}  // namespace dynproto
