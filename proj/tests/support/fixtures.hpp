#pragma once

// Small synthetic geometry shared by the unit tests.

#include <vector>

#include "dynproto/dataio.hpp"
#include "dynproto/features.hpp"
#include "dynproto/random.hpp"

namespace fixture {

inline dynproto::SyntheticSpec small_spec(std::uint64_t seed = 11) {
  dynproto::SyntheticSpec s;
  s.name = "small";
  s.dim = 16;
  s.seed = seed;
  s.id_clusters.assign(4, dynproto::IdClusterSpec{300, 100, 0.08});
  s.ood_clusters.push_back({200, 0.08, 0, 25.0, "near0"});
  s.ood_clusters.push_back({200, 0.08, std::nullopt, 0.0, "far0"});
  return s;
}

struct Stream {
  dynproto::FeatureMatrix features;
  dynproto::FeatureMatrix logits;
  std::vector<bool> is_id;
};

/// Whole test pool in a seeded shuffled order.
inline Stream shuffled_test(const dynproto::SyntheticData& d, std::uint64_t seed) {
  std::vector<std::size_t> order(d.test.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  dynproto::Rng rng(seed);
  rng.shuffle(order);
  Stream s{dynproto::FeatureMatrix(d.dim), dynproto::FeatureMatrix(d.num_classes), {}};
  for (auto i : order) {
    s.features.push_back(d.test.row(i));
    s.logits.push_back(d.test_logits.row(i));
    s.is_id.push_back(d.test_sources[i] == 0);
  }
  return s;
}

inline std::vector<dynproto::FeatureVector> rows_of(const dynproto::FeatureMatrix& m) {
  std::vector<dynproto::FeatureVector> out;
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m.row_copy(i));
  return out;
}

}  // namespace fixture
