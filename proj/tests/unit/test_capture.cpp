#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dynproto/capture.hpp"
#include "dynproto/random.hpp"
#include "oracles/brute.hpp"

using namespace dynproto;

namespace {

FeatureVector vec(double x) { return {x, 1.0}; }

std::vector<double> firsts(const ClassCache& c) {
  std::vector<double> out;
  for (const auto& e : c.entries()) out.push_back(e.feature[0]);
  return out;
}

// Scores on a 1e-3 lattice offset by 5e-5, so every gap between distinct
// values holds several points of a 1e-4 grid and none sits on one.
std::vector<double> lattice_batch(Rng& rng, std::size_t n) {
  std::vector<double> s;
  const bool bimodal = rng.below(2) == 0;
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    if (bimodal) u = rng.below(2) ? 0.05 + 0.3 * u : 0.6 + 0.35 * u;
    s.push_back(std::floor(u * 999.0) / 1000.0 + 5e-5 + 1e-3);
  }
  return s;
}

}  // namespace

TEST(CalibrateTheta, NearestRank) {
  std::vector<double> s;
  for (int i = 1; i <= 100; ++i) s.push_back(i);
  EXPECT_EQ(calibrate_theta(s, 5.0), 5.0);
  EXPECT_EQ(calibrate_theta(std::vector<double>(40, 0.37), 5.0), 0.37);
  EXPECT_EQ(calibrate_theta(std::vector<double>{0.2, 0.9, 0.4, 0.7}, 50.0), 0.4);
}

TEST(CalibrateTheta, NeedsEnoughScores) {
  try {
    calibrate_theta(std::vector<double>(19, 1.0), 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  EXPECT_NO_THROW(calibrate_theta(std::vector<double>(20, 1.0), 5.0));
  EXPECT_THROW(calibrate_theta(std::vector<double>{}, 50.0), Error);
  EXPECT_THROW(calibrate_theta(std::vector<double>(30, 1.0), 0.0), Error);
}

TEST(CalibrateTheta, MonotoneInBeta) {
  Rng rng(1);
  std::vector<double> s(500);
  for (auto& x : s) x = rng.uniform();
  double prev = -1.0;
  for (double beta = 1.0; beta < 100.0; beta += 2.5) {
    const double t = calibrate_theta(s, beta);
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(AdaptiveAlpha, SpecExamples) {
  EXPECT_EQ(adaptive_alpha(std::vector<double>{0.1, 0.1, 0.9, 0.9}, 0.5), 0.5);
  const auto found = search_alpha(std::vector<double>{0.1, 0.1, 0.9, 0.9});
  ASSERT_TRUE(found);
  EXPECT_NEAR(found->objective, 0.0, 1e-15);
  EXPECT_EQ(adaptive_alpha(std::vector<double>{0.3, 0.3, 0.3}, 0.42), 0.42);
  EXPECT_EQ(adaptive_alpha(std::vector<double>{0.3}, 0.42), 0.42);

  const std::vector<double> five{0.2, 0.4, 0.8, 0.82, 0.85};
  const auto grid = oracle::grid_minimize(five, oracle::within_objective);
  ASSERT_TRUE(grid);
  const double a = adaptive_alpha(five, 0.5);
  EXPECT_NEAR(a, grid->alpha, 1e-4);
  EXPECT_NEAR(a, 0.6, 1e-12);  // split {0.2, 0.4} | {0.8, 0.82, 0.85}
  EXPECT_NEAR(split_variance_objective(five, a), grid->objective, 1e-9);
}

TEST(AdaptiveAlpha, Errors) {
  try {
    search_alpha(std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  for (double bad : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    try {
      adaptive_alpha(std::vector<double>{0.5, bad}, 0.5);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
    }
  }
}

TEST(AdaptiveAlpha, MatchesGridOracle) {
  Rng rng(2024);
  for (int t = 0; t < 200; ++t) {
    const auto s = lattice_batch(rng, 2 + rng.below(63));
    const auto grid = oracle::grid_minimize(s, oracle::within_objective);
    const auto found = search_alpha(s);
    ASSERT_EQ(grid.has_value(), found.has_value());
    if (!found) continue;
    EXPECT_NEAR(found->alpha, grid->alpha, 1e-4 + 1e-12) << "batch " << t;
    EXPECT_NEAR(found->objective, grid->objective, 1e-9) << "batch " << t;
    EXPECT_NEAR(split_variance_objective(s, found->alpha), found->objective, 1e-9);
  }
}

TEST(AdaptiveAlpha, PermutationInvariant) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    auto s = lattice_batch(rng, 3 + rng.below(40));
    const double a = adaptive_alpha(s, 0.5);
    rng.shuffle(s);
    EXPECT_EQ(adaptive_alpha(s, 0.5), a);
  }
}

TEST(AdaptiveAlpha, TwoPointMasses) {
  std::vector<double> s(7, 0.15);
  s.insert(s.end(), 11, 0.85);
  const auto found = search_alpha(s);
  ASSERT_TRUE(found);
  EXPECT_GT(found->alpha, 0.15);
  EXPECT_LT(found->alpha, 0.85);
  EXPECT_NEAR(found->objective, 0.0, 1e-15);
}

TEST(AdaptiveAlpha, TiesBreakToSmallestCandidate) {
  // Symmetric: splitting after 0.1 or before 0.9 gives the same objective.
  const std::vector<double> s{0.1, 0.5, 0.9};
  const auto found = search_alpha(s);
  ASSERT_TRUE(found);
  EXPECT_NEAR(found->alpha, 0.3, 1e-15);
}

TEST(AdaptiveAlpha, LowOutliersNeverRaiseAlpha) {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s;
    for (int i = 0; i < 20; ++i) s.push_back(0.3 + 0.05 * rng.uniform());
    for (int i = 0; i < 20; ++i) s.push_back(0.8 + 0.05 * rng.uniform());
    const double before = adaptive_alpha(s, 0.5);
    for (int k = 0; k < 5; ++k) s.push_back(0.01 + 0.01 * rng.uniform());
    EXPECT_LE(adaptive_alpha(s, 0.5), before);
  }
}

TEST(Objectives, PrintedFormCountsAllSamples) {
  const std::vector<double> s{0.2, 0.4, 0.8};
  // Groups {0.2, 0.4} (mean 0.3) and {0.8}.
  const double hi = (0.36 + 0.16 + 0.0) / 1.0;
  const double lo = (0.01 + 0.01 + 0.25) / 2.0;
  EXPECT_NEAR(cross_deviation_objective(s, 0.6), hi + lo, 1e-12);
  EXPECT_NEAR(cross_deviation_objective(s, 0.6), oracle::printed_objective(s, 0.6), 1e-12);
  EXPECT_NEAR(split_variance_objective(s, 0.6), 0.01, 1e-15);
  EXPECT_TRUE(std::isinf(split_variance_objective(s, 0.9)));
}

TEST(ClassCache, FifoEvictsOldest) {
  ClassCache c(2);
  c.insert({vec(1), 0, 0.5}, CachePolicy::FIFO);
  c.insert({vec(2), 1, 0.1}, CachePolicy::FIFO);
  c.insert({vec(3), 2, 0.9}, CachePolicy::FIFO);
  EXPECT_EQ(firsts(c), (std::vector<double>{2, 3}));
}

TEST(ClassCache, ReplaceHighest) {
  ClassCache c(2);
  c.insert({vec(1), 0, 0.9}, CachePolicy::RH);
  c.insert({vec(2), 1, 0.2}, CachePolicy::RH);
  EXPECT_TRUE(c.insert({vec(3), 2, 0.5}, CachePolicy::RH));
  EXPECT_EQ(firsts(c), (std::vector<double>{3, 2}));

  ClassCache d(2);
  d.insert({vec(1), 0, 0.1}, CachePolicy::RH);
  d.insert({vec(2), 1, 0.2}, CachePolicy::RH);
  EXPECT_FALSE(d.insert({vec(3), 2, 0.5}, CachePolicy::RH));
  EXPECT_FALSE(d.insert({vec(3), 3, 0.2}, CachePolicy::RH));  // equal to max: not lower
  EXPECT_EQ(firsts(d), (std::vector<double>{1, 2}));
}

TEST(ClassCache, CapacityAndOrderProperties) {
  Rng rng(12);
  for (auto policy : {CachePolicy::FIFO, CachePolicy::RH}) {
    ClassCache c(7);
    for (std::int64_t i = 0; i < 300; ++i) {
      c.insert({vec(static_cast<double>(i)), i, rng.uniform()}, policy);
      ASSERT_LE(c.size(), 7u);
      if (policy == CachePolicy::FIFO) {
        for (std::size_t k = 1; k < c.size(); ++k) {
          ASSERT_LT(c.entries()[k - 1].seq, c.entries()[k].seq);
        }
      }
    }
  }
  EXPECT_THROW(ClassCache(0), Error);
}

TEST(CacheBank, ClassOutOfRange) {
  CacheBank bank(3, 2, CachePolicy::FIFO);
  try {
    bank.insert(3, vec(1), 0.1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClassOutOfRange);
  }
}

TEST(InitCaches, Strategies) {
  auto empty = init_caches(4, 3, CachePolicy::FIFO, CacheInit::Empty);
  EXPECT_TRUE(empty.all_empty());
  EXPECT_EQ(empty.num_classes(), 4u);

  std::vector<std::vector<FeatureVector>> seeds{{vec(1), vec(2), vec(3)}};
  auto seeded = init_caches(4, 3, CachePolicy::FIFO, CacheInit::Seeded, seeds);
  EXPECT_EQ(seeded[0].size(), 3u);
  for (std::size_t c = 1; c < 4; ++c) EXPECT_EQ(seeded[c].size(), 0u);
  for (const auto& e : seeded[0].entries()) EXPECT_LT(e.seq, 0);

  // A real insertion evicts a seeded entry first.
  seeded.insert(0, vec(9), 0.2, 0);
  EXPECT_EQ(firsts(seeded[0]), (std::vector<double>{2, 3, 9}));

  seeds[0].push_back(vec(4));
  try {
    init_caches(4, 3, CachePolicy::FIFO, CacheInit::Seeded, seeds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeedOverflow);
  }
}

TEST(ShouldCache, Rules) {
  Thresholds th;
  th.theta = 0.3;
  EXPECT_TRUE(should_cache(Phase::ColdStart, 0.1, 1.0, th));
  EXPECT_FALSE(should_cache(Phase::ColdStart, 0.3, 0.0, th));
  try {
    should_cache(Phase::Adaptive, 0.0, 0.1, th);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingAlpha);
  }
  th.alpha = 0.5;
  EXPECT_FALSE(should_cache(Phase::Adaptive, 0.0, 0.7, th));
  EXPECT_FALSE(should_cache(Phase::Adaptive, 0.0, 0.5, th));
  EXPECT_TRUE(should_cache(Phase::Adaptive, 0.9, 0.49, th));
}
