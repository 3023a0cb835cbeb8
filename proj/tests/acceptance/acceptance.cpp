// Acceptance suite: one PASS/FAIL line per primary criterion. Exits nonzero
// when any criterion fails.
//
// Pilot numbers behind the end-to-end margins are recorded in docs/pilot.md.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dynproto/capture.hpp"
#include "dynproto/dataio.hpp"
#include "dynproto/harness.hpp"
#include "dynproto/metrics.hpp"
#include "dynproto/random.hpp"
#include "dynproto/refine.hpp"
#include "dynproto/scenarios.hpp"
#include "dynproto/scoring.hpp"
#include "oracles/brute.hpp"
#include "oracles/reference_pipeline.hpp"

using namespace dynproto;
namespace fs = std::filesystem;

namespace {

// Floors and pilot values (docs/pilot.md).
constexpr double kGainAurocFloor = 0.03;
constexpr double kGainFprFloor = 0.05;
constexpr double kBenchLimitMs = 1.0;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) detail << "first failure: " << what << "; ";
      ok = false;
    }
  }
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && secs > limit_s) {
    std::ostringstream w;
    w << "runtime " << secs << " s over limit " << limit_s << " s";
    c.require(false, w.str());
  }
  if (!c.ok) ++failures;
  std::printf("%s [%d] %s: %s(%.2f s)\n", c.ok ? "PASS" : "FAIL", id, name, c.detail.str().c_str(), secs);
  std::fflush(stdout);
}

const DatasetRegistry& desk() {
  static const DatasetRegistry reg = DatasetRegistry::from_synthetic(generate_synthetic(desk64_spec()));
  return reg;
}

FeatureVector random_unit(Rng& rng, std::size_t dim) {
  FeatureVector v(dim);
  for (auto& x : v) x = rng.normal();
  return normalize(v);
}

FeatureVector near(Rng& rng, const FeatureVector& c, double spread) {
  FeatureVector v = c;
  for (auto& x : v) x += spread * rng.normal();
  return normalize(v);
}

bool near_eq(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---------------------------------------------------------------------------

void c1_scoring(Check& c) {
  // Worked examples of the scoring module.
  const auto n = normalize(std::vector<double>{3, 4});
  c.require(near_eq(n[0], 0.6, 1e-9) && near_eq(n[1], 0.8, 1e-9), "normalize [3,4]");
  c.require(normalize(std::vector<double>{1, 0, 0}) == FeatureVector{1, 0, 0}, "normalize unit");
  bool threw = false;
  try {
    normalize(std::vector<double>{0, 0});
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::ZeroVector;
  }
  c.require(threw, "normalize zero");
  const FeatureVector u{0.6, 0.8}, w{0.8, 0.6};
  c.require(near_eq(cosine(u, u), 1.0, 1e-9), "cos(u,u)");
  c.require(near_eq(cosine(FeatureVector{1, 0}, FeatureVector{0, 1}), 0.0, 1e-9), "cos orthogonal");
  c.require(near_eq(cosine(u, w), 0.96, 1e-9), "cos 0.96");

  const Prototype id0{{1, 0}, PrototypeKind::ID, 0, 1};
  c.require(prototype_score(u, PrototypeBank{{id0}, {}}, {1.0, 5.0}) == 1.0, "S with M=0");
  const PrototypeBank sym{{id0}, {{{1, 0}, PrototypeKind::OOD, 0, 1}}};
  c.require(near_eq(prototype_score(u, sym, {1.0, 1.0}), 0.5, 1e-9), "S symmetric K=1");
  c.require(near_eq(prototype_score(u, sym, {1.0, 5.0}), 1.0 / 6.0, 1e-9), "S symmetric K=5");
  const std::vector<double> ic{0.8}, oc{0.2};
  const long double s4 = std::exp(0.8L) / (std::exp(0.8L) + 5.0L * std::exp(0.2L));
  c.require(near_eq(prototype_score_from_cosines(ic, oc, {1.0, 5.0}), static_cast<double>(s4), 1e-9), "S 0.2671");

  c.require(near_eq(msp_score(std::vector<double>{2, 0}), std::exp(2.0) / (std::exp(2.0) + 1.0), 1e-9), "msp [2,0]");
  c.require(near_eq(msp_score(std::vector<double>{3, 3, 3, 3}), 0.25, 1e-9), "msp uniform");
  c.require(msp_score(std::vector<double>{-4.0}) == 1.0, "msp single");
  const FeatureMatrix one_anchor = FeatureMatrix::from_rows({{1, 0}});
  c.require(mcm_score(u, one_anchor, 1.0) == 1.0, "mcm one anchor");
  const double r = std::sqrt(0.5);
  c.require(near_eq(mcm_score(FeatureVector{1, 0}, FeatureMatrix::from_rows({{r, r}, {r, -r}}), 1.0), 0.5, 1e-9),
            "mcm equidistant");
  c.require(near_eq(mcm_score_from_cosines(std::vector<double>{0.9, 0.1}, 1.0),
                    std::exp(0.9) / (std::exp(0.9) + std::exp(0.1)), 1e-9), "mcm 0.69");
  c.require(energy_score(std::vector<double>{0.0}, 1.0) == 0.0, "energy [0]");
  c.require(near_eq(energy_score(std::vector<double>{-2.5}, 1.0), -2.5, 1e-9), "energy [x]");
  c.require(near_eq(energy_score(std::vector<double>{1, 1}, 1.0), 1.0 + std::log(2.0), 1e-9), "energy [1,1]");

  PrototypeBank five;
  for (int k = 0; k < 8; ++k) {
    FeatureVector e(8, 0.0);
    e[static_cast<std::size_t>(k)] = 1.0;
    five.id_protos.push_back({e, PrototypeKind::ID, k, 1});
  }
  c.require(predict_class(five.id_protos[3].vector, five) == 3, "predict self");
  const std::vector<double> lg{0, 5, 0, 0, 0, 0, 0, 0};
  c.require(predict_class(five.id_protos[0].vector, five, std::span<const double>(lg)) == 1, "predict logits");
  std::vector<double> tie(8, 0.0);
  tie[2] = tie[7] = 1.0;
  c.require(predict_class(five.id_protos[0].vector, five, std::span<const double>(tie)) == 2, "predict tie");

  // K-monotonicity and shift invariance on random draws.
  Rng rng(1);
  std::size_t mono = 0;
  double shift_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t dim = 2 + rng.below(30);
    PrototypeBank bank;
    const std::size_t C = 1 + rng.below(12), M = 1 + rng.below(40);
    for (std::size_t i = 0; i < C; ++i) bank.id_protos.push_back({random_unit(rng, dim), PrototypeKind::ID, 0, 1});
    for (std::size_t i = 0; i < M; ++i) bank.ood_protos.push_back({random_unit(rng, dim), PrototypeKind::OOD, 0, 1});
    const auto v = random_unit(rng, dim);
    const double tau = 0.05 + rng.uniform();
    const double k1 = 0.1 + 5.0 * rng.uniform();
    const double k2 = k1 + 0.1 + 5.0 * rng.uniform();
    if (prototype_score(v, bank, {tau, k1}) > prototype_score(v, bank, {tau, k2})) ++mono;

    std::vector<double> idc, odc;
    std::vector<long double> a, b;
    for (const auto& p : bank.id_protos) idc.push_back(cosine(v, p.vector));
    for (const auto& p : bank.ood_protos) odc.push_back(cosine(v, p.vector));
    long double A = 0.0L, B = 0.0L;
    for (double x : idc) A += std::exp(static_cast<long double>(x) / tau);
    for (double x : odc) B += std::exp(static_cast<long double>(x) / tau);
    const double direct = static_cast<double>(A / (A + static_cast<long double>(k1) * B));
    shift_err = std::max(shift_err, std::fabs(prototype_score_from_cosines(idc, odc, {tau, k1}) - direct));
  }
  c.require(mono == 1000, "K monotonicity");
  c.require(shift_err <= 1e-12, "shift invariance");
  c.detail << "examples ok, K-monotone " << mono << "/1000, max shift error " << fmt("%.2e", shift_err) << " ";
}

// Scores on a 1e-3 lattice offset by 5e-5: no grid point coincides with a score.
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

void c2_otsu(Check& c) {
  Rng rng(2024);
  std::size_t compared = 0, printed_agree = 0;
  double worst_alpha = 0.0, worst_obj = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto s = lattice_batch(rng, 2 + rng.below(63));
    const auto grid = oracle::grid_minimize(s, oracle::within_objective);
    const auto found = search_alpha(s);
    c.require(grid.has_value() == found.has_value(), "existence agrees");
    if (!found || !grid) continue;
    ++compared;
    worst_alpha = std::max(worst_alpha, std::fabs(found->alpha - grid->alpha));
    worst_obj = std::max(worst_obj, std::fabs(found->objective - grid->objective));
    const auto printed = oracle::grid_minimize(s, oracle::printed_objective);
    if (printed && std::fabs(printed->alpha - grid->alpha) <= 1e-4) ++printed_agree;
  }
  c.require(worst_alpha <= 1e-4 + 1e-12, "alpha within one grid step");
  c.require(worst_obj <= 1e-9, "objective within 1e-9");
  c.detail << compared << " batches, max |d alpha| " << fmt("%.2e", worst_alpha) << ", max |d obj| "
           << fmt("%.2e", worst_obj) << "; printed form picks the same split on " << printed_agree << "/" << compared
           << " ";
}

void c3_metrics(Check& c) {
  Rng rng(31);
  std::size_t ties = 0;
  for (int t = 0; t < 100; ++t) {
    const int levels = t % 3 == 0 ? 0 : (t % 3 == 1 ? 5 : 40);
    if (levels) ++ties;
    const std::size_t n = 2 + rng.below(199);
    std::vector<ScoredSample> xs;
    std::vector<oracle::Labeled> lab;
    for (std::size_t i = 0; i < n; ++i) {
      double s = rng.uniform();
      if (levels > 0) s = std::floor(s * levels) / levels;
      const bool id = i == 0 || (i != 1 && rng.below(2) == 0);
      xs.push_back({s, id, std::nullopt});
      lab.push_back({s, id});
    }
    c.require(auroc(xs) == oracle::auroc_pairs(lab), "auroc exact");
    const auto f = fpr_at_tpr(xs);
    const auto g = oracle::fpr_scan(lab, 0.95);
    c.require(f.fpr == g.fpr && f.gamma == g.gamma, "fpr exact");
  }
  c.detail << "100 datasets (" << ties << " tie-heavy) exact ";
}

void c4_birch(Check& c) {
  Rng rng(404);
  std::size_t below_dmin = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t dim = 4 + rng.below(28);
    const std::size_t n = 1 + rng.below(30);
    std::vector<FeatureVector> centres;
    for (std::size_t k = 0; k < 1 + rng.below(4); ++k) centres.push_back(random_unit(rng, dim));
    std::vector<FeatureVector> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(near(rng, centres[rng.below(centres.size())], 0.1));
    const BirchParams p{0.05 + 0.5 * rng.uniform(), 50};

    const auto subs = birch_partition(xs, p);
    std::size_t count = 0;
    std::vector<double> ls(dim, 0.0), want(dim, 0.0);
    double ss = 0.0, want_ss = 0.0;
    for (const auto& cf : subs) {
      count += cf.n;
      ss += cf.ss;
      for (std::size_t i = 0; i < dim; ++i) ls[i] += cf.ls[i];
    }
    for (const auto& x : xs) {
      want_ss += dot(x, x);
      for (std::size_t i = 0; i < dim; ++i) want[i] += x[i];
    }
    c.require(count == n, "count conservation");
    for (std::size_t i = 0; i < dim; ++i) c.require(near_eq(ls[i], want[i], 1e-12), "LS conservation");
    c.require(near_eq(ss, want_ss, 1e-12), "SS conservation");

    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < dim; ++k) d += (xs[i][k] - xs[j][k]) * (xs[i][k] - xs[j][k]);
        d = std::sqrt(d);
        dmax = std::max(dmax, d);
        if (d > 0.0) dmin = std::min(dmin, d);
      }
    }
    if (n > 1) {
      c.require(birch_partition(xs, {dmax, 50}).size() == 1, "T >= diameter gives one cluster");
      // A pair at distance d has radius d/2, so singletons need T < dmin/2.
      c.require(birch_partition(xs, {0.49 * dmin, 50}).size() == n, "T < dmin/2 gives singletons");
      if (birch_partition(xs, {0.99 * dmin, 50}).size() == n) ++below_dmin;
    }
  }

  // Two groups at chord 1.2 with spread <= 0.05, T = 0.3.
  const double half = std::asin(0.6);
  std::vector<FeatureVector> xs;
  std::vector<int> group;
  Rng g(5);
  for (int i = 0; i < 40; ++i) {
    const int k = i % 2;
    const double a = (k ? half : -half) + 0.02 * (g.uniform() - 0.5);
    const double z = 0.02 * (g.uniform() - 0.5);
    xs.push_back(normalize(FeatureVector{std::cos(a), std::sin(a), z}));
    group.push_back(k);
  }
  const auto subs = birch_partition(xs, {0.3, 50});
  c.require(subs.size() == 2, "two-group count");
  if (subs.size() == 2) {
    for (std::size_t s = 0; s < 2; ++s) c.require(subs[s].n == 20, "two-group membership");
    const auto c0 = subs[0].centroid();
    c.require((c0[1] < 0) == (group[0] == 0), "two-group centroid side");
  }
  c.detail << "100 caches conserve n/LS/SS; 1 cluster at T=diameter; N singletons at T=0.49*dmin "
           << "(at T=0.99*dmin only " << below_dmin << "/100, see ledger); two-group split exact ";
}

void c5_equivalence(Check& c) {
  ScenarioSpec spec = gain_scenario();
  spec.pipeline.batch_size = 512;
  const auto cal = calibrate_for(spec, desk());
  const auto run = run_seed(spec, desk(), cal, 7);

  std::vector<oracle::Vec> rows, protos;
  for (std::size_t i = 0; i < run.stream.features.rows(); ++i) rows.push_back(run.stream.features.row_copy(i));
  for (const auto& p : cal.id_protos) protos.push_back(p.vector);
  oracle::Config oc;
  oc.m = spec.pipeline.m;
  oc.k = spec.pipeline.k_coef;
  oc.tau = spec.pipeline.tau;
  oc.t_cold = spec.pipeline.t_cold;
  oc.batch = spec.pipeline.batch_size;
  oc.birch_t = spec.pipeline.birch.radius_threshold;
  oc.birch_cap = spec.pipeline.birch.max_subclusters;
  std::vector<oracle::Vec> logits;
  for (std::size_t i = 0; i < run.stream.logits->rows(); ++i) logits.push_back(run.stream.logits->row_copy(i));
  const auto expect = oracle::run(rows, protos, cal.theta, oc, &logits);
  c.require(expect.size() == run.log.scores.size(), "length");
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(expect.size(), run.log.scores.size()); ++i) {
    worst = std::max(worst, std::fabs(expect[i] - run.log.scores[i]));
  }
  c.require(worst <= 1e-9, "matches reference");

  auto off = spec;
  off.pipeline.caching = false;
  const auto base = run_seed(off, desk(), cal, 7);
  double worst_off = 0.0;
  for (std::size_t i = 0; i < base.log.scores.size(); ++i) {
    worst_off = std::max(worst_off, std::fabs(base.log.scores[i] - base.log.base_scores[i]));
  }
  c.require(worst_off <= 1e-12, "caching off equals base");
  c.detail << expect.size() << " samples, max |dyn - reference| " << fmt("%.2e", worst)
           << ", caching off max |dyn - base| " << fmt("%.2e", worst_off) << " ";
}

void c6_gain(Check& c) {
  const auto r = run_scenario(gain_scenario(), desk());
  double min_auc = std::numeric_limits<double>::infinity(), min_fpr = min_auc;
  for (const auto& s : r.per_seed) {
    const double da = s.average.auroc - s.base_average.auroc;
    const double df = s.base_average.fpr95 - s.average.fpr95;
    min_auc = std::min(min_auc, da);
    min_fpr = std::min(min_fpr, df);
    c.require(da >= kGainAurocFloor, "seed " + std::to_string(s.seed) + " AUROC gain");
    c.require(df >= kGainFprFloor, "seed " + std::to_string(s.seed) + " FPR95 reduction");
  }
  c.require(r.per_seed.size() == 5, "five seeds");
  c.detail << "5 seeds, base AUROC " << fmt("%.4f", r.base_mean_average.auroc) << " -> "
           << fmt("%.4f", r.mean_average.auroc) << ", FPR95 " << fmt("%.4f", r.base_mean_average.fpr95) << " -> "
           << fmt("%.4f", r.mean_average.fpr95) << "; min gain AUROC " << fmt("%+.4f", min_auc) << " (floor +0.03), "
           << "min FPR95 drop " << fmt("%.4f", min_fpr) << " (floor 0.05) ";
}

void c7_imbalance(Check& c) {
  const auto ratios = imbalance_ratios();
  const auto cells = run_imbalance(imbalance_scenario(), ratios, {0, kImbalanceNoise}, desk());
  auto cell = [&](std::pair<std::size_t, std::size_t> ratio, std::size_t noise) -> const ImbalanceCell& {
    for (const auto& x : cells) {
      if (x.ratio == ratio && x.noise_per_batch == noise) return x;
    }
    fail(ErrorCode::MissingClass, "imbalance cell missing");
  };
  const auto& dom_clean = cell(ratios.front(), 0).report;
  const auto& dom_noise = cell(ratios.front(), kImbalanceNoise).report;
  c.require(dom_noise.mean_overall.fpr95 <= dom_clean.mean_overall.fpr95, "noise helps at 500:1");
  c.detail << "500:1 FPR95 noise " << fmt("%.4f", dom_noise.mean_overall.fpr95) << " <= clean "
           << fmt("%.4f", dom_clean.mean_overall.fpr95) << "; ";
  for (const auto& ratio : ratios) {
    if (ratio.first >= ratio.second) continue;
    for (std::size_t noise : {std::size_t{0}, kImbalanceNoise}) {
      const auto& rep = cell(ratio, noise).report;
      c.require(rep.mean_overall.fpr95 <= rep.base_mean_overall.fpr95,
                std::to_string(ratio.first) + ":" + std::to_string(ratio.second) + " beats base");
      c.detail << ratio.first << ":" << ratio.second << " noise " << noise << " " << fmt("%.4f", rep.mean_overall.fpr95)
               << " <= base " << fmt("%.4f", rep.base_mean_overall.fpr95) << "; ";
    }
  }
}

void c8_drift(Check& c) {
  double fpr[2];
  int i = 0;
  for (auto policy : {CachePolicy::FIFO, CachePolicy::RH}) {
    auto s = drift_scenario();
    s.pipeline.cache_policy = policy;
    const auto r = run_scenario(s, desk());
    c.require(r.per_seed.size() == 5, "five seeds");
    fpr[i++] = r.mean_average.fpr95;
  }
  c.require(fpr[0] <= fpr[1], "FIFO <= RH");
  c.detail << "mean FPR95 FIFO " << fmt("%.4f", fpr[0]) << " <= RH " << fmt("%.4f", fpr[1]) << " (margin "
           << fmt("%.4f", fpr[1] - fpr[0]) << ") ";
}

void c9_hypothesis(Check& c) {
  const auto h = hypothesis_statistic(desk());
  c.require(!h.deltas.empty(), "some class has all three groups");
  c.require(h.median > 0.0, "median delta > 0");
  c.detail << h.deltas.size() << " classes, median delta " << fmt("%.4f", h.median) << " ";
}

// ---------------------------------------------------------------------------
// CLI-level criteria

int sh(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void c10_determinism(Check& c) {
  const fs::path root = fs::path(DYNPROTO_TEST_TMP) / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = q(DYNPROTO_CLI_PATH);
  const fs::path data = root / "data";
  c.require(sh(cli + " synth --spec desk-64 --out-dir " + q(data)) == 0, "synth");
  c.require(sh(cli + " calibrate --train-features " + q(data / "train.dpft") + " --train-labels " +
               q(data / "train.labels") + " --tau 0.05 --out " + q(root / "cal.json")) == 0, "calibrate");

  nlohmann::json scen{{"dataset", {{"dir", "data"}}},
                      {"ood_sources", desk64_ood_sources()},
                      {"seeds", five_seeds()},
                      {"keep_scores", true},
                      {"pipeline", {{"tau", kDeskTau}}}};
  write_json(root / "gain.json", scen);

  std::vector<fs::path> logs, reports;
  for (int rep = 0; rep < 2; ++rep) {
    for (int threads : {1, 4}) {
      const std::string tag = std::to_string(rep) + "_t" + std::to_string(threads);
      const auto log = root / ("scores_" + tag + ".json");
      const auto report = root / ("report_" + tag + ".json");
      c.require(sh(cli + " run --calib " + q(root / "cal.json") + " --stream-features " + q(data / "test.dpft") +
                   " --noise-per-batch 8 --threads " + std::to_string(threads) + " --out-scores " + q(log)) == 0,
                "run");
      c.require(sh(cli + " scenario --scenario " + q(root / "gain.json") + " --threads " + std::to_string(threads) +
                   " --out-report " + q(report)) == 0, "scenario");
      logs.push_back(log);
      reports.push_back(report);
    }
  }
  for (std::size_t i = 1; i < logs.size(); ++i) {
    c.require(detail::read_all(logs[i]) == detail::read_all(logs[0]), "score logs identical");
    c.require(detail::read_all(reports[i]) == detail::read_all(reports[0]), "reports identical");
  }
  c.detail << "2 runs x threads {1,4}: " << logs.size() << " score logs and " << reports.size()
           << " five-seed reports byte-identical ";
}

void c11_performance(Check& c) {
  const fs::path root = fs::path(DYNPROTO_TEST_TMP) / "bench";
  fs::create_directories(root);
  const auto out = root / "bench.json";
  c.require(sh(q(DYNPROTO_CLI_PATH) + " bench --dim 512 --classes 1000 --ood 3000 --batch 512 --threads 1 --out " +
               q(out)) == 0, "bench command");
  const auto j = read_json(out);
  const double ms = j.at("per_sample_ms").get<double>();
  const auto m = j.at("max_m_ood").get<std::size_t>();
  c.require(m <= 3000, "M <= 3000");
  c.require(ms <= kBenchLimitMs, "per-sample overhead <= 1 ms");
  c.detail << "D=512 C=1000 M<=" << m << " batch 512, 1 thread: " << fmt("%.3f", ms) << " ms/sample ";
}

}  // namespace

int main() {
  criterion(1, "score identities", 5.0, c1_scoring);
  criterion(2, "alpha grid oracle", 10.0, c2_otsu);
  criterion(3, "metric oracles", 10.0, c3_metrics);
  criterion(4, "clustering properties", 5.0, c4_birch);
  criterion(5, "pipeline equivalence", 60.0, c5_equivalence);
  criterion(6, "end-to-end gain", 300.0, c6_gain);
  criterion(7, "imbalance and noise", 300.0, c7_imbalance);
  criterion(8, "drift policy", 300.0, c8_drift);
  criterion(9, "hypothesis statistic", 0.0, c9_hypothesis);
  criterion(10, "determinism", 0.0, c10_determinism);
  criterion(11, "performance", 0.0, c11_performance);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
