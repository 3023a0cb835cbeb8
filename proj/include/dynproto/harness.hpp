#pragma once

// Experiment orchestration: shuffled ID/OOD mixes, temporal-drift sequences,
// ablation sweeps and ID:OOD imbalance grids over named in-memory datasets.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dynproto/dataio.hpp"
#include "dynproto/error.hpp"
#include "dynproto/metrics.hpp"
#include "dynproto/pipeline.hpp"
#include "dynproto/random.hpp"

namespace dynproto {

struct Dataset {
  FeatureMatrix features;
  std::optional<FeatureMatrix> logits;
  std::vector<std::int32_t> labels;  // ID class or -1
};

/// Named datasets. "train" must hold labelled ID training data for calibration.
class DatasetRegistry {
 public:
  void add(const std::string& name, Dataset d) {
    if (d.labels.size() != d.features.rows()) {
      fail(ErrorCode::DimensionMismatch, name + ": labels do not match rows");
    }
    if (d.logits && d.logits->rows() != d.features.rows()) {
      fail(ErrorCode::DimensionMismatch, name + ": logits do not match rows");
    }
    sets_[name] = std::move(d);
  }

  const Dataset& at(const std::string& name) const {
    auto it = sets_.find(name);
    if (it == sets_.end()) fail(ErrorCode::DatasetNotFound, name);
    return it->second;
  }

  bool contains(const std::string& name) const { return sets_.count(name) != 0; }

  /// Registers "train", "id" (ID test) and one dataset per OOD cluster.
  static DatasetRegistry from_synthetic(const SyntheticData& d) {
    DatasetRegistry reg;
    reg.add("train", {d.train, d.train_logits, d.train_labels});
    std::map<std::int32_t, Dataset> by_source;
    for (std::size_t i = 0; i < d.test.rows(); ++i) {
      auto& ds = by_source[d.test_sources[i]];
      if (ds.features.dim() == 0) {
        ds.features = FeatureMatrix(d.dim);
        ds.logits = FeatureMatrix(d.num_classes);
      }
      ds.features.push_back(d.test.row(i));
      ds.logits->push_back(d.test_logits.row(i));
      ds.labels.push_back(d.test_labels[i]);
    }
    for (auto& [src, ds] : by_source) {
      reg.add(d.source_names.at(static_cast<std::size_t>(src)), std::move(ds));
    }
    return reg;
  }

 private:
  std::map<std::string, Dataset> sets_;
};

enum class Ordering { ShuffledMix, Sequence };

struct ScenarioSpec {
  std::string name = "scenario";
  std::string train_source = "train";
  std::string id_source = "id";
  std::vector<std::string> ood_sources;
  Ordering ordering = Ordering::ShuffledMix;
  // ID:OOD ratio; the larger side keeps its full pool and the other is subsampled.
  std::optional<std::pair<std::size_t, std::size_t>> id_ood_ratio;
  std::vector<std::uint64_t> seeds{0};
  PipelineConfig pipeline;
  // Seeded cache initialisation: first `seed_count` rows of `seed_source`,
  // placed by predicted class up to capacity.
  std::optional<std::string> seed_source;
  std::size_t seed_count = 0;
  bool keep_scores = false;

  void validate() const {
    if (ood_sources.empty()) fail(ErrorCode::InvalidSpec, "scenario needs at least one OOD source");
    if (seeds.empty()) fail(ErrorCode::InvalidSpec, "scenario needs at least one seed");
    if (id_ood_ratio && (id_ood_ratio->first == 0 || id_ood_ratio->second == 0)) {
      fail(ErrorCode::InvalidSpec, "ratio components must be >= 1");
    }
    pipeline.validate();
  }
};

struct MetricPair {
  double fpr95 = 0.0;
  double auroc = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::map<std::string, EvalReport> sources;
  MetricPair average;
  EvalReport overall;
  std::map<std::string, EvalReport> base_sources;
  MetricPair base_average;
  EvalReport base_overall;
  std::vector<BatchDiagnostics> diagnostics;
  std::optional<double> final_alpha;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  std::vector<double> scores;        // kept when ScenarioSpec::keep_scores
  std::vector<double> base_scores;
  std::vector<std::int32_t> stream_sources;  // -1 = ID, else index into ood_sources
};

struct RunReport {
  std::string name;
  nlohmann::json config;
  double theta = 0.0;
  std::vector<SeedResult> per_seed;
  std::map<std::string, MetricPair> mean_sources;
  MetricPair mean_average;
  MetricPair mean_overall;
  MetricPair base_mean_average;
  MetricPair base_mean_overall;
  std::vector<Prototype> final_prototypes;  // from the last seed, for external plotting
};

// ---------------------------------------------------------------------------
// Config <-> JSON

inline std::string to_string(BaseDetector d) {
  switch (d) {
    case BaseDetector::MSP: return "msp";
    case BaseDetector::MCM: return "mcm";
    case BaseDetector::Energy: return "energy";
  }
  return "?";
}
inline std::string to_string(ClusterStrategy s) {
  switch (s) {
    case ClusterStrategy::BIRCH: return "birch";
    case ClusterStrategy::AP: return "ap";
    case ClusterStrategy::None: return "none";
  }
  return "?";
}
inline std::string to_string(CachePolicy p) { return p == CachePolicy::FIFO ? "fifo" : "rh"; }
inline std::string to_string(CacheInit i) { return i == CacheInit::Empty ? "empty" : "seeded"; }
inline std::string to_string(Phase p) { return p == Phase::ColdStart ? "cold_start" : "adaptive"; }

inline BaseDetector parse_detector(const std::string& s) {
  if (s == "msp") return BaseDetector::MSP;
  if (s == "mcm") return BaseDetector::MCM;
  if (s == "energy") return BaseDetector::Energy;
  fail(ErrorCode::InvalidConfig, "unknown detector '" + s + "'");
}
inline ClusterStrategy parse_cluster(const std::string& s) {
  if (s == "birch") return ClusterStrategy::BIRCH;
  if (s == "ap") return ClusterStrategy::AP;
  if (s == "none") return ClusterStrategy::None;
  fail(ErrorCode::InvalidConfig, "unknown cluster strategy '" + s + "'");
}
inline CachePolicy parse_policy(const std::string& s) {
  if (s == "fifo") return CachePolicy::FIFO;
  if (s == "rh") return CachePolicy::RH;
  fail(ErrorCode::InvalidConfig, "unknown cache policy '" + s + "'");
}
inline CacheInit parse_init(const std::string& s) {
  if (s == "empty") return CacheInit::Empty;
  if (s == "seeded") return CacheInit::Seeded;
  fail(ErrorCode::InvalidConfig, "unknown cache init '" + s + "'");
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"m", c.m},
          {"beta", c.beta},
          {"k", c.k_coef},
          {"t_cold", c.t_cold},
          {"batch_size", c.batch_size},
          {"tau", c.tau},
          {"energy_temperature", c.energy_temperature},
          {"detector", to_string(c.base_detector)},
          {"cluster", to_string(c.cluster)},
          {"birch_threshold", c.birch.radius_threshold},
          {"birch_max_subclusters", c.birch.max_subclusters},
          {"cache_policy", to_string(c.cache_policy)},
          {"cache_init", to_string(c.cache_init)},
          {"noise_per_batch", c.noise_per_batch},
          {"seed", c.rng_seed},
          {"caching", c.caching}};
}

/// Keys absent from `j` keep the value already in `base`; unknown keys are rejected.
inline PipelineConfig merge_config(PipelineConfig base, const nlohmann::json& j) {
  static const std::vector<std::string> known{
      "m", "beta", "k", "t_cold", "batch_size", "tau", "energy_temperature", "detector", "cluster",
      "birch_threshold", "birch_max_subclusters", "cache_policy", "cache_init", "noise_per_batch",
      "seed", "caching", "threads"};
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
  try {
    base.m = j.value("m", base.m);
    base.beta = j.value("beta", base.beta);
    base.k_coef = j.value("k", base.k_coef);
    base.t_cold = j.value("t_cold", base.t_cold);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.tau = j.value("tau", base.tau);
    base.energy_temperature = j.value("energy_temperature", base.energy_temperature);
    if (j.contains("detector")) base.base_detector = parse_detector(j["detector"].get<std::string>());
    if (j.contains("cluster")) base.cluster = parse_cluster(j["cluster"].get<std::string>());
    base.birch.radius_threshold = j.value("birch_threshold", base.birch.radius_threshold);
    base.birch.max_subclusters = j.value("birch_max_subclusters", base.birch.max_subclusters);
    if (j.contains("cache_policy")) base.cache_policy = parse_policy(j["cache_policy"].get<std::string>());
    if (j.contains("cache_init")) base.cache_init = parse_init(j["cache_init"].get<std::string>());
    base.noise_per_batch = j.value("noise_per_batch", base.noise_per_batch);
    base.rng_seed = j.value("seed", base.rng_seed);
    base.caching = j.value("caching", base.caching);
    base.threads = j.value("threads", base.threads);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, e.what());
  }
  return base;
}

// ---------------------------------------------------------------------------
// Stream assembly

struct StreamItem {
  const Dataset* dataset = nullptr;
  std::size_t row = 0;
  std::int32_t source = -1;  // -1 = ID
};

struct AssembledStream {
  FeatureMatrix features;
  std::optional<FeatureMatrix> logits;
  std::vector<std::int32_t> labels;
  std::vector<std::int32_t> sources;
};

namespace detail {

inline std::vector<std::size_t> subsample(std::size_t pool, std::size_t count, Rng& rng) {
  if (count > pool) {
    fail(ErrorCode::InsufficientPool, "requested " + std::to_string(count) + " of " + std::to_string(pool));
  }
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  if (count == pool) return idx;
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Splits `total` into `parts` near-equal counts that sum to `total`.
inline std::vector<std::size_t> even_split(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++out[i];
  return out;
}

}  // namespace detail

/// Sample counts per role after applying the scenario ratio.
struct StreamCounts {
  std::size_t n_id = 0;
  std::vector<std::size_t> n_ood;  // per OOD source
};

inline StreamCounts stream_counts(const ScenarioSpec& spec, const DatasetRegistry& reg) {
  StreamCounts c;
  const std::size_t id_pool = reg.at(spec.id_source).features.rows();
  std::vector<std::size_t> ood_pool;
  std::size_t ood_total = 0;
  for (const auto& s : spec.ood_sources) {
    ood_pool.push_back(reg.at(s).features.rows());
    ood_total += ood_pool.back();
  }
  if (!spec.id_ood_ratio) {
    c.n_id = id_pool;
    c.n_ood = ood_pool;
    return c;
  }
  const auto [a, b] = *spec.id_ood_ratio;
  std::size_t want_ood = 0;
  if (a > b) {
    c.n_id = id_pool;
    want_ood = static_cast<std::size_t>(std::llround(static_cast<double>(id_pool) * static_cast<double>(b) /
                                                     static_cast<double>(a)));
    want_ood = std::max<std::size_t>(want_ood, 1);
    if (want_ood > ood_total) fail(ErrorCode::InsufficientPool, "not enough OOD samples for ratio");
  } else {
    want_ood = ood_total;
    c.n_id = static_cast<std::size_t>(std::llround(static_cast<double>(ood_total) * static_cast<double>(a) /
                                                   static_cast<double>(b)));
    c.n_id = std::max<std::size_t>(c.n_id, 1);
    if (c.n_id > id_pool) fail(ErrorCode::InsufficientPool, "not enough ID samples for ratio");
  }
  // Distribute the OOD budget over sources, capped by each pool.
  c.n_ood = detail::even_split(want_ood, ood_pool.size());
  for (std::size_t i = 0; i < ood_pool.size(); ++i) {
    if (c.n_ood[i] > ood_pool[i]) fail(ErrorCode::InsufficientPool, spec.ood_sources[i] + " too small");
  }
  return c;
}

inline AssembledStream assemble_stream(const ScenarioSpec& spec, const DatasetRegistry& reg,
                                       std::uint64_t seed) {
  const auto counts = stream_counts(spec, reg);
  Rng sub_rng(derive_seed(seed, 1));
  Rng mix_rng(derive_seed(seed, 2));

  const Dataset& id = reg.at(spec.id_source);
  std::vector<StreamItem> id_items;
  for (auto r : detail::subsample(id.features.rows(), counts.n_id, sub_rng)) id_items.push_back({&id, r, -1});
  std::vector<std::vector<StreamItem>> ood_items(spec.ood_sources.size());
  for (std::size_t s = 0; s < spec.ood_sources.size(); ++s) {
    const Dataset& ds = reg.at(spec.ood_sources[s]);
    if (ds.features.dim() != id.features.dim()) fail(ErrorCode::DimensionMismatch, spec.ood_sources[s]);
    for (auto r : detail::subsample(ds.features.rows(), counts.n_ood[s], sub_rng)) {
      ood_items[s].push_back({&ds, r, static_cast<std::int32_t>(s)});
    }
  }

  std::vector<StreamItem> order;
  if (spec.ordering == Ordering::ShuffledMix) {
    order = id_items;
    for (auto& v : ood_items) order.insert(order.end(), v.begin(), v.end());
    mix_rng.shuffle(order);
  } else {
    // One phase per OOD source in listed order; ID samples are spread evenly
    // over phases and shuffled in within each phase.
    mix_rng.shuffle(id_items);
    const auto shares = detail::even_split(id_items.size(), ood_items.size());
    std::size_t pos = 0;
    for (std::size_t p = 0; p < ood_items.size(); ++p) {
      std::vector<StreamItem> phase(ood_items[p]);
      phase.insert(phase.end(), id_items.begin() + static_cast<std::ptrdiff_t>(pos),
                   id_items.begin() + static_cast<std::ptrdiff_t>(pos + shares[p]));
      pos += shares[p];
      mix_rng.shuffle(phase);
      order.insert(order.end(), phase.begin(), phase.end());
    }
  }

  AssembledStream out;
  out.features = FeatureMatrix(id.features.dim());
  out.features.reserve(order.size());
  bool have_logits = std::all_of(order.begin(), order.end(), [](const auto& it) { return it.dataset->logits.has_value(); });
  if (have_logits && !order.empty()) out.logits = FeatureMatrix(order.front().dataset->logits->dim());
  for (const auto& it : order) {
    out.features.push_back(it.dataset->features.row(it.row));
    if (out.logits) out.logits->push_back(it.dataset->logits->row(it.row));
    out.labels.push_back(it.source < 0 ? it.dataset->labels[it.row] : -1);
    out.sources.push_back(it.source);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

inline Calibration calibrate_for(const ScenarioSpec& spec, const DatasetRegistry& reg) {
  const Dataset& train = reg.at(spec.train_source);
  auto per_class = group_by_label(train.features, train.labels);
  std::optional<std::vector<FeatureMatrix>> per_class_logits;
  if (train.logits) per_class_logits = group_by_label(*train.logits, train.labels);
  return calibrate(per_class, per_class_logits ? &*per_class_logits : nullptr,
                   spec.pipeline.base_detector, spec.pipeline.beta, spec.pipeline.tau, nullptr,
                   spec.pipeline.energy_temperature);
}

namespace detail {

inline std::vector<std::vector<FeatureVector>> cache_seeds(const ScenarioSpec& spec,
                                                           const DatasetRegistry& reg,
                                                           const Calibration& cal) {
  std::vector<std::vector<FeatureVector>> seeds(cal.id_protos.size());
  if (spec.pipeline.cache_init != CacheInit::Seeded || !spec.seed_source) return seeds;
  const Dataset& ds = reg.at(*spec.seed_source);
  PrototypeBank bank{cal.id_protos, {}};
  const std::size_t n = std::min(spec.seed_count, ds.features.rows());
  for (std::size_t i = 0; i < n; ++i) {
    auto v = normalize(ds.features.row(i));
    const auto c = predict_class(v, bank);
    if (seeds[c].size() < spec.pipeline.m) seeds[c].push_back(std::move(v));
  }
  return seeds;
}

inline void evaluate_split(const AssembledStream& stream, const std::vector<double>& scores,
                           const std::vector<std::string>& names,
                           std::map<std::string, EvalReport>& per_source, MetricPair& average,
                           EvalReport& overall) {
  std::vector<ScoredSample> all;
  std::vector<ScoredSample> id;
  std::vector<std::vector<ScoredSample>> ood(names.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ScoredSample s{scores[i], stream.sources[i] < 0, std::nullopt};
    all.push_back(s);
    if (s.is_id) id.push_back(s); else ood[static_cast<std::size_t>(stream.sources[i])].push_back(s);
  }
  average = {};
  std::size_t counted = 0;
  for (std::size_t q = 0; q < names.size(); ++q) {
    if (ood[q].empty()) continue;
    std::vector<ScoredSample> pair(id);
    pair.insert(pair.end(), ood[q].begin(), ood[q].end());
    const auto r = evaluate(pair);
    per_source[names[q]] = r;
    average.fpr95 += r.fpr95;
    average.auroc += r.auroc;
    ++counted;
  }
  if (counted > 0) {
    average.fpr95 /= static_cast<double>(counted);
    average.auroc /= static_cast<double>(counted);
  }
  overall = evaluate(all);
}

template <typename Get>
MetricPair mean_of(const std::vector<SeedResult>& rs, Get get) {
  MetricPair m;
  for (const auto& r : rs) {
    const MetricPair v = get(r);
    m.fpr95 += v.fpr95;
    m.auroc += v.auroc;
  }
  m.fpr95 /= static_cast<double>(rs.size());
  m.auroc /= static_cast<double>(rs.size());
  return m;
}

}  // namespace detail

struct SeedRun {
  AssembledStream stream;
  StreamLog log;
  PipelineState state;
};

/// One seed end to end, returning the raw stream, log and final state.
inline SeedRun run_seed(const ScenarioSpec& spec, const DatasetRegistry& reg, const Calibration& cal,
                        std::uint64_t seed) {
  SeedRun run;
  run.stream = assemble_stream(spec, reg, seed);
  PipelineConfig cfg = spec.pipeline;
  cfg.rng_seed = derive_seed(seed, 3);
  run.state = initialize(cal, cfg, detail::cache_seeds(spec, reg, cal));
  const auto batches = split_batches(run.stream.features, run.stream.logits ? &*run.stream.logits : nullptr,
                                     cfg.batch_size);
  run.log = process_stream(run.state, batches);
  return run;
}

inline RunReport run_scenario(const ScenarioSpec& spec, const DatasetRegistry& reg) {
  spec.validate();
  const Calibration cal = calibrate_for(spec, reg);
  RunReport report;
  report.name = spec.name;
  report.config = to_json(spec.pipeline);
  report.config["ordering"] = spec.ordering == Ordering::ShuffledMix ? "shuffled_mix" : "sequence";
  report.config["ood_sources"] = spec.ood_sources;
  report.config["id_source"] = spec.id_source;
  report.config["seeds"] = spec.seeds;
  if (spec.id_ood_ratio) {
    report.config["id_ood_ratio"] = {spec.id_ood_ratio->first, spec.id_ood_ratio->second};
  }
  report.theta = cal.theta;

  for (auto seed : spec.seeds) {
    auto run = run_seed(spec, reg, cal, seed);
    SeedResult r;
    r.seed = seed;
    detail::evaluate_split(run.stream, run.log.scores, spec.ood_sources, r.sources, r.average, r.overall);
    detail::evaluate_split(run.stream, run.log.base_scores, spec.ood_sources, r.base_sources,
                           r.base_average, r.base_overall);
    r.diagnostics = run.log.batches;
    r.final_alpha = run.state.thresholds.alpha;
    r.n_id = static_cast<std::size_t>(std::count(run.stream.sources.begin(), run.stream.sources.end(), -1));
    r.n_ood = run.stream.sources.size() - r.n_id;
    if (spec.keep_scores) {
      r.scores = run.log.scores;
      r.base_scores = run.log.base_scores;
      r.stream_sources = run.stream.sources;
    }
    report.final_prototypes = run.state.bank.ood_protos;
    report.per_seed.push_back(std::move(r));
  }

  for (const auto& name : spec.ood_sources) {
    std::vector<SeedResult> with;
    for (const auto& r : report.per_seed) {
      if (r.sources.count(name)) with.push_back(r);
    }
    if (with.empty()) continue;
    report.mean_sources[name] = detail::mean_of(with, [&](const SeedResult& r) {
      const auto& e = r.sources.at(name);
      return MetricPair{e.fpr95, e.auroc};
    });
  }
  report.mean_average = detail::mean_of(report.per_seed, [](const SeedResult& r) { return r.average; });
  report.mean_overall = detail::mean_of(report.per_seed, [](const SeedResult& r) {
    return MetricPair{r.overall.fpr95, r.overall.auroc};
  });
  report.base_mean_average = detail::mean_of(report.per_seed, [](const SeedResult& r) { return r.base_average; });
  report.base_mean_overall = detail::mean_of(report.per_seed, [](const SeedResult& r) {
    return MetricPair{r.base_overall.fpr95, r.base_overall.auroc};
  });
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class AblationAxis { CopcOnly, ClusterStrategy, CacheInit, CachePolicy, K, M, Beta, TCold };

inline AblationAxis parse_axis(const std::string& s) {
  if (s == "copc_only") return AblationAxis::CopcOnly;
  if (s == "cluster") return AblationAxis::ClusterStrategy;
  if (s == "cache_init") return AblationAxis::CacheInit;
  if (s == "cache_policy") return AblationAxis::CachePolicy;
  if (s == "k") return AblationAxis::K;
  if (s == "m") return AblationAxis::M;
  if (s == "beta") return AblationAxis::Beta;
  if (s == "t_cold") return AblationAxis::TCold;
  fail(ErrorCode::InvalidConfig, "unknown ablation axis '" + s + "'");
}

inline std::vector<std::string> default_axis_values(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::CopcOnly: return {"off", "on"};
    case AblationAxis::ClusterStrategy: return {"birch", "ap", "none"};
    case AblationAxis::CacheInit: return {"empty", "seeded"};
    case AblationAxis::CachePolicy: return {"fifo", "rh"};
    case AblationAxis::K: return {"1", "5", "10"};
    case AblationAxis::M: return {"1", "10", "30"};
    case AblationAxis::Beta: return {"5", "25", "45", "65", "85"};
    case AblationAxis::TCold: return {"1", "5", "10"};
  }
  return {};
}

inline ScenarioSpec apply_axis(ScenarioSpec spec, AblationAxis axis, const std::string& value) {
  auto number = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidConfig, "'" + v + "' is not a number");
    }
  };
  auto count = [&](const std::string& v) {
    const double x = number(v);
    if (x < 0 || x != std::floor(x)) fail(ErrorCode::InvalidConfig, "'" + v + "' is not a count");
    return static_cast<std::size_t>(x);
  };
  auto& p = spec.pipeline;
  switch (axis) {
    case AblationAxis::CopcOnly:
      if (value == "on") p.cluster = ClusterStrategy::None;
      else if (value != "off") fail(ErrorCode::InvalidConfig, "copc_only takes on/off");
      break;
    case AblationAxis::ClusterStrategy: p.cluster = parse_cluster(value); break;
    case AblationAxis::CacheInit: p.cache_init = parse_init(value); break;
    case AblationAxis::CachePolicy: p.cache_policy = parse_policy(value); break;
    case AblationAxis::K: p.k_coef = number(value); break;
    case AblationAxis::M: p.m = count(value); break;
    case AblationAxis::Beta: p.beta = number(value); break;
    case AblationAxis::TCold: p.t_cold = count(value); break;
  }
  spec.name += "/" + value;
  spec.pipeline.validate();
  return spec;
}

inline std::vector<RunReport> run_ablation(const ScenarioSpec& base, AblationAxis axis,
                                           const std::vector<std::string>& values,
                                           const DatasetRegistry& reg) {
  std::vector<ScenarioSpec> specs;
  for (const auto& v : values) specs.push_back(apply_axis(base, axis, v));
  std::vector<RunReport> out;
  for (const auto& s : specs) out.push_back(run_scenario(s, reg));
  return out;
}

struct ImbalanceCell {
  std::pair<std::size_t, std::size_t> ratio;
  std::size_t noise_per_batch = 0;
  RunReport report;
};

inline std::vector<ImbalanceCell> run_imbalance(const ScenarioSpec& base,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& ratios,
                                                const std::vector<std::size_t>& noise_options,
                                                const DatasetRegistry& reg) {
  std::vector<ImbalanceCell> out;
  for (const auto& ratio : ratios) {
    for (auto noise : noise_options) {
      ScenarioSpec s = base;
      s.id_ood_ratio = ratio;
      s.pipeline.noise_per_batch = noise;
      s.name = base.name + "/" + std::to_string(ratio.first) + ":" + std::to_string(ratio.second) +
               "/noise" + std::to_string(noise);
      out.push_back({ratio, noise, run_scenario(s, reg)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detected / undetected similarity statistic on a finished run

/// Per class c: OOD samples predicted as c split at `cutoff` on `scores`
/// (one per stream sample), against ID stream samples whose true class is c.
inline std::vector<ClassDelta> stream_similarity_delta(const SeedRun& run, const std::vector<double>& scores,
                                                       double cutoff,
                                                       const std::vector<std::int32_t>& ood_sources) {
  if (scores.size() != run.stream.sources.size()) fail(ErrorCode::DimensionMismatch, "one score per sample");
  const std::size_t C = run.state.num_classes();
  const std::size_t d = run.stream.features.dim();
  std::vector<ClassGroups> groups(C, ClassGroups{FeatureMatrix(d), FeatureMatrix(d), FeatureMatrix(d)});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto v = normalize(run.stream.features.row(i));
    const auto src = run.stream.sources[i];
    if (src < 0) {
      groups[static_cast<std::size_t>(run.stream.labels[i])].id.push_back(v);
      continue;
    }
    if (std::find(ood_sources.begin(), ood_sources.end(), src) == ood_sources.end()) continue;
    auto& g = groups[run.log.predicted[i]];
    (scores[i] < cutoff ? g.detected_ood : g.undetected_ood).push_back(v);
  }
  return similarity_delta(groups);
}

// ---------------------------------------------------------------------------
// Engine benchmark

struct BenchmarkResult {
  double per_sample_ms = 0.0;
  std::size_t samples = 0;
  std::size_t max_m_ood = 0;
  double seconds = 0.0;
};

/// Times process_batch (all phases) on random unit features with C classes
/// and caches seeded so the bank holds about `ood_target` prototypes.
inline BenchmarkResult benchmark_engine(std::size_t dim, std::size_t classes, std::size_t ood_target,
                                        std::size_t batch, std::size_t batches, std::size_t threads,
                                        std::uint64_t seed = 1) {
  Rng rng(seed);
  Calibration cal;
  cal.detector = BaseDetector::MCM;
  cal.tau = 0.05;
  for (std::size_t c = 0; c < classes; ++c) {
    cal.id_protos.push_back({detail::random_unit(rng, dim), PrototypeKind::ID, static_cast<int>(c), 1});
  }
  PipelineConfig cfg;
  cfg.batch_size = batch;
  cfg.tau = 0.05;
  cfg.t_cold = 1;
  cfg.threads = threads;
  cfg.m = std::max<std::size_t>(1, (ood_target + classes - 1) / classes);
  cfg.cache_init = CacheInit::Seeded;
  std::vector<std::vector<FeatureVector>> seeds(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < cfg.m && c * cfg.m + k < ood_target; ++k) seeds[c].push_back(detail::random_unit(rng, dim));
  }

  // Stream: points near random ID prototypes; calibrate theta on a sample of them.
  auto draw = [&](std::size_t n) {
    FeatureMatrix x(dim);
    x.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(rng.below(classes));
      x.push_back(detail::sample_around(rng, cal.id_protos[c].vector, 0.04));
    }
    return x;
  };
  {
    const FeatureMatrix probe = draw(batch);
    const FeatureMatrix anchors = PrototypeBank{cal.id_protos, {}}.pack_id();
    const auto s = detail::base_scores(BaseDetector::MCM, probe, nullptr, anchors, cal.tau, 1.0);
    cal.theta = calibrate_theta(s, 50.0);
  }
  auto st = initialize(cal, cfg, seeds);
  std::vector<FeatureMatrix> stream;
  for (std::size_t b = 0; b < batches; ++b) stream.push_back(draw(batch));

  BenchmarkResult r;
  r.max_m_ood = st.bank.num_ood();
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& x : stream) {
    auto res = process_batch(st, x);
    r.max_m_ood = std::max(r.max_m_ood, res.m_ood);
  }
  const auto t1 = std::chrono::steady_clock::now();
  r.samples = batch * batches;
  r.seconds = std::chrono::duration<double>(t1 - t0).count();
  r.per_sample_ms = 1000.0 * r.seconds / static_cast<double>(r.samples);
  return r;
}

}  // namespace dynproto
