#pragma once

// Command-line front end: calibrate, run, eval, synth, scenario, ablate, bench.
// Exit codes: 0 success, 2 usage or validation failure, 3 runtime failure.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynproto/dataio.hpp"
#include "dynproto/error.hpp"
#include "dynproto/harness.hpp"
#include "dynproto/metrics.hpp"
#include "dynproto/parallel.hpp"
#include "dynproto/pipeline.hpp"
#include "dynproto/report.hpp"

namespace dynproto::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

inline int exit_code_for(ErrorCode code) {
  return code == ErrorCode::IOFailure ? kExitRuntime : kExitUsage;
}

// ---------------------------------------------------------------------------
// Dataset loading

/// Registry from a directory written by `synth`: ID training data, ID test
/// split and one dataset per OOD source. Names come from spec.json when present.
inline DatasetRegistry registry_from_dir(const std::filesystem::path& dir) {
  auto need = [&](const char* name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) fail(ErrorCode::DatasetNotFound, p.string());
    return p;
  };
  auto optional_matrix = [&](const char* name) -> std::optional<FeatureMatrix> {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_features(p).rows;
  };
  SyntheticData d;
  d.train = read_features(need("train.dpft")).rows;
  d.train_labels = read_labels(need("train.labels"));
  d.test = read_features(need("test.dpft")).rows;
  d.test_labels = read_labels(need("test.labels"));
  d.test_sources = read_labels(need("test.sources"));
  d.dim = d.train.dim();
  if (d.test.dim() != d.dim) fail(ErrorCode::DimensionMismatch, "train and test dimensions differ");
  if (d.test_sources.size() != d.test.rows()) fail(ErrorCode::DimensionMismatch, "test.sources length");
  std::int32_t max_label = -1;
  for (auto l : d.train_labels) max_label = std::max(max_label, l);
  d.num_classes = static_cast<std::size_t>(max_label + 1);
  auto train_logits = optional_matrix("train_logits.dpft");
  auto test_logits = optional_matrix("test_logits.dpft");

  std::int32_t max_source = 0;
  for (auto s : d.test_sources) max_source = std::max(max_source, s);
  d.source_names.push_back("id");
  std::vector<std::string> names;
  if (std::filesystem::exists(dir / "spec.json")) {
    const auto spec = synthetic_spec_from_json(read_json(dir / "spec.json"));
    for (std::size_t q = 0; q < spec.ood_clusters.size(); ++q) {
      names.push_back(spec.ood_clusters[q].name.empty() ? "ood" + std::to_string(q) : spec.ood_clusters[q].name);
    }
  }
  for (std::int32_t q = 0; q < max_source; ++q) {
    d.source_names.push_back(static_cast<std::size_t>(q) < names.size() ? names[static_cast<std::size_t>(q)]
                                                                       : "ood" + std::to_string(q));
  }

  DatasetRegistry reg;
  reg.add("train", {d.train, train_logits, d.train_labels});
  std::map<std::int32_t, Dataset> by_source;
  for (std::size_t i = 0; i < d.test.rows(); ++i) {
    auto& ds = by_source[d.test_sources[i]];
    if (ds.features.dim() == 0) {
      ds.features = FeatureMatrix(d.dim);
      if (test_logits) ds.logits = FeatureMatrix(test_logits->dim());
    }
    ds.features.push_back(d.test.row(i));
    if (test_logits) ds.logits->push_back(test_logits->row(i));
    ds.labels.push_back(d.test_labels[i]);
  }
  for (auto& [src, ds] : by_source) reg.add(d.source_names.at(static_cast<std::size_t>(src)), std::move(ds));
  return reg;
}

inline SyntheticSpec resolve_synthetic(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "desk-64") return desk64_spec();
    fail(ErrorCode::InvalidSpec, "unknown built-in spec '" + j.get<std::string>() + "'");
  }
  return synthetic_spec_from_json(j);
}

struct ScenarioFile {
  ScenarioSpec spec;
  DatasetRegistry registry;
};

/// Scenario document: {"dataset": {"synthetic": "desk-64" | {...}} or {"dir": path},
/// "ood_sources": [...], optional "name", "id_source", "ordering", "id_ood_ratio",
/// "seeds", "pipeline", "seed_source", "seed_count", "keep_scores"}.
inline ScenarioFile load_scenario(const std::filesystem::path& path, const PipelineConfig& defaults) {
  const auto j = read_json(path);
  ScenarioFile f;
  try {
    const auto& ds = j.at("dataset");
    if (ds.contains("synthetic")) {
      f.registry = DatasetRegistry::from_synthetic(generate_synthetic(resolve_synthetic(ds["synthetic"])));
    } else if (ds.contains("dir")) {
      std::filesystem::path dir = ds["dir"].get<std::string>();
      if (dir.is_relative()) dir = path.parent_path() / dir;
      f.registry = registry_from_dir(dir);
    } else {
      fail(ErrorCode::InvalidSpec, "dataset needs 'synthetic' or 'dir'");
    }
    auto& s = f.spec;
    s.name = j.value("name", path.stem().string());
    s.id_source = j.value("id_source", s.id_source);
    s.ood_sources = j.at("ood_sources").get<std::vector<std::string>>();
    const auto ordering = j.value("ordering", std::string("shuffled_mix"));
    if (ordering == "shuffled_mix") s.ordering = Ordering::ShuffledMix;
    else if (ordering == "sequence") s.ordering = Ordering::Sequence;
    else fail(ErrorCode::InvalidSpec, "unknown ordering '" + ordering + "'");
    if (j.contains("id_ood_ratio")) {
      const auto r = j["id_ood_ratio"].get<std::vector<std::size_t>>();
      if (r.size() != 2) fail(ErrorCode::InvalidSpec, "id_ood_ratio must have two entries");
      s.id_ood_ratio = std::make_pair(r[0], r[1]);
    }
    if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    s.pipeline = merge_config(defaults, j.value("pipeline", nlohmann::json::object()));
    if (j.contains("seed_source")) s.seed_source = j["seed_source"].get<std::string>();
    s.seed_count = j.value("seed_count", std::size_t{0});
    s.keep_scores = j.value("keep_scores", false);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, path.string() + ": " + e.what());
  }
  f.spec.validate();
  return f;
}

// ---------------------------------------------------------------------------
// Shared flag plumbing

/// Pipeline flags bound to `cfg`; after parsing, `apply` overlays the ones
/// given on the command line onto a config loaded from --config.
struct PipelineFlags {
  PipelineConfig cfg;
  std::string cluster = "birch";
  std::string policy = "fifo";
  std::string init = "empty";
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> bound;

  void add(CLI::App& app) {
    auto bind = [&](CLI::Option* o, std::function<void(PipelineConfig&)> f) { bound.emplace_back(o, std::move(f)); };
    bind(app.add_option("--batch-size", cfg.batch_size, "samples per batch")->capture_default_str(),
         [this](PipelineConfig& c) { c.batch_size = cfg.batch_size; });
    bind(app.add_option("--m", cfg.m, "cache capacity per class")->capture_default_str(),
         [this](PipelineConfig& c) { c.m = cfg.m; });
    bind(app.add_option("--k", cfg.k_coef, "OOD prototype weight K")->capture_default_str(),
         [this](PipelineConfig& c) { c.k_coef = cfg.k_coef; });
    bind(app.add_option("--t-cold", cfg.t_cold, "cold-start batches")->capture_default_str(),
         [this](PipelineConfig& c) { c.t_cold = cfg.t_cold; });
    bind(app.add_option("--cluster", cluster, "birch|ap|none")->capture_default_str(),
         [this](PipelineConfig& c) { c.cluster = parse_cluster(cluster); });
    bind(app.add_option("--cache-policy", policy, "fifo|rh")->capture_default_str(),
         [this](PipelineConfig& c) { c.cache_policy = parse_policy(policy); });
    bind(app.add_option("--cache-init", init, "empty|seeded")->capture_default_str(),
         [this](PipelineConfig& c) { c.cache_init = parse_init(init); });
    bind(app.add_option("--birch-threshold", cfg.birch.radius_threshold, "BIRCH radius threshold")->capture_default_str(),
         [this](PipelineConfig& c) { c.birch.radius_threshold = cfg.birch.radius_threshold; });
    bind(app.add_option("--birch-max-subclusters", cfg.birch.max_subclusters, "BIRCH subcluster cap")->capture_default_str(),
         [this](PipelineConfig& c) { c.birch.max_subclusters = cfg.birch.max_subclusters; });
    bind(app.add_option("--noise-per-batch", cfg.noise_per_batch, "Gaussian noise samples per batch")->capture_default_str(),
         [this](PipelineConfig& c) { c.noise_per_batch = cfg.noise_per_batch; });
    bind(app.add_option("--seed", cfg.rng_seed, "noise generator seed")->capture_default_str(),
         [this](PipelineConfig& c) { c.rng_seed = cfg.rng_seed; });
    bind(app.add_flag("--no-caching", [this](std::int64_t) { cfg.caching = false; }, "never cache (base detector only)"),
         [this](PipelineConfig& c) { c.caching = cfg.caching; });
    app.add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  }

  PipelineConfig resolve(std::size_t threads) const {
    PipelineConfig out;
    if (!config_path.empty()) out = merge_config(out, read_json(config_path));
    for (const auto& [opt, apply] : bound) {
      if (opt->count() > 0) apply(out);
    }
    out.threads = threads;
    return out;
  }
};

inline void add_threads(CLI::App& app, std::size_t& threads) {
  threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default: DYNPROTO_THREADS or 1)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

inline std::vector<FeatureMatrix> grouped(const FeatureMatrix& rows, const std::vector<std::int32_t>& labels) {
  if (labels.empty()) fail(ErrorCode::MissingClass, "empty label file");
  return group_by_label(rows, labels);
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_calibrate(const std::string& features, const std::string& labels, const std::string& logits,
                         const std::string& detector, double beta, double tau, double energy_t,
                         const std::string& anchors, const std::string& out_path, std::ostream& out) {
  const auto det = parse_detector(detector);
  const auto feats = read_features(features).rows;
  const auto lab = read_labels(labels);
  if (lab.size() != feats.rows()) fail(ErrorCode::DimensionMismatch, "labels do not match feature rows");
  for (auto l : lab) {
    if (l < 0) fail(ErrorCode::InvalidSpec, "training labels must be ID classes");
  }
  const auto per_class = grouped(feats, lab);
  std::optional<std::vector<FeatureMatrix>> per_class_logits;
  if (!logits.empty()) {
    const auto lg = read_features(logits).rows;
    if (lg.rows() != feats.rows()) fail(ErrorCode::DimensionMismatch, "logits do not match feature rows");
    per_class_logits = grouped(lg, lab);
  }
  std::optional<FeatureMatrix> anchor_rows;
  if (!anchors.empty()) anchor_rows = read_features(anchors).rows;
  const auto cal = calibrate(per_class, per_class_logits ? &*per_class_logits : nullptr, det, beta, tau,
                             anchor_rows ? &*anchor_rows : nullptr, energy_t);
  write_json(out_path, to_json(cal));
  out << "theta " << cal.theta << ", " << cal.id_protos.size() << " prototypes -> " << out_path << '\n';
  return kExitOk;
}

inline int cmd_run(const std::string& calib, const std::string& features, const std::string& logits,
                   const PipelineConfig& cfg, const std::string& out_scores, const std::string& out_protos,
                   std::ostream& out) {
  const auto cal = calibration_from_json(read_json(calib));
  const auto stream = read_features(features).rows;
  std::optional<FeatureMatrix> lg;
  if (!logits.empty()) {
    lg = read_features(logits).rows;
    if (lg->rows() != stream.rows()) fail(ErrorCode::DimensionMismatch, "logits do not match feature rows");
  }
  auto st = initialize(cal, cfg);
  const auto log = process_stream(st, split_batches(stream, lg ? &*lg : nullptr, cfg.batch_size));
  auto doc = to_json(log);
  doc["config"] = to_json(st.config);
  doc["theta"] = cal.theta;
  doc["final_alpha"] = optional_json(st.thresholds.alpha);
  write_json(out_scores, doc);
  if (!out_protos.empty()) write_json(out_protos, prototypes_to_json(st.bank.ood_protos));
  out << log.scores.size() << " scores, " << log.batches.size() << " batches, M = " << st.bank.num_ood()
      << " -> " << out_scores << '\n';
  return kExitOk;
}

inline std::vector<double> read_scores(const std::string& path) {
  const auto j = read_json(path);
  try {
    const auto& arr = j.is_array() ? j : j.at("scores");
    return arr.get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, path + ": " + e.what());
  }
}

inline int cmd_eval(const std::string& scores_path, const std::string& labels_path, bool by_source,
                    const std::string& sources_path, const std::string& out_report, std::ostream& out) {
  const auto scores = read_scores(scores_path);
  const auto labels = read_labels(labels_path);
  if (labels.size() != scores.size()) fail(ErrorCode::DimensionMismatch, "labels do not match scores");
  std::vector<ScoredSample> all;
  for (std::size_t i = 0; i < scores.size(); ++i) all.push_back({scores[i], labels[i] >= 0, std::nullopt});
  nlohmann::json doc{{"overall", to_json(evaluate(all))}};
  if (by_source) {
    if (sources_path.empty()) fail(ErrorCode::InvalidConfig, "--group-by-source needs --sources");
    const auto sources = read_labels(sources_path);
    if (sources.size() != scores.size()) fail(ErrorCode::DimensionMismatch, "sources do not match scores");
    std::map<std::int32_t, std::vector<ScoredSample>> ood;
    std::vector<ScoredSample> id;
    for (std::size_t i = 0; i < scores.size(); ++i) (all[i].is_id ? id : ood[sources[i]]).push_back(all[i]);
    nlohmann::json per = nlohmann::json::object();
    MetricPair avg;
    for (const auto& [src, rows] : ood) {
      std::vector<ScoredSample> pair(id);
      pair.insert(pair.end(), rows.begin(), rows.end());
      const auto r = evaluate(pair);
      per[std::to_string(src)] = to_json(r);
      avg.fpr95 += r.fpr95 / static_cast<double>(ood.size());
      avg.auroc += r.auroc / static_cast<double>(ood.size());
    }
    doc["sources"] = per;
    doc["average"] = to_json(avg);
  }
  write_json(out_report, doc);
  out << "fpr95 " << doc["overall"]["fpr95"].get<double>() << " auroc " << doc["overall"]["auroc"].get<double>()
      << " -> " << out_report << '\n';
  return kExitOk;
}

inline int cmd_synth(const std::string& spec_arg, const std::string& out_dir, std::ostream& out) {
  const SyntheticSpec spec = spec_arg == "desk-64" ? desk64_spec() : synthetic_spec_from_json(read_json(spec_arg));
  const auto data = generate_synthetic(spec);
  auto files = write_synthetic(data, out_dir);
  write_json(std::filesystem::path(out_dir) / "spec.json", to_json(spec));
  out << files.size() + 1 << " files -> " << out_dir << '\n';
  return kExitOk;
}

inline int cmd_scenario(const std::string& scenario, const PipelineConfig& defaults, std::size_t threads,
                        const std::string& out_report, std::ostream& out) {
  auto f = load_scenario(scenario, defaults);
  f.spec.pipeline.threads = threads;
  const auto r = run_scenario(f.spec, f.registry);
  export_report(out_report, r);
  out << r.name << ": fpr95 " << r.mean_average.fpr95 << " auroc " << r.mean_average.auroc << " (base "
      << r.base_mean_average.fpr95 << " / " << r.base_mean_average.auroc << ") -> " << out_report << '\n';
  return kExitOk;
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline int cmd_ablate(const std::string& scenario, const std::string& axis_name, const std::string& values,
                      std::size_t threads, const std::string& out_dir, std::ostream& out) {
  const auto axis = parse_axis(axis_name);
  auto vals = values.empty() ? default_axis_values(axis) : split_csv(values);
  if (vals.empty()) fail(ErrorCode::InvalidConfig, "no axis values");
  auto f = load_scenario(scenario, PipelineConfig{});
  f.spec.pipeline.threads = threads;
  const auto reports = run_ablation(f.spec, axis, vals, f.registry);
  std::filesystem::create_directories(out_dir);
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto file = std::filesystem::path(out_dir) / (axis_name + "_" + vals[i] + ".json");
    export_report(file, reports[i]);
    summary.push_back({{"value", vals[i]},
                       {"report", file.filename().string()},
                       {"mean_average", to_json(reports[i].mean_average)},
                       {"base_mean_average", to_json(reports[i].base_mean_average)}});
    out << axis_name << "=" << vals[i] << ": fpr95 " << reports[i].mean_average.fpr95 << " auroc "
        << reports[i].mean_average.auroc << '\n';
  }
  write_json(std::filesystem::path(out_dir) / "summary.json", summary);
  return kExitOk;
}

inline int cmd_bench(std::size_t dim, std::size_t classes, std::size_t ood, std::size_t batch, std::size_t batches,
                     std::size_t threads, const std::string& out_path, std::ostream& out) {
  if (dim == 0 || classes == 0 || batch == 0 || batches == 0) fail(ErrorCode::InvalidConfig, "bench sizes must be positive");
  const auto r = benchmark_engine(dim, classes, ood, batch, batches, threads);
  nlohmann::json doc{{"dim", dim},
                     {"classes", classes},
                     {"ood_target", ood},
                     {"batch", batch},
                     {"batches", batches},
                     {"threads", threads},
                     {"samples", r.samples},
                     {"max_m_ood", r.max_m_ood},
                     {"seconds", r.seconds},
                     {"per_sample_ms", r.per_sample_ms}};
  if (!out_path.empty()) write_json(out_path, doc);
  out << doc.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
inline int cli_main(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"dynproto: streaming OOD detection with dynamic prototypes"};
  app.require_subcommand(1);
  app.allow_extras(false);

  std::size_t threads = 1;

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "build ID prototypes and theta from training features");
  std::string c_feat, c_lab, c_logits, c_det = "mcm", c_anchors, c_out;
  double c_beta = 5.0, c_tau = 1.0, c_energy = 1.0;
  cal->add_option("--train-features", c_feat, "training features (.dpft)")->required()->check(CLI::ExistingFile);
  cal->add_option("--train-labels", c_lab, "training labels (int32)")->required()->check(CLI::ExistingFile);
  cal->add_option("--train-logits", c_logits, "training logits (.dpft), needed by msp/energy")->check(CLI::ExistingFile);
  cal->add_option("--detector", c_det, "msp|mcm|energy")->capture_default_str();
  cal->add_option("--beta", c_beta, "theta percentile")->capture_default_str();
  cal->add_option("--tau", c_tau, "cosine temperature")->capture_default_str();
  cal->add_option("--energy-temperature", c_energy, "energy score temperature")->capture_default_str();
  cal->add_option("--anchors", c_anchors, "MCM anchor rows (.dpft); default ID prototypes")->check(CLI::ExistingFile);
  cal->add_option("--out", c_out, "calibration artifact (.json)")->required();

  // run
  auto* run = app.add_subcommand("run", "process a feature stream");
  PipelineFlags run_flags;
  std::string r_calib, r_feat, r_logits, r_out, r_protos;
  run->add_option("--calib", r_calib, "calibration artifact")->required()->check(CLI::ExistingFile);
  run->add_option("--stream-features", r_feat, "stream features (.dpft)")->required()->check(CLI::ExistingFile);
  run->add_option("--stream-logits", r_logits, "stream logits (.dpft)")->check(CLI::ExistingFile);
  run->add_option("--out-scores", r_out, "score log (.json)")->required();
  run->add_option("--out-prototypes", r_protos, "final OOD prototype bank (.json)");
  run_flags.add(*run);
  add_threads(*run, threads);

  // eval
  auto* ev = app.add_subcommand("eval", "FPR95 and AUROC of a score log");
  std::string e_scores, e_labels, e_sources, e_out;
  bool e_group = false;
  ev->add_option("--scores", e_scores, "score log from run (.json)")->required()->check(CLI::ExistingFile);
  ev->add_option("--labels", e_labels, "labels (int32, -1 = OOD)")->required()->check(CLI::ExistingFile);
  ev->add_flag("--group-by-source", e_group, "also report each OOD source against all ID samples");
  ev->add_option("--sources", e_sources, "source ids (int32) for --group-by-source")->check(CLI::ExistingFile);
  ev->add_option("--out-report", e_out, "report (.json)")->required();

  // synth
  auto* sy = app.add_subcommand("synth", "generate a synthetic feature set");
  std::string s_spec = "desk-64", s_out;
  sy->add_option("--spec", s_spec, "spec file (.json) or 'desk-64'")->capture_default_str();
  sy->add_option("--out-dir", s_out, "output directory")->required();

  // scenario
  auto* sc = app.add_subcommand("scenario", "run a scenario document over its seeds");
  PipelineFlags sc_flags;
  std::string sc_file, sc_out;
  sc->add_option("--scenario", sc_file, "scenario (.json)")->required()->check(CLI::ExistingFile);
  sc->add_option("--out-report", sc_out, "report (.json)")->required();
  sc->add_option("--config", sc_flags.config_path, "JSON config file applied under the scenario's pipeline block")
      ->check(CLI::ExistingFile);
  add_threads(*sc, threads);

  // ablate
  auto* ab = app.add_subcommand("ablate", "sweep one configuration axis");
  std::string a_file, a_axis, a_values, a_out;
  ab->add_option("--scenario", a_file, "scenario (.json)")->required()->check(CLI::ExistingFile);
  ab->add_option("--axis", a_axis, "copc_only|cluster|cache_init|cache_policy|k|m|beta|t_cold")->required();
  ab->add_option("--values", a_values, "comma-separated values (default: axis defaults)");
  ab->add_option("--out-dir", a_out, "output directory")->required();
  add_threads(*ab, threads);

  // bench
  auto* be = app.add_subcommand("bench", "time the per-batch engine on random features");
  std::size_t b_dim = 512, b_classes = 1000, b_ood = 3000, b_batch = 512, b_batches = 20;
  std::string b_out;
  be->add_option("--dim", b_dim, "feature dimension")->capture_default_str();
  be->add_option("--classes", b_classes, "ID classes")->capture_default_str();
  be->add_option("--ood", b_ood, "target OOD prototype count")->capture_default_str();
  be->add_option("--batch", b_batch, "batch size")->capture_default_str();
  be->add_option("--batches", b_batches, "timed batches")->capture_default_str();
  be->add_option("--out", b_out, "result (.json)");
  add_threads(*be, threads);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << '\n';
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*cal) return cmd_calibrate(c_feat, c_lab, c_logits, c_det, c_beta, c_tau, c_energy, c_anchors, c_out, out);
    if (*run) {
      auto cfg = run_flags.resolve(threads);
      cfg.validate();
      return cmd_run(r_calib, r_feat, r_logits, cfg, r_out, r_protos, out);
    }
    if (*ev) return cmd_eval(e_scores, e_labels, e_group, e_sources, e_out, out);
    if (*sy) return cmd_synth(s_spec, s_out, out);
    if (*sc) return cmd_scenario(sc_file, sc_flags.resolve(threads), threads, sc_out, out);
    if (*ab) return cmd_ablate(a_file, a_axis, a_values, threads, a_out, out);
    if (*be) return cmd_bench(b_dim, b_classes, b_ood, b_batch, b_batches, threads, b_out, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dynproto::cli
