#pragma once

// JSON documents for calibration artifacts, score logs and run reports.
// Keys are emitted in sorted order so identical inputs give identical bytes.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynproto/dataio.hpp"
#include "dynproto/harness.hpp"
#include "dynproto/metrics.hpp"
#include "dynproto/pipeline.hpp"

namespace dynproto {

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"fpr95", r.fpr95}, {"auroc", r.auroc}, {"n_id", r.n_id}, {"n_ood", r.n_ood}, {"gamma95", r.gamma95}};
}

inline nlohmann::json to_json(const MetricPair& m) { return {{"fpr95", m.fpr95}, {"auroc", m.auroc}}; }

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const std::vector<BatchDiagnostics>& diags) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : diags) {
    arr.push_back({{"t", d.t},
                   {"alpha", optional_json(d.alpha)},
                   {"m_ood", d.m_ood},
                   {"cached_count", d.cached_count},
                   {"size", d.size},
                   {"phase", to_string(d.phase)}});
  }
  return arr;
}

inline nlohmann::json to_json(const SeedResult& r) {
  nlohmann::json sources = nlohmann::json::object();
  for (const auto& [k, v] : r.sources) sources[k] = to_json(v);
  nlohmann::json base_sources = nlohmann::json::object();
  for (const auto& [k, v] : r.base_sources) base_sources[k] = to_json(v);
  nlohmann::json j{{"seed", r.seed},
                   {"sources", sources},
                   {"average", to_json(r.average)},
                   {"overall", to_json(r.overall)},
                   {"base_sources", base_sources},
                   {"base_average", to_json(r.base_average)},
                   {"base_overall", to_json(r.base_overall)},
                   {"diagnostics", to_json(r.diagnostics)},
                   {"final_alpha", optional_json(r.final_alpha)},
                   {"n_id", r.n_id},
                   {"n_ood", r.n_ood}};
  if (!r.scores.empty()) {
    j["scores"] = r.scores;
    j["base_scores"] = r.base_scores;
    j["stream_sources"] = r.stream_sources;
  }
  return j;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.per_seed) seeds.push_back(to_json(s));
  nlohmann::json mean_sources = nlohmann::json::object();
  for (const auto& [k, v] : r.mean_sources) mean_sources[k] = to_json(v);
  return {{"name", r.name},
          {"config", r.config},
          {"theta", r.theta},
          {"per_seed", seeds},
          {"mean_sources", mean_sources},
          {"mean_average", to_json(r.mean_average)},
          {"mean_overall", to_json(r.mean_overall)},
          {"base_mean_average", to_json(r.base_mean_average)},
          {"base_mean_overall", to_json(r.base_mean_overall)},
          {"final_prototypes", prototypes_to_json(r.final_prototypes)}};
}

inline nlohmann::json to_json(const StreamLog& log) {
  std::vector<int> dyn(log.dyn_used.begin(), log.dyn_used.end());
  return {{"scores", log.scores},
          {"base_scores", log.base_scores},
          {"dyn_used", dyn},
          {"predicted", log.predicted},
          {"batches", to_json(log.batches)}};
}

// ---------------------------------------------------------------------------
// Calibration artifact

inline nlohmann::json to_json(const Calibration& c) {
  nlohmann::json anchors = nlohmann::json::array();
  for (std::size_t i = 0; i < c.anchors.rows(); ++i) {
    auto r = c.anchors.row(i);
    anchors.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"format", "dynproto-calibration"},
          {"version", 1},
          {"detector", to_string(c.detector)},
          {"beta", c.beta},
          {"tau", c.tau},
          {"energy_temperature", c.energy_temperature},
          {"theta", c.theta},
          {"num_classes", c.id_protos.size()},
          {"dim", c.id_protos.empty() ? 0 : c.id_protos.front().vector.size()},
          {"id_prototypes", prototypes_to_json(c.id_protos)},
          {"anchors", anchors}};
}

inline Calibration calibration_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "dynproto-calibration") {
      fail(ErrorCode::InvalidSpec, "not a calibration artifact");
    }
    if (j.at("version").get<int>() != 1) fail(ErrorCode::UnsupportedVersion, "calibration version");
    Calibration c;
    c.detector = parse_detector(j.at("detector").get<std::string>());
    c.beta = j.at("beta").get<double>();
    c.tau = j.at("tau").get<double>();
    c.energy_temperature = j.at("energy_temperature").get<double>();
    c.theta = j.at("theta").get<double>();
    c.id_protos = prototypes_from_json(j.at("id_prototypes"));
    if (c.id_protos.empty()) fail(ErrorCode::MissingClass, "calibration has no prototypes");
    const std::size_t d = c.id_protos.front().vector.size();
    for (const auto& p : c.id_protos) {
      if (p.vector.size() != d) fail(ErrorCode::DimensionMismatch, "prototype dimensions differ");
    }
    const auto& anchors = j.at("anchors");
    if (!anchors.empty()) {
      c.anchors = FeatureMatrix(d);
      for (const auto& a : anchors) c.anchors.push_back(a.get<std::vector<double>>());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("calibration: ") + e.what());
  }
}

inline void export_report(const std::filesystem::path& path, const RunReport& r) { write_json(path, to_json(r)); }

}  // namespace dynproto
