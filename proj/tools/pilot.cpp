// Pilot runs on desk-64 for the end-to-end scenarios. Prints the raw numbers
// the acceptance margins were pinned from (see docs/pilot.md).

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dynproto/harness.hpp"
#include "dynproto/scenarios.hpp"

using namespace dynproto;

int main(int argc, char** argv) {
  CLI::App app{"desk-64 pilot runs"};
  double spread = desk64_spread();
  double tau = kDeskTau;
  std::string only;
  app.add_option("--spread", spread, "cluster spread");
  app.add_option("--tau", tau, "MCM / prototype temperature");
  app.add_option("--only", only, "gain|imbalance|drift|delta");
  CLI11_PARSE(app, argc, argv);

  SyntheticSpec spec = desk64_spec(spread);
  const auto data = generate_synthetic(spec);
  const auto reg = DatasetRegistry::from_synthetic(data);

  if (only.empty() || only == "gain") {
    const auto r = run_scenario(gain_scenario(tau), reg);
    std::printf("[gain] theta=%.6f\n", r.theta);
    for (const auto& s : r.per_seed) {
      std::printf("  seed %llu  dyn fpr %.4f auroc %.4f | base fpr %.4f auroc %.4f | dAUROC %+.4f dFPR %+.4f\n",
                  static_cast<unsigned long long>(s.seed), s.average.fpr95, s.average.auroc,
                  s.base_average.fpr95, s.base_average.auroc, s.average.auroc - s.base_average.auroc,
                  s.average.fpr95 - s.base_average.fpr95);
      for (const auto& [name, e] : s.sources) {
        const auto& b = s.base_sources.at(name);
        std::printf("    %-6s dyn %.4f/%.4f base %.4f/%.4f\n", name.c_str(), e.fpr95, e.auroc, b.fpr95, b.auroc);
      }
    }
  }
  if (only.empty() || only == "imbalance") {
    const auto cells = run_imbalance(imbalance_scenario(tau), imbalance_ratios(), {0, kImbalanceNoise}, reg);
    for (const auto& c : cells) {
      std::printf("[imbalance] %zu:%zu noise %zu  n_id %zu n_ood %zu  dyn fpr %.4f  base fpr %.4f\n",
                  c.ratio.first, c.ratio.second, c.noise_per_batch, c.report.per_seed[0].n_id,
                  c.report.per_seed[0].n_ood, c.report.mean_overall.fpr95, c.report.base_mean_overall.fpr95);
    }
  }
  if (only.empty() || only == "drift") {
    for (auto policy : {CachePolicy::FIFO, CachePolicy::RH}) {
      auto s = drift_scenario(tau);
      s.pipeline.cache_policy = policy;
      const auto r = run_scenario(s, reg);
      std::printf("[drift] %s mean fpr %.4f auroc %.4f  (base %.4f)\n", to_string(policy).c_str(),
                  r.mean_average.fpr95, r.mean_average.auroc, r.base_mean_average.fpr95);
      for (const auto& sr : r.per_seed) std::printf("    seed %llu fpr %.4f\n", static_cast<unsigned long long>(sr.seed), sr.average.fpr95);
    }
  }
  if (only.empty() || only == "delta") {
    const auto h = hypothesis_statistic(reg, tau);
    std::printf("[delta] cutoff %.6f classes %zu median %.6f\n", h.cutoff, h.deltas.size(), h.median);
    for (const auto& d : h.deltas) std::printf("    class %zu delta %.6f\n", d.cls, d.delta);
  }
  return 0;
}
