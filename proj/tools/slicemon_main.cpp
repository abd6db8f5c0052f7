// slicemon: SLA-aware slice monitoring simulator and experiment driver.
//
//   slicemon run      --spec scenario.json --out results/ [--jobs N] [--seed S]
//   slicemon frontier --inputs 'results/*_summary.csv' --out frontier.csv
//   slicemon micro    --kind tau|buckets|solver-scaling --out micro/ [--seed S]
//   slicemon workload --mix BAL --n 30 --seed 7 --out workload.json

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slicemon/config.hpp"
#include "slicemon/experiment.hpp"

namespace fs = std::filesystem;

namespace {

// Expands a glob-ish pattern (directory/*_suffix.csv) or passes paths through.
std::vector<std::string> expand_inputs(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    const auto star = item.find('*');
    if (star == std::string::npos) {
      out.push_back(item);
      continue;
    }
    const fs::path p(item);
    const fs::path dir = p.parent_path().empty() ? "." : p.parent_path();
    const std::string pattern = p.filename().string();
    const std::string prefix = pattern.substr(0, pattern.find('*'));
    const std::string suffix = pattern.substr(pattern.find('*') + 1);
    if (!fs::exists(dir)) continue;
    std::vector<std::string> matched;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() < prefix.size() + suffix.size()) continue;
      if (name.rfind(prefix, 0) != 0) continue;
      if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
        continue;
      matched.push_back(entry.path().string());
    }
    std::sort(matched.begin(), matched.end());
    out.insert(out.end(), matched.begin(), matched.end());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLA-aware network slice monitoring simulator"};
  app.require_subcommand(1);

  // run
  std::string spec_path, out_dir = "results";
  int jobs = 0;
  std::optional<uint64_t> seed_override;
  uint64_t seed_val = 0;
  auto* run_cmd = app.add_subcommand("run", "execute an experiment spec");
  run_cmd->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--jobs", jobs, "parallel runs (0 = cores)");
  auto* run_seed = run_cmd->add_option("--seed", seed_val, "override spec seeds");

  // frontier
  std::vector<std::string> inputs;
  std::string frontier_out = "frontier.csv";
  auto* frontier_cmd =
      app.add_subcommand("frontier", "extract the Pareto frontier from summaries");
  frontier_cmd->add_option("--inputs", inputs, "summary CSVs (supports '*')")
      ->required();
  frontier_cmd->add_option("--out", frontier_out, "frontier CSV path");

  // micro
  std::string micro_kind, micro_out = "micro";
  uint64_t micro_seed = 1;
  auto* micro_cmd = app.add_subcommand("micro", "microbenchmarks");
  micro_cmd->add_option("--kind", micro_kind, "tau | buckets | solver-scaling")
      ->required();
  micro_cmd->add_option("--out", micro_out, "output directory");
  micro_cmd->add_option("--seed", micro_seed, "base seed");
  micro_cmd->add_option("--jobs", jobs, "parallel runs (0 = cores)");

  // workload
  std::string wl_mix = "BAL", wl_out = "workload.json";
  int wl_n = 30;
  uint64_t wl_seed = 1;
  auto* wl_cmd = app.add_subcommand("workload", "generate a workload file");
  wl_cmd->add_option("--mix", wl_mix, "SP | BAL | LP");
  wl_cmd->add_option("--n", wl_n, "slice count (>= 3)");
  wl_cmd->add_option("--seed", wl_seed, "generation seed");
  wl_cmd->add_option("--out", wl_out, "output JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      if (*run_seed) seed_override = seed_val;
      return slicemon::cmd_run(spec_path, out_dir, jobs, seed_override);
    }
    if (*frontier_cmd) {
      return slicemon::cmd_frontier(expand_inputs(inputs), frontier_out);
    }
    if (*micro_cmd) {
      return slicemon::cmd_micro(micro_kind, micro_out, jobs, micro_seed);
    }
    if (*wl_cmd) {
      const auto mix = slicemon::mix_from_string(wl_mix);
      const auto topo = slicemon::make_topology();
      const auto slices = slicemon::make_workload(mix, wl_n, wl_seed, topo);
      slicemon::save_text(wl_out, slicemon::slices_to_json(slices));
      std::printf("wrote %zu slices to %s\n", slices.size(), wl_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
