#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slicemon/sim.hpp"

namespace slicemon {

// One scheme to run, with its parameter sweep. The active list depends on
// the kind (lambdas for adaptive, deltas for static-agnostic, ...).
struct SchemeSweep {
  SchemeKind kind = SchemeKind::kAdaptive;
  std::vector<double> lambdas = {0.6};
  std::vector<double> deltas = {2.0};
  std::vector<std::array<double, 3>> aware_combos = {{1.0, 2.0, 4.0}};
  std::vector<double> pint_budgets = {64.0};
  std::vector<int> sketch_bins = {10};
};

struct ExperimentSpec {
  std::string name = "scenario";
  WorkloadMix mix = WorkloadMix::kBalanced;
  int n_slices = 30;
  double duration_s = 12.0;
  std::vector<uint64_t> seeds = {1};
  double desk_scale = 100.0;
  double capacity_scale = 1.0;  // extra divisor on link capacities only
  double epoch_s = 5.0;
  double measure_start_s = -1.0;
  int grid_points = 16;
  int beta_steps = 10'000;
  std::optional<double> overhead_budget_bits;
  // ON/OFF burst modulation applied to every slice's traffic profile.
  double burst_period_s = 0.0;
  double burst_duty = 1.0;
  double burst_gain = 1.0;
  int topo_access = 8;
  int topo_aggregation = 4;
  int topo_core = 2;
  std::vector<SchemeSweep> schemes;

  void validate() const;  // throws ConfigError listing offending fields
};

ExperimentSpec spec_from_json(const std::string& json_text);
std::string spec_to_json(const ExperimentSpec& spec);

// Fully determined run identity within a spec.
struct PlannedRun {
  int index = 0;
  SchemeKind kind;
  std::string params;  // "lambda=0.6", "delta=4", ...
  uint64_t seed = 0;
  double lambda = 0.6;
  double delta = 2.0;
  std::array<double, 3> aware = {1.0, 2.0, 4.0};
  double pint_budget = 64.0;
  int bins = 10;
};
std::vector<PlannedRun> plan_runs(const ExperimentSpec& spec);
SimConfig build_sim_config(const ExperimentSpec& spec, const PlannedRun& run);

struct FrontierPoint {
  std::string scheme;
  std::string params;
  double overhead_bits_per_packet = 0.0;
  double violation_fraction = 0.0;
  double violation_urllc = 0.0;
  double violation_embb = 0.0;
  double violation_mmtc = 0.0;
};

// Pareto-optimal subset: a point is dropped only when another point is
// strictly better in both coordinates.
std::vector<FrontierPoint> pareto_frontier(std::vector<FrontierPoint> points);

// CSV emission (schemas documented in the README).
void write_summary_csv(const RunResult& r, const std::string& params,
                       const ExperimentSpec& spec, std::ostream& out);
void write_results_csv(const RunResult& r, const std::vector<SliceSpec>& slices,
                       std::ostream& out);
void write_decisions_csv(const RunResult& r, std::ostream& out);
void write_frontier_csv(const std::vector<FrontierPoint>& points, std::ostream& out);

std::vector<FrontierPoint> read_summary_csvs(const std::vector<std::string>& paths);

// CLI entry points; return a process exit code.
int cmd_run(const std::string& spec_path, const std::string& out_dir, int jobs,
            std::optional<uint64_t> seed_override);
int cmd_frontier(const std::vector<std::string>& inputs, const std::string& out_csv);
int cmd_micro(const std::string& kind, const std::string& out_dir, int jobs,
              uint64_t seed);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace slicemon
