#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicemon/domain.hpp"
#include "slicemon/tradeoff.hpp"

namespace slicemon {

struct CandidateEval {
  double delta = 0.0;
  double error = 0.0;     // E(delta), metric units
  double overhead = 0.0;  // Gamma(delta), bits/packet
};

struct PairProblem {
  uint32_t slice_id = 0;
  MetricKind metric = MetricKind::kLatency;
  SliceType slice_type = SliceType::kUrllc;
  double epsilon = 0.0;
  bool cold = false;
  std::vector<CandidateEval> candidates;  // ascending delta
};

struct AllocationProblem {
  std::vector<PairProblem> pairs;
  double lambda = 0.6;  // in [0,1]; larger favors accuracy
  std::optional<double> overhead_budget_bits;  // optional global budget B
  double time_budget_s = 2.5;

  void validate() const;  // throws ConfigError
};

enum class Provenance : uint8_t { kExact = 0, kEarlyStopped = 1, kHeuristic = 2 };
std::string to_string(Provenance p);

struct PairDecision {
  double delta = 0.0;
  double error = 0.0;
  double overhead = 0.0;
  bool feasible = true;  // E <= epsilon held for the chosen candidate
  bool operator==(const PairDecision&) const = default;
};

struct EpochDecision {
  std::map<std::pair<uint32_t, MetricKind>, PairDecision> assignment;
  double objective = 0.0;
  Provenance provenance = Provenance::kExact;
  double solve_wall_s = 0.0;
  // Set when a budgeted solve timed out with no feasible incumbent; the
  // caller falls back to the greedy heuristic.
  bool fallback_required = false;
};

// Normalized per-pair objective term for candidate c:
//   lambda * E/epsilon + (1-lambda) * (Gamma - Gamma_min)/(Gamma_max - Gamma_min)
// Raw E and Gamma have incompatible units (metric units vs. bits), so the
// optimizer works on these dimensionless terms; C1 feasibility and the budget
// constraint use the raw values.
double pair_objective_term(const PairProblem& pair, size_t candidate,
                           double lambda);

// Objective of a full assignment (candidate index per pair), for oracles.
double objective_value(const AllocationProblem& p,
                       std::span<const size_t> choice);

// Exact solve. Without a budget the problem separates per (s,m): feasible
// argmin of the objective term, most-conservative fallback (min E, flagged
// infeasible) when no candidate meets C1. With a budget: depth-first branch
// and bound under a deterministic node budget derived from time_budget_s; on
// exhaustion returns the best incumbent as early-stopped, or signals
// fallback_required.
EpochDecision solve_exact(const AllocationProblem& p);

// Greedy criticality-ordered heuristic: URLLC before eMBB before mMTC,
// ascending epsilon within a type, ties by slice id. Per pair: cheapest
// feasible candidate (ties toward larger delta), else minimum-E candidate.
EpochDecision solve_greedy(const AllocationProblem& p);

// Assembles an AllocationProblem from tradeoff tables and slice tolerances.
// Loss tolerances are converted from fractions to expected packet counts per
// epoch so they compare against count-valued loss error bounds.
AllocationProblem make_problem(const TradeoffModel& model,
                               const std::vector<SliceSpec>& slices,
                               double lambda, double epoch_s,
                               double desk_scale,
                               std::optional<double> budget = std::nullopt,
                               double time_budget_s = 2.5);

}  // namespace slicemon
