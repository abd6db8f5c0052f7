#include "slicemon/control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace slicemon {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kExact: return "exact";
    case Provenance::kEarlyStopped: return "early-stopped";
    case Provenance::kHeuristic: return "heuristic";
  }
  return "?";
}

void AllocationProblem::validate() const {
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must be in [0,1]");
  for (const auto& pair : pairs) {
    if (pair.candidates.empty()) {
      throw ConfigError("pair without candidates: slice " +
                        std::to_string(pair.slice_id));
    }
    for (const auto& c : pair.candidates) {
      if (c.error < 0.0 || c.overhead < 0.0) {
        throw ConfigError("negative E or Gamma in candidate table");
      }
    }
  }
}

namespace {

struct PairScale {
  double gamma_min = 0.0;
  double gamma_range = 0.0;
};

PairScale scale_of(const PairProblem& pair) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : pair.candidates) {
    lo = std::min(lo, c.overhead);
    hi = std::max(hi, c.overhead);
  }
  return {lo, hi - lo};
}

size_t most_conservative(const PairProblem& pair) {
  // Minimum error; ties resolved toward the smaller delta.
  size_t best = 0;
  for (size_t c = 1; c < pair.candidates.size(); ++c) {
    if (pair.candidates[c].error < pair.candidates[best].error) best = c;
  }
  return best;
}

}  // namespace

double pair_objective_term(const PairProblem& pair, size_t candidate,
                           double lambda) {
  const auto& c = pair.candidates[candidate];
  const auto scale = scale_of(pair);
  const double e_norm = pair.epsilon > 0.0 ? c.error / pair.epsilon : c.error;
  const double g_norm =
      scale.gamma_range > 0.0 ? (c.overhead - scale.gamma_min) / scale.gamma_range
                              : 0.0;
  return lambda * e_norm + (1.0 - lambda) * g_norm;
}

double objective_value(const AllocationProblem& p, std::span<const size_t> choice) {
  double total = 0.0;
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    total += pair_objective_term(p.pairs[i], choice[i], p.lambda);
  }
  return total;
}

namespace {

struct PairPick {
  size_t candidate;
  bool feasible;
};

// Per-pair optimum honoring C1; falls back to the most conservative
// candidate (flagged infeasible) when nothing satisfies the tolerance.
PairPick pick_separable(const PairProblem& pair, double lambda) {
  if (pair.cold) {
    return {most_conservative(pair),
            pair.candidates[most_conservative(pair)].error <= pair.epsilon};
  }
  std::optional<size_t> best;
  for (size_t c = 0; c < pair.candidates.size(); ++c) {
    if (pair.candidates[c].error > pair.epsilon) continue;
    if (!best) {
      best = c;
      continue;
    }
    const double v = pair_objective_term(pair, c, lambda);
    const double bv = pair_objective_term(pair, *best, lambda);
    // Ties resolve toward the larger delta (candidates ascend by delta).
    if (v < bv - 1e-15 || (std::fabs(v - bv) <= 1e-15 &&
                           pair.candidates[c].delta > pair.candidates[*best].delta)) {
      best = c;
    }
  }
  if (best) return {*best, true};
  return {most_conservative(pair), false};
}

EpochDecision assemble(const AllocationProblem& p, std::span<const size_t> choice,
                       std::span<const uint8_t> feasible, Provenance prov) {
  EpochDecision d;
  d.provenance = prov;
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    const auto& pair = p.pairs[i];
    const auto& c = pair.candidates[choice[i]];
    d.assignment[{pair.slice_id, pair.metric}] =
        PairDecision{c.delta, c.error, c.overhead, feasible[i] != 0};
  }
  d.objective = objective_value(p, choice);
  return d;
}

// Deterministic early stopping: the time budget maps to a fixed node budget
// so identical inputs explore identical trees regardless of host speed.
constexpr double kNodesPerSecond = 2e6;

struct BnB {
  const AllocationProblem& p;
  double budget;
  uint64_t node_budget;
  uint64_t nodes = 0;
  bool exhausted = false;

  std::vector<std::vector<size_t>> order;      // candidate order per pair, by term
  std::vector<double> best_term;               // per-pair lower bound on term
  std::vector<double> min_gamma_suffix;        // suffix sums of per-pair min Gamma
  std::vector<double> best_term_suffix;        // suffix sums of per-pair best term

  std::vector<size_t> current;
  std::vector<size_t> incumbent;
  double incumbent_value = std::numeric_limits<double>::infinity();
  bool have_incumbent = false;

  explicit BnB(const AllocationProblem& prob, double b, uint64_t nb)
      : p(prob), budget(b), node_budget(nb) {}

  void run() {
    const size_t n = p.pairs.size();
    order.resize(n);
    best_term.resize(n);
    min_gamma_suffix.assign(n + 1, 0.0);
    best_term_suffix.assign(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
      const auto& pair = p.pairs[i];
      order[i].resize(pair.candidates.size());
      std::iota(order[i].begin(), order[i].end(), size_t{0});
      std::stable_sort(order[i].begin(), order[i].end(), [&](size_t a, size_t b2) {
        return pair_objective_term(pair, a, p.lambda) <
               pair_objective_term(pair, b2, p.lambda);
      });
      best_term[i] = pair_objective_term(pair, order[i][0], p.lambda);
    }
    for (size_t i = n; i-- > 0;) {
      double min_gamma = std::numeric_limits<double>::infinity();
      for (const auto& c : p.pairs[i].candidates) {
        min_gamma = std::min(min_gamma, c.overhead);
      }
      min_gamma_suffix[i] = min_gamma_suffix[i + 1] + min_gamma;
      best_term_suffix[i] = best_term_suffix[i + 1] + best_term[i];
    }
    current.assign(n, 0);
    dfs(0, 0.0, 0.0);
  }

  void dfs(size_t depth, double value, double gamma_used) {
    if (exhausted) return;
    if (++nodes > node_budget) {
      exhausted = true;
      return;
    }
    const size_t n = p.pairs.size();
    if (depth == n) {
      if (gamma_used <= budget && value < incumbent_value) {
        incumbent_value = value;
        incumbent = current;
        have_incumbent = true;
      }
      return;
    }
    // Bound: even the cheapest completion cannot beat the incumbent or fit
    // the budget.
    if (value + best_term_suffix[depth] >= incumbent_value) return;
    if (gamma_used + min_gamma_suffix[depth] > budget) return;

    const auto& pair = p.pairs[depth];
    for (size_t idx : order[depth]) {
      const auto& c = pair.candidates[idx];
      if (c.error > pair.epsilon) continue;  // C1
      if (gamma_used + c.overhead + min_gamma_suffix[depth + 1] > budget) continue;
      const double term = pair_objective_term(pair, idx, p.lambda);
      current[depth] = idx;
      dfs(depth + 1, value + term, gamma_used + c.overhead);
      if (exhausted) return;
    }
  }
};

}  // namespace

EpochDecision solve_exact(const AllocationProblem& p) {
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const size_t n = p.pairs.size();
  std::vector<size_t> choice(n, 0);
  std::vector<uint8_t> feasible(n, true);

  if (!p.overhead_budget_bits) {
    // No cross-pair coupling: the ILP separates per (s, m).
    for (size_t i = 0; i < n; ++i) {
      const auto pick = pick_separable(p.pairs[i], p.lambda);
      choice[i] = pick.candidate;
      feasible[i] = pick.feasible;
    }
    auto d = assemble(p, choice, feasible, Provenance::kExact);
    d.solve_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return d;
  }

  // Budgeted: pairs with no feasible candidate are pre-assigned their most
  // conservative choice; the rest go through branch and bound.
  AllocationProblem sub;
  sub.lambda = p.lambda;
  sub.overhead_budget_bits = p.overhead_budget_bits;
  std::vector<size_t> sub_index;
  double fixed_gamma = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const auto& pair = p.pairs[i];
    bool any_feasible = false;
    for (const auto& c : pair.candidates) {
      if (c.error <= pair.epsilon) {
        any_feasible = true;
        break;
      }
    }
    if (!any_feasible || pair.cold) {
      choice[i] = most_conservative(pair);
      feasible[i] = pair.candidates[choice[i]].error <= pair.epsilon;
      fixed_gamma += pair.candidates[choice[i]].overhead;
    } else {
      sub.pairs.push_back(pair);
      sub_index.push_back(i);
    }
  }

  const uint64_t node_budget = static_cast<uint64_t>(
      std::max(1.0, p.time_budget_s * kNodesPerSecond));
  BnB bnb(sub, *p.overhead_budget_bits - fixed_gamma, node_budget);
  bnb.run();

  EpochDecision d;
  if (!bnb.have_incumbent) {
    d.fallback_required = true;
    d.provenance = bnb.exhausted ? Provenance::kEarlyStopped : Provenance::kExact;
    d.solve_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return d;
  }
  for (size_t k = 0; k < sub_index.size(); ++k) {
    choice[sub_index[k]] = bnb.incumbent[k];
    feasible[sub_index[k]] = true;
  }
  d = assemble(p, choice, feasible,
               bnb.exhausted ? Provenance::kEarlyStopped : Provenance::kExact);
  d.solve_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

EpochDecision solve_greedy(const AllocationProblem& p) {
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const size_t n = p.pairs.size();

  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    const auto& pa = p.pairs[a];
    const auto& pb = p.pairs[b];
    const int ra = criticality_rank(pa.slice_type);
    const int rb = criticality_rank(pb.slice_type);
    if (ra != rb) return ra < rb;               // URLLC > eMBB > mMTC
    if (pa.epsilon != pb.epsilon) return pa.epsilon < pb.epsilon;  // tighter first
    if (pa.slice_id != pb.slice_id) return pa.slice_id < pb.slice_id;
    return metric_index(pa.metric) < metric_index(pb.metric);
  });

  std::vector<size_t> choice(n, 0);
  std::vector<uint8_t> feasible(n, true);
  for (size_t i : idx) {
    const auto& pair = p.pairs[i];
    std::optional<size_t> best;
    if (!pair.cold) {
      for (size_t c = 0; c < pair.candidates.size(); ++c) {
        if (pair.candidates[c].error > pair.epsilon) continue;
        // Lowest overhead; ties toward the larger delta (ascending order
        // makes ">= on later candidates" the tie-break).
        if (!best || pair.candidates[c].overhead <= pair.candidates[*best].overhead) {
          best = c;
        }
      }
    }
    if (best) {
      choice[i] = *best;
      feasible[i] = true;
    } else {
      choice[i] = most_conservative(pair);
      feasible[i] = pair.candidates[choice[i]].error <= pair.epsilon;
    }
  }
  auto d = assemble(p, choice, feasible, Provenance::kHeuristic);
  d.solve_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

AllocationProblem make_problem(const TradeoffModel& model,
                               const std::vector<SliceSpec>& slices,
                               double lambda, double epoch_s, double desk_scale,
                               std::optional<double> budget,
                               double time_budget_s) {
  AllocationProblem p;
  p.lambda = lambda;
  p.overhead_budget_bits = budget;
  p.time_budget_s = time_budget_s;
  for (const auto& s : slices) {
    for (auto m : kAllMetrics) {
      const TradeoffTable* table = model.find(s.slice_id, m);
      if (!table) continue;
      PairProblem pair;
      pair.slice_id = s.slice_id;
      pair.metric = m;
      pair.slice_type = s.type;
      pair.cold = table->cold;
      auto it = s.tolerances.find(m);
      if (it == s.tolerances.end()) continue;
      pair.epsilon = it->second;
      if (m == MetricKind::kLoss) {
        // Loss tolerance is a fraction; the data plane state is a packet
        // count. Convert via the slice's expected packets per epoch.
        const double pkts_per_s = s.traffic.aggregate_mbps() * 1e6 /
                                  desk_scale / (8.0 * s.traffic.mean_pkt_bytes());
        pair.epsilon *= std::max(1.0, pkts_per_s * epoch_s);
      }
      for (const auto& row : table->rows) {
        pair.candidates.push_back({row.delta, row.error, row.overhead});
      }
      p.pairs.push_back(std::move(pair));
    }
  }
  return p;
}

}  // namespace slicemon
