#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "slicemon/domain.hpp"

namespace slicemon {

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Laplace fit over successive metric differences d(t) = E_curr(t) - E_last(t).
// b == 0 marks the degenerate constant distribution.
struct DiffDistribution {
  double mu = 0.0;
  double b = 0.0;
  size_t sample_count = 0;
  std::vector<double> reservoir;

  bool constant() const { return b == 0.0; }
};

// Laplace MLE: mu = sample median, b = mean absolute deviation from mu.
// Throws InsufficientDataError on an empty sample list (callers keep the
// previous model).
DiffDistribution fit_differences(std::span<const double> samples);

// Insertion probability under threshold delta: simulates the cumulative sum
// D(t) = |sum d(t)| over n_steps draws, resetting whenever D >= delta
// (matching the data plane's >= trigger), and returns resets / n_steps.
// Deterministic for a fixed seed.
double beta_of(const DiffDistribution& dist, double delta, int n_steps,
               uint64_t seed);

// Beta-discounted error upper bound over a path:
//   E = ((|P|-1) - sum_j beta_j) * delta,  j = 1..|P|-1  (upstream hops).
// Clamps at zero (with a warning flag via return only) if the betas
// numerically exceed |P|-1.
double error_bound(double delta, std::span<const double> upstream_betas);

struct HeaderCost {
  double shim_bits = 24.0;      // b0
  double per_hop_bits = 13.0;   // b_h
  double report_bits = 32.0;    // b, per conditional metric report
  // The default charges the shim on every hop: (b0 + b_h)|P|.
  // The per-packet-shim variant charges b0 once: b0 + b_h|P|.
  bool per_packet_shim = false;
};

// Expected telemetry bits per packet: Gamma = (b0 + b_h)|P| + b * sum_j beta_j
// with j = 1..|P| (all hops), or the per-packet-shim variant when configured.
double overhead_bits(std::span<const double> path_betas, const HeaderCost& cost);

// ---------------------------------------------------------------------------
// Lookup tables over the candidate grid

struct TradeoffRow {
  double delta = 0.0;
  std::vector<double> hop_betas;  // one per hop, path order
  double error = 0.0;             // E(delta), metric units
  double overhead = 0.0;          // Gamma(delta), bits/packet
};

struct TradeoffTable {
  uint32_t slice_id = 0;
  MetricKind metric = MetricKind::kLatency;
  int path_len = 1;
  bool cold = false;  // no distribution anywhere: controller goes conservative
  std::vector<TradeoffRow> rows;  // one per grid candidate, ascending delta
};

struct TradeoffModel {
  std::vector<TradeoffTable> tables;  // ordered by (slice, metric)
  const TradeoffTable* find(uint32_t slice, MetricKind m) const;
};

// Distribution source for a build: per (slice, metric, hop node id), with a
// per-(slice, metric) pooled fallback for hops lacking their own samples.
struct DistributionSet {
  std::map<std::tuple<uint32_t, MetricKind, uint16_t>, DiffDistribution> per_hop;
  std::map<std::pair<uint32_t, MetricKind>, DiffDistribution> pooled;

  const DiffDistribution* hop_dist(uint32_t slice, MetricKind m, uint16_t node) const;
  const DiffDistribution* pooled_dist(uint32_t slice, MetricKind m) const;
};

struct BuildOptions {
  int beta_steps = 10'000;
  uint64_t base_seed = 1;
  std::array<HeaderCost, kMetricCount> cost = {
      HeaderCost{},                                   // latency
      HeaderCost{},                                   // jitter
      HeaderCost{24.0, 13.0, 64.0, false},            // loss reports carry aux
  };
  int threads = 0;  // 0: hardware_concurrency
};

// Builds (beta_j, E, Gamma) rows for every candidate of every (slice, metric).
// Pure function of inputs + seed; fans out across worker threads with a
// deterministic merge (stable (slice, metric, candidate) order).
TradeoffModel build_lookup(const DistributionSet& dists,
                           const std::array<CandidateGrid, kMetricCount>& grids,
                           const std::vector<SliceSpec>& slices,
                           const BuildOptions& opt = {});

// CSV export: slice, metric, delta, beta per hop, E, Gamma.
void write_tradeoff_csv(const TradeoffModel& model, std::ostream& out);

}  // namespace slicemon
