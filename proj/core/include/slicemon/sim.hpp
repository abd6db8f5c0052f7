#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slicemon/control.hpp"
#include "slicemon/dataplane.hpp"
#include "slicemon/domain.hpp"
#include "slicemon/tradeoff.hpp"

namespace slicemon {

struct WrrWeights {
  int urllc = 4;
  int embb = 2;
  int mmtc = 1;
  int of(SliceType t) const {
    switch (t) {
      case SliceType::kUrllc: return urllc;
      case SliceType::kEmbb: return embb;
      case SliceType::kMmtc: return mmtc;
    }
    return 1;
  }
};

enum class SchemeKind : uint8_t {
  kAdaptive = 0,      // closed-loop controller
  kStaticAgnostic,    // one global delta
  kStaticAware,       // one delta per slice type
  kPintLike,          // probabilistic per-hop sampling
  kSketchLike,        // per-hop histograms, periodic export
};
std::string to_string(SchemeKind k);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::kAdaptive;
  double static_delta = 2.0;  // slice-agnostic: same value for every metric
  std::array<double, 3> aware_delta = {1.0, 2.0, 4.0};  // by slice type
  double pint_bits_budget = 64.0;  // conditional bits/packet budget
  int sketch_bins = 10;
  double sketch_export_ms = 500.0;
};

struct ControllerConfig {
  double epoch_s = 5.0;
  double lambda = 0.6;
  double solver_budget_frac = 0.5;  // of the epoch length
  std::optional<double> overhead_budget_bits;
  int beta_steps = 10'000;
  int grid_points = 16;
  bool per_packet_shim = false;
  bool force_greedy = false;  // skip the exact solver (microbenchmarks)
  int lookup_threads = 0;
};

// Test and experiment hooks. All latency injections are real processing time
// added at the switch, so forwarding and telemetry see the same world.
struct LatencyNoiseHook {
  uint32_t slice_id = 0;  // 0: all slices
  uint16_t node_id = 0xffff;  // 0xffff: all switches
  double start_s = 0.0;
  double end_s = -1.0;  // < 0: open-ended
  double amplitude_ms = 0.0;  // uniform [0, A] per packet-hop
};
struct HopModulationHook {
  uint16_t node_id = 0;
  // Adds A * (1 + sin(2*pi*(t/period + phase))) of processing delay. Two
  // hooks with phases 0 and 0.5 are anti-correlated and sum to a constant.
  double amplitude_ms = 0.0;
  double period_s = 0.2;
  double phase = 0.0;  // fraction of period
};
struct DropInjectionHook {
  uint16_t node_id = 0;
  uint32_t every_nth = 0;  // drop every nth packet of the slice at this node
  uint32_t slice_id = 0;   // 0: all slices
};

// Overrides the observed and true hop latency for (node, per-slice packet
// seq); used by walkthrough-style replays.
struct ScriptedLatency {
  std::map<std::pair<uint16_t, uint64_t>, double> by_node_seq;
};

struct SimConfig {
  Topology topology = make_topology();
  std::vector<SliceSpec> slices;
  double duration_s = 12.0;
  uint64_t seed = 1;
  double desk_scale = 100.0;  // rate divisor; times are rescaled on readout

  SwitchConfig switch_cfg;
  double proc_delay_us = 1.0;  // per-switch processing (descaled units)
  double buffer_bytes = 22e6;  // per port
  WrrWeights wrr;
  bool prime_state = false;  // pre-install bucket entries for all keys

  double measure_start_s = -1.0;  // default: one epoch
  double p90_interval_ms = 500.0;
  bool keep_packet_trace = false;
  size_t trace_limit = 500'000;

  SchemeConfig scheme;
  ControllerConfig controller;

  std::vector<LatencyNoiseHook> latency_noise;
  std::vector<HopModulationHook> hop_modulation;
  std::vector<DropInjectionHook> drop_injection;
  std::shared_ptr<ScriptedLatency> scripted;
};

// ---------------------------------------------------------------------------
// Results

struct SliceMetricResult {
  uint64_t packets = 0;  // measured packets with a defined truth
  uint64_t violations = 0;
  double abs_err_sum = 0.0;
  uint64_t reports = 0;  // conditional reports seen at the egress
  bool absent = true;    // no traffic measured

  double violation_fraction() const {
    return packets ? static_cast<double>(violations) / packets : 0.0;
  }
  double mean_abs_error() const {
    return packets ? abs_err_sum / packets : 0.0;
  }
};

struct EpochLogRow {
  int epoch = 0;
  uint32_t slice_id = 0;
  MetricKind metric = MetricKind::kLatency;
  double delta = 0.0;
  double error = 0.0;
  double overhead = 0.0;
  bool feasible = true;
  Provenance provenance = Provenance::kExact;
  double solve_ms = 0.0;
  double lookup_ms = 0.0;
};

struct PacketRecord {
  uint32_t slice_id = 0;
  uint16_t path_id = 0;
  double t_ms = 0.0;  // delivery time, descaled
  std::array<double, kMetricCount> reported{};
  std::array<double, kMetricCount> truth{};
  std::array<bool, kMetricCount> defined{};
};

struct IntervalP90 {
  double t_start_ms = 0.0;
  uint32_t slice_id = 0;
  double p90_true = 0.0;
  double p90_reported = 0.0;
  uint64_t samples = 0;
};

struct RunResult {
  std::string scheme;
  std::string params;
  uint64_t seed = 0;
  double duration_s = 0.0;
  double measured_s = 0.0;

  std::map<std::pair<uint32_t, MetricKind>, SliceMetricResult> by_slice_metric;
  std::map<uint32_t, SliceType> slice_types;

  uint64_t packets_generated = 0;
  uint64_t packets_delivered = 0;
  uint64_t packets_dropped = 0;
  uint64_t packets_measured = 0;

  // Wire accounting over the measurement window.
  uint64_t telemetry_bits = 0;
  uint64_t total_bits = 0;
  uint64_t reports = 0;

  uint64_t lookups = 0;
  uint64_t misses = 0;
  uint64_t recovery_bits = 0;      // forced-full conditional bits
  uint64_t notification_bits = 0;  // miss notification traffic
  uint64_t header_overflows = 0;
  uint64_t insertions = 0;

  bool saturated = false;
  // Packets served per WRR class on the most loaded port (share checks).
  std::array<uint64_t, 3> busiest_port_served{};

  std::vector<IntervalP90> p90;
  std::vector<EpochLogRow> epoch_log;
  std::vector<PacketRecord> trace;

  double overhead_fraction() const {
    return total_bits ? static_cast<double>(telemetry_bits) / total_bits : 0.0;
  }
  double telemetry_bits_per_packet() const {
    return packets_measured ? static_cast<double>(telemetry_bits) / packets_measured
                            : 0.0;
  }
  double miss_rate() const {
    return lookups ? static_cast<double>(misses) / lookups : 0.0;
  }
  double recovery_relative() const {
    return telemetry_bits
               ? static_cast<double>(recovery_bits + notification_bits) / telemetry_bits
               : 0.0;
  }
  double reports_per_sec() const {
    return measured_s > 0 ? reports / measured_s : 0.0;
  }
  // Aggregate violation fraction, optionally filtered by type and metric.
  double violation_fraction(std::optional<SliceType> type = std::nullopt,
                            std::optional<MetricKind> metric = std::nullopt) const;
  // False when no packets produced a defined estimate for the filter
  // (absent, not zero: e.g. per-packet tracking under the sketch baseline).
  bool violation_defined(std::optional<SliceType> type = std::nullopt,
                         std::optional<MetricKind> metric = std::nullopt) const;
};

// Runs one simulation to completion. Deterministic for a fixed config+seed.
RunResult run(const SimConfig& cfg);

// Arrival stream for one slice (all paths merged, ascending time): used by
// tests; the engine draws the same streams internally.
struct ArrivalEvent {
  int64_t t_ns = 0;  // virtual time
  int path_index = 0;
  int size_bytes = 0;
};
std::vector<ArrivalEvent> gen_traffic(const SliceSpec& slice, uint64_t seed,
                                      double duration_s, double desk_scale);

// Recomputes per-(slice, metric) violation counts from a packet trace;
// independent recount oracle for the engine's incremental accounting.
std::map<std::pair<uint32_t, MetricKind>, SliceMetricResult> measure_trace(
    const std::vector<PacketRecord>& trace,
    const std::vector<SliceSpec>& slices);

}  // namespace slicemon
