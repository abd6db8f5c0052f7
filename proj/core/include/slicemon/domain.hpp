#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slicemon {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AbsentMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// SLA metrics. Latency and jitter aggregate additively across hops; loss
// aggregates additively over per-hop counter differences.
enum class MetricKind : uint8_t { kLatency = 0, kJitter = 1, kLoss = 2 };
inline constexpr std::array<MetricKind, 3> kAllMetrics = {
    MetricKind::kLatency, MetricKind::kJitter, MetricKind::kLoss};
inline constexpr size_t kMetricCount = 3;

constexpr size_t metric_index(MetricKind m) { return static_cast<size_t>(m); }
std::string to_string(MetricKind m);
MetricKind metric_from_string(const std::string& s);

enum class SliceType : uint8_t { kUrllc = 0, kEmbb = 1, kMmtc = 2 };
inline constexpr std::array<SliceType, 3> kAllSliceTypes = {
    SliceType::kUrllc, SliceType::kEmbb, SliceType::kMmtc};
std::string to_string(SliceType t);
SliceType slice_type_from_string(const std::string& s);

// Lower index = more critical (URLLC first). Used for the greedy solver
// ordering and WRR class mapping.
constexpr int criticality_rank(SliceType t) { return static_cast<int>(t); }

struct TrafficProfile {
  int pkt_bytes_min = 64;
  int pkt_bytes_max = 64;
  double rate_mbps_per_user = 1.0;
  int user_count = 1;
  // Optional ON/OFF modulation: rate is multiplied by burst_gain during the
  // first burst_duty fraction of every burst_period_s window.
  double burst_period_s = 0.0;
  double burst_duty = 1.0;
  double burst_gain = 1.0;

  double aggregate_mbps() const { return rate_mbps_per_user * user_count; }
  double mean_pkt_bytes() const { return 0.5 * (pkt_bytes_min + pkt_bytes_max); }
};

struct PathSpec {
  uint16_t path_id = 0;
  std::vector<uint16_t> hops;          // switch node ids, ingress first
  std::vector<uint8_t> egress_ports;   // one per hop
};

struct SliceSpec {
  uint32_t slice_id = 0;
  SliceType type = SliceType::kUrllc;
  // alpha per metric: ms for latency/jitter, fraction in [0,1] for loss.
  std::map<MetricKind, double> sla_targets;
  // epsilon per metric, same units as alpha.
  std::map<MetricKind, double> tolerances;
  std::vector<PathSpec> paths;
  TrafficProfile traffic;
};

// epsilon = tolerance_fraction * alpha. Throws AbsentMetricError when the
// slice has no SLA for the metric.
double tolerance_of(const SliceSpec& slice, MetricKind m,
                    double tolerance_fraction = 0.05);

// ---------------------------------------------------------------------------
// Topology

enum class Tier : uint8_t { kAccess = 0, kAggregation = 1, kCore = 2 };

struct LinkSpec {
  uint16_t src = 0;
  uint16_t dst = 0;
  double capacity_bps = 0.0;
  int64_t prop_delay_ns = 0;
};

struct Topology {
  int n_access = 8;
  int n_aggregation = 4;
  int n_core = 2;
  std::vector<LinkSpec> links;  // directed

  int switch_count() const { return n_access + n_aggregation + n_core; }
  Tier tier_of(uint16_t sw) const;
  const LinkSpec* find_link(uint16_t src, uint16_t dst) const;
};

struct TopologyOptions {
  int n_access = 8;
  int n_aggregation = 4;
  int n_core = 2;
  // Per-tier capacities before desk-scale division; ratio 25:40:100.
  double access_gbps = 25.0;
  double aggregation_gbps = 40.0;
  double core_gbps = 100.0;
  double scale = 100.0;  // desk-scale divisor for capacities
  int64_t prop_delay_ns = 10'000;
};

Topology make_topology(const TopologyOptions& opt = {});

// ---------------------------------------------------------------------------
// Candidate threshold grid

struct CandidateGrid {
  std::vector<double> candidates;  // strictly increasing, >= 0
  double step = 0.05;
  int bit_width = 8;

  void validate() const;  // throws ConfigError
  double min() const { return candidates.front(); }
  double max() const { return candidates.back(); }
};

// Latency/jitter grids live on the 0.05 fixed-point lattice in [0.05, 12.75]
// ms; the loss grid is in packet counts. `points` selects a log-spaced subset
// of the 8-bit lattice.
CandidateGrid default_grid(MetricKind m, int points = 16);

// ---------------------------------------------------------------------------
// Workloads

enum class WorkloadMix : uint8_t { kSmallPackets = 0, kBalanced = 1, kLargePackets = 2 };
std::string to_string(WorkloadMix m);
WorkloadMix mix_from_string(const std::string& s);  // throws ConfigError

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Per-type SLA and traffic ranges. "< x" table entries are represented as
// [x/10, x].
struct SliceTypeRanges {
  Range latency_ms;
  Range loss_fraction;
  Range jitter_ms;
  Range pkt_bytes;
  Range mbps_per_user;
  Range users;
};

struct WorkloadTable {
  int version = 1;
  std::array<SliceTypeRanges, 3> by_type;  // indexed by SliceType
  const SliceTypeRanges& of(SliceType t) const {
    return by_type[static_cast<size_t>(t)];
  }
};

const WorkloadTable& builtin_workload_table();

struct WorkloadOptions {
  double tolerance_fraction = 0.05;
  int paths_per_slice_min = 1;
  int paths_per_slice_max = 2;
  WorkloadTable table = builtin_workload_table();
};

// Slice-type counts for a mix: SP 60/20/20, BAL 33/33/33, LP 20/60/20
// (URLLC/eMBB/mMTC), largest-remainder rounding.
std::array<int, 3> mix_counts(WorkloadMix mix, int n_slices);

// Deterministic workload generation over a topology. Pure function of
// (mix, n_slices, seed, topology, options); path ids are unique 16-bit values
// (rerolled on collision).
std::vector<SliceSpec> make_workload(WorkloadMix mix, int n_slices,
                                     uint64_t seed, const Topology& topo,
                                     const WorkloadOptions& opt = {});

// Convenience overload over the default topology.
std::vector<SliceSpec> make_workload(WorkloadMix mix, int n_slices,
                                     uint64_t seed);

}  // namespace slicemon
