#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "slicemon/domain.hpp"

namespace slicemon {

struct SimConfig;
struct RunResult;

// Fixed thresholds for the static baselines: either one global delta
// (slice-agnostic) or one per slice type (slice-aware). Values never change
// after the run starts.
struct StaticPolicy {
  bool slice_aware = false;
  double global_delta = 2.0;
  std::array<double, 3> per_type_delta = {1.0, 2.0, 4.0};  // URLLC, eMBB, mMTC
};

// PINT-style collector state: the most recently observed latency per
// (slice, hop node).
class HopSampleTable {
 public:
  struct Entry {
    double latency_ms = 0.0;
    double t_ms = 0.0;
  };
  void update(uint32_t slice, uint16_t node, double latency_ms, double t_ms) {
    table_[{slice, node}] = {latency_ms, t_ms};
  }
  const Entry* find(uint32_t slice, uint16_t node) const {
    auto it = table_.find({slice, node});
    return it == table_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::pair<uint32_t, uint16_t>, Entry> table_;
};

// Counting histogram over a fixed latency range; values above the range
// clamp into the last bin. Bin counts equal packets observed since the last
// export (no decay within a period).
class HopHistogram {
 public:
  HopHistogram() : HopHistogram(10, 0.0, 1.0) {}
  HopHistogram(int bins, double lo, double hi);

  void add(double v);
  void reset();
  uint64_t total() const { return total_; }
  int bins() const { return static_cast<int>(counts_.size()); }
  double midpoint(int bin) const;
  uint64_t count(int bin) const { return counts_[bin]; }

 private:
  double lo_;
  double hi_;
  std::vector<uint64_t> counts_;
  uint64_t total_ = 0;
};

// Discrete distribution as (value, probability) pairs, ascending by value.
using DiscreteDist = std::vector<std::pair<double, double>>;

DiscreteDist histogram_dist(const HopHistogram& h);
// Convolution of independent per-hop distributions (sum of midpoints).
DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b);
double quantile_of(const DiscreteDist& d, double q);
// P90 (or another quantile) of the sum across hops.
double convolved_p90(const std::vector<const HopHistogram*>& hops, double q = 0.9);

// Baseline runners: identical traffic, topology, and ground truth as the main
// system for a given seed; only the telemetry policy differs.
RunResult run_static(const StaticPolicy& policy, const SimConfig& cfg);
RunResult run_pint_like(double per_packet_bit_budget, const SimConfig& cfg);
RunResult run_sketch_like(int bins, double export_ms, const SimConfig& cfg);

}  // namespace slicemon
