#include "slicemon/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "slicemon/rng.hpp"

namespace slicemon {

std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::kLatency: return "latency";
    case MetricKind::kJitter: return "jitter";
    case MetricKind::kLoss: return "loss";
  }
  return "?";
}

MetricKind metric_from_string(const std::string& s) {
  if (s == "latency") return MetricKind::kLatency;
  if (s == "jitter") return MetricKind::kJitter;
  if (s == "loss") return MetricKind::kLoss;
  throw ConfigError("unknown metric: " + s);
}

std::string to_string(SliceType t) {
  switch (t) {
    case SliceType::kUrllc: return "urllc";
    case SliceType::kEmbb: return "embb";
    case SliceType::kMmtc: return "mmtc";
  }
  return "?";
}

SliceType slice_type_from_string(const std::string& s) {
  if (s == "urllc") return SliceType::kUrllc;
  if (s == "embb") return SliceType::kEmbb;
  if (s == "mmtc") return SliceType::kMmtc;
  throw ConfigError("unknown slice type: " + s);
}

std::string to_string(WorkloadMix m) {
  switch (m) {
    case WorkloadMix::kSmallPackets: return "SP";
    case WorkloadMix::kBalanced: return "BAL";
    case WorkloadMix::kLargePackets: return "LP";
  }
  return "?";
}

WorkloadMix mix_from_string(const std::string& s) {
  if (s == "SP" || s == "sp") return WorkloadMix::kSmallPackets;
  if (s == "BAL" || s == "bal") return WorkloadMix::kBalanced;
  if (s == "LP" || s == "lp") return WorkloadMix::kLargePackets;
  throw ConfigError("unknown workload mix: " + s);
}

double tolerance_of(const SliceSpec& slice, MetricKind m,
                    double tolerance_fraction) {
  auto it = slice.sla_targets.find(m);
  if (it == slice.sla_targets.end()) {
    throw AbsentMetricError("slice " + std::to_string(slice.slice_id) +
                            " has no SLA for " + to_string(m));
  }
  return tolerance_fraction * it->second;
}

Tier Topology::tier_of(uint16_t sw) const {
  if (sw < n_access) return Tier::kAccess;
  if (sw < n_access + n_aggregation) return Tier::kAggregation;
  return Tier::kCore;
}

const LinkSpec* Topology::find_link(uint16_t src, uint16_t dst) const {
  for (const auto& l : links) {
    if (l.src == src && l.dst == dst) return &l;
  }
  return nullptr;
}

// Three-tier fat-tree-ish transport: every access switch uplinks to two
// aggregation switches, every aggregation switch to every core switch.
Topology make_topology(const TopologyOptions& opt) {
  Topology t;
  t.n_access = opt.n_access;
  t.n_aggregation = opt.n_aggregation;
  t.n_core = opt.n_core;
  const double acc = opt.access_gbps * 1e9 / opt.scale;
  const double agg = opt.aggregation_gbps * 1e9 / opt.scale;
  const double core = opt.core_gbps * 1e9 / opt.scale;
  const int64_t prop = static_cast<int64_t>(opt.prop_delay_ns * opt.scale);

  auto both = [&](uint16_t a, uint16_t b, double cap) {
    t.links.push_back({a, b, cap, prop});
    t.links.push_back({b, a, cap, prop});
  };
  for (int a = 0; a < opt.n_access; ++a) {
    const uint16_t agg0 = opt.n_access + (a % opt.n_aggregation);
    const uint16_t agg1 = opt.n_access + ((a + 1) % opt.n_aggregation);
    both(a, agg0, acc);
    if (agg1 != agg0) both(a, agg1, acc);
  }
  for (int g = 0; g < opt.n_aggregation; ++g) {
    for (int c = 0; c < opt.n_core; ++c) {
      both(opt.n_access + g, opt.n_access + opt.n_aggregation + c, agg);
    }
  }
  // Core mesh.
  for (int c0 = 0; c0 < opt.n_core; ++c0) {
    for (int c1 = c0 + 1; c1 < opt.n_core; ++c1) {
      both(opt.n_access + opt.n_aggregation + c0,
           opt.n_access + opt.n_aggregation + c1, core);
    }
  }
  return t;
}

void CandidateGrid::validate() const {
  if (candidates.empty()) throw ConfigError("empty candidate grid");
  if (candidates.size() > (size_t{1} << bit_width)) {
    throw ConfigError("candidate grid exceeds 2^bit_width entries");
  }
  double prev = -1.0;
  for (double c : candidates) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw ConfigError("grid candidates must be finite and >= 0");
    }
    if (c <= prev) throw ConfigError("grid candidates must be strictly increasing");
    prev = c;
  }
}

CandidateGrid default_grid(MetricKind m, int points) {
  CandidateGrid g;
  g.bit_width = 8;
  if (m == MetricKind::kLoss) {
    // Packet counts 1, 2, 4, ... (loss state is counter-valued in the
    // data plane; the collector normalizes to a fraction).
    g.step = 1.0;
    double v = 1.0;
    for (int i = 0; i < points; ++i) {
      g.candidates.push_back(v);
      v *= 2.0;
    }
  } else {
    // Log-spaced subset of the 8-bit 0.05-step lattice: 0.05 .. 12.75 ms.
    g.step = 0.05;
    const double lo = 0.05, hi = 12.75;
    double prev = -1.0;
    for (int i = 0; i < points; ++i) {
      const double raw =
          lo * std::pow(hi / lo, points == 1 ? 0.0 : double(i) / (points - 1));
      double snapped = std::round(raw / g.step) * g.step;
      snapped = std::min(hi, std::max(lo, snapped));
      if (snapped <= prev) snapped = prev + g.step;
      g.candidates.push_back(snapped);
      prev = snapped;
    }
  }
  g.validate();
  return g;
}

const WorkloadTable& builtin_workload_table() {
  // Version 1; latency/jitter in ms, loss as fraction, rates in Mbps/user.
  static const WorkloadTable table = [] {
    WorkloadTable t;
    t.version = 1;
    t.by_type[0] = {/*latency*/ {1.0, 5.0},
                    /*loss*/ {1e-6, 1e-5},
                    /*jitter*/ {0.1, 1.0},
                    /*pkt*/ {20, 250},
                    /*mbps*/ {1.0, 10.0},
                    /*users*/ {3, 10}};
    t.by_type[1] = {{10.0, 50.0}, {1e-3, 1e-2}, {5.0, 30.0},
                    {1000, 1500}, {15.0, 50.0}, {10, 20}};
    t.by_type[2] = {{50.0, 100.0}, {1e-2, 1e-1}, {50.0, 100.0},
                    {20, 125},     {0.001, 0.1}, {10000, 10000}};
    return t;
  }();
  return table;
}

std::array<int, 3> mix_counts(WorkloadMix mix, int n_slices) {
  if (n_slices < 3) throw ConfigError("n_slices must be >= 3");
  std::array<double, 3> frac{};
  switch (mix) {
    case WorkloadMix::kSmallPackets: frac = {0.60, 0.20, 0.20}; break;
    case WorkloadMix::kBalanced: frac = {1.0 / 3, 1.0 / 3, 1.0 / 3}; break;
    case WorkloadMix::kLargePackets: frac = {0.20, 0.60, 0.20}; break;
  }
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = frac[i] * n_slices;
    counts[i] = static_cast<int>(std::floor(exact));
    rem[i] = exact - counts[i];
    assigned += counts[i];
  }
  // Largest remainder, ties by type order.
  while (assigned < n_slices) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (rem[i] > rem[best] + 1e-12) best = i;
    }
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return counts;
}

namespace {

// Shortest up/down route between two access switches: access -> aggregation
// [-> core -> aggregation] -> access. Port numbers index the egress link at
// each hop (position of dst in the switch's link list).
std::vector<uint16_t> route(const Topology& topo, uint16_t src_acc,
                            uint16_t dst_acc, Rng& rng) {
  const uint16_t core_base = topo.n_access + topo.n_aggregation;
  auto aggs_of = [&](uint16_t acc) {
    std::vector<uint16_t> out;
    for (const auto& l : topo.links) {
      if (l.src == acc && topo.tier_of(l.dst) == Tier::kAggregation) {
        out.push_back(l.dst);
      }
    }
    return out;
  };
  const auto src_aggs = aggs_of(src_acc);
  const auto dst_aggs = aggs_of(dst_acc);
  // Shared aggregation switch keeps the path short when one exists.
  for (uint16_t a : src_aggs) {
    for (uint16_t b : dst_aggs) {
      if (a == b && rng.uniform() < 0.5) return {src_acc, a, dst_acc};
    }
  }
  const uint16_t up = src_aggs[rng.uniform_int(0, src_aggs.size() - 1)];
  const uint16_t down = dst_aggs[rng.uniform_int(0, dst_aggs.size() - 1)];
  if (up == down) return {src_acc, up, dst_acc};
  const uint16_t core =
      core_base + static_cast<uint16_t>(rng.uniform_int(0, topo.n_core - 1));
  return {src_acc, up, core, down, dst_acc};
}

uint8_t egress_port(const Topology& topo, uint16_t sw, uint16_t next) {
  uint8_t port = 0;
  for (const auto& l : topo.links) {
    if (l.src != sw) continue;
    if (l.dst == next) return port;
    ++port;
  }
  return 0;  // egress of the last hop: local delivery port
}

}  // namespace

std::vector<SliceSpec> make_workload(WorkloadMix mix, int n_slices,
                                     uint64_t seed, const Topology& topo,
                                     const WorkloadOptions& opt) {
  const auto counts = mix_counts(mix, n_slices);
  std::vector<SliceSpec> slices;
  slices.reserve(n_slices);
  std::set<uint16_t> used_path_ids;

  uint32_t next_id = 1;
  for (size_t ti = 0; ti < 3; ++ti) {
    const SliceType type = kAllSliceTypes[ti];
    const auto& r = opt.table.of(type);
    for (int k = 0; k < counts[ti]; ++k) {
      SliceSpec s;
      s.slice_id = next_id++;
      s.type = type;
      Rng rng(derive_seed(seed, static_cast<uint64_t>(mix), ti, k));

      s.sla_targets[MetricKind::kLatency] = rng.uniform(r.latency_ms.lo, r.latency_ms.hi);
      s.sla_targets[MetricKind::kJitter] = rng.uniform(r.jitter_ms.lo, r.jitter_ms.hi);
      s.sla_targets[MetricKind::kLoss] = rng.uniform(r.loss_fraction.lo, r.loss_fraction.hi);
      for (auto m : kAllMetrics) {
        s.tolerances[m] = opt.tolerance_fraction * s.sla_targets[m];
      }

      s.traffic.pkt_bytes_min = static_cast<int>(rng.uniform_int(
          static_cast<int64_t>(r.pkt_bytes.lo), static_cast<int64_t>(r.pkt_bytes.hi)));
      s.traffic.pkt_bytes_max = static_cast<int>(rng.uniform_int(
          s.traffic.pkt_bytes_min, static_cast<int64_t>(r.pkt_bytes.hi)));
      s.traffic.rate_mbps_per_user = rng.uniform(r.mbps_per_user.lo, r.mbps_per_user.hi);
      s.traffic.user_count = static_cast<int>(rng.uniform_int(
          static_cast<int64_t>(r.users.lo), static_cast<int64_t>(r.users.hi)));

      const int n_paths =
          static_cast<int>(rng.uniform_int(opt.paths_per_slice_min, opt.paths_per_slice_max));
      for (int p = 0; p < n_paths; ++p) {
        PathSpec path;
        const uint16_t src = static_cast<uint16_t>(rng.uniform_int(0, topo.n_access - 1));
        uint16_t dst = src;
        while (dst == src) {
          dst = static_cast<uint16_t>(rng.uniform_int(0, topo.n_access - 1));
        }
        path.hops = route(topo, src, dst, rng);
        for (size_t h = 0; h + 1 < path.hops.size(); ++h) {
          path.egress_ports.push_back(egress_port(topo, path.hops[h], path.hops[h + 1]));
        }
        path.egress_ports.push_back(egress_port(topo, path.hops.back(), 0xffff));
        // 16-bit path id, rerolled until unique within the workload.
        uint64_t roll = 0;
        do {
          path.path_id = static_cast<uint16_t>(
              derive_seed(seed, s.slice_id, static_cast<uint64_t>(p) + 1, roll) & 0xffff);
          ++roll;
        } while (!used_path_ids.insert(path.path_id).second);
        s.paths.push_back(std::move(path));
      }
      slices.push_back(std::move(s));
    }
  }
  return slices;
}

std::vector<SliceSpec> make_workload(WorkloadMix mix, int n_slices, uint64_t seed) {
  static const Topology topo = make_topology();
  return make_workload(mix, n_slices, seed, topo);
}

}  // namespace slicemon
