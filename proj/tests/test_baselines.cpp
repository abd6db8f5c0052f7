#include <cmath>

#include "doctest.h"
#include "slicemon/baselines.hpp"
#include "slicemon/sim.hpp"

using namespace slicemon;

namespace {

Topology line_topology(int n, double gbps = 0.1) {
  Topology t;
  t.n_access = n;
  t.n_aggregation = 0;
  t.n_core = 0;
  for (int i = 0; i + 1 < n; ++i) {
    t.links.push_back({static_cast<uint16_t>(i), static_cast<uint16_t>(i + 1),
                       gbps * 1e9, 0});
  }
  return t;
}

SliceSpec line_slice(uint32_t id, SliceType type, int hops, double mbps,
                     int pkt_bytes, double alpha_lat = 10.0) {
  SliceSpec s;
  s.slice_id = id;
  s.type = type;
  s.sla_targets[MetricKind::kLatency] = alpha_lat;
  s.sla_targets[MetricKind::kJitter] = alpha_lat;
  s.sla_targets[MetricKind::kLoss] = 0.01;
  for (auto m : kAllMetrics) s.tolerances[m] = 0.05 * s.sla_targets.at(m);
  PathSpec p;
  p.path_id = static_cast<uint16_t>(1000 + id);
  for (int h = 0; h < hops; ++h) {
    p.hops.push_back(static_cast<uint16_t>(h));
    p.egress_ports.push_back(0);
  }
  s.paths.push_back(p);
  s.traffic.pkt_bytes_min = pkt_bytes;
  s.traffic.pkt_bytes_max = pkt_bytes;
  s.traffic.rate_mbps_per_user = mbps;
  s.traffic.user_count = 1;
  return s;
}

}  // namespace

TEST_CASE("histogram: point mass and clamping") {
  HopHistogram h(10, 0.0, 10.0);
  for (int i = 0; i < 100; ++i) h.add(3.14);  // bin 3, midpoint 3.5
  auto d = histogram_dist(h);
  REQUIRE(d.size() == 1);
  CHECK(d[0].first == doctest::Approx(3.5));
  CHECK(d[0].second == doctest::Approx(1.0));
  CHECK(quantile_of(d, 0.9) == doctest::Approx(3.5));

  HopHistogram clamp(4, 0.0, 4.0);
  clamp.add(99.0);   // above range -> last bin
  clamp.add(-1.0);   // below range -> first bin
  CHECK(clamp.count(3) == 1);
  CHECK(clamp.count(0) == 1);
  CHECK(clamp.total() == 2);
}

TEST_CASE("convolution matches brute-force enumeration over bin pairs") {
  HopHistogram a(4, 0.0, 8.0), b(4, 0.0, 8.0);
  // a: 30% bin0 (1.0), 70% bin2 (5.0); b: 50% bin1 (3.0), 50% bin3 (7.0).
  for (int i = 0; i < 30; ++i) a.add(1.0);
  for (int i = 0; i < 70; ++i) a.add(5.0);
  for (int i = 0; i < 50; ++i) b.add(3.0);
  for (int i = 0; i < 50; ++i) b.add(7.0);

  auto conv = convolve(histogram_dist(a), histogram_dist(b));
  // Brute force: all (value, prob) pairs.
  std::map<double, double> expect;
  expect[1.0 + 3.0] += 0.3 * 0.5;
  expect[1.0 + 7.0] += 0.3 * 0.5;
  expect[5.0 + 3.0] += 0.7 * 0.5;
  expect[5.0 + 7.0] += 0.7 * 0.5;
  REQUIRE(conv.size() == expect.size());
  for (const auto& [v, p] : conv) {
    CHECK(expect.at(v) == doctest::Approx(p));
  }
  // P90 of the convolved distribution: cumulative 0.15, 0.50 (4->8), 0.85
  // (8), 1.0 at 12 -> P90 = 12.
  CHECK(quantile_of(conv, 0.9) == doctest::Approx(12.0));
}

TEST_CASE("pint: single-hop path with p=1 reconstructs exactly") {
  SimConfig cfg;
  cfg.topology = line_topology(1);
  cfg.slices = {line_slice(1, SliceType::kUrllc, 1, 1.0, 200)};
  cfg.duration_s = 2.0;
  cfg.measure_start_s = 0.0;
  cfg.desk_scale = 1.0;
  // Budget 32 bits/packet at H=1 -> sampling probability 1.
  auto res = run_pint_like(32.0, cfg);
  const auto& r = res.by_slice_metric.at({1, MetricKind::kLatency});
  CHECK(r.packets > 100);
  CHECK(r.violations == 0);
  // Exact up to the serialization of the sample bytes themselves.
  CHECK(r.mean_abs_error() < 1e-3);
}

TEST_CASE("pint: stationary constant hop latencies converge to truth") {
  SimConfig cfg;
  cfg.topology = line_topology(3, 1.0);
  cfg.slices = {line_slice(1, SliceType::kUrllc, 3, 0.5, 200)};
  cfg.duration_s = 3.0;
  cfg.measure_start_s = 1.0;
  cfg.desk_scale = 1.0;
  auto res = run_pint_like(32.0, cfg);  // p = 1/3 per hop
  const auto& r = res.by_slice_metric.at({1, MetricKind::kLatency});
  CHECK(r.packets > 100);
  // Constant latencies: last-seen hop values equal current ones.
  CHECK(r.mean_abs_error() < 0.01);
}

TEST_CASE("pint vs change-triggered under anti-correlated hop modulation") {
  // Two hops whose processing delays swing in opposite phase: per-packet e2e
  // latency stays near-constant, but PINT mixes hop samples from different
  // packets and reconstructs phantom swings.
  SimConfig cfg;
  cfg.topology = line_topology(2, 1.0);
  cfg.slices = {line_slice(1, SliceType::kUrllc, 2, 1.0, 200, 5.0)};  // eps 0.25
  cfg.duration_s = 4.0;
  cfg.measure_start_s = 0.5;
  cfg.desk_scale = 1.0;
  cfg.hop_modulation.push_back(
      {.node_id = 0, .amplitude_ms = 1.0, .period_s = 0.05, .phase = 0.0});
  cfg.hop_modulation.push_back(
      {.node_id = 1, .amplitude_ms = 1.0, .period_s = 0.05, .phase = 0.5});

  // p = 0.5 per hop: reconstruction mixes samples from different packets.
  auto pint = run_pint_like(32.0, cfg);
  const auto& rp = pint.by_slice_metric.at({1, MetricKind::kLatency});
  CHECK(rp.packets > 500);
  CHECK(rp.violations > 0);  // reconstruction spikes beyond eps

  SimConfig ct = cfg;
  ct.scheme.kind = SchemeKind::kStaticAgnostic;
  ct.scheme.static_delta = 0.2;  // below eps: per-packet e2e stays in band
  ct.switch_cfg.monitored = {true, false, false};
  auto main_res = run(ct);
  const auto& rm = main_res.by_slice_metric.at({1, MetricKind::kLatency});
  CHECK(rm.packets > 500);
  CHECK(rm.violation_fraction() < rp.violation_fraction());
}

TEST_CASE("sketch: more bins do not hurt P90 accuracy") {
  SimConfig cfg;
  cfg.topology = line_topology(2, 1.0);
  cfg.slices = {line_slice(1, SliceType::kEmbb, 2, 2.0, 600, 20.0)};
  cfg.duration_s = 4.0;
  cfg.measure_start_s = 0.5;
  cfg.desk_scale = 1.0;
  cfg.latency_noise.push_back({.slice_id = 1, .node_id = 0xffff, .start_s = 0.0,
                               .amplitude_ms = 2.0});

  auto coarse = run_sketch_like(4, 500.0, cfg);
  auto fine = run_sketch_like(10, 500.0, cfg);
  REQUIRE(!coarse.p90.empty());
  REQUIRE(!fine.p90.empty());
  auto mean_err = [](const RunResult& r) {
    double sum = 0;
    for (const auto& row : r.p90) sum += std::fabs(row.p90_reported - row.p90_true);
    return sum / r.p90.size();
  };
  CHECK(mean_err(fine) <= mean_err(coarse) + 1e-9);

  // No per-packet tracking: per-packet latency results are absent.
  CHECK(fine.by_slice_metric.find({1, MetricKind::kLatency}) ==
        fine.by_slice_metric.end());
}

TEST_CASE("static baselines share traffic with the main system") {
  SimConfig cfg;
  cfg.topology = line_topology(2, 0.1);
  cfg.slices = {line_slice(1, SliceType::kUrllc, 2, 0.5, 300)};
  cfg.duration_s = 2.0;
  cfg.measure_start_s = 0.0;
  cfg.desk_scale = 1.0;

  StaticPolicy agnostic;
  agnostic.global_delta = 1.0;
  auto a = run_static(agnostic, cfg);

  StaticPolicy aware;
  aware.slice_aware = true;
  aware.per_type_delta = {0.5, 1.0, 2.0};
  auto b = run_static(aware, cfg);

  // Paired comparison: identical generated traffic for a given seed.
  CHECK(a.packets_generated == b.packets_generated);
  CHECK(a.scheme == "static-agnostic");
  CHECK(b.scheme == "static-aware");
}
