#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "slicemon/dataplane.hpp"
#include "slicemon/rng.hpp"

using namespace slicemon;

namespace {

SwitchConfig latency_only_cfg() {
  SwitchConfig cfg;
  cfg.monitored = {true, false, false};
  return cfg;
}

}  // namespace

TEST_CASE("header codec: sizes match the closed form") {
  // Max size with M metrics all carrying aux: 3 + ceil(13H/8) + 8M.
  TelemetryHeader h;
  for (int hops = 1; hops <= 16; ++hops) {
    for (int m = 0; m <= 3; ++m) {
      h.hop_meta.assign(hops, HopMetadata{5, 0});
      h.clear_conditional();
      for (int i = 0; i < m; ++i) {
        h.e_curr[i] = 1000u;
        h.v_aux[i] = 7u;
      }
      const auto bytes = encode_header(h);
      CHECK(bytes.size() == header_size_bytes(hops, m, 0));
      CHECK(bytes.size() == 3 + (13 * hops + 7) / 8 + 8 * m);
    }
  }
  // Known sizes: H=8, M=3 -> 40 B; H=16, M=3 -> 53 B; H=1, M=0 -> 5 B.
  CHECK(header_size_bytes(8, 3, 0) == 40);
  CHECK(header_size_bytes(16, 3, 0) == 53);
  CHECK(header_size_bytes(1, 0, 0) == 5);
}

TEST_CASE("header codec: bit-exact round trip") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    TelemetryHeader h;
    const int hops = 1 + static_cast<int>(rng.next() % 16);
    for (int i = 0; i < hops; ++i) {
      h.hop_meta.push_back({static_cast<uint16_t>(rng.next() & 0x3ff),
                            static_cast<uint8_t>(rng.next() & 0x7)});
    }
    for (size_t m = 0; m < kMetricCount; ++m) {
      if (rng.next() & 1) h.e_curr[m] = static_cast<uint32_t>(rng.next());
      if (rng.next() & 1) h.v_aux[m] = static_cast<uint32_t>(rng.next());
    }
    const auto bytes = encode_header(h);
    const auto back = decode_header(bytes);
    CHECK(back == h);
    CHECK(bytes.size() == h.size_bytes());
    // Validating decode agrees.
    CHECK(decode_header(bytes, hops, h.bitmap()) == h);
  }
}

TEST_CASE("header codec: malformed input raises decode errors") {
  TelemetryHeader h;
  h.hop_meta.push_back({1, 0});
  h.e_curr[0] = 42u;
  auto bytes = encode_header(h);
  // Truncated conditional field.
  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS_AS(decode_header(cut), DecodeError);
  // Trailing garbage (length mismatch vs bitmap).
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_header(extra), DecodeError);
  // Wrong expectations.
  CHECK_THROWS_AS(decode_header(bytes, 2, h.bitmap()), DecodeError);
  CHECK_THROWS_AS(decode_header(bytes, 1, 0), DecodeError);
  // Shorter than the shim.
  std::vector<uint8_t> tiny = {0x10};
  CHECK_THROWS_AS(decode_header(tiny), DecodeError);
}

TEST_CASE("metric raw codecs") {
  CHECK(metric_to_raw(MetricKind::kLatency, 5.0) == 5'000'000u);
  CHECK(metric_from_raw(MetricKind::kLatency, 5'000'000u) == doctest::Approx(5.0));
  CHECK(metric_from_raw(MetricKind::kJitter,
                        metric_to_raw(MetricKind::kJitter, -0.25)) ==
        doctest::Approx(-0.25));
  CHECK(metric_to_raw(MetricKind::kLoss, 17.0) == 17u);
  CHECK(metric_to_raw(MetricKind::kLatency, -1.0) == 0u);
}

TEST_CASE("bucket lookup: empty, read-your-write, and d=2 collisions") {
  BucketArrays b(2, 64, /*hash_seed=*/7);
  BucketKey k{1, 10, 0};

  auto r = b.lookup(k);
  CHECK(r.miss);
  CHECK(r.entry == nullptr);

  auto ins = b.insert_at(r, k);
  ins.entry->metrics[0].e_rep = 42.0;
  auto r2 = b.lookup(k);
  REQUIRE(r2.entry != nullptr);
  CHECK(r2.entry->metrics[0].e_rep == 42.0);

  // Brute-force two keys that collide in array 0 but not in array 1: both
  // must remain resident and findable (second lands in array 1).
  const size_t target = b.slot_index(0, k);
  BucketKey other;
  bool found = false;
  for (uint32_t id = 2; id < 200'000 && !found; ++id) {
    BucketKey cand{id, 10, 0};
    if (b.slot_index(0, cand) == target &&
        b.slot_index(1, cand) != b.slot_index(1, k)) {
      other = cand;
      found = true;
    }
  }
  REQUIRE(found);
  auto r3 = b.lookup(other);
  CHECK(r3.miss);
  CHECK(r3.insert_array == 1);  // array 0 slot taken, array 1 free
  b.insert_at(r3, other);
  CHECK(b.lookup(k).entry != nullptr);
  CHECK(b.lookup(other).entry != nullptr);
}

TEST_CASE("bucket hash functions pass a chi-square uniformity check at w=4096") {
  // d independent mixes; chi-square over bucket occupancy with N keys.
  const int w = 4096;
  BucketArrays b(2, w, /*hash_seed=*/99);
  const int n = 1 << 18;
  for (int array = 0; array < 2; ++array) {
    std::vector<int> counts(w, 0);
    for (int i = 0; i < n; ++i) {
      BucketKey k{static_cast<uint32_t>(i), static_cast<uint16_t>(i >> 3), 0};
      ++counts[b.hash(array, k) % w];
    }
    const double expected = static_cast<double>(n) / w;
    double chi2 = 0.0;
    for (int c : counts) {
      const double d = c - expected;
      chi2 += d * d / expected;
    }
    // dof = 4095; 99.9% quantile ~ 4380. Anything near that passes.
    CHECK(chi2 < 4400.0);
    CHECK(chi2 > 3800.0);  // suspiciously uniform would also be a bug
  }
}

TEST_CASE("walkthrough: 2-hop path, delta=2") {
  // Two switches; latency only; keys primed so the table starts warm.
  SwitchConfig cfg = latency_only_cfg();
  SwitchState s1(1, cfg), s2(2, cfg);
  BucketKey key{7, 70, 0};
  s1.prime(key);
  s2.prime(key);
  s1.set_threshold(7, MetricKind::kLatency, 2.0);
  s2.set_threshold(7, MetricKind::kLatency, 2.0);

  const size_t lat = metric_index(MetricKind::kLatency);

  // p1: L=5 at s1, L=6 at s2.
  TelemetryHeader h1;
  auto e11 = s1.process_packet(key, true, {.hop_latency_ms = 5.0}, h1);
  CHECK(e11.action[lat] == PacketAction::kInserted);
  CHECK(e11.e_curr[lat] == doctest::Approx(5.0));
  REQUIRE(h1.e_curr[lat].has_value());
  CHECK(*h1.e_curr[lat] == 5'000'000u);

  auto e12 = s2.process_packet(key, false, {.hop_latency_ms = 6.0}, h1);
  CHECK(e12.action[lat] == PacketAction::kInserted);
  CHECK(e12.e_curr[lat] == doctest::Approx(11.0));
  CHECK(*h1.e_curr[lat] == 11'000'000u);

  // p2: L=4 at s1 (skip), L=8 at s2 (insert with stale E_prev=5).
  TelemetryHeader h2;
  auto e21 = s1.process_packet(key, true, {.hop_latency_ms = 4.0}, h2);
  CHECK(e21.action[lat] == PacketAction::kSkipped);
  CHECK(e21.e_curr[lat] == doctest::Approx(4.0));
  CHECK_FALSE(h2.e_curr[lat].has_value());

  auto e22 = s2.process_packet(key, false, {.hop_latency_ms = 8.0}, h2);
  CHECK(e22.action[lat] == PacketAction::kInserted);
  CHECK(e22.e_curr[lat] == doctest::Approx(13.0));
  CHECK(*h2.e_curr[lat] == 13'000'000u);

  // Reported 13 vs true 12: per-switch error 1 <= delta.
  const double true_e2e = 4.0 + 8.0;
  CHECK(std::fabs(13.0 - true_e2e) == doctest::Approx(1.0));
}

TEST_CASE("delta=0 inserts on every packet; huge delta only on recovery") {
  SwitchConfig cfg = latency_only_cfg();
  const size_t lat = metric_index(MetricKind::kLatency);

  SwitchState s(1, cfg);
  BucketKey key{1, 1, 0};
  s.prime(key);
  s.set_threshold(1, MetricKind::kLatency, 0.0);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    TelemetryHeader h;
    auto ev = s.process_packet(key, true, {.hop_latency_ms = 1.0 + rng.uniform()}, h);
    CHECK(ev.action[lat] == PacketAction::kInserted);
    CHECK(h.e_curr[lat].has_value());
  }

  SwitchState s2(2, cfg);
  s2.prime(key);
  s2.set_threshold(1, MetricKind::kLatency, 1e18);
  int inserted = 0;
  for (int i = 0; i < 100; ++i) {
    TelemetryHeader h;
    auto ev = s2.process_packet(key, true, {.hop_latency_ms = 1.0 + rng.uniform()}, h);
    inserted += ev.action[lat] != PacketAction::kSkipped;
  }
  CHECK(inserted == 0);
}

TEST_CASE("per-switch error from one skipped insertion is bounded by delta") {
  SwitchConfig cfg = latency_only_cfg();
  SwitchState s1(1, cfg), s2(2, cfg);
  BucketKey key{3, 30, 0};
  s1.prime(key);
  s2.prime(key);
  const double delta = 0.7;
  s1.set_threshold(3, MetricKind::kLatency, delta);
  s2.set_threshold(3, MetricKind::kLatency, delta);
  const size_t lat = metric_index(MetricKind::kLatency);

  Rng rng(11);
  double l1 = 5.0;
  for (int i = 0; i < 5000; ++i) {
    l1 += rng.laplace(0.0, 0.08);
    if (l1 < 0.5) l1 = 1.0 - l1;  // hop latency stays physical (positive)
    const double l2 = 3.0 + rng.laplace(0.0, 0.05);
    TelemetryHeader h;
    s1.process_packet(key, true, {.hop_latency_ms = l1}, h);
    auto ev = s2.process_packet(key, false, {.hop_latency_ms = l2}, h);
    const double truth = l1 + l2;
    // One upstream switch: staleness of E_prev at s2 is at most delta.
    CHECK(std::fabs(ev.e_curr[lat] - truth) <= delta + 1e-6);
  }
}

TEST_CASE("miss recovery: notification chain restores visibility") {
  SwitchConfig cfg = latency_only_cfg();
  SwitchState s1(1, cfg), s2(2, cfg);
  BucketKey key{9, 90, 1};
  s1.set_threshold(9, MetricKind::kLatency, 2.0);
  s2.set_threshold(9, MetricKind::kLatency, 2.0);
  const size_t lat = metric_index(MetricKind::kLatency);

  // Cold start: first packet misses at both hops; the miss at hop 2 wants an
  // upstream notification.
  TelemetryHeader h;
  auto e1 = s1.process_packet(key, true, {.hop_latency_ms = 5.0}, h);
  CHECK(e1.miss);
  CHECK_FALSE(e1.notify_upstream);  // ingress miss is a normal cold start
  auto e2 = s2.process_packet(key, false, {.hop_latency_ms = 5.0}, h);
  CHECK(e2.miss);
  CHECK(e2.notify_upstream);

  // Deliver the notification; s1 knows the key, so it sets F_tm.
  CHECK(s1.on_miss_notification(key, true));

  // s1's next packet carries full telemetry even though delta is not crossed.
  TelemetryHeader h2;
  auto e3 = s1.process_packet(key, true, {.hop_latency_ms = 5.0}, h2);
  CHECK(e3.forced_full);
  CHECK(h2.e_curr[lat].has_value());

  // Quiescent: no further misses, no notifications.
  TelemetryHeader h3;
  auto e4 = s1.process_packet(key, true, {.hop_latency_ms = 5.0}, h3);
  CHECK_FALSE(e4.miss);
  CHECK_FALSE(e4.notify_upstream);
}

TEST_CASE("miss notification at an unknown non-ingress hop propagates") {
  SwitchConfig cfg = latency_only_cfg();
  SwitchState s(4, cfg);
  BucketKey key{1, 5, 0};
  CHECK_FALSE(s.on_miss_notification(key, false));  // keep walking upstream
  CHECK(s.on_miss_notification(key, true));         // ingress reinitializes
  TelemetryHeader h;
  auto ev = s.process_packet(key, true, {.hop_latency_ms = 1.0}, h);
  CHECK(ev.forced_full);
}

TEST_CASE("loss metric: counter differences accumulate along the path") {
  SwitchConfig cfg;
  cfg.monitored = {false, false, true};
  SwitchState s1(1, cfg), s2(2, cfg);
  BucketKey key{2, 20, 0};
  s1.prime(key);
  s2.prime(key);
  s1.set_threshold(2, MetricKind::kLoss, 0.0);  // always report
  s2.set_threshold(2, MetricKind::kLoss, 0.0);
  const size_t li = metric_index(MetricKind::kLoss);

  // 10 packets; packets 4 and 7 dropped between s1 and s2.
  int delivered = 0;
  double last_e = 0.0;
  for (int i = 1; i <= 10; ++i) {
    TelemetryHeader h;
    s1.process_packet(key, true, {.hop_latency_ms = 1.0}, h);
    REQUIRE(h.v_aux[li].has_value());
    CHECK(*h.v_aux[li] == static_cast<uint32_t>(i));  // upstream counter
    if (i == 4 || i == 7) continue;                   // dropped in flight
    ++delivered;
    auto ev = s2.process_packet(key, false, {.hop_latency_ms = 1.0}, h);
    last_e = ev.e_curr[li];
  }
  // Upstream forwarded 10, downstream saw 8: cumulative loss of 2.
  CHECK(delivered == 8);
  CHECK(last_e == doctest::Approx(2.0));
}

TEST_CASE("header overflow is counted, not truncated") {
  SwitchConfig cfg;
  cfg.headroom_bytes = 8;  // shim + 2 hop metadata bytes only
  SwitchState s(1, cfg);
  BucketKey key{1, 1, 0};
  s.prime(key);
  for (auto m : kAllMetrics) s.set_threshold(1, m, 0.0);
  TelemetryHeader h;
  auto ev = s.process_packet(key, true, {.hop_latency_ms = 5.0}, h);
  CHECK(ev.header_overflows > 0);
  CHECK(h.size_bytes() <= 8);
  CHECK(s.stats().header_overflows > 0);
}

TEST_CASE("keys differing only in path or port never share a bucket entry") {
  SwitchConfig cfg = latency_only_cfg();
  SwitchState s(1, cfg);
  BucketKey a{5, 1, 0}, bkey{5, 2, 0}, c{5, 1, 1};
  s.prime(a);
  s.prime(bkey);
  s.prime(c);
  s.set_threshold(5, MetricKind::kLatency, 100.0);
  TelemetryHeader h;
  s.process_packet(a, true, {.hop_latency_ms = 9.0}, h);
  // b and c still see their own zeroed state.
  auto rb = s.buckets().lookup(bkey);
  auto rc = s.buckets().lookup(c);
  REQUIRE(rb.entry != nullptr);
  REQUIRE(rc.entry != nullptr);
  CHECK(rb.entry->metrics[0].e_last == 0.0);
  CHECK(rc.entry->metrics[0].e_last == 0.0);
}

TEST_CASE("debug dump renders headers as stable text") {
  TelemetryHeader h;
  h.hop_meta.push_back({5, 0});
  h.hop_meta.push_back({12, 0});
  h.e_curr[metric_index(MetricKind::kLatency)] = 11'000'000u;
  h.e_curr[metric_index(MetricKind::kLoss)] = 3u;
  h.v_aux[metric_index(MetricKind::kLoss)] = 120u;
  const std::string expect =
      "ver=1 hops=2 bitmap=0b100011 size=19B\n"
      "  hop[0] node=5 flags=0\n"
      "  hop[1] node=12 flags=0\n"
      "  latency.e_curr=11000000 (11)\n"
      "  loss.e_curr=3 (3)\n"
      "  loss.v_aux=120\n";
  CHECK(dump_header(h) == expect);
}
