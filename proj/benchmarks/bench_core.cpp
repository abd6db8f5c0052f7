#include <benchmark/benchmark.h>

#include <vector>

#include "slicemon/control.hpp"
#include "slicemon/dataplane.hpp"
#include "slicemon/rng.hpp"
#include "slicemon/tradeoff.hpp"

using namespace slicemon;

static void BM_BucketLookup(benchmark::State& state) {
  BucketArrays buckets(2, 4096, 7);
  std::vector<BucketKey> keys;
  for (uint32_t i = 0; i < 1000; ++i) {
    BucketKey k{i + 1, static_cast<uint16_t>(i), 0};
    keys.push_back(k);
    auto r = buckets.lookup(k);
    if (r.miss) buckets.insert_at(r, k);
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(buckets.lookup(keys[i++ % keys.size()]));
  }
}
BENCHMARK(BM_BucketLookup);

static void BM_ProcessPacket(benchmark::State& state) {
  SwitchConfig cfg;
  SwitchState sw(1, cfg);
  BucketKey key{1, 1, 0};
  sw.prime(key);
  for (auto m : kAllMetrics) sw.set_threshold(1, m, 0.5);
  Rng rng(11);
  double level = 100.0;
  for (auto _ : state) {
    level += rng.laplace(0.0, 0.2);
    TelemetryHeader h;
    benchmark::DoNotOptimize(
        sw.process_packet(key, true, {.hop_latency_ms = level}, h));
  }
}
BENCHMARK(BM_ProcessPacket);

static void BM_HeaderEncode(benchmark::State& state) {
  TelemetryHeader h;
  for (int i = 0; i < state.range(0); ++i) {
    h.hop_meta.push_back({static_cast<uint16_t>(i), 0});
  }
  h.e_curr[0] = 123456u;
  h.e_curr[2] = 42u;
  h.v_aux[2] = 99u;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_header(h));
  }
}
BENCHMARK(BM_HeaderEncode)->Arg(2)->Arg(8)->Arg(16);

static void BM_HeaderRoundTrip(benchmark::State& state) {
  TelemetryHeader h;
  for (int i = 0; i < 8; ++i) h.hop_meta.push_back({static_cast<uint16_t>(i), 0});
  h.e_curr[0] = 123456u;
  const auto bytes = encode_header(h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_header(bytes));
  }
}
BENCHMARK(BM_HeaderRoundTrip);

static void BM_BetaOf(benchmark::State& state) {
  DiffDistribution dist{0.0, 0.5, 1000, {}};
  uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(beta_of(dist, 1.5, state.range(0), ++seed));
  }
}
BENCHMARK(BM_BetaOf)->Arg(1000)->Arg(10000);

static void BM_SolveExact(benchmark::State& state) {
  Rng rng(5);
  AllocationProblem p;
  p.lambda = 0.6;
  for (int s = 0; s < state.range(0); ++s) {
    for (auto m : kAllMetrics) {
      PairProblem pair;
      pair.slice_id = s + 1;
      pair.metric = m;
      pair.slice_type = kAllSliceTypes[s % 3];
      pair.epsilon = 0.5 + rng.uniform();
      double delta = 0.0;
      for (int c = 0; c < 16; ++c) {
        delta += 0.1 + rng.uniform();
        pair.candidates.push_back({delta, rng.uniform() * 2.0, rng.uniform() * 200.0});
      }
      p.pairs.push_back(std::move(pair));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_exact(p));
  }
}
BENCHMARK(BM_SolveExact)->Arg(50)->Arg(300);

static void BM_SolveGreedy(benchmark::State& state) {
  Rng rng(5);
  AllocationProblem p;
  p.lambda = 0.6;
  for (int s = 0; s < state.range(0); ++s) {
    for (auto m : kAllMetrics) {
      PairProblem pair;
      pair.slice_id = s + 1;
      pair.metric = m;
      pair.slice_type = kAllSliceTypes[s % 3];
      pair.epsilon = 0.5 + rng.uniform();
      double delta = 0.0;
      for (int c = 0; c < 16; ++c) {
        delta += 0.1 + rng.uniform();
        pair.candidates.push_back({delta, rng.uniform() * 2.0, rng.uniform() * 200.0});
      }
      p.pairs.push_back(std::move(pair));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_greedy(p));
  }
}
BENCHMARK(BM_SolveGreedy)->Arg(50)->Arg(300);

BENCHMARK_MAIN();
