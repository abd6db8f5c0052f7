#include "slicemon/tradeoff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "slicemon/csv.hpp"
#include "slicemon/rng.hpp"

namespace slicemon {

DiffDistribution fit_differences(std::span<const double> samples) {
  if (samples.empty()) {
    throw InsufficientDataError("fit_differences: no samples");
  }
  DiffDistribution d;
  d.sample_count = samples.size();
  d.reservoir.assign(samples.begin(), samples.end());

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  d.mu = (n % 2 == 1) ? sorted[n / 2]
                      : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mad = 0.0;
  for (double s : sorted) mad += std::fabs(s - d.mu);
  d.b = mad / static_cast<double>(n);
  return d;
}

double beta_of(const DiffDistribution& dist, double delta, int n_steps,
               uint64_t seed) {
  Rng rng(seed);
  double cum = 0.0;
  int64_t resets = 0;
  for (int t = 0; t < n_steps; ++t) {
    cum += rng.laplace(dist.mu, dist.b);
    if (std::fabs(cum) >= delta) {
      ++resets;
      cum = 0.0;  // reset to zero; overshoot is discarded
    }
  }
  return static_cast<double>(resets) / n_steps;
}

double error_bound(double delta, std::span<const double> upstream_betas) {
  double sum = 0.0;
  for (double b : upstream_betas) sum += b;
  const double e = (static_cast<double>(upstream_betas.size()) - sum) * delta;
  return std::max(0.0, e);
}

double overhead_bits(std::span<const double> path_betas, const HeaderCost& cost) {
  const double hops = static_cast<double>(path_betas.size());
  double fixed = cost.per_packet_shim
                     ? cost.shim_bits + cost.per_hop_bits * hops
                     : (cost.shim_bits + cost.per_hop_bits) * hops;
  double beta_sum = 0.0;
  for (double b : path_betas) beta_sum += b;
  return fixed + cost.report_bits * beta_sum;
}

const TradeoffTable* TradeoffModel::find(uint32_t slice, MetricKind m) const {
  for (const auto& t : tables) {
    if (t.slice_id == slice && t.metric == m) return &t;
  }
  return nullptr;
}

const DiffDistribution* DistributionSet::hop_dist(uint32_t slice, MetricKind m,
                                                  uint16_t node) const {
  auto it = per_hop.find({slice, m, node});
  return it == per_hop.end() ? nullptr : &it->second;
}

const DiffDistribution* DistributionSet::pooled_dist(uint32_t slice,
                                                     MetricKind m) const {
  auto it = pooled.find({slice, m});
  return it == pooled.end() ? nullptr : &it->second;
}

namespace {

TradeoffTable build_table(const DistributionSet& dists, const SliceSpec& slice,
                          MetricKind m, const CandidateGrid& grid,
                          const BuildOptions& opt) {
  TradeoffTable table;
  table.slice_id = slice.slice_id;
  table.metric = m;

  // Multipath slices are summarized by their longest path (conservative for
  // E); hop betas come from that path's switches.
  const PathSpec* path = nullptr;
  for (const auto& p : slice.paths) {
    if (!path || p.hops.size() > path->hops.size()) path = &p;
  }
  const int hops = path ? static_cast<int>(path->hops.size()) : 1;
  table.path_len = hops;

  // Resolve one distribution per hop: own samples, else the slice-metric
  // pooled distribution. No distribution at all marks the pair cold.
  std::vector<const DiffDistribution*> hop_dists(hops, nullptr);
  const DiffDistribution* pooled = dists.pooled_dist(slice.slice_id, m);
  bool any = false;
  for (int j = 0; j < hops; ++j) {
    const DiffDistribution* d =
        path ? dists.hop_dist(slice.slice_id, m, path->hops[j]) : nullptr;
    if (!d) d = pooled;
    hop_dists[j] = d;
    if (d) any = true;
  }
  table.cold = !any;

  const auto& cost = opt.cost[metric_index(m)];
  for (size_t c = 0; c < grid.candidates.size(); ++c) {
    TradeoffRow row;
    row.delta = grid.candidates[c];
    row.hop_betas.resize(hops, 0.0);
    if (table.cold) {
      // No data at all: conservative on both axes. beta = 0 maximizes the
      // error bound, while the overhead assumes every hop inserts.
      row.error = error_bound(row.delta,
                              std::vector<double>(hops > 0 ? hops - 1 : 0, 0.0));
      row.overhead =
          overhead_bits(std::vector<double>(hops, 1.0), cost);
      table.rows.push_back(std::move(row));
      continue;
    }
    for (int j = 0; j < hops; ++j) {
      const DiffDistribution* d = hop_dists[j];
      if (!d) continue;  // dataless hop: beta stays 0 (conservative for E)
      const uint64_t seed =
          derive_seed(opt.base_seed, slice.slice_id,
                      (static_cast<uint64_t>(m) << 32) | static_cast<uint64_t>(c), j);
      row.hop_betas[j] = beta_of(*d, row.delta, opt.beta_steps, seed);
    }
    std::span<const double> betas(row.hop_betas);
    row.error = error_bound(row.delta, betas.subspan(0, hops > 0 ? hops - 1 : 0));
    row.overhead = overhead_bits(betas, cost);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

TradeoffModel build_lookup(const DistributionSet& dists,
                           const std::array<CandidateGrid, kMetricCount>& grids,
                           const std::vector<SliceSpec>& slices,
                           const BuildOptions& opt) {
  struct Job {
    const SliceSpec* slice;
    MetricKind metric;
  };
  std::vector<Job> jobs;
  for (const auto& s : slices) {
    for (auto m : kAllMetrics) jobs.push_back({&s, m});
  }

  TradeoffModel model;
  model.tables.resize(jobs.size());

  int threads = opt.threads > 0
                    ? opt.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const auto& job = jobs[i];
      model.tables[i] = build_table(dists, *job.slice, job.metric,
                                    grids[metric_index(job.metric)], opt);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return model;
}

void write_tradeoff_csv(const TradeoffModel& model, std::ostream& out) {
  CsvWriter csv(out);
  csv.header({"slice", "metric", "delta", "hop_betas", "error_bound",
              "overhead_bits", "cold"});
  for (const auto& t : model.tables) {
    for (const auto& r : t.rows) {
      std::string betas;
      for (size_t j = 0; j < r.hop_betas.size(); ++j) {
        if (j) betas += ';';
        betas += fmt_num(r.hop_betas[j]);
      }
      csv.row(t.slice_id, to_string(t.metric), r.delta, betas, r.error,
              r.overhead, t.cold ? 1 : 0);
    }
  }
}

}  // namespace slicemon
