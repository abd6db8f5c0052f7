#include "slicemon/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "slicemon/sim.hpp"

namespace slicemon {

HopHistogram::HopHistogram(int bins, double lo, double hi)
    : lo_(lo), hi_(hi), counts_(std::max(2, bins), 0) {
  if (hi_ <= lo_) hi_ = lo_ + 1.0;
}

void HopHistogram::add(double v) {
  const int n = static_cast<int>(counts_.size());
  int bin = static_cast<int>((v - lo_) / (hi_ - lo_) * n);
  bin = std::clamp(bin, 0, n - 1);
  ++counts_[bin];
  ++total_;
}

void HopHistogram::reset() {
  std::fill(counts_.begin(), counts_.end(), 0);
  total_ = 0;
}

double HopHistogram::midpoint(int bin) const {
  const double width = (hi_ - lo_) / counts_.size();
  return lo_ + (bin + 0.5) * width;
}

DiscreteDist histogram_dist(const HopHistogram& h) {
  DiscreteDist d;
  if (h.total() == 0) return d;
  for (int b = 0; b < h.bins(); ++b) {
    if (h.count(b) == 0) continue;
    d.emplace_back(h.midpoint(b), static_cast<double>(h.count(b)) / h.total());
  }
  return d;
}

DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b) {
  std::map<double, double> acc;
  for (const auto& [va, pa] : a) {
    for (const auto& [vb, pb] : b) acc[va + vb] += pa * pb;
  }
  return DiscreteDist(acc.begin(), acc.end());
}

double quantile_of(const DiscreteDist& d, double q) {
  double cum = 0.0;
  for (const auto& [v, p] : d) {
    cum += p;
    if (cum >= q - 1e-12) return v;
  }
  return d.empty() ? 0.0 : d.back().first;
}

double convolved_p90(const std::vector<const HopHistogram*>& hops, double q) {
  if (hops.empty()) return 0.0;
  DiscreteDist d = histogram_dist(*hops[0]);
  for (size_t i = 1; i < hops.size(); ++i) {
    d = convolve(d, histogram_dist(*hops[i]));
  }
  return quantile_of(d, q);
}

RunResult run_static(const StaticPolicy& policy, const SimConfig& cfg) {
  SimConfig c = cfg;
  if (policy.slice_aware) {
    c.scheme.kind = SchemeKind::kStaticAware;
    c.scheme.aware_delta = policy.per_type_delta;
  } else {
    c.scheme.kind = SchemeKind::kStaticAgnostic;
    c.scheme.static_delta = policy.global_delta;
  }
  return run(c);
}

RunResult run_pint_like(double per_packet_bit_budget, const SimConfig& cfg) {
  SimConfig c = cfg;
  c.scheme.kind = SchemeKind::kPintLike;
  c.scheme.pint_bits_budget = per_packet_bit_budget;
  return run(c);
}

RunResult run_sketch_like(int bins, double export_ms, const SimConfig& cfg) {
  SimConfig c = cfg;
  c.scheme.kind = SchemeKind::kSketchLike;
  c.scheme.sketch_bins = bins;
  c.scheme.sketch_export_ms = export_ms;
  c.p90_interval_ms = export_ms;  // exports and interval stats share a cadence
  return run(c);
}

}  // namespace slicemon
