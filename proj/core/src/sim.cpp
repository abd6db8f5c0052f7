#include "slicemon/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <queue>
#include <unordered_map>

#include "slicemon/baselines.hpp"
#include "slicemon/rng.hpp"

namespace slicemon {

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::kAdaptive: return "adaptive";
    case SchemeKind::kStaticAgnostic: return "static-agnostic";
    case SchemeKind::kStaticAware: return "static-aware";
    case SchemeKind::kPintLike: return "pint-like";
    case SchemeKind::kSketchLike: return "sketch-like";
  }
  return "?";
}

double RunResult::violation_fraction(std::optional<SliceType> type,
                                     std::optional<MetricKind> metric) const {
  uint64_t pkts = 0, viols = 0;
  for (const auto& [key, r] : by_slice_metric) {
    if (type && slice_types.at(key.first) != *type) continue;
    if (metric && key.second != *metric) continue;
    pkts += r.packets;
    viols += r.violations;
  }
  return pkts ? static_cast<double>(viols) / pkts : 0.0;
}

bool RunResult::violation_defined(std::optional<SliceType> type,
                                  std::optional<MetricKind> metric) const {
  for (const auto& [key, r] : by_slice_metric) {
    if (type && slice_types.at(key.first) != *type) continue;
    if (metric && key.second != *metric) continue;
    if (r.packets > 0) return true;
  }
  return false;
}

namespace {

// Source rate at time t, honoring the optional ON/OFF burst modulation. The
// OFF gain compensates so the long-run mean stays at the base rate.
double rate_at(const TrafficProfile& tp, double base_rate, double t_s) {
  if (tp.burst_period_s <= 0.0 || tp.burst_gain == 1.0) return base_rate;
  const double phase = std::fmod(t_s, tp.burst_period_s) / tp.burst_period_s;
  const double off_gain = std::max(
      0.0, (1.0 - tp.burst_gain * tp.burst_duty) / std::max(1e-9, 1.0 - tp.burst_duty));
  return base_rate * (phase < tp.burst_duty ? tp.burst_gain : off_gain);
}

}  // namespace

std::vector<ArrivalEvent> gen_traffic(const SliceSpec& slice, uint64_t seed,
                                      double duration_s, double desk_scale) {
  std::vector<ArrivalEvent> out;
  const double slice_bps = slice.traffic.aggregate_mbps() * 1e6 / desk_scale;
  if (slice_bps <= 0.0 || slice.paths.empty()) return out;
  const int n_paths = static_cast<int>(slice.paths.size());
  const double mean_bits = 8.0 * slice.traffic.mean_pkt_bytes();

  for (int p = 0; p < n_paths; ++p) {
    Rng rng(derive_seed(seed, slice.slice_id, 0xa771fe, p));
    const double base_rate = slice_bps / n_paths / mean_bits;  // pkts/s
    double t = 0.0;
    while (true) {
      const double rate = rate_at(slice.traffic, base_rate, t);
      if (rate <= 1e-12) {
        const double period =
            slice.traffic.burst_period_s > 0 ? slice.traffic.burst_period_s : duration_s;
        t = (std::floor(t / period) + 1.0) * period;
        if (t >= duration_s) break;
        continue;
      }
      t += rng.exponential(rate);
      if (t >= duration_s) break;
      ArrivalEvent ev;
      ev.t_ns = static_cast<int64_t>(t * 1e9);
      ev.path_index = p;
      ev.size_bytes = static_cast<int>(
          rng.uniform_int(slice.traffic.pkt_bytes_min, slice.traffic.pkt_bytes_max));
      out.push_back(ev);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ArrivalEvent& a, const ArrivalEvent& b) {
                     return a.t_ns < b.t_ns;
                   });
  return out;
}

std::map<std::pair<uint32_t, MetricKind>, SliceMetricResult> measure_trace(
    const std::vector<PacketRecord>& trace, const std::vector<SliceSpec>& slices) {
  std::map<uint32_t, const SliceSpec*> by_id;
  for (const auto& s : slices) by_id[s.slice_id] = &s;
  std::map<std::pair<uint32_t, MetricKind>, SliceMetricResult> out;
  for (const auto& rec : trace) {
    const SliceSpec* s = by_id.at(rec.slice_id);
    for (auto m : kAllMetrics) {
      const size_t mi = metric_index(m);
      if (!rec.defined[mi]) continue;
      auto& r = out[{rec.slice_id, m}];
      r.absent = false;
      ++r.packets;
      const double err = std::fabs(rec.reported[mi] - rec.truth[mi]);
      r.abs_err_sum += err;
      if (err > s->tolerances.at(m)) ++r.violations;
    }
  }
  return out;
}

namespace {

constexpr int kNotificationBytes = 16;  // key + path + node ids
constexpr int64_t kNotificationDelayNs = 20'000;

enum EvKind : int {
  kEvEpoch = 0,
  kEvNotify = 1,
  kEvDequeue = 2,
  kEvArrival = 3,
  kEvSource = 4,
  kEvExport = 5,
};

struct Ev {
  int64_t t = 0;
  int prio = 0;
  uint64_t order = 0;
  int kind = 0;
  uint64_t pkt = 0;
  int slice = 0;  // slice index
  int path = 0;   // path index
  int node = 0;
  int port = 0;
  int hop = 0;
  bool emit = true;  // sources: false for bootstrap/off-period placeholders

  bool operator>(const Ev& o) const {
    if (t != o.t) return t > o.t;
    if (prio != o.prio) return prio > o.prio;
    return order > o.order;
  }
};

struct Packet {
  uint32_t slice_id = 0;
  int slice_idx = 0;
  int path_idx = 0;
  uint64_t seq = 0;  // per (slice, path)
  int payload_bytes = 0;
  int hop = 0;
  int64_t created_ns = 0;
  int64_t hop_arrival_ns = 0;
  TelemetryHeader hdr;
  double true_sum_ms = 0.0;
  std::vector<std::pair<uint16_t, double>> pint_samples;  // carried to egress
};

struct PortState {
  double cap_bps = 1e9;
  int64_t prop_ns = 0;
  std::array<std::deque<uint64_t>, 3> q;
  uint64_t bytes = 0;
  bool busy = false;
  int cur = 0;
  std::array<int, 3> credits{};
  std::array<uint64_t, 3> served{};  // packets per class, for share checks
};

struct PathCollector {
  std::array<double, kMetricCount> last_report{};
  std::array<bool, kMetricCount> has_report{};
  uint64_t delivered = 0;
  double prev_true_lat_ms = 0.0;
  bool have_prev_lat = false;
};

struct IntervalAccum {
  std::vector<double> true_lat;
  std::vector<double> rep_lat;
};

double p90_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t idx = static_cast<size_t>(std::ceil(0.9 * v.size()));
  return v[std::min(idx == 0 ? 0 : idx - 1, v.size() - 1)];
}

class Engine {
 public:
  explicit Engine(const SimConfig& cfg) : cfg_(cfg) {}
  RunResult run();

 private:
  const SimConfig& cfg_;
  RunResult res_;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> events_;
  uint64_t order_ = 0;
  int64_t now_ = 0;
  int64_t end_ns_ = 0;
  int64_t measure_start_ns_ = 0;

  std::vector<std::unique_ptr<SwitchState>> switches_;
  std::vector<std::vector<PortState>> ports_;
  std::unordered_map<uint64_t, Packet> pkts_;
  uint64_t next_pkt_id_ = 1;

  std::vector<std::vector<uint64_t>> src_seq_;
  std::vector<std::vector<uint64_t>> ingress_count_;
  std::vector<std::vector<uint64_t>> drop_count_;
  std::vector<std::vector<PathCollector>> collectors_;
  std::vector<std::vector<Rng>> src_rng_;

  std::map<uint32_t, IntervalAccum> interval_;
  int64_t interval_start_ = 0;

  std::map<std::pair<uint32_t, uint16_t>, HopHistogram> sketches_;
  HopSampleTable pint_table_;

  DistributionSet dists_;
  std::array<CandidateGrid, kMetricCount> grids_;
  int epoch_ = 0;

  std::vector<uint64_t> backlog_snapshots_;
  uint64_t overflow_drops_ = 0;
  bool warmup_snapshotted_ = false;
  uint64_t warmup_lookups_ = 0;
  uint64_t warmup_misses_ = 0;

  static double ms(int64_t ns) { return ns * 1e-6; }
  int64_t proc_ns() const { return static_cast<int64_t>(cfg_.proc_delay_us * 1000.0); }
  bool in_window(int64_t t) const { return t >= measure_start_ns_ && t <= end_ns_; }

  void push(Ev ev) {
    ev.order = ++order_;
    events_.push(ev);
  }

  static int class_of(SliceType t) { return criticality_rank(t); }

  BucketKey key_at(const SliceSpec& s, const PathSpec& p, int hop) const {
    return BucketKey{s.slice_id, p.path_id, p.egress_ports[hop]};
  }

  double path_prop_ms(const PathSpec& p) const {
    double total = 0.0;
    for (size_t h = 0; h + 1 < p.hops.size(); ++h) {
      total += ms(ports_[p.hops[h]][p.egress_ports[h]].prop_ns);
    }
    return total;
  }

  void setup();
  void deploy_static();
  void deploy_cold_start();
  void run_epoch_boundary();
  void handle_source(const Ev& ev);
  void handle_arrival(const Ev& ev);
  void handle_notify(const Ev& ev);
  void handle_export();
  void deliver(Packet pkt, int64_t t);
  void serve_port(int node, int port);
  double hook_extra_ms(const SliceSpec& s, const Packet& pkt, uint16_t node);
  void finish();
};

void Engine::setup() {
  end_ns_ = static_cast<int64_t>(cfg_.duration_s * 1e9);
  const double mstart = cfg_.measure_start_s >= 0.0 ? cfg_.measure_start_s
                                                    : cfg_.controller.epoch_s;
  measure_start_ns_ = static_cast<int64_t>(mstart * 1e9);
  res_.scheme = to_string(cfg_.scheme.kind);
  res_.seed = cfg_.seed;
  res_.duration_s = cfg_.duration_s;
  res_.measured_s = std::max(0.0, cfg_.duration_s - mstart);

  const int n_switch = cfg_.topology.switch_count();
  for (int i = 0; i < n_switch; ++i) {
    SwitchConfig sc = cfg_.switch_cfg;
    sc.hash_seed = derive_seed(cfg_.switch_cfg.hash_seed, 0x51, i);
    switches_.push_back(std::make_unique<SwitchState>(static_cast<uint16_t>(i), sc));
  }

  // Ports: one per outgoing link in link-list order, plus a trailing host
  // port for local delivery at a path's last hop.
  ports_.resize(n_switch);
  std::vector<double> tier_cap(n_switch, 1e9);
  for (int sw = 0; sw < n_switch; ++sw) {
    for (const auto& l : cfg_.topology.links) {
      if (l.src != sw) continue;
      PortState p;
      p.cap_bps = l.capacity_bps;
      p.prop_ns = l.prop_delay_ns;
      ports_[sw].push_back(p);
      tier_cap[sw] = l.capacity_bps;
    }
    PortState host;
    host.cap_bps = tier_cap[sw];
    host.prop_ns = 0;
    ports_[sw].push_back(host);
  }
  for (auto& node_ports : ports_) {
    for (auto& p : node_ports) {
      p.credits = {cfg_.wrr.urllc, cfg_.wrr.embb, cfg_.wrr.mmtc};
    }
  }

  const size_t n_slices = cfg_.slices.size();
  src_seq_.resize(n_slices);
  ingress_count_.resize(n_slices);
  drop_count_.resize(n_slices);
  collectors_.resize(n_slices);
  src_rng_.resize(n_slices);
  for (size_t i = 0; i < n_slices; ++i) {
    const auto& s = cfg_.slices[i];
    res_.slice_types[s.slice_id] = s.type;
    const size_t np = s.paths.size();
    src_seq_[i].resize(np, 0);
    ingress_count_[i].resize(np, 0);
    drop_count_[i].resize(np, 0);
    collectors_[i].resize(np);
    for (size_t p = 0; p < np; ++p) {
      src_rng_[i].emplace_back(derive_seed(cfg_.seed, s.slice_id, 0xa771fe, p));
      push(Ev{.t = 0, .prio = kEvSource, .kind = kEvSource,
              .slice = static_cast<int>(i), .path = static_cast<int>(p),
              .emit = false});
    }
    if (cfg_.prime_state) {
      for (const auto& path : s.paths) {
        for (size_t h = 0; h < path.hops.size(); ++h) {
          switches_[path.hops[h]]->prime(key_at(s, path, static_cast<int>(h)));
        }
      }
    }
  }

  for (auto m : kAllMetrics) {
    grids_[metric_index(m)] = default_grid(m, cfg_.controller.grid_points);
  }

  switch (cfg_.scheme.kind) {
    case SchemeKind::kAdaptive:
      deploy_cold_start();
      push(Ev{.t = static_cast<int64_t>(cfg_.controller.epoch_s * 1e9),
              .prio = kEvEpoch, .kind = kEvEpoch});
      break;
    case SchemeKind::kStaticAgnostic:
    case SchemeKind::kStaticAware:
      deploy_static();
      break;
    case SchemeKind::kPintLike:
    case SchemeKind::kSketchLike:
      break;  // change-trigger machinery unused
  }

  const int64_t interval = static_cast<int64_t>(cfg_.p90_interval_ms * 1e6);
  push(Ev{.t = interval, .prio = kEvExport, .kind = kEvExport});
}

void Engine::deploy_static() {
  for (const auto& s : cfg_.slices) {
    for (auto m : kAllMetrics) {
      double delta = cfg_.scheme.static_delta;
      if (cfg_.scheme.kind == SchemeKind::kStaticAware) {
        delta = cfg_.scheme.aware_delta[static_cast<size_t>(s.type)];
      }
      for (auto& sw : switches_) sw->set_threshold(s.slice_id, m, delta);
    }
  }
}

void Engine::deploy_cold_start() {
  // First epoch, no data: the most conservative grid point everywhere.
  for (const auto& s : cfg_.slices) {
    for (auto m : kAllMetrics) {
      const double delta = grids_[metric_index(m)].min();
      for (auto& sw : switches_) sw->set_threshold(s.slice_id, m, delta);
    }
  }
}

void Engine::run_epoch_boundary() {
  if (now_ >= end_ns_) return;  // drain phase: no further control actions
  ++epoch_;
  const auto t0 = std::chrono::steady_clock::now();

  // Poll and clear the difference reservoirs; refit wherever the epoch
  // produced samples, keeping previous models elsewhere.
  std::map<std::pair<uint32_t, MetricKind>, std::vector<double>> pooled_samples;
  for (auto& sw : switches_) {
    for (auto& [key, reservoir] : sw->reservoirs()) {
      const auto& samples = reservoir.samples();
      if (!samples.empty()) {
        dists_.per_hop[{key.first, key.second, sw->node_id()}] =
            fit_differences(samples);
        auto& pool = pooled_samples[key];
        pool.insert(pool.end(), samples.begin(), samples.end());
      }
      reservoir.clear();
    }
  }
  for (const auto& [key, samples] : pooled_samples) {
    dists_.pooled[key] = fit_differences(samples);
  }

  BuildOptions opt;
  opt.beta_steps = cfg_.controller.beta_steps;
  // Seeds derive from (slice, metric, candidate) only, not the epoch:
  // stationary inputs produce identical lookup tables epoch over epoch.
  opt.base_seed = derive_seed(cfg_.seed, 0xbe7a);
  opt.threads = cfg_.controller.lookup_threads;
  for (auto& c : opt.cost) c.per_packet_shim = cfg_.controller.per_packet_shim;
  auto model = build_lookup(dists_, grids_, cfg_.slices, opt);
  const double lookup_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  auto problem = make_problem(
      model, cfg_.slices, cfg_.controller.lambda, cfg_.controller.epoch_s,
      cfg_.desk_scale, cfg_.controller.overhead_budget_bits,
      cfg_.controller.solver_budget_frac * cfg_.controller.epoch_s);
  EpochDecision decision;
  if (cfg_.controller.force_greedy) {
    decision = solve_greedy(problem);
  } else {
    decision = solve_exact(problem);
    if (decision.fallback_required) decision = solve_greedy(problem);
  }

  // Atomic deploy: epoch events sort before packet events at the same time.
  std::map<std::pair<uint32_t, MetricKind>, double> thresholds;
  for (const auto& [key, pd] : decision.assignment) thresholds[key] = pd.delta;
  for (auto& sw : switches_) sw->deploy_thresholds(thresholds);

  for (const auto& [key, pd] : decision.assignment) {
    EpochLogRow row;
    row.epoch = epoch_;
    row.slice_id = key.first;
    row.metric = key.second;
    row.delta = pd.delta;
    row.error = pd.error;
    row.overhead = pd.overhead;
    row.feasible = pd.feasible;
    row.provenance = decision.provenance;
    row.solve_ms = decision.solve_wall_s * 1e3;
    row.lookup_ms = lookup_ms;
    res_.epoch_log.push_back(row);
  }

  const int64_t next =
      static_cast<int64_t>((epoch_ + 1) * cfg_.controller.epoch_s * 1e9);
  if (next < end_ns_) push(Ev{.t = next, .prio = kEvEpoch, .kind = kEvEpoch});
}

void Engine::handle_source(const Ev& ev) {
  const auto& s = cfg_.slices[ev.slice];
  auto& rng = src_rng_[ev.slice][ev.path];
  const double slice_bps = s.traffic.aggregate_mbps() * 1e6 / cfg_.desk_scale;
  if (slice_bps <= 0.0) return;
  const double base_rate =
      slice_bps / s.paths.size() / (8.0 * s.traffic.mean_pkt_bytes());

  if (ev.emit) {
    Packet pkt;
    pkt.slice_id = s.slice_id;
    pkt.slice_idx = ev.slice;
    pkt.path_idx = ev.path;
    pkt.seq = src_seq_[ev.slice][ev.path]++;
    pkt.payload_bytes = static_cast<int>(
        rng.uniform_int(s.traffic.pkt_bytes_min, s.traffic.pkt_bytes_max));
    pkt.created_ns = now_;
    const uint64_t id = next_pkt_id_++;
    ++res_.packets_generated;
    ++ingress_count_[ev.slice][ev.path];
    pkts_[id] = std::move(pkt);
    push(Ev{.t = now_, .prio = kEvArrival, .kind = kEvArrival, .pkt = id});
  }

  const double rate = rate_at(s.traffic, base_rate, now_ * 1e-9);
  int64_t next_t;
  bool emit = true;
  if (rate <= 1e-12) {
    const double period =
        s.traffic.burst_period_s > 0 ? s.traffic.burst_period_s : cfg_.duration_s;
    next_t = static_cast<int64_t>(
        (std::floor(now_ * 1e-9 / period) + 1.0) * period * 1e9);
    emit = false;
  } else {
    next_t = now_ + static_cast<int64_t>(rng.exponential(rate) * 1e9);
  }
  if (next_t < end_ns_) {
    push(Ev{.t = next_t, .prio = kEvSource, .kind = kEvSource, .slice = ev.slice,
            .path = ev.path, .emit = emit});
  }
}

double Engine::hook_extra_ms(const SliceSpec& s, const Packet& pkt, uint16_t node) {
  double extra = 0.0;
  for (const auto& h : cfg_.latency_noise) {
    if (h.slice_id != 0 && h.slice_id != s.slice_id) continue;
    if (h.node_id != 0xffff && h.node_id != node) continue;
    if (now_ < static_cast<int64_t>(h.start_s * 1e9)) continue;
    if (h.end_s >= 0.0 && now_ >= static_cast<int64_t>(h.end_s * 1e9)) continue;
    Rng rng(derive_seed(cfg_.seed, 0x401e, pkt.seq * 1024 + node, s.slice_id));
    extra += rng.uniform() * h.amplitude_ms;
  }
  for (const auto& h : cfg_.hop_modulation) {
    if (h.node_id != node) continue;
    // A * (1 + sin(2*pi*(t/T + phase))): non-negative, and two hooks half a
    // period apart sum to a constant 2A (anti-correlated hops).
    const double t_s = now_ * 1e-9;
    extra += h.amplitude_ms *
             (1.0 + std::sin(2.0 * M_PI * (t_s / h.period_s + h.phase)));
  }
  return std::max(0.0, extra);
}

void Engine::handle_arrival(const Ev& ev) {
  auto it = pkts_.find(ev.pkt);
  if (it == pkts_.end()) return;
  Packet& pkt = it->second;
  const auto& s = cfg_.slices[pkt.slice_idx];
  const auto& path = s.paths[pkt.path_idx];
  const uint16_t node = path.hops[pkt.hop];
  const int port_idx = path.egress_ports[pkt.hop];
  auto& port = ports_[node][port_idx];

  pkt.hop_arrival_ns = now_;

  for (const auto& h : cfg_.drop_injection) {
    if (h.node_id != node || h.every_nth == 0) continue;
    if (h.slice_id != 0 && h.slice_id != s.slice_id) continue;
    if ((pkt.seq + 1) % h.every_nth == 0) {
      ++res_.packets_dropped;
      ++drop_count_[pkt.slice_idx][pkt.path_idx];
      pkts_.erase(it);
      return;
    }
  }

  const uint64_t wire = pkt.payload_bytes + pkt.hdr.size_bytes();
  if (port.bytes + wire > static_cast<uint64_t>(cfg_.buffer_bytes)) {
    ++res_.packets_dropped;
    ++overflow_drops_;
    ++drop_count_[pkt.slice_idx][pkt.path_idx];
    pkts_.erase(it);
    return;
  }
  port.bytes += wire;
  port.q[class_of(s.type)].push_back(ev.pkt);
  if (!port.busy) {
    port.busy = true;
    push(Ev{.t = now_, .prio = kEvDequeue, .kind = kEvDequeue,
            .node = node, .port = port_idx});
  }
}

void Engine::serve_port(int node, int port_idx) {
  auto& port = ports_[node][port_idx];
  const std::array<int, 3> weights = {cfg_.wrr.urllc, cfg_.wrr.embb, cfg_.wrr.mmtc};

  uint64_t pkt_id = 0;
  int scanned = 0;
  while (scanned < 4) {  // a full rotation refreshes every class's credits
    if (port.credits[port.cur] > 0 && !port.q[port.cur].empty()) {
      pkt_id = port.q[port.cur].front();
      port.q[port.cur].pop_front();
      --port.credits[port.cur];
      ++port.served[port.cur];
      break;
    }
    port.cur = (port.cur + 1) % 3;
    port.credits[port.cur] = weights[port.cur];
    ++scanned;
  }
  if (pkt_id == 0) {
    port.busy = false;
    return;
  }

  Packet& pkt = pkts_.at(pkt_id);
  const auto& s = cfg_.slices[pkt.slice_idx];
  const auto& path = s.paths[pkt.path_idx];
  const uint16_t node_id = path.hops[pkt.hop];
  const bool last_hop = pkt.hop + 1 == static_cast<int>(path.hops.size());

  const double extra_ms = hook_extra_ms(s, pkt, node_id);
  const int64_t extra_ns = static_cast<int64_t>(extra_ms * 1e6);
  const int64_t queue_proc_ns = (now_ - pkt.hop_arrival_ns) + proc_ns() + extra_ns;

  // Telemetry-visible hop latency: queueing + processing + serialization of
  // the incoming frame (egress timestamping precedes this hop's insertion).
  const uint64_t in_bytes = pkt.payload_bytes + pkt.hdr.size_bytes();
  const int64_t tx_in_ns = static_cast<int64_t>(in_bytes * 8.0 / port.cap_bps * 1e9);
  double visible_ms = ms(queue_proc_ns + tx_in_ns);
  bool scripted = false;
  if (cfg_.scripted) {
    auto sit = cfg_.scripted->by_node_seq.find({node_id, pkt.seq});
    if (sit != cfg_.scripted->by_node_seq.end()) {
      visible_ms = sit->second;
      scripted = true;
    }
  }

  uint64_t out_bytes = in_bytes;
  if (cfg_.scheme.kind == SchemeKind::kPintLike) {
    // Uniform per-hop sampling tuned to the conditional bit budget.
    const int hops = static_cast<int>(path.hops.size());
    const double p =
        std::clamp(cfg_.scheme.pint_bits_budget / (32.0 * hops), 0.0, 1.0);
    Rng rng(derive_seed(cfg_.seed, 0x917,
                        pkt.slice_id * 1'000'003ULL + pkt.seq, node_id));
    if (rng.uniform() < p) {
      pkt.pint_samples.emplace_back(node_id, visible_ms);
      if (in_window(now_)) ++res_.insertions;
    }
    pkt.hdr.hop_meta.push_back({node_id, 0});
    out_bytes = pkt.payload_bytes +
                header_size_bytes(static_cast<int>(pkt.hdr.hop_meta.size()), 0, 0) +
                4 * pkt.pint_samples.size();
  } else if (cfg_.scheme.kind == SchemeKind::kSketchLike) {
    auto key = std::make_pair(pkt.slice_id, node_id);
    auto hit = sketches_.find(key);
    if (hit == sketches_.end()) {
      const double alpha = s.sla_targets.at(MetricKind::kLatency);
      hit = sketches_
                .emplace(key,
                         HopHistogram(cfg_.scheme.sketch_bins, 0.0, 2.0 * alpha))
                .first;
    }
    hit->second.add(visible_ms);
    pkt.hdr.hop_meta.push_back({node_id, 0});
    out_bytes = pkt.payload_bytes +
                header_size_bytes(static_cast<int>(pkt.hdr.hop_meta.size()), 0, 0);
  } else {
    const BucketKey key = key_at(s, path, pkt.hop);
    auto evt = switches_[node_id]->process_packet(
        key, pkt.hop == 0, {.hop_latency_ms = visible_ms}, pkt.hdr);
    if (evt.notify_upstream && pkt.hop > 0) {
      push(Ev{.t = now_ + kNotificationDelayNs, .prio = kEvNotify,
              .kind = kEvNotify, .slice = pkt.slice_idx, .path = pkt.path_idx,
              .hop = pkt.hop - 1});
      if (in_window(now_)) res_.notification_bits += kNotificationBytes * 8;
    }
    if (in_window(now_)) {
      res_.recovery_bits += evt.recovery_bits;
      for (auto a : evt.action) {
        if (a != PacketAction::kSkipped) ++res_.insertions;
      }
    }
    out_bytes = pkt.payload_bytes + pkt.hdr.size_bytes();
  }

  const int64_t tx_out_ns =
      static_cast<int64_t>(out_bytes * 8.0 / port.cap_bps * 1e9);
  // Pipeline jitter (hooks) delays the packet, not the port: the line is
  // free again after serialization.
  const int64_t t_port_free = now_ + tx_out_ns;
  const int64_t t_done = t_port_free + extra_ns;
  const double true_ms = scripted ? visible_ms : ms(queue_proc_ns + tx_out_ns);
  pkt.true_sum_ms += true_ms;

  if (in_window(now_)) {
    res_.total_bits += out_bytes * 8;
    res_.telemetry_bits += (out_bytes - pkt.payload_bytes) * 8;
  }

  port.bytes -= in_bytes;
  push(Ev{.t = t_port_free, .prio = kEvDequeue, .kind = kEvDequeue,
          .node = node, .port = port_idx});

  if (last_hop) {
    Packet moved = std::move(pkt);
    pkts_.erase(pkt_id);
    deliver(std::move(moved), t_done);
  } else {
    ++pkt.hop;
    push(Ev{.t = t_done + port.prop_ns, .prio = kEvArrival, .kind = kEvArrival,
            .pkt = pkt_id});
  }
}

void Engine::handle_notify(const Ev& ev) {
  const auto& s = cfg_.slices[ev.slice];
  const auto& path = s.paths[ev.path];
  const int hop = ev.hop;
  const BucketKey key = key_at(s, path, hop);
  const bool found = switches_[path.hops[hop]]->on_miss_notification(key, hop == 0);
  if (!found && hop > 0) {
    push(Ev{.t = now_ + kNotificationDelayNs, .prio = kEvNotify, .kind = kEvNotify,
            .slice = ev.slice, .path = ev.path, .hop = hop - 1});
    if (in_window(now_)) res_.notification_bits += kNotificationBytes * 8;
  }
}

void Engine::deliver(Packet pkt, int64_t t) {
  const auto& s = cfg_.slices[pkt.slice_idx];
  const auto& path = s.paths[pkt.path_idx];
  auto& col = collectors_[pkt.slice_idx][pkt.path_idx];
  ++col.delivered;
  ++res_.packets_delivered;

  const double prop_ms = path_prop_ms(path);
  const double true_lat = pkt.true_sum_ms + prop_ms;

  std::array<double, kMetricCount> reported{};
  std::array<double, kMetricCount> truth{};
  std::array<bool, kMetricCount> defined{};
  std::array<bool, kMetricCount> fresh{};

  if (cfg_.scheme.kind == SchemeKind::kPintLike) {
    for (const auto& [node, lat] : pkt.pint_samples) {
      pint_table_.update(pkt.slice_id, node, lat, t * 1e-6);
      if (in_window(t)) ++res_.reports;
      fresh[0] = true;
    }
    // Slice-aware reconstruction: sum the most recent per-hop observations.
    double sum = 0.0;
    bool complete = true;
    for (uint16_t node : path.hops) {
      const auto* e = pint_table_.find(pkt.slice_id, node);
      if (!e) {
        complete = false;
        break;
      }
      sum += e->latency_ms;
    }
    if (complete) {
      reported[0] = sum + prop_ms;
      truth[0] = true_lat;
      defined[0] = true;
    }
  } else if (cfg_.scheme.kind == SchemeKind::kSketchLike) {
    // No per-packet tracking: per-packet estimates reported as absent.
  } else {
    const auto& mon = cfg_.switch_cfg.monitored;
    for (auto m : kAllMetrics) {
      const size_t mi = metric_index(m);
      if (pkt.hdr.e_curr[mi]) {
        col.last_report[mi] = metric_from_raw(m, *pkt.hdr.e_curr[mi]);
        col.has_report[mi] = true;
        fresh[mi] = true;
        if (in_window(t)) ++res_.reports;
      }
    }
    if (mon[0] && col.has_report[0]) {
      reported[0] = col.last_report[0] + prop_ms;
      truth[0] = true_lat;
      defined[0] = true;
    }
    if (mon[1] && col.have_prev_lat && col.has_report[1]) {
      reported[1] = col.last_report[1];
      truth[1] = true_lat - col.prev_true_lat_ms;
      defined[1] = true;
    }
    if (mon[2]) {
      const double lost_est = col.has_report[2] ? col.last_report[2] : 0.0;
      const uint64_t ingress = ingress_count_[pkt.slice_idx][pkt.path_idx];
      const uint64_t drops = drop_count_[pkt.slice_idx][pkt.path_idx];
      if (ingress > 0) {
        reported[2] = lost_est / (static_cast<double>(col.delivered) + lost_est);
        truth[2] = static_cast<double>(drops) / ingress;
        defined[2] = true;
      }
    }
  }
  col.prev_true_lat_ms = true_lat;
  col.have_prev_lat = true;

  if (in_window(t)) {
    ++res_.packets_measured;
    for (auto m : kAllMetrics) {
      const size_t mi = metric_index(m);
      if (!defined[mi]) continue;
      auto& r = res_.by_slice_metric[{pkt.slice_id, m}];
      r.absent = false;
      ++r.packets;
      if (fresh[mi]) ++r.reports;
      const double err = std::fabs(reported[mi] - truth[mi]);
      r.abs_err_sum += err;
      if (err > s.tolerances.at(m)) ++r.violations;
    }
    auto& acc = interval_[pkt.slice_id];
    acc.true_lat.push_back(true_lat);
    if (defined[0]) acc.rep_lat.push_back(reported[0]);
    if (cfg_.keep_packet_trace && res_.trace.size() < cfg_.trace_limit) {
      PacketRecord rec;
      rec.slice_id = pkt.slice_id;
      rec.path_id = path.path_id;
      rec.t_ms = t * 1e-6;
      rec.reported = reported;
      rec.truth = truth;
      rec.defined = defined;
      res_.trace.push_back(rec);
    }
  }
}

void Engine::handle_export() {
  for (auto& [slice_id, acc] : interval_) {
    if (acc.true_lat.empty()) continue;
    IntervalP90 row;
    row.t_start_ms = interval_start_ * 1e-6;
    row.slice_id = slice_id;
    row.samples = acc.true_lat.size();
    row.p90_true = p90_of(acc.true_lat);
    if (cfg_.scheme.kind == SchemeKind::kSketchLike) {
      const SliceSpec* s = nullptr;
      for (const auto& cs : cfg_.slices) {
        if (cs.slice_id == slice_id) s = &cs;
      }
      if (s && !s->paths.empty()) {
        std::vector<const HopHistogram*> hists;
        bool all = true;
        for (uint16_t node : s->paths[0].hops) {
          auto it = sketches_.find({slice_id, node});
          if (it == sketches_.end() || it->second.total() == 0) {
            all = false;
            break;
          }
          hists.push_back(&it->second);
        }
        if (all) {
          row.p90_reported = convolved_p90(hists) + path_prop_ms(s->paths[0]);
          res_.p90.push_back(row);
          if (in_window(now_)) {
            // Idealized sketchlet transfer, charged at export.
            const uint64_t bits = static_cast<uint64_t>(cfg_.scheme.sketch_bins) *
                                  32 * s->paths[0].hops.size();
            res_.telemetry_bits += bits;
            res_.total_bits += bits;
          }
        }
      }
    } else if (!acc.rep_lat.empty()) {
      row.p90_reported = p90_of(acc.rep_lat);
      res_.p90.push_back(row);
    }
    acc.true_lat.clear();
    acc.rep_lat.clear();
  }
  if (cfg_.scheme.kind == SchemeKind::kSketchLike) {
    for (auto& [key, hist] : sketches_) hist.reset();
  }

  uint64_t queued = 0;
  for (const auto& node_ports : ports_) {
    for (const auto& p : node_ports) queued += p.bytes;
  }
  backlog_snapshots_.push_back(queued);

  // Steady-state bucket accounting starts at the measurement window.
  if (!warmup_snapshotted_ && now_ >= measure_start_ns_) {
    warmup_snapshotted_ = true;
    for (const auto& sw : switches_) {
      warmup_lookups_ += sw->buckets().lookups;
      warmup_misses_ += sw->buckets().misses;
    }
  }

  interval_start_ = now_;
  const int64_t next = now_ + static_cast<int64_t>(cfg_.p90_interval_ms * 1e6);
  if (next <= end_ns_) push(Ev{.t = next, .prio = kEvExport, .kind = kEvExport});
}

void Engine::finish() {
  uint64_t lookups = 0, misses = 0, overflow = 0;
  for (const auto& sw : switches_) {
    lookups += sw->buckets().lookups;
    misses += sw->buckets().misses;
    overflow += sw->stats().header_overflows;
  }
  res_.lookups = lookups - warmup_lookups_;
  res_.misses = misses - warmup_misses_;
  res_.header_overflows = overflow;

  uint64_t best_total = 0;
  for (const auto& node_ports : ports_) {
    for (const auto& p : node_ports) {
      const uint64_t total = p.served[0] + p.served[1] + p.served[2];
      if (total > best_total) {
        best_total = total;
        res_.busiest_port_served = p.served;
      }
    }
  }

  // Saturation: persistent backlog growth across export snapshots, or a
  // meaningful overflow-drop fraction.
  if (backlog_snapshots_.size() >= 4) {
    const uint64_t last = backlog_snapshots_.back();
    const uint64_t mid = backlog_snapshots_[backlog_snapshots_.size() / 2];
    if (last > 65536 && last > 1.4 * static_cast<double>(mid)) res_.saturated = true;
  }
  if (res_.packets_generated > 0 &&
      overflow_drops_ > 0.01 * res_.packets_generated) {
    res_.saturated = true;
  }
}

RunResult Engine::run() {
  setup();
  const int64_t drain_ns = end_ns_ + static_cast<int64_t>(1e9);
  while (!events_.empty()) {
    Ev ev = events_.top();
    events_.pop();
    if (ev.t > drain_ns) break;
    now_ = ev.t;
    switch (ev.kind) {
      case kEvEpoch: run_epoch_boundary(); break;
      case kEvNotify: handle_notify(ev); break;
      case kEvDequeue: serve_port(ev.node, ev.port); break;
      case kEvArrival: handle_arrival(ev); break;
      case kEvSource: handle_source(ev); break;
      case kEvExport: handle_export(); break;
    }
  }
  finish();
  return std::move(res_);
}

}  // namespace

RunResult run(const SimConfig& cfg) {
  Engine engine(cfg);
  return engine.run();
}

}  // namespace slicemon
