#include "slicemon/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "slicemon/baselines.hpp"
#include "slicemon/config.hpp"
#include "slicemon/csv.hpp"
#include "slicemon/rng.hpp"

namespace slicemon {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentSpec::validate() const {
  std::vector<std::string> bad;
  if (name.empty()) bad.push_back("name");
  if (n_slices < 3) bad.push_back("n_slices (>= 3)");
  if (duration_s <= 0) bad.push_back("duration_s (> 0)");
  if (seeds.empty()) bad.push_back("seeds (non-empty)");
  if (desk_scale <= 0) bad.push_back("desk_scale (> 0)");
  if (epoch_s <= 0) bad.push_back("epoch_s (> 0)");
  if (schemes.empty()) bad.push_back("schemes (non-empty)");
  for (const auto& s : schemes) {
    if (s.kind == SchemeKind::kAdaptive && s.lambdas.empty()) bad.push_back("lambdas");
    if (s.kind == SchemeKind::kStaticAgnostic && s.deltas.empty()) bad.push_back("deltas");
    if (s.kind == SchemeKind::kStaticAware && s.aware_combos.empty()) bad.push_back("combos");
    if (s.kind == SchemeKind::kPintLike && s.pint_budgets.empty()) bad.push_back("budgets");
    if (s.kind == SchemeKind::kSketchLike && s.sketch_bins.empty()) bad.push_back("bins");
  }
  if (!bad.empty()) {
    std::string msg = "invalid experiment spec, fields:";
    for (const auto& f : bad) msg += " " + f;
    throw ConfigError(msg);
  }
}

namespace {

SchemeKind scheme_from_string(const std::string& s) {
  if (s == "adaptive") return SchemeKind::kAdaptive;
  if (s == "static-agnostic") return SchemeKind::kStaticAgnostic;
  if (s == "static-aware") return SchemeKind::kStaticAware;
  if (s == "pint-like") return SchemeKind::kPintLike;
  if (s == "sketch-like") return SchemeKind::kSketchLike;
  throw ConfigError("unknown scheme: " + s);
}

}  // namespace

ExperimentSpec spec_from_json(const std::string& text) {
  ExperimentSpec spec;
  try {
    json j = json::parse(text);
    spec.name = j.value("name", spec.name);
    spec.mix = mix_from_string(j.value("mix", "BAL"));
    spec.n_slices = j.value("n_slices", spec.n_slices);
    spec.duration_s = j.value("duration_s", spec.duration_s);
    if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    spec.desk_scale = j.value("desk_scale", spec.desk_scale);
    spec.capacity_scale = j.value("capacity_scale", spec.capacity_scale);
    spec.epoch_s = j.value("epoch_s", spec.epoch_s);
    spec.measure_start_s = j.value("measure_start_s", spec.measure_start_s);
    spec.grid_points = j.value("grid_points", spec.grid_points);
    spec.beta_steps = j.value("beta_steps", spec.beta_steps);
    if (j.contains("overhead_budget_bits")) {
      spec.overhead_budget_bits = j.at("overhead_budget_bits").get<double>();
    }
    if (j.contains("burst")) {
      const auto& b = j.at("burst");
      spec.burst_period_s = b.value("period_s", 0.0);
      spec.burst_duty = b.value("duty", 1.0);
      spec.burst_gain = b.value("gain", 1.0);
    }
    if (j.contains("topology")) {
      const auto& t = j.at("topology");
      spec.topo_access = t.value("access", spec.topo_access);
      spec.topo_aggregation = t.value("aggregation", spec.topo_aggregation);
      spec.topo_core = t.value("core", spec.topo_core);
    }
    if (j.contains("schemes")) {
      for (const auto& sj : j.at("schemes")) {
        SchemeSweep sweep;
        sweep.kind = scheme_from_string(sj.at("kind").get<std::string>());
        if (sj.contains("lambdas")) sweep.lambdas = sj.at("lambdas").get<std::vector<double>>();
        if (sj.contains("deltas")) sweep.deltas = sj.at("deltas").get<std::vector<double>>();
        if (sj.contains("combos")) {
          sweep.aware_combos.clear();
          for (const auto& c : sj.at("combos")) {
            sweep.aware_combos.push_back({c.at(0).get<double>(), c.at(1).get<double>(),
                                          c.at(2).get<double>()});
          }
        }
        if (sj.contains("budgets")) sweep.pint_budgets = sj.at("budgets").get<std::vector<double>>();
        if (sj.contains("bins")) sweep.sketch_bins = sj.at("bins").get<std::vector<int>>();
        spec.schemes.push_back(std::move(sweep));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec parse: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["mix"] = to_string(spec.mix);
  j["n_slices"] = spec.n_slices;
  j["duration_s"] = spec.duration_s;
  j["seeds"] = spec.seeds;
  j["desk_scale"] = spec.desk_scale;
  j["capacity_scale"] = spec.capacity_scale;
  j["epoch_s"] = spec.epoch_s;
  j["measure_start_s"] = spec.measure_start_s;
  j["grid_points"] = spec.grid_points;
  j["beta_steps"] = spec.beta_steps;
  if (spec.overhead_budget_bits) j["overhead_budget_bits"] = *spec.overhead_budget_bits;
  if (spec.burst_period_s > 0) {
    j["burst"] = {{"period_s", spec.burst_period_s},
                  {"duty", spec.burst_duty},
                  {"gain", spec.burst_gain}};
  }
  j["topology"] = {{"access", spec.topo_access},
                   {"aggregation", spec.topo_aggregation},
                   {"core", spec.topo_core}};
  json schemes = json::array();
  for (const auto& s : spec.schemes) {
    json sj;
    sj["kind"] = to_string(s.kind);
    switch (s.kind) {
      case SchemeKind::kAdaptive: sj["lambdas"] = s.lambdas; break;
      case SchemeKind::kStaticAgnostic: sj["deltas"] = s.deltas; break;
      case SchemeKind::kStaticAware: {
        json combos = json::array();
        for (const auto& c : s.aware_combos) combos.push_back({c[0], c[1], c[2]});
        sj["combos"] = combos;
        break;
      }
      case SchemeKind::kPintLike: sj["budgets"] = s.pint_budgets; break;
      case SchemeKind::kSketchLike: sj["bins"] = s.sketch_bins; break;
    }
    schemes.push_back(sj);
  }
  j["schemes"] = schemes;
  return j.dump(2);
}

std::vector<PlannedRun> plan_runs(const ExperimentSpec& spec) {
  std::vector<PlannedRun> runs;
  int index = 0;
  auto add = [&](SchemeKind kind, const std::string& params, auto setter) {
    for (uint64_t seed : spec.seeds) {
      PlannedRun r;
      r.index = index++;
      r.kind = kind;
      r.params = params;
      r.seed = seed;
      setter(r);
      runs.push_back(r);
    }
  };
  for (const auto& s : spec.schemes) {
    switch (s.kind) {
      case SchemeKind::kAdaptive:
        for (double l : s.lambdas) {
          add(s.kind, "lambda=" + fmt_num(l), [l](PlannedRun& r) { r.lambda = l; });
        }
        break;
      case SchemeKind::kStaticAgnostic:
        for (double d : s.deltas) {
          add(s.kind, "delta=" + fmt_num(d), [d](PlannedRun& r) { r.delta = d; });
        }
        break;
      case SchemeKind::kStaticAware:
        for (const auto& c : s.aware_combos) {
          add(s.kind,
              "delta=" + fmt_num(c[0]) + ";" + fmt_num(c[1]) + ";" + fmt_num(c[2]),
              [c](PlannedRun& r) { r.aware = c; });
        }
        break;
      case SchemeKind::kPintLike:
        for (double b : s.pint_budgets) {
          add(s.kind, "budget=" + fmt_num(b), [b](PlannedRun& r) { r.pint_budget = b; });
        }
        break;
      case SchemeKind::kSketchLike:
        for (int b : s.sketch_bins) {
          add(s.kind, "bins=" + std::to_string(b), [b](PlannedRun& r) { r.bins = b; });
        }
        break;
    }
  }
  return runs;
}

SimConfig build_sim_config(const ExperimentSpec& spec, const PlannedRun& run) {
  SimConfig cfg;
  TopologyOptions topt;
  topt.n_access = spec.topo_access;
  topt.n_aggregation = spec.topo_aggregation;
  topt.n_core = spec.topo_core;
  topt.scale = spec.desk_scale * spec.capacity_scale;
  cfg.topology = make_topology(topt);
  cfg.slices = make_workload(spec.mix, spec.n_slices, run.seed, cfg.topology);
  if (spec.burst_period_s > 0) {
    for (auto& s : cfg.slices) {
      s.traffic.burst_period_s = spec.burst_period_s;
      s.traffic.burst_duty = spec.burst_duty;
      s.traffic.burst_gain = spec.burst_gain;
    }
  }
  cfg.duration_s = spec.duration_s;
  cfg.seed = run.seed;
  cfg.desk_scale = spec.desk_scale;
  cfg.measure_start_s = spec.measure_start_s >= 0 ? spec.measure_start_s : spec.epoch_s;
  cfg.controller.epoch_s = spec.epoch_s;
  cfg.controller.lambda = run.lambda;
  cfg.controller.grid_points = spec.grid_points;
  cfg.controller.beta_steps = spec.beta_steps;
  cfg.controller.overhead_budget_bits = spec.overhead_budget_bits;
  cfg.scheme.kind = run.kind;
  cfg.scheme.static_delta = run.delta;
  cfg.scheme.aware_delta = run.aware;
  cfg.scheme.pint_bits_budget = run.pint_budget;
  cfg.scheme.sketch_bins = run.bins;
  return cfg;
}

std::vector<FrontierPoint> pareto_frontier(std::vector<FrontierPoint> points) {
  std::vector<FrontierPoint> out;
  for (size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (size_t k = 0; k < points.size(); ++k) {
      if (k == i) continue;
      if (points[k].overhead_bits_per_packet < points[i].overhead_bits_per_packet &&
          points[k].violation_fraction < points[i].violation_fraction) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(points[i]);
  }
  return out;
}

void write_summary_csv(const RunResult& r, const std::string& params,
                       const ExperimentSpec& spec, std::ostream& out) {
  CsvWriter csv(out);
  csv.header({"scheme", "params", "mix", "n_slices", "seed", "duration_s",
              "packets_generated", "packets_delivered", "packets_dropped",
              "packets_measured", "telemetry_bits", "total_bits",
              "overhead_fraction", "telemetry_bits_per_packet", "reports_per_sec",
              "miss_rate", "recovery_relative", "violation_fraction",
              "violation_urllc", "violation_embb", "violation_mmtc",
              "violation_latency", "violation_jitter", "violation_loss",
              "saturated"});
  // Absent per-packet estimates (no measured packets for a filter) emit an
  // empty cell rather than a zero.
  auto viol = [&](std::optional<SliceType> t,
                  std::optional<MetricKind> m) -> std::string {
    return r.violation_defined(t, m) ? fmt_num(r.violation_fraction(t, m)) : "";
  };
  csv.row(r.scheme, params, to_string(spec.mix), spec.n_slices, r.seed,
          r.duration_s, r.packets_generated, r.packets_delivered,
          r.packets_dropped, r.packets_measured, r.telemetry_bits, r.total_bits,
          r.overhead_fraction(), r.telemetry_bits_per_packet(), r.reports_per_sec(),
          r.miss_rate(), r.recovery_relative(), viol(std::nullopt, std::nullopt),
          viol(SliceType::kUrllc, std::nullopt), viol(SliceType::kEmbb, std::nullopt),
          viol(SliceType::kMmtc, std::nullopt),
          viol(std::nullopt, MetricKind::kLatency),
          viol(std::nullopt, MetricKind::kJitter),
          viol(std::nullopt, MetricKind::kLoss), r.saturated ? 1 : 0);
}

void write_results_csv(const RunResult& r, const std::vector<SliceSpec>& slices,
                       std::ostream& out) {
  std::map<uint32_t, const SliceSpec*> by_id;
  for (const auto& s : slices) by_id[s.slice_id] = &s;
  CsvWriter csv(out);
  csv.header({"scheme", "seed", "slice_id", "slice_type", "metric", "packets",
              "violations", "violation_fraction", "mean_abs_error", "epsilon",
              "reports"});
  for (const auto& [key, row] : r.by_slice_metric) {
    const auto* s = by_id.count(key.first) ? by_id.at(key.first) : nullptr;
    const double eps = s && s->tolerances.count(key.second)
                           ? s->tolerances.at(key.second)
                           : 0.0;
    csv.row(r.scheme, r.seed, key.first,
            to_string(r.slice_types.at(key.first)), to_string(key.second),
            row.packets, row.violations, row.violation_fraction(),
            row.mean_abs_error(), eps, row.reports);
  }
}

void write_decisions_csv(const RunResult& r, std::ostream& out) {
  CsvWriter csv(out);
  csv.header({"epoch", "slice", "metric", "delta", "error_bound", "overhead_bits",
              "feasible", "provenance", "solve_ms", "lookup_ms"});
  for (const auto& row : r.epoch_log) {
    csv.row(row.epoch, row.slice_id, to_string(row.metric), row.delta, row.error,
            row.overhead, row.feasible ? 1 : 0, to_string(row.provenance),
            row.solve_ms, row.lookup_ms);
  }
}

void write_frontier_csv(const std::vector<FrontierPoint>& points, std::ostream& out) {
  CsvWriter csv(out);
  csv.header({"scheme", "params", "overhead_bits_per_packet", "violation_fraction",
              "violation_urllc", "violation_embb", "violation_mmtc"});
  for (const auto& p : points) {
    csv.row(p.scheme, p.params, p.overhead_bits_per_packet, p.violation_fraction,
            p.violation_urllc, p.violation_embb, p.violation_mmtc);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<FrontierPoint> read_summary_csvs(const std::vector<std::string>& paths) {
  std::vector<FrontierPoint> points;
  for (const auto& path : paths) {
    std::istringstream in(load_text(path));
    std::string line;
    if (!std::getline(in, line)) continue;
    const auto header = split_csv_line(line);
    auto col = [&](const std::string& name) -> int {
      for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
      }
      return -1;
    };
    const int c_scheme = col("scheme"), c_params = col("params"),
              c_bits = col("telemetry_bits_per_packet"),
              c_viol = col("violation_fraction"), c_u = col("violation_urllc"),
              c_e = col("violation_embb"), c_m = col("violation_mmtc");
    if (c_scheme < 0 || c_bits < 0 || c_viol < 0) {
      throw ConfigError("not a summary csv: " + path);
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells[c_viol].empty()) continue;  // no per-packet estimates: skip
      FrontierPoint p;
      p.scheme = cells[c_scheme];
      p.params = c_params >= 0 ? cells[c_params] : "";
      p.overhead_bits_per_packet = std::stod(cells[c_bits]);
      p.violation_fraction = std::stod(cells[c_viol]);
      if (c_u >= 0 && !cells[c_u].empty()) p.violation_urllc = std::stod(cells[c_u]);
      if (c_e >= 0 && !cells[c_e].empty()) p.violation_embb = std::stod(cells[c_e]);
      if (c_m >= 0 && !cells[c_m].empty()) p.violation_mmtc = std::stod(cells[c_m]);
      points.push_back(std::move(p));
    }
  }
  return points;
}

namespace {

struct RunOutput {
  std::string id;
  bool failed = false;
  std::string error;
  std::string summary;    // file contents, hashed into the manifest
  std::string results;
  std::string decisions;  // volatile: contains wall-clock timings
};

RunOutput execute_run(const ExperimentSpec& spec, const PlannedRun& run) {
  RunOutput out;
  out.id = spec.name + "-r" + std::to_string(run.index) + "-" +
           to_string(run.kind) + "-s" + std::to_string(run.seed);
  try {
    SimConfig cfg = build_sim_config(spec, run);
    RunResult res = slicemon::run(cfg);
    {
      std::ostringstream ss;
      write_summary_csv(res, run.params, spec, ss);
      out.summary = ss.str();
    }
    {
      std::ostringstream ss;
      write_results_csv(res, cfg.slices, ss);
      out.results = ss.str();
    }
    if (run.kind == SchemeKind::kAdaptive) {
      std::ostringstream ss;
      write_decisions_csv(res, ss);
      out.decisions = ss.str();
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

std::string hash_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

}  // namespace

int cmd_run(const std::string& spec_path, const std::string& out_dir, int jobs,
            std::optional<uint64_t> seed_override) {
  ExperimentSpec spec;
  try {
    spec = spec_from_json(load_text(spec_path));
    if (seed_override) spec.seeds = {*seed_override};
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  fs::create_directories(out_dir);
  const auto runs = plan_runs(spec);
  std::vector<RunOutput> outputs(runs.size());

  const int workers = jobs > 0 ? jobs
                               : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      outputs[i] = execute_run(spec, runs[i]);
    }
  };
  if (workers == 1 || runs.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < std::min<size_t>(workers, runs.size()); ++t) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) t.join();
  }

  // Manifest: the embedded spec plus per-file hashes make every result file
  // reproducible from the manifest alone.
  const std::string spec_json = spec_to_json(spec);
  json manifest;
  manifest["version"] = kVersion;
  manifest["spec"] = json::parse(spec_json);
  manifest["config_hash"] = hash_hex(spec_json);
  json files = json::array();

  int failures = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    auto& out = outputs[i];
    if (out.failed) {
      ++failures;
      std::fprintf(stderr, "run %s failed: %s\n", out.id.c_str(), out.error.c_str());
      files.push_back({{"run", out.id}, {"error", out.error}});
      continue;
    }
    const std::string base = out_dir + "/" + out.id;
    save_text(base + "_summary.csv", out.summary);
    save_text(base + "_results.csv", out.results);
    files.push_back({{"file", out.id + "_summary.csv"}, {"hash", hash_hex(out.summary)}});
    files.push_back({{"file", out.id + "_results.csv"}, {"hash", hash_hex(out.results)}});
    if (!out.decisions.empty()) {
      save_text(base + "_decisions.csv", out.decisions);
      // Wall-clock columns make this file non-reproducible byte for byte.
      files.push_back({{"file", out.id + "_decisions.csv"}, {"hash", "volatile"}});
    }
  }
  manifest["outputs"] = files;
  save_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");

  return failures == 0 ? 0 : 1;
}

int cmd_frontier(const std::vector<std::string>& inputs, const std::string& out_csv) {
  try {
    if (inputs.empty()) {
      std::fprintf(stderr, "warning: no input files, writing empty frontier\n");
    }
    auto points = read_summary_csvs(inputs);
    // Group by scheme; the frontier is per scheme.
    std::map<std::string, std::vector<FrontierPoint>> by_scheme;
    for (auto& p : points) by_scheme[p.scheme].push_back(p);
    std::vector<FrontierPoint> frontier;
    for (auto& [scheme, pts] : by_scheme) {
      auto f = pareto_frontier(std::move(pts));
      frontier.insert(frontier.end(), f.begin(), f.end());
    }
    std::ostringstream ss;
    write_frontier_csv(frontier, ss);
    save_text(out_csv, ss.str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

namespace {

// tau sweep: epoch lengths against bursty traffic with aperiodic variance
// regime shifts. Short epochs fit partial burst cycles and whipsaw; long
// epochs miss regime changes. The ranking criterion is the normalized sum
// score = V/V_min + O/O_min (lower is better).
int micro_tau(const std::string& out_dir, uint64_t seed) {
  ExperimentSpec spec;
  spec.name = "micro-tau";
  spec.mix = WorkloadMix::kBalanced;
  spec.n_slices = 12;
  spec.duration_s = 50.0;
  spec.seeds = {seed};
  spec.capacity_scale = 4.0;
  spec.topo_access = 4;
  spec.topo_aggregation = 2;
  spec.topo_core = 1;
  spec.burst_period_s = 6.0;
  spec.burst_duty = 0.5;
  spec.burst_gain = 2.0;
  spec.measure_start_s = 15.0;

  struct Row {
    double tau, overhead, viol;
  };
  std::vector<Row> rows;
  for (double tau : {1.0, 3.0, 5.0, 7.0, 10.0, 15.0}) {
    spec.epoch_s = tau;
    PlannedRun run;
    run.kind = SchemeKind::kAdaptive;
    run.seed = seed;
    run.lambda = 0.4;
    SimConfig cfg = build_sim_config(spec, run);
    // Aperiodic variance regimes: quiet <-> noisy windows ~10 s long.
    const double amps[5] = {0.15, 1.2, 0.25, 1.5, 0.2};
    const double edges[6] = {0.0, 12.0, 21.0, 33.0, 42.0, 50.0};
    for (int wdx = 0; wdx < 5; ++wdx) {
      cfg.latency_noise.push_back({.slice_id = 0, .node_id = 0xffff,
                                   .start_s = edges[wdx], .end_s = edges[wdx + 1],
                                   .amplitude_ms = amps[wdx]});
    }
    auto res = slicemon::run(cfg);
    rows.push_back({tau, res.overhead_fraction(), res.violation_fraction()});
  }
  double min_o = 1e300, min_v = 1e300;
  for (const auto& r : rows) {
    min_o = std::min(min_o, std::max(r.overhead, 1e-12));
    min_v = std::min(min_v, std::max(r.viol, 1e-12));
  }
  std::ostringstream ss;
  CsvWriter csv(ss);
  csv.header({"tau_s", "overhead_fraction", "violation_fraction", "score"});
  for (const auto& r : rows) {
    const double score = std::max(r.overhead, 1e-12) / min_o +
                         std::max(r.viol, 1e-12) / min_v;
    csv.row(r.tau, r.overhead, r.viol, score);
  }
  save_text(out_dir + "/tau.csv", ss.str());
  return 0;
}

int micro_buckets(const std::string& out_dir, uint64_t seed) {
  // ~1000 keys through a 2-hop pipeline per (d, w) configuration.
  std::ostringstream ss;
  CsvWriter csv(ss);
  csv.header({"d", "w", "keys", "lookups", "misses", "miss_rate",
              "recovery_relative", "memory_bytes"});
  for (int d = 1; d <= 4; ++d) {
    for (int w : {1024, 2048, 4096}) {
      SimConfig cfg;
      Topology t;
      t.n_access = 2;
      t.n_aggregation = 0;
      t.n_core = 0;
      t.links.push_back({0, 1, 1e8, 0});
      cfg.topology = t;
      // 500 slices x 2 single-path keys per switch ~ 1000 keys.
      for (int i = 0; i < 500; ++i) {
        SliceSpec s;
        s.slice_id = i + 1;
        s.type = kAllSliceTypes[i % 3];
        s.sla_targets = {{MetricKind::kLatency, 10.0},
                         {MetricKind::kJitter, 10.0},
                         {MetricKind::kLoss, 0.01}};
        for (auto m : kAllMetrics) s.tolerances[m] = 0.05 * s.sla_targets[m];
        PathSpec p;
        p.path_id = static_cast<uint16_t>(i + 1);
        p.hops = {0, 1};
        p.egress_ports = {0, 0};
        s.paths.push_back(p);
        PathSpec p2 = p;
        p2.path_id = static_cast<uint16_t>(10'000 + i);
        s.paths.push_back(p2);
        s.traffic.pkt_bytes_min = s.traffic.pkt_bytes_max = 200;
        s.traffic.rate_mbps_per_user = 0.02;
        s.traffic.user_count = 1;
        cfg.slices.push_back(std::move(s));
      }
      cfg.duration_s = 6.0;
      cfg.measure_start_s = 1.0;
      cfg.desk_scale = 1.0;
      cfg.seed = seed;
      cfg.switch_cfg.d = d;
      cfg.switch_cfg.w = w;
      cfg.switch_cfg.hash_seed = derive_seed(seed, d, w);
      cfg.scheme.kind = SchemeKind::kStaticAgnostic;
      cfg.scheme.static_delta = 0.05;
      auto res = slicemon::run(cfg);
      csv.row(d, w, 1000, res.lookups, res.misses, res.miss_rate(),
              res.recovery_relative(),
              static_cast<uint64_t>(d) * w * sizeof(BucketEntry));
    }
  }
  save_text(out_dir + "/buckets.csv", ss.str());
  return 0;
}

int micro_solver(const std::string& out_dir, uint64_t seed) {
  std::ostringstream ss;
  CsvWriter csv(ss);
  csv.header({"n_slices", "lookup_ms", "exact_ms", "greedy_ms",
              "exact_objective", "greedy_objective"});
  for (int n : {50, 100, 150, 200, 250, 300}) {
    auto slices = make_workload(WorkloadMix::kBalanced, n, seed);
    DistributionSet dists;
    Rng rng(derive_seed(seed, 0xd15, n));
    for (const auto& s : slices) {
      for (auto m : kAllMetrics) {
        dists.pooled[{s.slice_id, m}] =
            DiffDistribution{0.0, 0.05 + 0.5 * rng.uniform(), 1024, {}};
      }
    }
    std::array<CandidateGrid, kMetricCount> grids = {
        default_grid(MetricKind::kLatency), default_grid(MetricKind::kJitter),
        default_grid(MetricKind::kLoss)};

    const auto t0 = std::chrono::steady_clock::now();
    auto model = build_lookup(dists, grids, slices, {.beta_steps = 10'000,
                                                     .base_seed = seed});
    const auto t1 = std::chrono::steady_clock::now();

    // A binding overhead budget engages the branch-and-bound path.
    auto probe = make_problem(model, slices, 0.6, 5.0, 100.0);
    auto greedy_probe = solve_greedy(probe);
    double greedy_gamma = 0.0;
    for (const auto& [k, pd] : greedy_probe.assignment) greedy_gamma += pd.overhead;

    auto problem = make_problem(model, slices, 0.6, 5.0, 100.0,
                                greedy_gamma * 1.02, 2.5);
    const auto t2 = std::chrono::steady_clock::now();
    auto exact = solve_exact(problem);
    if (exact.fallback_required) exact = solve_greedy(problem);
    const auto t3 = std::chrono::steady_clock::now();
    auto greedy = solve_greedy(problem);
    const auto t4 = std::chrono::steady_clock::now();

    csv.row(n, std::chrono::duration<double, std::milli>(t1 - t0).count(),
            std::chrono::duration<double, std::milli>(t3 - t2).count(),
            std::chrono::duration<double, std::milli>(t4 - t3).count(),
            exact.objective, greedy.objective);
  }
  save_text(out_dir + "/solver.csv", ss.str());
  return 0;
}

}  // namespace

int cmd_micro(const std::string& kind, const std::string& out_dir, int jobs,
              uint64_t seed) {
  (void)jobs;
  fs::create_directories(out_dir);
  try {
    if (kind == "tau") return micro_tau(out_dir, seed);
    if (kind == "buckets") return micro_buckets(out_dir, seed);
    if (kind == "solver-scaling") return micro_solver(out_dir, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  std::fprintf(stderr, "unknown micro kind: %s (tau|buckets|solver-scaling)\n",
               kind.c_str());
  return 2;
}

}  // namespace slicemon
