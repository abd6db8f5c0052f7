#include "slicemon/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace slicemon {

using nlohmann::json;

std::string topology_to_json(const Topology& t) {
  json j;
  j["access"] = t.n_access;
  j["aggregation"] = t.n_aggregation;
  j["core"] = t.n_core;
  json links = json::array();
  for (const auto& l : t.links) {
    links.push_back({{"src", l.src},
                     {"dst", l.dst},
                     {"capacity_bps", l.capacity_bps},
                     {"prop_delay_ns", l.prop_delay_ns}});
  }
  j["links"] = links;
  return j.dump(2);
}

Topology topology_from_json(const std::string& text) {
  Topology t;
  try {
    json j = json::parse(text);
    t.n_access = j.at("access").get<int>();
    t.n_aggregation = j.at("aggregation").get<int>();
    t.n_core = j.at("core").get<int>();
    for (const auto& l : j.at("links")) {
      t.links.push_back({l.at("src").get<uint16_t>(), l.at("dst").get<uint16_t>(),
                         l.at("capacity_bps").get<double>(),
                         l.at("prop_delay_ns").get<int64_t>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("topology parse: ") + e.what());
  }
  return t;
}

std::string slices_to_json(const std::vector<SliceSpec>& slices) {
  json arr = json::array();
  for (const auto& s : slices) {
    json j;
    j["slice_id"] = s.slice_id;
    j["type"] = to_string(s.type);
    j["sla_latency_ms"] = s.sla_targets.at(MetricKind::kLatency);
    j["sla_jitter_ms"] = s.sla_targets.at(MetricKind::kJitter);
    j["sla_loss_fraction"] = s.sla_targets.at(MetricKind::kLoss);
    j["tol_latency_ms"] = s.tolerances.at(MetricKind::kLatency);
    j["tol_jitter_ms"] = s.tolerances.at(MetricKind::kJitter);
    j["tol_loss_fraction"] = s.tolerances.at(MetricKind::kLoss);
    j["pkt_bytes_min"] = s.traffic.pkt_bytes_min;
    j["pkt_bytes_max"] = s.traffic.pkt_bytes_max;
    j["rate_mbps_per_user"] = s.traffic.rate_mbps_per_user;
    j["user_count"] = s.traffic.user_count;
    if (s.traffic.burst_period_s > 0) {
      j["burst_period_s"] = s.traffic.burst_period_s;
      j["burst_duty"] = s.traffic.burst_duty;
      j["burst_gain"] = s.traffic.burst_gain;
    }
    json paths = json::array();
    for (const auto& p : s.paths) {
      paths.push_back({{"path_id", p.path_id},
                       {"hops", p.hops},
                       {"egress_ports", p.egress_ports}});
    }
    j["paths"] = paths;
    arr.push_back(j);
  }
  return arr.dump(2);
}

std::vector<SliceSpec> slices_from_json(const std::string& text) {
  std::vector<SliceSpec> out;
  try {
    json arr = json::parse(text);
    for (const auto& j : arr) {
      SliceSpec s;
      s.slice_id = j.at("slice_id").get<uint32_t>();
      s.type = slice_type_from_string(j.at("type").get<std::string>());
      s.sla_targets[MetricKind::kLatency] = j.at("sla_latency_ms").get<double>();
      s.sla_targets[MetricKind::kJitter] = j.at("sla_jitter_ms").get<double>();
      s.sla_targets[MetricKind::kLoss] = j.at("sla_loss_fraction").get<double>();
      s.tolerances[MetricKind::kLatency] = j.at("tol_latency_ms").get<double>();
      s.tolerances[MetricKind::kJitter] = j.at("tol_jitter_ms").get<double>();
      s.tolerances[MetricKind::kLoss] = j.at("tol_loss_fraction").get<double>();
      s.traffic.pkt_bytes_min = j.at("pkt_bytes_min").get<int>();
      s.traffic.pkt_bytes_max = j.at("pkt_bytes_max").get<int>();
      s.traffic.rate_mbps_per_user = j.at("rate_mbps_per_user").get<double>();
      s.traffic.user_count = j.at("user_count").get<int>();
      if (j.contains("burst_period_s")) {
        s.traffic.burst_period_s = j.at("burst_period_s").get<double>();
        s.traffic.burst_duty = j.at("burst_duty").get<double>();
        s.traffic.burst_gain = j.at("burst_gain").get<double>();
      }
      for (const auto& pj : j.at("paths")) {
        PathSpec p;
        p.path_id = pj.at("path_id").get<uint16_t>();
        p.hops = pj.at("hops").get<std::vector<uint16_t>>();
        p.egress_ports = pj.at("egress_ports").get<std::vector<uint8_t>>();
        s.paths.push_back(std::move(p));
      }
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("slice parse: ") + e.what());
  }
  return out;
}

void save_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << content;
}

std::string load_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace slicemon
