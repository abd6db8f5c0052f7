#pragma once

#include <string>
#include <vector>

#include "slicemon/domain.hpp"

namespace slicemon {

// Workload/topology files are JSON with explicit units in the key names
// (ms, bytes, Mbps, bps, ns). See the schema notes in the README.
std::string topology_to_json(const Topology& t);
Topology topology_from_json(const std::string& json);

std::string slices_to_json(const std::vector<SliceSpec>& slices);
std::vector<SliceSpec> slices_from_json(const std::string& json);

void save_text(const std::string& path, const std::string& content);
std::string load_text(const std::string& path);  // throws ConfigError

}  // namespace slicemon
