#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicemon/domain.hpp"

namespace slicemon {

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Telemetry header
//
// Wire format, big-endian field order:
//   shim (3 B): version(4) | hop_count(8) | bitmap(6) | reserved(6)
//   hop metadata, packed 13-bit fields in path order: node_id(10) | flags(3),
//     padded with zero bits to the next byte boundary
//   conditional fields in bitmap order, 32 bits each
// Bitmap bit order (MSB first): latency E, latency aux, jitter E, jitter aux,
// loss E, loss aux. Worst case size: 3 + ceil(13H/8) + 8M bytes.

inline constexpr int kShimBytes = 3;
inline constexpr int kHopMetaBits = 13;
inline constexpr int kHeaderVersion = 1;

struct HopMetadata {
  uint16_t node_id = 0;  // 10 bits
  uint8_t flags = 0;     // 3 anomaly bits, carried but always zero here
  bool operator==(const HopMetadata&) const = default;
};

struct TelemetryHeader {
  uint8_t version = kHeaderVersion;
  std::vector<HopMetadata> hop_meta;
  std::array<std::optional<uint32_t>, kMetricCount> e_curr;  // raw 32-bit
  std::array<std::optional<uint32_t>, kMetricCount> v_aux;   // raw 32-bit

  uint8_t bitmap() const;
  size_t size_bytes() const;
  void clear_conditional();
  bool operator==(const TelemetryHeader&) const = default;
};

// Size of a header with H hops and the given conditional field counts.
constexpr size_t header_size_bytes(int hops, int metrics_with_aux,
                                   int metrics_without_aux) {
  return static_cast<size_t>(kShimBytes) + (kHopMetaBits * hops + 7) / 8 +
         8 * metrics_with_aux + 4 * metrics_without_aux;
}

std::vector<uint8_t> encode_header(const TelemetryHeader& h);
// Throws DecodeError on truncation, version/bitmap/length mismatch.
TelemetryHeader decode_header(std::span<const uint8_t> bytes);
// Validating decode: errors if the shim disagrees with the expected hop count
// or bitmap.
TelemetryHeader decode_header(std::span<const uint8_t> bytes, int expected_hops,
                              uint8_t expected_bitmap);
std::string dump_header(const TelemetryHeader& h);  // debug text form

// Raw field codecs. Latency is unsigned nanoseconds, jitter signed
// nanoseconds (two's complement in the 32-bit field), loss a packet count.
uint32_t metric_to_raw(MetricKind m, double value);
double metric_from_raw(MetricKind m, uint32_t raw);

// ---------------------------------------------------------------------------
// Bucket arrays

struct BucketKey {
  uint32_t slice_id = 0;
  uint16_t path_id = 0;
  uint8_t port = 0;
  bool operator==(const BucketKey&) const = default;
};

struct MetricSlot {
  double e_prev = 0.0;  // e2e estimate from previous hops
  double e_rep = 0.0;   // last reported e2e value
  double e_last = 0.0;  // e2e value of the most recent packet
  double v_aux = 0.0;   // jitter: prior hop latency; loss: upstream counter
  bool aux_valid = false;
  bool last_valid = false;
  double hop_value = 0.0;  // loss: per-hop loss anchored at the last aux update
};

struct BucketEntry {
  bool occupied = false;
  BucketKey key;
  std::array<MetricSlot, kMetricCount> metrics;
  bool f_tm = false;  // table-miss flag: next packet carries full telemetry
};

class BucketArrays {
 public:
  BucketArrays(int d, int w, uint64_t hash_seed);

  struct LookupResult {
    BucketEntry* entry = nullptr;  // set when found
    int array = -1;
    int slot = -1;
    bool miss = false;
    // Designated insertion position on miss: first empty slot among the d
    // candidates, else array 0 (evicting its occupant).
    int insert_array = -1;
    int insert_slot = -1;
  };

  LookupResult lookup(const BucketKey& key);

  struct InsertResult {
    BucketEntry* entry = nullptr;
    std::optional<BucketKey> evicted;
  };
  // Claims the insertion slot from a missed lookup, reporting the evicted key
  // when an occupied slot was overwritten.
  InsertResult insert_at(const LookupResult& r, const BucketKey& key);
  size_t slot_index(int array, const BucketKey& key) const;

  int arrays() const { return d_; }
  int width() const { return w_; }
  uint64_t hash(int array, const BucketKey& key) const;
  uint64_t lookups = 0;
  uint64_t misses = 0;

 private:
  int d_;
  int w_;
  std::vector<uint64_t> seeds_;
  std::vector<BucketEntry> store_;  // d_ * w_
};

// ---------------------------------------------------------------------------
// Switch state and packet processing

struct SwitchConfig {
  int d = 2;
  int w = 4096;
  uint64_t hash_seed = 1;
  int headroom_bytes = 64;  // telemetry budget per packet
  std::array<bool, kMetricCount> monitored = {true, true, true};
  int reservoir_capacity = 1024;
};

enum class PacketAction : uint8_t { kInserted, kSkipped, kForcedFull };

struct ProcessEvents {
  bool miss = false;
  bool notify_upstream = false;  // miss at a non-ingress hop
  std::optional<BucketKey> evicted;
  bool forced_full = false;  // F_tm or miss forced insertion
  std::array<PacketAction, kMetricCount> action = {
      PacketAction::kSkipped, PacketAction::kSkipped, PacketAction::kSkipped};
  std::array<double, kMetricCount> e_curr{};  // post-update estimates
  int header_overflows = 0;
  // Conditional bits inserted only because of miss recovery (delta < Delta).
  int recovery_bits = 0;
};

// Fixed-size reservoir of successive-difference samples d(t) = E_curr - E_last,
// polled and cleared by the controller each epoch.
class DiffReservoir {
 public:
  explicit DiffReservoir(int capacity = 1024, uint64_t seed = 0)
      : capacity_(capacity), rng_seed_(seed) {}
  void push(double d);
  const std::vector<double>& samples() const { return samples_; }
  uint64_t seen() const { return seen_; }
  void clear();

 private:
  int capacity_;
  uint64_t rng_seed_;
  uint64_t seen_ = 0;
  std::vector<double> samples_;
};

class SwitchState {
 public:
  SwitchState(uint16_t node_id, const SwitchConfig& cfg);

  // Per-metric local observation inputs for one packet.
  struct Observation {
    double hop_latency_ms = 0.0;
    bool count_forwarded = true;
  };

  // Runs the four-step egress algorithm for one packet: lookup, metric
  // computation, selective insertion (>= trigger), state update. Appends this
  // hop's 13-bit metadata. `is_ingress` marks the first hop of the path.
  ProcessEvents process_packet(const BucketKey& key, bool is_ingress,
                               const Observation& obs, TelemetryHeader& header);

  // Table-miss notification from downstream. Returns true when the key was
  // found (or reinitialized at the ingress) and F_tm set; false means the
  // caller should keep propagating upstream.
  bool on_miss_notification(const BucketKey& key, bool is_ingress);

  // Pre-installs zeroed state for a key (control-plane provisioning of known
  // slice routes). Returns the evicted key if the slot was occupied.
  std::optional<BucketKey> prime(const BucketKey& key);

  // Epoch-boundary threshold swap (atomic w.r.t. packet events by
  // construction: the simulator is single-threaded per switch).
  void deploy_thresholds(const std::map<std::pair<uint32_t, MetricKind>, double>& t);
  void set_threshold(uint32_t slice, MetricKind m, double delta);
  double threshold(uint32_t slice, MetricKind m) const;

  uint16_t node_id() const { return node_id_; }
  BucketArrays& buckets() { return buckets_; }
  const SwitchConfig& config() const { return cfg_; }

  uint64_t forwarded_count(const BucketKey& key) const;

  // (slice, metric) -> reservoir at this hop.
  std::map<std::pair<uint32_t, MetricKind>, DiffReservoir>& reservoirs() {
    return reservoirs_;
  }

  // Counters for instrumentation.
  struct Stats {
    uint64_t packets = 0;
    uint64_t insertions = 0;
    uint64_t skips = 0;
    uint64_t forced_full = 0;
    uint64_t notifications_sent = 0;
    uint64_t header_overflows = 0;
    uint64_t recovery_bits = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  uint16_t node_id_;
  SwitchConfig cfg_;
  BucketArrays buckets_;
  double default_threshold_ = 0.0;
  std::unordered_map<uint64_t, double> thresholds_;  // (slice<<2)|metric
  std::unordered_map<uint64_t, uint64_t> fwd_counters_;  // per key
  std::map<std::pair<uint32_t, MetricKind>, DiffReservoir> reservoirs_;
  Stats stats_;

  static uint64_t tkey(uint32_t slice, MetricKind m) {
    return (static_cast<uint64_t>(slice) << 2) | static_cast<uint64_t>(m);
  }
  static uint64_t kkey(const BucketKey& k) {
    return (static_cast<uint64_t>(k.slice_id) << 24) |
           (static_cast<uint64_t>(k.path_id) << 8) | k.port;
  }
};

}  // namespace slicemon
