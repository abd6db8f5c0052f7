#include "slicemon/dataplane.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slicemon/rng.hpp"

namespace slicemon {

// -------------------------------------------------------------- header codec

uint8_t TelemetryHeader::bitmap() const {
  uint8_t b = 0;
  for (size_t m = 0; m < kMetricCount; ++m) {
    if (e_curr[m]) b |= 1u << (5 - 2 * m);
    if (v_aux[m]) b |= 1u << (4 - 2 * m);
  }
  return b;
}

size_t TelemetryHeader::size_bytes() const {
  size_t conditional = 0;
  for (size_t m = 0; m < kMetricCount; ++m) {
    if (e_curr[m]) conditional += 4;
    if (v_aux[m]) conditional += 4;
  }
  return kShimBytes + (kHopMetaBits * hop_meta.size() + 7) / 8 + conditional;
}

void TelemetryHeader::clear_conditional() {
  e_curr.fill(std::nullopt);
  v_aux.fill(std::nullopt);
}

namespace {

class BitWriter {
 public:
  explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}
  void put(uint32_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      const bool bit = (value >> i) & 1u;
      if (fill_ == 0) out_.push_back(0);
      out_.back() |= static_cast<uint8_t>(bit) << (7 - fill_);
      fill_ = (fill_ + 1) % 8;
    }
  }
  void align() { fill_ = 0; }

 private:
  std::vector<uint8_t>& out_;
  int fill_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const uint8_t> data, size_t byte_pos)
      : data_(data), byte_(byte_pos) {}
  uint32_t get(int bits) {
    uint32_t v = 0;
    for (int i = 0; i < bits; ++i) {
      if (byte_ >= data_.size()) throw DecodeError("header truncated");
      const bool bit = (data_[byte_] >> (7 - fill_)) & 1u;
      v = (v << 1) | static_cast<uint32_t>(bit);
      fill_ = (fill_ + 1) % 8;
      if (fill_ == 0) ++byte_;
    }
    return v;
  }
  size_t byte_pos() const { return fill_ == 0 ? byte_ : byte_ + 1; }

 private:
  std::span<const uint8_t> data_;
  size_t byte_;
  int fill_ = 0;
};

}  // namespace

std::vector<uint8_t> encode_header(const TelemetryHeader& h) {
  std::vector<uint8_t> out;
  out.reserve(h.size_bytes());
  BitWriter w(out);
  w.put(h.version, 4);
  w.put(static_cast<uint32_t>(h.hop_meta.size()), 8);
  w.put(h.bitmap(), 6);
  w.put(0, 6);  // reserved
  for (const auto& hop : h.hop_meta) {
    w.put(hop.node_id & 0x3ff, 10);
    w.put(hop.flags & 0x7, 3);
  }
  w.align();
  for (size_t m = 0; m < kMetricCount; ++m) {
    if (h.e_curr[m]) w.put(*h.e_curr[m], 32);
    if (h.v_aux[m]) w.put(*h.v_aux[m], 32);
  }
  return out;
}

TelemetryHeader decode_header(std::span<const uint8_t> bytes) {
  if (bytes.size() < kShimBytes) throw DecodeError("header shorter than shim");
  BitReader shim(bytes, 0);
  TelemetryHeader h;
  h.version = static_cast<uint8_t>(shim.get(4));
  if (h.version != kHeaderVersion) {
    throw DecodeError("unsupported header version " + std::to_string(h.version));
  }
  const uint32_t hops = shim.get(8);
  const uint8_t bitmap = static_cast<uint8_t>(shim.get(6));
  shim.get(6);  // reserved

  BitReader meta(bytes, kShimBytes);
  for (uint32_t i = 0; i < hops; ++i) {
    HopMetadata hm;
    hm.node_id = static_cast<uint16_t>(meta.get(10));
    hm.flags = static_cast<uint8_t>(meta.get(3));
    h.hop_meta.push_back(hm);
  }
  size_t pos = kShimBytes + (kHopMetaBits * hops + 7) / 8;
  for (size_t m = 0; m < kMetricCount; ++m) {
    for (int part = 0; part < 2; ++part) {
      const bool present = (bitmap >> (5 - 2 * m - part)) & 1u;
      if (!present) continue;
      if (pos + 4 > bytes.size()) throw DecodeError("conditional field truncated");
      uint32_t v = (uint32_t{bytes[pos]} << 24) | (uint32_t{bytes[pos + 1]} << 16) |
                   (uint32_t{bytes[pos + 2]} << 8) | uint32_t{bytes[pos + 3]};
      pos += 4;
      if (part == 0) {
        h.e_curr[m] = v;
      } else {
        h.v_aux[m] = v;
      }
    }
  }
  if (pos != bytes.size()) {
    throw DecodeError("header length mismatch: bitmap implies " +
                      std::to_string(pos) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  return h;
}

TelemetryHeader decode_header(std::span<const uint8_t> bytes, int expected_hops,
                              uint8_t expected_bitmap) {
  TelemetryHeader h = decode_header(bytes);
  if (static_cast<int>(h.hop_meta.size()) != expected_hops) {
    throw DecodeError("hop count mismatch");
  }
  if (h.bitmap() != expected_bitmap) throw DecodeError("bitmap mismatch");
  return h;
}

std::string dump_header(const TelemetryHeader& h) {
  std::ostringstream os;
  os << "ver=" << int(h.version) << " hops=" << h.hop_meta.size() << " bitmap=0b";
  for (int i = 5; i >= 0; --i) os << ((h.bitmap() >> i) & 1u);
  os << " size=" << h.size_bytes() << "B\n";
  for (size_t i = 0; i < h.hop_meta.size(); ++i) {
    os << "  hop[" << i << "] node=" << h.hop_meta[i].node_id
       << " flags=" << int(h.hop_meta[i].flags) << "\n";
  }
  for (size_t m = 0; m < kMetricCount; ++m) {
    const auto name = to_string(kAllMetrics[m]);
    if (h.e_curr[m]) {
      os << "  " << name << ".e_curr=" << *h.e_curr[m] << " ("
         << metric_from_raw(kAllMetrics[m], *h.e_curr[m]) << ")\n";
    }
    if (h.v_aux[m]) os << "  " << name << ".v_aux=" << *h.v_aux[m] << "\n";
  }
  return os.str();
}

uint32_t metric_to_raw(MetricKind m, double value) {
  switch (m) {
    case MetricKind::kLatency: {
      const double ns = std::round(value * 1e6);
      if (ns <= 0.0) return 0;
      if (ns >= 4294967295.0) return 0xffffffffu;
      return static_cast<uint32_t>(ns);
    }
    case MetricKind::kJitter: {
      const double ns = std::round(value * 1e6);
      const double clamped = std::min(2147483647.0, std::max(-2147483648.0, ns));
      return static_cast<uint32_t>(static_cast<int32_t>(clamped));
    }
    case MetricKind::kLoss: {
      const double v = std::round(value);
      if (v <= 0.0) return 0;
      if (v >= 4294967295.0) return 0xffffffffu;
      return static_cast<uint32_t>(v);
    }
  }
  return 0;
}

double metric_from_raw(MetricKind m, uint32_t raw) {
  switch (m) {
    case MetricKind::kLatency: return raw * 1e-6;
    case MetricKind::kJitter: return static_cast<int32_t>(raw) * 1e-6;
    case MetricKind::kLoss: return raw;
  }
  return 0.0;
}

// ------------------------------------------------------------- bucket arrays

BucketArrays::BucketArrays(int d, int w, uint64_t hash_seed) : d_(d), w_(w) {
  store_.resize(static_cast<size_t>(d) * w);
  for (int i = 0; i < d; ++i) seeds_.push_back(derive_seed(hash_seed, 0xb0c4e7, i));
}

uint64_t BucketArrays::hash(int array, const BucketKey& key) const {
  const uint64_t packed = (static_cast<uint64_t>(key.slice_id) << 24) |
                          (static_cast<uint64_t>(key.path_id) << 8) | key.port;
  return derive_seed(seeds_[array], packed);
}

size_t BucketArrays::slot_index(int array, const BucketKey& key) const {
  return static_cast<size_t>(array) * w_ + hash(array, key) % w_;
}

BucketArrays::LookupResult BucketArrays::lookup(const BucketKey& key) {
  ++lookups;
  LookupResult r;
  int first_empty_array = -1, first_empty_slot = -1;
  for (int a = 0; a < d_; ++a) {
    const size_t idx = slot_index(a, key);
    BucketEntry& e = store_[idx];
    if (e.occupied && e.key == key) {
      r.entry = &e;
      r.array = a;
      r.slot = static_cast<int>(idx % w_);
      return r;
    }
    if (!e.occupied && first_empty_array < 0) {
      first_empty_array = a;
      first_empty_slot = static_cast<int>(idx % w_);
    }
  }
  ++misses;
  r.miss = true;
  if (first_empty_array >= 0) {
    r.insert_array = first_empty_array;
    r.insert_slot = first_empty_slot;
  } else {
    r.insert_array = 0;
    r.insert_slot = static_cast<int>(slot_index(0, key) % w_);
  }
  return r;
}

BucketArrays::InsertResult BucketArrays::insert_at(const LookupResult& r,
                                                   const BucketKey& key) {
  BucketEntry& e = store_[static_cast<size_t>(r.insert_array) * w_ + r.insert_slot];
  InsertResult out;
  if (e.occupied && !(e.key == key)) out.evicted = e.key;
  e = BucketEntry{};
  e.occupied = true;
  e.key = key;
  out.entry = &e;
  return out;
}

// ------------------------------------------------------------- switch state

void DiffReservoir::push(double d) {
  ++seen_;
  if (static_cast<int>(samples_.size()) < capacity_) {
    samples_.push_back(d);
    return;
  }
  // Vitter's algorithm R with a derived per-sample position.
  const uint64_t pos = derive_seed(rng_seed_, seen_) % seen_;
  if (pos < static_cast<uint64_t>(capacity_)) samples_[pos] = d;
}

void DiffReservoir::clear() {
  samples_.clear();
  seen_ = 0;
}

SwitchState::SwitchState(uint16_t node_id, const SwitchConfig& cfg)
    : node_id_(node_id), cfg_(cfg), buckets_(cfg.d, cfg.w, cfg.hash_seed) {}

void SwitchState::set_threshold(uint32_t slice, MetricKind m, double delta) {
  thresholds_[tkey(slice, m)] = delta;
}

void SwitchState::deploy_thresholds(
    const std::map<std::pair<uint32_t, MetricKind>, double>& t) {
  for (const auto& [k, v] : t) thresholds_[tkey(k.first, k.second)] = v;
}

double SwitchState::threshold(uint32_t slice, MetricKind m) const {
  auto it = thresholds_.find(tkey(slice, m));
  return it == thresholds_.end() ? default_threshold_ : it->second;
}

uint64_t SwitchState::forwarded_count(const BucketKey& key) const {
  auto it = fwd_counters_.find(kkey(key));
  return it == fwd_counters_.end() ? 0 : it->second;
}

bool SwitchState::on_miss_notification(const BucketKey& key, bool is_ingress) {
  auto r = buckets_.lookup(key);
  if (r.entry) {
    r.entry->f_tm = true;
    return true;
  }
  if (is_ingress) {
    // End of the recovery chain: reinitialize state at the path ingress.
    auto ins = buckets_.insert_at(r, key);
    ins.entry->f_tm = true;
    return true;
  }
  return false;
}

std::optional<BucketKey> SwitchState::prime(const BucketKey& key) {
  auto r = buckets_.lookup(key);
  if (r.entry) return std::nullopt;
  return buckets_.insert_at(r, key).evicted;
}

ProcessEvents SwitchState::process_packet(const BucketKey& key, bool is_ingress,
                                          const Observation& obs,
                                          TelemetryHeader& header) {
  ProcessEvents ev;
  ++stats_.packets;

  // Step 1: bucket array lookup. On a miss the key claims its designated
  // slot; an evicted occupant recovers later through the notification path.
  auto r = buckets_.lookup(key);
  BucketEntry* entry = r.entry;
  if (r.miss) {
    ev.miss = true;
    ev.notify_upstream = !is_ingress;
    auto ins = buckets_.insert_at(r, key);
    ev.evicted = ins.evicted;
    entry = ins.entry;
  }

  const bool force_full = entry->f_tm || ev.miss;
  ev.forced_full = force_full;
  if (force_full) ++stats_.forced_full;
  entry->f_tm = false;

  // Local forwarded-packet counter (loss auxiliary), counted before metric
  // computation so this packet is included.
  uint64_t& local_count = fwd_counters_[kkey(key)];
  if (obs.count_forwarded) ++local_count;

  // Steps 2-4 per monitored metric. The incoming conditional fields are
  // consumed here; the outgoing header carries only this hop's insertions.
  struct Pending {
    MetricKind m;
    uint32_t e_raw;
    std::optional<uint32_t> aux_raw;
    bool recovery;
    double quantized;
  };
  std::vector<Pending> pending;

  for (auto m : kAllMetrics) {
    const size_t mi = metric_index(m);
    if (!cfg_.monitored[mi]) continue;
    MetricSlot& slot = entry->metrics[mi];

    // Step 2a: update E_prev from the header when the upstream reported.
    if (is_ingress) {
      slot.e_prev = 0.0;
    } else if (header.e_curr[mi]) {
      slot.e_prev = metric_from_raw(m, *header.e_curr[mi]);
    }
    if (!is_ingress && m == MetricKind::kLoss && header.v_aux[mi]) {
      // Fresh upstream counter: anchor this hop's loss estimate now. Stale
      // anchors persist until the next export.
      slot.v_aux = metric_from_raw(m, *header.v_aux[mi]);
      slot.aux_valid = true;
      slot.hop_value = std::max(0.0, slot.v_aux - static_cast<double>(local_count));
    }

    // Step 2b: local observation L_curr.
    double l_curr = 0.0;
    switch (m) {
      case MetricKind::kLatency:
        l_curr = obs.hop_latency_ms;
        break;
      case MetricKind::kJitter:
        // Change in this hop's latency vs. the previous packet; the first
        // packet for the key observes zero.
        l_curr = slot.aux_valid ? obs.hop_latency_ms - slot.v_aux : 0.0;
        slot.v_aux = obs.hop_latency_ms;
        slot.aux_valid = true;
        break;
      case MetricKind::kLoss:
        l_curr = is_ingress ? 0.0 : slot.hop_value;
        break;
    }

    // Step 2c: aggregate into the e2e estimate.
    const double e_curr = slot.e_prev + l_curr;
    ev.e_curr[mi] = e_curr;

    const double delta = threshold(key.slice_id, m);
    // >= trigger: deviation == Delta inserts (walkthrough semantics).
    const bool trigger = std::fabs(e_curr - slot.e_rep) >= delta;
    if (trigger || force_full) {
      Pending p;
      p.m = m;
      p.e_raw = metric_to_raw(m, e_curr);
      p.quantized = metric_from_raw(m, p.e_raw);
      p.recovery = force_full && !trigger;
      if (m == MetricKind::kLoss) {
        p.aux_raw = metric_to_raw(m, static_cast<double>(local_count));
      }
      pending.push_back(p);
    } else {
      ev.action[mi] = PacketAction::kSkipped;
      ++stats_.skips;
    }

    // d(t) = E_curr(t) - E_last(t-1), fed to the controller's reservoirs.
    if (slot.last_valid) {
      auto key_sm = std::make_pair(key.slice_id, m);
      auto it = reservoirs_.find(key_sm);
      if (it == reservoirs_.end()) {
        it = reservoirs_
                 .emplace(key_sm,
                          DiffReservoir(cfg_.reservoir_capacity,
                                        derive_seed(cfg_.hash_seed, key.slice_id,
                                                    static_cast<uint64_t>(m), node_id_)))
                 .first;
      }
      it->second.push(e_curr - slot.e_last);
    }
    slot.e_last = e_curr;
    slot.last_valid = true;
  }

  // Step 3: selective insertion with header-overflow guard. The conditional
  // part plus this hop's metadata must fit the configured headroom.
  TelemetryHeader outgoing = header;
  outgoing.clear_conditional();
  outgoing.hop_meta.push_back({node_id_, 0});
  for (const auto& p : pending) {
    const size_t mi = metric_index(p.m);
    TelemetryHeader trial = outgoing;
    trial.e_curr[mi] = p.e_raw;
    if (p.aux_raw) trial.v_aux[mi] = *p.aux_raw;
    if (trial.size_bytes() > static_cast<size_t>(cfg_.headroom_bytes)) {
      ++ev.header_overflows;
      ++stats_.header_overflows;
      continue;  // counted, not truncated; E_rep untouched so it retries
    }
    outgoing = trial;
    // Step 4: E_rep updates to the inserted (quantized) E_curr.
    entry->metrics[mi].e_rep = p.quantized;
    ev.action[mi] = p.recovery ? PacketAction::kForcedFull : PacketAction::kInserted;
    ++stats_.insertions;
    if (p.recovery) {
      const int bits = 32 + (p.aux_raw ? 32 : 0);
      ev.recovery_bits += bits;
      stats_.recovery_bits += bits;
    }
  }
  header = std::move(outgoing);
  if (ev.notify_upstream) ++stats_.notifications_sent;
  return ev;
}

}  // namespace slicemon
