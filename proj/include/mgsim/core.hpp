#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace mgsim {

using Cycle = std::uint64_t;

// Block timestamps (rts, wts, memts, mwts) are 16-bit; cache timestamps are 64-bit.
using Timestamp = std::uint16_t;
using CacheTime = std::uint64_t;

inline constexpr std::uint32_t kMaxTimestamp = 0xFFFF;
inline constexpr std::uint64_t kBlockBytes = 64;

using ComponentId = std::uint32_t;
using CuId = std::uint32_t;

/// A protocol invariant was broken. The run cannot continue.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or inconsistent configuration / input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Access outside the simulated physical memory.
class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Byte address truncated to 64-byte block granularity.
class BlockAddress {
 public:
  constexpr BlockAddress() = default;
  static constexpr BlockAddress from_byte(std::uint64_t byte_addr) {
    return BlockAddress(byte_addr & ~(kBlockBytes - 1));
  }
  constexpr std::uint64_t value() const { return value_; }
  constexpr std::uint64_t block_number() const { return value_ / kBlockBytes; }

  friend constexpr auto operator<=>(const BlockAddress&, const BlockAddress&) = default;

 private:
  explicit constexpr BlockAddress(std::uint64_t v) : value_(v) {}
  std::uint64_t value_ = 0;
};

/// Identifies one write operation. The simulated "data" of a block is the id of
/// the write that produced it; 0 is the initial memory contents.
struct WriteId {
  std::uint64_t value = 0;

  static constexpr WriteId initial() { return {}; }
  static constexpr WriteId make(CuId cu, std::uint64_t seq) {
    return {(static_cast<std::uint64_t>(cu) + 1) << 40 | (seq & ((1ULL << 40) - 1))};
  }
  constexpr bool is_initial() const { return value == 0; }
  friend constexpr auto operator<=>(const WriteId&, const WriteId&) = default;
};

struct LeaseConfig {
  Timestamp rd_lease = 10;
  Timestamp wr_lease = 5;
  std::map<std::uint64_t, Timestamp> rd_override;  // keyed by block address

  Timestamp read_lease_for(BlockAddress addr) const {
    auto it = rd_override.find(addr.value());
    return it == rd_override.end() ? rd_lease : it->second;
  }
  void validate() const;
};

enum class MsgKind : std::uint8_t { ReadReq, ReadResp, WriteReq, WriteResp, EvictNotice };

const char* to_string(MsgKind k);

inline bool is_request(MsgKind k) {
  return k == MsgKind::ReadReq || k == MsgKind::WriteReq || k == MsgKind::EvictNotice;
}

/// Where a read was ultimately satisfied. Carried on responses for statistics
/// and golden tests; not part of the modeled wire format.
enum class ServedBy : std::uint8_t { L1, L2, Memory };

const char* to_string(ServedBy s);

enum class L1Outcome : std::uint8_t { Hit, TagMiss, CoherencyMiss, NotApplicable };

struct Message {
  MsgKind kind = MsgKind::ReadReq;
  BlockAddress addr;
  WriteId payload;
  bool has_ts = false;
  Timestamp rts = 0;
  Timestamp wts = 0;
  ComponentId src = 0;
  ComponentId dst = 0;

  // Response flagged by a timestamp overflow at the TSU.
  bool ts_reset = false;
  // Write-back of a dirty victim (WB baselines only).
  bool writeback = false;
  // L2 cts carried by an eviction notice.
  CacheTime evictor_cts = 0;
  // Overflow generation of the address; checker plumbing.
  std::uint32_t epoch = 0;
  ServedBy served_by = ServedBy::Memory;
  // Read responses to a CU: logical time the read is ordered at, and how the
  // L1 handled it. Checker plumbing.
  CacheTime reader_time = 0;
  L1Outcome l1_outcome = L1Outcome::NotApplicable;
  // Opaque token the original requester uses to match its response.
  std::uint64_t token = 0;
};

/// True iff cts lies within the lease [wts, rts].
bool lease_contains(CacheTime cts, Timestamp wts, Timestamp rts);

/// Cache timestamp after observing a response with the given wts.
constexpr CacheTime advance_cts(CacheTime cts, Timestamp wts) {
  return cts > wts ? cts : static_cast<CacheTime>(wts);
}

struct TsAddResult {
  Timestamp value = 0;
  bool overflow = false;
  friend constexpr bool operator==(const TsAddResult&, const TsAddResult&) = default;
};

/// 16-bit timestamp addition. Any sum above 65535 re-initializes to 0 and
/// reports the overflow so the caller can take the reset path.
TsAddResult ts_add(std::uint32_t ts, std::uint32_t delta);

}  // namespace mgsim
