#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgsim/core.hpp"
#include "mgsim/topology.hpp"

namespace mgsim {

enum class TxnKind : std::uint8_t { Read, Write };

// Wire format sizes. A block is 64 B, an address 8 B, metadata and ACK 4 B
// each; coherent responses carry two 16-bit timestamps.
inline constexpr std::uint32_t kAddrBytes = 8;
inline constexpr std::uint32_t kMetaBytes = 4;
inline constexpr std::uint32_t kAckBytes = 4;
inline constexpr std::uint32_t kTimestampPairBytes = 4;

/// Request plus response bytes for one transaction.
std::uint32_t transaction_bytes(TxnKind kind, bool with_timestamps);
/// Bytes of one message on the wire.
std::uint32_t message_bytes(MsgKind kind, bool with_timestamps);

struct LinkTraffic {
  std::uint64_t read_req = 0;
  std::uint64_t read_resp = 0;
  std::uint64_t write_req = 0;
  std::uint64_t write_resp = 0;
  std::uint64_t evict_notice = 0;
  std::uint64_t bytes = 0;
  std::uint64_t bytes_without_ts = 0;

  std::uint64_t transactions() const { return read_req + write_req; }
  void count(MsgKind k, std::uint32_t bytes_with, std::uint32_t bytes_without);
};

struct CacheCounters {
  std::uint64_t read_hits = 0;
  std::uint64_t read_tag_misses = 0;
  std::uint64_t read_coherency_misses = 0;
  std::uint64_t write_hits = 0;
  std::uint64_t write_misses = 0;
  std::uint64_t mshr_merges = 0;
  std::uint64_t evictions = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t cts_resets = 0;
  std::uint64_t mshr_full_stalls = 0;  // head request refused: no MSHR entry
  std::uint64_t no_victim_stalls = 0;  // head request refused: every way busy
};

struct TsuCounters {
  std::uint64_t inserts = 0;
  std::uint64_t extends = 0;
  std::uint64_t capacity_evictions = 0;
  std::uint64_t notice_evictions = 0;
  std::uint64_t notices = 0;
  std::uint64_t overflows = 0;
};

struct Stats {
  std::string protocol;
  std::string trace_id;
  Cycle runtime_cycles = 0;
  std::uint64_t events = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::array<LinkTraffic, 3> traffic{};  // indexed by LinkClass
  CacheCounters l1;
  CacheCounters l2;
  TsuCounters tsu;

  LinkTraffic& link(LinkClass c) { return traffic[static_cast<std::size_t>(c)]; }
  const LinkTraffic& link(LinkClass c) const { return traffic[static_cast<std::size_t>(c)]; }

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// One CSV row per run, speedup and traffic normalized against the run named
/// `baseline`. Throws ConfigError when runs disagree on trace identity or the
/// baseline is missing.
std::string emit_report(std::span<const Stats> runs, const std::string& baseline);

/// Timestamp storage implied by the cache/TSU geometry.
struct StorageAccounting {
  std::uint64_t l1_bytes_per_cache = 0;      // rts + wts per L1 block
  std::uint64_t l2_bytes_per_gpu = 0;        // rts + wts per L2 block, all banks
  std::uint64_t tsu_memts_bytes_per_gpu = 0; // one 16-bit memts per tracked block
  std::uint64_t tsu_total_bytes_per_gpu = 0; // memts + mwts as implemented
  std::uint64_t cts_bytes_per_gpu = 0;       // 64-bit cts per L1 and per L2 bank
};

StorageAccounting storage_accounting(const SystemConfig& cfg);

}  // namespace mgsim
