#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mgsim/checker.hpp"
#include "mgsim/core.hpp"
#include "mgsim/fabric.hpp"
#include "mgsim/stats.hpp"
#include "mgsim/topology.hpp"

namespace mgsim {

struct TsuEntry {
  BlockAddress addr;
  Timestamp mwts = 0;   // logical time of the last write
  Timestamp memts = 0;  // furthest read lease handed out
};

/// Timestamps minted by the TSU for one access.
struct TsuGrant {
  Timestamp wts = 0;
  Timestamp rts = 0;
  bool overflow = false;  // the entry was re-initialized
  bool inserted = false;
};

/// Timestamp Storage Unit: a set-associative table of per-block lease state
/// beside one memory controller. Stores timestamps only, never data.
///
/// Removing an entry forgets its history, so each set remembers the largest
/// memts it ever dropped and seeds new entries from that high-water mark.
/// With an untouched set this reduces to the fresh-entry rules
/// (read: [0, RdLease], write: [1, WrLease]).
class Tsu {
 public:
  /// Blocks of one stack are indexed densely through `amap` with the given
  /// page interleave; `sets` * `ways` entries in total.
  Tsu(std::uint32_t sets, std::uint32_t ways, AddressMap amap, std::uint32_t interleave);

  TsuGrant read(BlockAddress addr, Timestamp rd_lease);
  TsuGrant write(BlockAddress addr, Timestamp wr_lease);
  /// Drops the entry iff its lease is no longer live for the evictor
  /// (memts < evictor_cts). Returns whether it was dropped.
  bool evict_notice(BlockAddress addr, CacheTime evictor_cts);

  std::optional<TsuEntry> find(BlockAddress addr) const;
  Timestamp high_water(BlockAddress addr) const { return high_water_[set_of(addr)]; }
  std::uint32_t sets() const { return sets_; }
  std::uint32_t ways() const { return ways_; }
  std::size_t occupancy() const;
  const TsuCounters& counters() const { return counters_; }

 private:
  struct Slot {
    TsuEntry entry;
    bool valid = false;
  };

  std::uint32_t set_of(BlockAddress addr) const;
  Slot* lookup(BlockAddress addr);
  Slot& insert(BlockAddress addr);

  std::uint32_t sets_;
  std::uint32_t ways_;
  AddressMap amap_;
  std::uint32_t interleave_;
  std::vector<Slot> slots_;
  std::vector<Timestamp> high_water_;
  TsuCounters counters_;
};

/// TSU geometry for one stack: every L2 block in the system is trackable,
/// spread evenly over the stacks.
std::uint32_t tsu_sets_per_stack(const SystemConfig& cfg);

/// Backing store: block -> last committed write, plus the overflow
/// generation of each block (checker plumbing, not modeled hardware).
class MainMemory {
 public:
  struct Cell {
    WriteId value;
    std::uint32_t epoch = 0;
  };

  Cell get(BlockAddress a) const {
    auto it = cells_.find(a.value());
    return it == cells_.end() ? Cell{} : it->second;
  }
  void commit(BlockAddress a, WriteId v) { cells_[a.value()].value = v; }
  std::uint32_t bump_epoch(BlockAddress a) { return ++cells_[a.value()].epoch; }
  std::map<std::uint64_t, WriteId> contents() const;

 private:
  std::unordered_map<std::uint64_t, Cell> cells_;
};

/// Memory controller of one HBM stack. Accesses take a fixed DRAM latency;
/// the TSU lookup runs in parallel and only matters if it is the slower path.
class MemoryController : public Component {
 public:
  MemoryController(ComponentId id, std::uint32_t stack, const SystemConfig& cfg, const AddressMap& amap,
                   Fabric& fabric, MainMemory& memory, RecordLog* records, InvariantMonitor* monitor);

  void handle(const Event& ev) override;
  std::string name() const override { return "hbm" + std::to_string(stack_); }

  const Tsu* tsu() const { return tsu_ ? &*tsu_ : nullptr; }

 private:
  void snapshot(BlockAddress a);
  void respond(const Message& req, Message resp);

  ComponentId id_;
  std::uint32_t stack_;
  const SystemConfig& cfg_;
  Fabric& fabric_;
  MainMemory& memory_;
  RecordLog* records_;
  InvariantMonitor* monitor_;
  std::optional<Tsu> tsu_;
  Cycle access_latency_;
};

}  // namespace mgsim
