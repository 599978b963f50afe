#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mgsim/checker.hpp"
#include "mgsim/core.hpp"
#include "mgsim/fabric.hpp"
#include "mgsim/stats.hpp"
#include "mgsim/topology.hpp"

namespace mgsim {

enum class BlockState : std::uint8_t {
  Invalid,
  Valid,
  Filling,  // way reserved for an outstanding read fill
  Locked,   // valid, write in flight below
};

struct CacheBlock {
  BlockAddress tag;
  WriteId payload;
  Timestamp wts = 0;
  Timestamp rts = 0;
  std::uint32_t epoch = 0;
  BlockState state = BlockState::Invalid;
  bool dirty = false;
  std::uint64_t lru = 0;  // larger = more recently used
};

/// Tag/data array with LRU replacement. Set selection goes through the
/// address map so a bank indexes only the pages it owns.
class CacheArray {
 public:
  CacheArray(const CacheParams& p, AddressMap amap, std::uint32_t interleave);

  std::uint32_t set_of(BlockAddress a) const;
  /// Way holding `a` in any non-Invalid state, or -1.
  int find(BlockAddress a) const;
  /// LRU choice among ways that are Invalid or Valid (never Filling/Locked);
  /// Invalid ways win. -1 if every way is busy.
  int victim(BlockAddress a) const;

  CacheBlock& at(BlockAddress a, int way) { return blocks_[index(a, way)]; }
  const CacheBlock& at(BlockAddress a, int way) const { return blocks_[index(a, way)]; }
  void touch(CacheBlock& b) { b.lru = ++clock_; }

  std::uint32_t sets() const { return sets_; }
  std::uint32_t ways() const { return ways_; }
  std::vector<CacheBlock>& blocks() { return blocks_; }
  const std::vector<CacheBlock>& blocks() const { return blocks_; }

 private:
  std::size_t index(BlockAddress a, int way) const {
    return std::size_t{set_of(a)} * ways_ + static_cast<std::size_t>(way);
  }

  std::uint32_t sets_;
  std::uint32_t ways_;
  AddressMap amap_;
  std::uint32_t interleave_;
  std::vector<CacheBlock> blocks_;
  std::uint64_t clock_ = 0;
};

enum class CacheRole : std::uint8_t { L1, L2 };

/// One cache (an L1 or one L2 bank). Requests arrive from above, are handled
/// one per cycle in arrival order, and misses go below through the fabric.
///
/// Timestamp rules apply only in the coherent configuration; otherwise a hit
/// is a tag match. L1s and WT L2s are write-through/no-write-allocate; a WB
/// L2 absorbs writes and writes dirty victims back.
class CacheController : public Component {
 public:
  CacheController(ComponentId id, CacheRole role, std::uint32_t gpu, std::uint32_t index, const SystemConfig& cfg,
                  const SystemGraph& graph, Fabric& fabric, CacheCounters& counters, RecordLog* records,
                  InvariantMonitor* monitor);

  void handle(const Event& ev) override;
  std::string name() const override;

  CacheTime cts() const { return cts_; }
  const CacheArray& array() const { return array_; }
  /// Resident block for `a` (Valid or Locked), if any.
  std::optional<CacheBlock> peek(BlockAddress a) const;
  std::size_t mshr_in_use() const { return mshr_.size(); }
  bool quiescent() const {
    return mshr_.empty() && input_.empty() && passing_writes_.empty() && !writeback_pending_;
  }
  void for_each_dirty(const std::function<void(BlockAddress, WriteId)>& fn) const;

 private:
  struct MshrEntry {
    BlockAddress addr;
    int way = -1;  // reserved fill way or locked block; -1 for a write miss
    bool is_read = true;
    Message request;
    L1Outcome outcome = L1Outcome::NotApplicable;
    std::vector<Message> waiters;
  };

  void enqueue(const Message& m);
  void schedule_pump(Cycle t);
  void pump();
  void resume();
  // False when the request must wait at the head of the queue.
  bool process(const Message& req);
  bool process_read(const Message& req);
  bool process_write(const Message& req);
  bool process_write_back_store(const Message& req);

  void on_read_fill(const Message& resp);
  void on_write_ack(const Message& resp);
  void on_writeback_ack();

  bool lease_ok(const CacheBlock& b) const;
  bool mshr_full();  // counts the stall when true
  MshrEntry* mshr_find(BlockAddress a);
  void release(MshrEntry* e);
  void evict(CacheBlock& b, Cycle t);
  void advance(Timestamp wts);
  void reset_clock(Timestamp wts);
  Message make_reply(const Message& req, const Message& data) const;
  void reply_read(const Message& req, const Message& data, L1Outcome outcome, Cycle t);
  void address_down(Message& m) const;
  void observe_block(const CacheBlock& b);
  void observe_cts(bool reset);

  ComponentId id_;
  CacheRole role_;
  std::uint32_t gpu_;
  const SystemConfig& cfg_;
  const SystemGraph& graph_;
  Fabric& fabric_;
  CacheCounters& counters_;
  RecordLog* records_;
  InvariantMonitor* monitor_;
  bool coherent_;
  bool write_back_;
  Cycle latency_;

  CacheArray array_;
  CacheTime cts_ = 0;
  std::vector<MshrEntry> mshr_;
  std::deque<Message> input_;
  // Write misses in flight, keyed by the token sent downstream. They hold
  // no MSHR: nothing waits on them and links keep per-address order.
  std::unordered_map<std::uint64_t, Message> passing_writes_;
  std::uint64_t next_token_ = 1;
  Cycle next_slot_ = 0;
  bool pump_scheduled_ = false;
  bool stalled_ = false;

  // WB: a dirty victim is in flight; nothing proceeds until it is acknowledged.
  bool writeback_pending_ = false;
  std::optional<Message> after_writeback_;
};

}  // namespace mgsim
