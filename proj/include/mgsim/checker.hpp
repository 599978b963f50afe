#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgsim/core.hpp"

namespace mgsim {

enum class RecordKind : std::uint8_t { Read, Write };

const char* to_string(L1Outcome o);

/// One instrumented memory operation.
///
/// Reads carry the value observed and the logical time at which the serving
/// cache satisfied them (`reader_time`). Writes carry the MM commit position
/// and the wts the memory assigned.
struct EventRecord {
  RecordKind kind = RecordKind::Read;
  Cycle physical_time = 0;  // completion at the CU
  CuId cu = 0;
  std::uint64_t op_index = 0;  // program order within the CU
  BlockAddress addr;
  WriteId value;
  CacheTime reader_time = 0;
  Timestamp wts = 0;
  Timestamp rts = 0;
  std::uint32_t epoch = 0;
  bool committed = false;
  Cycle commit_time = 0;
  std::uint64_t commit_seq = 0;
  L1Outcome l1_outcome = L1Outcome::NotApplicable;
  ServedBy served_by = ServedBy::L1;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Collects records during a run. Writes are created at issue and completed
/// when the memory commits them.
class RecordLog {
 public:
  void write_issued(CuId cu, std::uint64_t op_index, BlockAddress addr, WriteId id);
  void write_completed(WriteId id, Cycle t);
  void write_committed(WriteId id, Cycle t, Timestamp wts, std::uint32_t epoch);
  void read_completed(const EventRecord& r);

  const std::vector<EventRecord>& records() const { return records_; }
  std::vector<EventRecord> take() { return std::move(records_); }

 private:
  std::vector<EventRecord> records_;
  std::unordered_map<std::uint64_t, std::size_t> write_index_;
  std::uint64_t next_commit_ = 0;
};

enum class ViolationKind : std::uint8_t {
  StaleRead,
  FutureRead,
  NonmonotonicWts,
  OracleMismatch,
  LeaseInverted,
  BlockAheadOfCache,
  CtsRegressed,
  ProgramOrder,
};

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind = ViolationKind::StaleRead;
  std::vector<EventRecord> records;
  std::string explanation;
};

std::string violations_to_json(std::span<const Violation> vs);

/// Per-location logical-time serialization. Within an address, committed
/// writes (in MM commit order) must carry strictly increasing (epoch, wts);
/// each read must observe the latest write whose (epoch, wts) does not exceed
/// the read's (epoch, reader_time), or the initial value when none does.
std::vector<Violation> check_logical_serialization(std::span<const EventRecord> records);

/// Checks for non-coherent configurations on traces without sharing: a read of
/// an address the same CU wrote earlier must observe that CU's latest write.
std::vector<Violation> check_program_order(std::span<const EventRecord> records);

/// Final memory obtained by replaying committed writes in commit order.
std::map<std::uint64_t, WriteId> oracle_final_memory(std::span<const EventRecord> records);

/// Compares `actual` against the oracle over every address either one names.
std::vector<Violation> compare_final_memory(const std::map<std::uint64_t, WriteId>& oracle,
                                            const std::map<std::uint64_t, WriteId>& actual);

/// Logical serialization order: records sorted by (epoch, logical time,
/// physical time). A write's logical time is its wts, a read's is reader_time.
std::vector<EventRecord> serialization_order(std::span<const EventRecord> records, BlockAddress addr);
/// The same order over every address.
std::vector<EventRecord> serialization_order(std::span<const EventRecord> records);

enum class SnapshotKind : std::uint8_t { CacheBlock, CacheCts, TsuEntry };

/// A state transition observed by the invariant monitor.
struct Snapshot {
  SnapshotKind kind = SnapshotKind::CacheBlock;
  ComponentId component = 0;
  BlockAddress addr;
  Timestamp wts = 0;
  Timestamp rts = 0;  // memts for TSU entries
  CacheTime cts = 0;
  bool cts_reset = false;  // cts went backwards through the overflow path
};

/// Online checker for the runtime invariants: rts >= wts for blocks and TSU
/// entries, block wts <= cache cts, and cts monotone between resets.
class InvariantMonitor {
 public:
  void observe(const Snapshot& s);
  const std::vector<Violation>& violations() const { return violations_; }
  std::uint64_t observed() const { return observed_; }

 private:
  void flag(ViolationKind k, const std::string& why);

  std::unordered_map<ComponentId, CacheTime> last_cts_;
  std::vector<Violation> violations_;
  std::uint64_t observed_ = 0;
};

std::vector<Violation> check_runtime_invariants(std::span<const Snapshot> stream);

/// Tab-separated record log with a `#`-prefixed header.
void write_record_log(std::ostream& os, std::span<const EventRecord> records, const std::string& protocol);
struct RecordFile {
  std::string protocol;
  std::vector<EventRecord> records;
};
RecordFile read_record_log(std::istream& is);

void write_memory_dump(std::ostream& os, const std::map<std::uint64_t, WriteId>& mem);
std::map<std::uint64_t, WriteId> read_memory_dump(std::istream& is);

}  // namespace mgsim
