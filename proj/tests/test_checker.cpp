#include <gtest/gtest.h>

#include <sstream>

#include "mgsim/checker.hpp"

using namespace mgsim;

namespace {

const BlockAddress X = BlockAddress::from_byte(0x1000);

EventRecord write_rec(CuId cu, std::uint64_t idx, WriteId v, Timestamp wts, std::uint64_t commit_seq,
                      std::uint32_t epoch = 0) {
  EventRecord r;
  r.kind = RecordKind::Write;
  r.cu = cu;
  r.op_index = idx;
  r.addr = X;
  r.value = v;
  r.wts = wts;
  r.epoch = epoch;
  r.committed = true;
  r.commit_seq = commit_seq;
  r.commit_time = 100 + commit_seq;
  return r;
}

EventRecord read_rec(CuId cu, std::uint64_t idx, WriteId v, CacheTime at, std::uint32_t epoch = 0) {
  EventRecord r;
  r.kind = RecordKind::Read;
  r.cu = cu;
  r.op_index = idx;
  r.addr = X;
  r.value = v;
  r.reader_time = at;
  r.epoch = epoch;
  return r;
}

const WriteId W1 = WriteId::make(1, 1);
const WriteId W2 = WriteId::make(0, 3);

}  // namespace

TEST(LogicalSerialization, ReadBeforeLogicalWriteSeesInitial) {
  const std::vector<EventRecord> recs = {write_rec(1, 1, W1, 11, 0), read_rec(0, 2, WriteId::initial(), 8)};
  EXPECT_TRUE(check_logical_serialization(recs).empty());
}

TEST(LogicalSerialization, ReadAfterWriteSeesIt) {
  const std::vector<EventRecord> recs = {write_rec(0, 1, W1, 8, 0), read_rec(1, 2, W1, 11)};
  EXPECT_TRUE(check_logical_serialization(recs).empty());
}

TEST(LogicalSerialization, StaleReadFlagged) {
  const std::vector<EventRecord> recs = {write_rec(0, 1, W1, 8, 0), write_rec(0, 2, W2, 14, 1),
                                         read_rec(1, 0, W1, 20)};
  const auto v = check_logical_serialization(recs);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::StaleRead);
  EXPECT_FALSE(v[0].explanation.empty());
}

TEST(LogicalSerialization, FutureReadFlagged) {
  const std::vector<EventRecord> recs = {write_rec(1, 1, W1, 11, 0), read_rec(0, 0, W1, 8)};
  const auto v = check_logical_serialization(recs);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::FutureRead);
}

TEST(LogicalSerialization, NonmonotonicWtsFlagged) {
  const std::vector<EventRecord> recs = {write_rec(0, 1, W1, 11, 0), write_rec(1, 1, W2, 9, 1)};
  const auto v = check_logical_serialization(recs);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::NonmonotonicWts);
}

TEST(LogicalSerialization, EpochOrdersAcrossOverflow) {
  // After a wrap the second write has a smaller wts but a newer epoch.
  const std::vector<EventRecord> recs = {write_rec(0, 1, W1, 65000, 0, 0), write_rec(0, 2, W2, 1, 1, 1),
                                         read_rec(1, 0, W2, 3, 1), read_rec(1, 1, W1, 65001, 0)};
  EXPECT_TRUE(check_logical_serialization(recs).empty());
}

TEST(LogicalSerialization, SingleCuProgramOrderPasses) {
  std::vector<EventRecord> recs;
  WriteId last = WriteId::initial();
  for (std::uint64_t i = 0; i < 20; ++i) {
    if (i % 3 == 0) {
      last = WriteId::make(0, i);
      recs.push_back(write_rec(0, i, last, static_cast<Timestamp>(1 + 10 * i), i));
    } else {
      recs.push_back(read_rec(0, i, last, 10 * i));
    }
  }
  EXPECT_TRUE(check_logical_serialization(recs).empty());
}

TEST(ProgramOrder, OwnWriteMustBeVisible) {
  std::vector<EventRecord> recs = {write_rec(0, 0, W2, 0, 0), read_rec(0, 1, W2, 0)};
  EXPECT_TRUE(check_program_order(recs).empty());
  recs[1].value = WriteId::initial();
  const auto v = check_program_order(recs);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::ProgramOrder);
}

TEST(Oracle, OneWritePerAddress) {
  const std::vector<EventRecord> recs = {write_rec(0, 0, W1, 1, 0)};
  const auto mem = oracle_final_memory(recs);
  ASSERT_EQ(mem.size(), 1u);
  EXPECT_EQ(mem.at(X.value()), W1);
}

TEST(Oracle, LastCommitWins) {
  std::vector<EventRecord> recs = {write_rec(0, 0, W1, 1, 1), write_rec(1, 0, W2, 6, 0)};
  EXPECT_EQ(oracle_final_memory(recs).at(X.value()), W1);
  recs[1].committed = false;  // never reached memory
  recs[0].commit_seq = 0;
  EXPECT_EQ(oracle_final_memory(recs).at(X.value()), W1);
}

TEST(Oracle, CompareFindsMismatchBothWays) {
  std::map<std::uint64_t, WriteId> a{{0x40, W1}}, b{{0x40, W1}};
  EXPECT_TRUE(compare_final_memory(a, b).empty());
  b[0x80] = W2;
  auto v = compare_final_memory(a, b);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::OracleMismatch);
  b.erase(0x80);
  b[0x40] = W2;
  EXPECT_EQ(compare_final_memory(a, b).size(), 1u);
}

TEST(SerializationOrder, SortsByLogicalThenPhysical) {
  std::vector<EventRecord> recs = {write_rec(1, 1, W1, 11, 0), read_rec(0, 2, WriteId::initial(), 8),
                                   read_rec(1, 2, W1, 11)};
  recs[2].physical_time = 500;
  const auto order = serialization_order(recs, X);
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[0].kind, RecordKind::Read);
  EXPECT_EQ(order[1].kind, RecordKind::Write);
  EXPECT_EQ(order[2].cu, 1u);
}

TEST(RuntimeInvariants, InvertedLeaseFlagged) {
  Snapshot s;
  s.kind = SnapshotKind::CacheBlock;
  s.wts = 9;
  s.rts = 3;
  s.cts = 10;
  const auto v = check_runtime_invariants(std::vector<Snapshot>{s});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::LeaseInverted);
}

TEST(RuntimeInvariants, BlockAheadOfCacheFlagged) {
  Snapshot s;
  s.kind = SnapshotKind::CacheBlock;
  s.wts = 9;
  s.rts = 12;
  s.cts = 5;
  const auto v = check_runtime_invariants(std::vector<Snapshot>{s});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::BlockAheadOfCache);
}

TEST(RuntimeInvariants, CtsRegressionOnlyAllowedOnReset) {
  Snapshot a, b;
  a.kind = b.kind = SnapshotKind::CacheCts;
  a.cts = 10;
  b.cts = 4;
  EXPECT_EQ(check_runtime_invariants(std::vector<Snapshot>{a, b}).size(), 1u);
  b.cts_reset = true;
  EXPECT_TRUE(check_runtime_invariants(std::vector<Snapshot>{a, b}).empty());
}

TEST(RuntimeInvariants, TsuEntryChecked) {
  Snapshot s;
  s.kind = SnapshotKind::TsuEntry;
  s.wts = 8;
  s.rts = 7;
  EXPECT_EQ(check_runtime_invariants(std::vector<Snapshot>{s}).size(), 1u);
  s.rts = 12;
  EXPECT_TRUE(check_runtime_invariants(std::vector<Snapshot>{s}).empty());
}

TEST(RecordLogFile, RoundTrip) {
  std::vector<EventRecord> recs = {write_rec(1, 1, W1, 11, 0), read_rec(0, 2, WriteId::initial(), 8)};
  recs[1].l1_outcome = L1Outcome::CoherencyMiss;
  recs[1].served_by = ServedBy::L2;
  std::stringstream ss;
  write_record_log(ss, recs, "sm-wt-c-halcone");
  const RecordFile back = read_record_log(ss);
  EXPECT_EQ(back.protocol, "sm-wt-c-halcone");
  EXPECT_EQ(back.records, recs);
}

TEST(RecordLogFile, MemoryDumpRoundTrip) {
  std::map<std::uint64_t, WriteId> mem{{0x40, W1}, {0x1000, W2}};
  std::stringstream ss;
  write_memory_dump(ss, mem);
  EXPECT_EQ(read_memory_dump(ss), mem);
}

TEST(ViolationJson, CarriesKindAndExplanation) {
  const std::vector<Violation> v = {{ViolationKind::StaleRead, {}, "because"}};
  const std::string j = violations_to_json(v);
  EXPECT_NE(j.find("StaleRead"), std::string::npos);
  EXPECT_NE(j.find("because"), std::string::npos);
}

TEST(RecordLogCollect, WritesCompleteOnCommit) {
  RecordLog log;
  log.write_issued(0, 4, X, W2);
  log.write_committed(W2, 50, 7, 0);
  log.write_completed(W2, 60);
  ASSERT_EQ(log.records().size(), 1u);
  const EventRecord& r = log.records()[0];
  EXPECT_TRUE(r.committed);
  EXPECT_EQ(r.wts, 7);
  EXPECT_EQ(r.commit_time, 50u);
  EXPECT_EQ(r.physical_time, 60u);
}
