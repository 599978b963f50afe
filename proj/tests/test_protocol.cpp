#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace mgsim;
using fixtures::kX;
using fixtures::kY;

namespace {

// Reads issued by `cu`, in program order.
std::vector<EventRecord> reads_of(const std::vector<EventRecord>& recs, CuId cu) {
  std::vector<EventRecord> out;
  for (const auto& r : recs)
    if (r.kind == RecordKind::Read && r.cu == cu) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.op_index < b.op_index; });
  return out;
}

const EventRecord& write_to(const std::vector<EventRecord>& recs, std::uint64_t addr) {
  for (const auto& r : recs)
    if (r.kind == RecordKind::Write && r.addr == BlockAddress::from_byte(addr)) return r;
  throw std::runtime_error("no write");
}

struct Ran {
  std::unique_ptr<Workload> workload;
  std::unique_ptr<Simulator> sim;
  RunResult result;
};

Ran run_held(const SystemConfig& cfg, const std::string& trace) {
  Ran r;
  r.workload = trace_workload(parse_trace_text(trace), cfg.total_cus());
  r.sim = std::make_unique<Simulator>(cfg, *r.workload);
  r.result = r.sim->run();
  return r;
}

}  // namespace

// Two CUs on one GPU share the L2. I1-3 has an expired L1 copy of Y and
// renews it from the L2, where I0-2 left (8, 12).
TEST(WorkedExample, SameGpu) {
  const SystemConfig cfg = fixtures::worked_example_config(1, 2);
  Ran run = run_held(cfg, fixtures::worked_example_trace(0, 1));
  const auto& recs = run.result.records;
  EXPECT_TRUE(run.result.violations.empty());
  EXPECT_EQ(run.result.check, CheckMode::LogicalTime);

  const EventRecord& wy = write_to(recs, kY);
  EXPECT_EQ(wy.wts, 8);
  const EventRecord& wx = write_to(recs, kX);
  EXPECT_EQ(wx.wts, 11);

  const auto r0 = reads_of(recs, 0);
  ASSERT_EQ(r0.size(), 2u);
  EXPECT_EQ(r0[1].l1_outcome, L1Outcome::Hit);  // I0-3: X still leased at cts 8
  EXPECT_EQ(r0[1].reader_time, 8u);
  EXPECT_TRUE(r0[1].value.is_initial());

  const auto r1 = reads_of(recs, 1);
  ASSERT_EQ(r1.size(), 2u);
  EXPECT_EQ(r1[1].l1_outcome, L1Outcome::CoherencyMiss);  // I1-3
  EXPECT_EQ(r1[1].served_by, ServedBy::L2);
  EXPECT_EQ(r1[1].reader_time, 11u);
  EXPECT_EQ(r1[1].value, wy.value);
  EXPECT_EQ(r1[1].wts, 8);
  EXPECT_EQ(r1[1].rts, 12);

  // Final cache and memory state.
  EXPECT_EQ(run.sim->l1(0, 0).cts(), 8u);
  EXPECT_EQ(run.sim->l1(0, 1).cts(), 11u);
  const auto l2y = run.sim->l2(0, 1).peek(BlockAddress::from_byte(kY));
  ASSERT_TRUE(l2y.has_value());
  EXPECT_EQ(l2y->wts, 8);
  EXPECT_EQ(l2y->rts, 12);
  const Tsu* tsu = run.sim->tsu(1);
  ASSERT_NE(tsu, nullptr);
  const auto ex = tsu->find(BlockAddress::from_byte(kX));
  ASSERT_TRUE(ex.has_value());
  EXPECT_EQ(ex->mwts, 11);
  EXPECT_EQ(ex->memts, 15);
  const auto ey = tsu->find(BlockAddress::from_byte(kY));
  ASSERT_TRUE(ey.has_value());
  EXPECT_EQ(ey->memts, 12);

  // I0-3 reads X before I1-2's write in logical time, though after it physically.
  const auto order = serialization_order(recs, BlockAddress::from_byte(kX));
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[0].kind, RecordKind::Read);
  EXPECT_EQ(order[1].kind, RecordKind::Read);
  EXPECT_EQ(order[2].kind, RecordKind::Write);
}

// Same program on two GPUs: GPU 1's L2 never saw the write to Y, so I1-3
// goes to memory and the TSU extends Y's lease from the write.
TEST(WorkedExample, DifferentGpus) {
  const SystemConfig cfg = fixtures::worked_example_config(2, 1);
  Ran run = run_held(cfg, fixtures::worked_example_trace(0, 1));
  const auto& recs = run.result.records;
  EXPECT_TRUE(run.result.violations.empty());
  const EventRecord& wy = write_to(recs, kY);
  EXPECT_EQ(wy.wts, 8);
  const auto r1 = reads_of(recs, 1);
  ASSERT_EQ(r1.size(), 2u);
  EXPECT_EQ(r1[1].l1_outcome, L1Outcome::CoherencyMiss);
  EXPECT_EQ(r1[1].served_by, ServedBy::Memory);
  EXPECT_EQ(r1[1].value, wy.value);
  EXPECT_EQ(r1[1].wts, 8);
  EXPECT_EQ(r1[1].rts, 19);
  const auto r0 = reads_of(recs, 0);
  ASSERT_EQ(r0.size(), 2u);
  EXPECT_EQ(r0[1].l1_outcome, L1Outcome::Hit);
  EXPECT_TRUE(r0[1].value.is_initial());
}

TEST(CacheBehaviour, LruEvictsLeastRecentlyUsed) {
  SystemConfig cfg = fixtures::small_config(Protocol::SmWtNc, 1, 1);
  cfg.l1.size_bytes = 128;  // one set of two ways
  cfg.l1.ways = 2;
  // A, B, A, C (evicts B), A hits, B misses.
  auto r = fixtures::run_trace(cfg, "0 R 0x0\n0 R 0x40\n0 R 0x0\n0 R 0x80\n0 R 0x0\n0 R 0x40\n");
  const auto reads = reads_of(r.records, 0);
  ASSERT_EQ(reads.size(), 6u);
  const L1Outcome want[] = {L1Outcome::TagMiss, L1Outcome::TagMiss, L1Outcome::Hit,
                            L1Outcome::TagMiss, L1Outcome::Hit,     L1Outcome::TagMiss};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(reads[i].l1_outcome, want[i]) << i;
  EXPECT_EQ(r.stats.l1.evictions, 2u);
}

TEST(CacheBehaviour, WriteBackL2FlushesDirtyVictims) {
  SystemConfig cfg = fixtures::small_config(Protocol::SmWbNc, 1, 1);
  cfg.l2_banks_per_gpu = 1;
  cfg.l2.size_bytes = 128;
  cfg.l2.ways = 2;
  std::string t;
  for (int i = 0; i < 6; ++i) t += "0 W " + std::to_string(i * 64) + "\n";
  auto r = fixtures::run_trace(cfg, t);
  EXPECT_GE(r.stats.l2.writebacks, 4u);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_EQ(r.memory, oracle_final_memory(r.records));
  EXPECT_EQ(r.memory.size(), 6u);
}

TEST(CacheBehaviour, ReadBehindOwnWriteSeesIt) {
  for (Protocol p : {Protocol::SmWtHalcone, Protocol::SmWtNc, Protocol::SmWbNc, Protocol::RdmaWbNc}) {
    SystemConfig cfg = fixtures::small_config(p, 2, 1);
    cfg.issue_width = 2;
    // Prime the block, then write and read it back to back.
    auto r = fixtures::run_trace(cfg, "0 R 0x1000\n0 W 0x1000\n0 R 0x1000\n0 W 0x1000\n0 R 0x1000\n");
    EXPECT_TRUE(r.violations.empty()) << to_string(p);
    const auto reads = reads_of(r.records, 0);
    ASSERT_EQ(reads.size(), 3u);
    EXPECT_EQ(reads[1].value, WriteId::make(0, 1)) << to_string(p);
    EXPECT_EQ(reads[2].value, WriteId::make(0, 3)) << to_string(p);
  }
}

class RandomTraces : public ::testing::TestWithParam<std::tuple<Protocol, std::uint32_t>> {};

TEST_P(RandomTraces, NoViolations) {
  const auto [proto, width] = GetParam();
  SystemConfig cfg = fixtures::small_config(proto, 2, 4);
  cfg.issue_width = width;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RandomSpec spec;
    spec.seed = seed;
    auto r = simulate(cfg, *trace_workload(gen_random(spec), 8));
    ASSERT_TRUE(r.violations.empty()) << "seed " << seed << ": " << violations_to_json(r.violations);
    EXPECT_LE(r.stats.reads + r.stats.writes, 200u);  // same-block neighbours coalesce
  }
}

INSTANTIATE_TEST_SUITE_P(Widths, RandomTraces,
                         ::testing::Combine(::testing::Values(Protocol::SmWtHalcone, Protocol::SmWbNc),
                                            ::testing::Values(1u, 2u, 4u)),
                         [](const auto& info) {
                           std::string n = to_string(std::get<0>(info.param));
                           std::erase(n, '-');
                           return n + "_w" + std::to_string(std::get<1>(info.param));
                         });

TEST(NonSharing, AllConfigurationsAgreeOnFinalMemory) {
  XtremeSpec s;
  s.variant = XtremeVariant::One;
  s.gpus = 2;
  s.cus_per_gpu = 2;
  s.vector_bytes = 4 * 4 * 64 * 4;
  s.repeats = 2;
  const auto w = xtreme_workload(s);
  std::optional<std::map<std::uint64_t, WriteId>> first;
  for (Protocol p : {Protocol::SmWtHalcone, Protocol::SmWtNc, Protocol::SmWbNc, Protocol::RdmaWbNc}) {
    SystemConfig cfg = fixtures::small_config(p, 2, 2);
    auto r = simulate(cfg, *w);
    EXPECT_TRUE(r.violations.empty()) << to_string(p);
    EXPECT_NE(r.check, CheckMode::Skipped) << to_string(p);
    if (!first) first = r.memory;
    EXPECT_EQ(r.memory, *first) << to_string(p);
  }
}

TEST(Overflow, AdversarialLeasesStayCoherent) {
  SystemConfig cfg = fixtures::small_config(Protocol::SmWtHalcone, 2, 4);
  cfg.leases.rd_lease = 9000;
  cfg.leases.wr_lease = 7000;
  std::uint64_t overflows = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomSpec spec;
    spec.seed = seed;
    spec.n_ops = 400;
    SimOptions opts;
    opts.monitor = true;
    auto r = simulate(cfg, *trace_workload(gen_random(spec), 8), opts);
    ASSERT_TRUE(r.violations.empty()) << "seed " << seed << ": " << violations_to_json(r.violations);
    overflows += r.stats.tsu.overflows;
  }
  EXPECT_GT(overflows, 0u);
}

TEST(NonCoherent, SharingTraceSkipsLogicalCheck) {
  SystemConfig cfg = fixtures::small_config(Protocol::SmWtNc, 1, 2);
  auto r = fixtures::run_trace(cfg, fixtures::worked_example_trace(0, 1));
  EXPECT_EQ(r.check, CheckMode::Skipped);
}

// A TSU far smaller than the working set forgets entries constantly;
// re-inserted blocks must still be ordered after their old leases.
TEST(TsuThrash, ForgottenEntriesStayOrdered) {
  SystemConfig cfg = fixtures::small_config(Protocol::SmWtHalcone, 2, 4);
  cfg.l2.size_bytes = 512;
  cfg.l2.ways = 2;
  cfg.l1.size_bytes = 256;
  cfg.l1.ways = 2;
  cfg.tsu_ways = 1;
  std::uint64_t forgotten = 0;
  for (std::uint32_t width : {1u, 4u}) {
    cfg.issue_width = width;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      RandomSpec spec;
      spec.seed = seed;
      spec.n_ops = 400;
      spec.n_addrs = 48;
      auto r = simulate(cfg, *trace_workload(gen_random(spec), 8));
      ASSERT_TRUE(r.violations.empty()) << "seed " << seed << ": " << violations_to_json(r.violations);
      EXPECT_EQ(r.memory, oracle_final_memory(r.records));
      forgotten += r.stats.tsu.capacity_evictions;
    }
  }
  EXPECT_GT(forgotten, 1000u);
}
