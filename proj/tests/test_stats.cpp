#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mgsim/stats.hpp"

using namespace mgsim;

TEST(TransactionBytes, ReadSizes) {
  EXPECT_EQ(transaction_bytes(TxnKind::Read, false), 80u);
  EXPECT_EQ(transaction_bytes(TxnKind::Read, true), 84u);
  EXPECT_DOUBLE_EQ(84.0 / 80.0, 1.05);
}

TEST(TransactionBytes, WriteSizes) {
  EXPECT_EQ(transaction_bytes(TxnKind::Write, false), 76u);
  EXPECT_EQ(transaction_bytes(TxnKind::Write, true), 80u);
  EXPECT_NEAR(80.0 / 76.0, 1.0526, 1e-4);
}

TEST(TransactionBytes, SameTimestampPayload) {
  EXPECT_EQ(transaction_bytes(TxnKind::Read, true) - transaction_bytes(TxnKind::Read, false), 4u);
  EXPECT_EQ(transaction_bytes(TxnKind::Write, true) - transaction_bytes(TxnKind::Write, false), 4u);
}

namespace {

std::uint64_t decomposed(const LinkTraffic& t, bool ts) {
  return t.read_req * message_bytes(MsgKind::ReadReq, ts) + t.read_resp * message_bytes(MsgKind::ReadResp, ts) +
         t.write_req * message_bytes(MsgKind::WriteReq, ts) + t.write_resp * message_bytes(MsgKind::WriteResp, ts) +
         t.evict_notice * message_bytes(MsgKind::EvictNotice, ts);
}

}  // namespace

TEST(LinkAccounting, BytesDecomposeIntoMessageSizes) {
  for (Protocol p : {Protocol::SmWtHalcone, Protocol::SmWtNc, Protocol::SmWbNc, Protocol::RdmaWbNc}) {
    SystemConfig cfg = fixtures::small_config(p, 2, 4);
    cfg.l2.size_bytes = 4096;  // force evictions and write-backs
    cfg.l2.ways = 2;
    RandomSpec spec;
    spec.seed = 5;
    spec.n_addrs = 64;
    spec.n_ops = 600;
    auto r = simulate(cfg, *trace_workload(gen_random(spec), 8));
    for (LinkClass c : {LinkClass::L1L2, LinkClass::L2MM, LinkClass::Rdma}) {
      const LinkTraffic& t = r.stats.link(c);
      EXPECT_EQ(t.bytes, decomposed(t, cfg.coherent())) << to_string(p) << " " << to_string(c);
      EXPECT_EQ(t.bytes_without_ts, decomposed(t, false)) << to_string(p) << " " << to_string(c);
      // Conservation: every request is answered by the end of the run.
      EXPECT_EQ(t.read_req, t.read_resp);
      EXPECT_EQ(t.write_req, t.write_resp);
    }
  }
}

TEST(LinkAccounting, TimestampOverheadRatiosOnRealRun) {
  // Reads only: every L1<->L2 transaction costs exactly 84 vs 80 bytes.
  SystemConfig cfg = fixtures::small_config(Protocol::SmWtHalcone, 1, 2);
  auto r = fixtures::run_trace(cfg, "0 R 0x0\n1 R 0x40\n0 R 0x80\n");
  const LinkTraffic& t = r.stats.link(LinkClass::L1L2);
  ASSERT_EQ(t.read_req, 3u);
  EXPECT_EQ(t.bytes * 80, t.bytes_without_ts * 84);
  auto w = fixtures::run_trace(cfg, "0 W 0x0\n1 W 0x40\n");
  const LinkTraffic& tw = w.stats.link(LinkClass::L1L2);
  EXPECT_EQ(tw.bytes * 76, tw.bytes_without_ts * 80);
}

namespace {

Stats fake(const std::string& proto, Cycle cycles, std::uint64_t l1l2) {
  Stats s;
  s.protocol = proto;
  s.trace_id = "t";
  s.runtime_cycles = cycles;
  s.link(LinkClass::L1L2).read_req = l1l2;
  s.link(LinkClass::L2MM).write_req = l1l2 / 2;
  return s;
}

}  // namespace

TEST(EmitReport, BaselineAgainstItself) {
  const std::vector<Stats> runs = {fake("rdma-wb-nc", 200, 10)};
  const std::string csv = emit_report(runs, "rdma-wb-nc");
  EXPECT_NE(csv.find("rdma-wb-nc,200,1.0000,10,5,1.0000,1.0000"), std::string::npos);
}

TEST(EmitReport, SpeedupIsBaselineOverConfig) {
  const std::vector<Stats> runs = {fake("rdma-wb-nc", 200, 10), fake("sm-wt-c-halcone", 100, 20)};
  const std::string csv = emit_report(runs, "rdma-wb-nc");
  EXPECT_NE(csv.find("sm-wt-c-halcone,100,2.0000,20,10,2.0000,2.0000"), std::string::npos);
}

TEST(EmitReport, FourConfigGolden) {
  const std::vector<Stats> runs = {fake("sm-wt-c-halcone", 100, 40), fake("sm-wt-nc", 95, 40),
                                   fake("sm-wb-nc", 120, 30), fake("rdma-wb-nc", 400, 20)};
  EXPECT_EQ(emit_report(runs, "rdma-wb-nc"),
            "config,runtime_cycles,speedup,l1_l2_transactions,l2_mm_transactions,norm_l1_l2_transactions,"
            "norm_l2_mm_transactions\n"
            "sm-wt-c-halcone,100,4.0000,40,20,2.0000,2.0000\n"
            "sm-wt-nc,95,4.2105,40,20,2.0000,2.0000\n"
            "sm-wb-nc,120,3.3333,30,15,1.5000,1.5000\n"
            "rdma-wb-nc,400,1.0000,20,10,1.0000,1.0000\n");
}

TEST(EmitReport, MismatchedTraceRejected) {
  std::vector<Stats> runs = {fake("rdma-wb-nc", 200, 10), fake("sm-wt-nc", 100, 10)};
  runs[1].trace_id = "other";
  EXPECT_THROW(emit_report(runs, "rdma-wb-nc"), ConfigError);
}

TEST(EmitReport, MissingBaselineRejected) {
  const std::vector<Stats> runs = {fake("sm-wt-nc", 100, 10)};
  EXPECT_THROW(emit_report(runs, "rdma-wb-nc"), ConfigError);
}

TEST(StorageAccountingTest, DefaultGeometry) {
  const StorageAccounting a = storage_accounting(SystemConfig{});
  EXPECT_EQ(a.l1_bytes_per_cache, 1024u);             // 256 blocks x 4 B
  EXPECT_EQ(a.l2_bytes_per_gpu, 128u * 1024);         // 32768 blocks x 4 B
  EXPECT_EQ(a.tsu_memts_bytes_per_gpu, 64u * 1024);   // 32768 x 16-bit memts
}

TEST(StatsOutput, CsvRowMatchesHeaderWidth) {
  Stats s = fake("sm-wt-nc", 1, 2);
  auto commas = [](const std::string& x) { return std::count(x.begin(), x.end(), ','); };
  EXPECT_EQ(commas(Stats::csv_header()), commas(s.csv_row()));
}
