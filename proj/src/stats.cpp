#include "mgsim/stats.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace mgsim {

std::uint32_t message_bytes(MsgKind kind, bool with_timestamps) {
  const std::uint32_t ts = with_timestamps ? kTimestampPairBytes : 0;
  switch (kind) {
    case MsgKind::ReadReq: return kAddrBytes + kMetaBytes;
    case MsgKind::ReadResp: return static_cast<std::uint32_t>(kBlockBytes) + kAckBytes + ts;
    // No metadata word on writes: the transaction totals 76 B, 80 B with timestamps.
    case MsgKind::WriteReq: return static_cast<std::uint32_t>(kBlockBytes) + kAddrBytes;
    case MsgKind::WriteResp: return kAckBytes + ts;
    // The evicting cache's cts rides in the metadata field.
    case MsgKind::EvictNotice: return kAddrBytes + kMetaBytes;
  }
  return 0;
}

std::uint32_t transaction_bytes(TxnKind kind, bool with_timestamps) {
  if (kind == TxnKind::Read)
    return message_bytes(MsgKind::ReadReq, with_timestamps) + message_bytes(MsgKind::ReadResp, with_timestamps);
  return message_bytes(MsgKind::WriteReq, with_timestamps) + message_bytes(MsgKind::WriteResp, with_timestamps);
}

void LinkTraffic::count(MsgKind k, std::uint32_t bytes_with, std::uint32_t bytes_wo) {
  switch (k) {
    case MsgKind::ReadReq: ++read_req; break;
    case MsgKind::ReadResp: ++read_resp; break;
    case MsgKind::WriteReq: ++write_req; break;
    case MsgKind::WriteResp: ++write_resp; break;
    case MsgKind::EvictNotice: ++evict_notice; break;
  }
  bytes += bytes_with;
  bytes_without_ts += bytes_wo;
}

namespace {

nlohmann::json traffic_json(const LinkTraffic& t) {
  return {{"read_req", t.read_req},   {"read_resp", t.read_resp}, {"write_req", t.write_req},
          {"write_resp", t.write_resp}, {"evict_notice", t.evict_notice}, {"bytes", t.bytes},
          {"bytes_without_ts", t.bytes_without_ts}};
}

nlohmann::json cache_json(const CacheCounters& c) {
  return {{"read_hits", c.read_hits},
          {"read_tag_misses", c.read_tag_misses},
          {"read_coherency_misses", c.read_coherency_misses},
          {"write_hits", c.write_hits},
          {"write_misses", c.write_misses},
          {"mshr_merges", c.mshr_merges},
          {"evictions", c.evictions},
          {"writebacks", c.writebacks},
          {"cts_resets", c.cts_resets},
          {"mshr_full_stalls", c.mshr_full_stalls},
          {"no_victim_stalls", c.no_victim_stalls}};
}

}  // namespace

std::string Stats::to_json() const {
  nlohmann::json j;
  j["protocol"] = protocol;
  j["trace_id"] = trace_id;
  j["runtime_cycles"] = runtime_cycles;
  j["events"] = events;
  j["reads"] = reads;
  j["writes"] = writes;
  for (LinkClass c : {LinkClass::L1L2, LinkClass::L2MM, LinkClass::Rdma}) j["links"][to_string(c)] = traffic_json(link(c));
  j["l1"] = cache_json(l1);
  j["l2"] = cache_json(l2);
  j["tsu"] = {{"inserts", tsu.inserts},
              {"extends", tsu.extends},
              {"capacity_evictions", tsu.capacity_evictions},
              {"notice_evictions", tsu.notice_evictions},
              {"notices", tsu.notices},
              {"overflows", tsu.overflows}};
  return j.dump(2);
}

std::string Stats::csv_header() {
  std::ostringstream os;
  os << "protocol,trace_id,runtime_cycles,reads,writes";
  for (const char* c : {"l1_l2", "l2_mm", "rdma"})
    os << ',' << c << "_read_req," << c << "_read_resp," << c << "_write_req," << c << "_write_resp," << c
       << "_evict_notice," << c << "_bytes," << c << "_bytes_without_ts";
  for (const char* lvl : {"l1", "l2"})
    os << ',' << lvl << "_read_hits," << lvl << "_read_tag_misses," << lvl << "_read_coherency_misses," << lvl
       << "_write_hits," << lvl << "_write_misses," << lvl << "_evictions," << lvl << "_writebacks";
  os << ",tsu_inserts,tsu_extends,tsu_capacity_evictions,tsu_notice_evictions,tsu_overflows";
  return os.str();
}

std::string Stats::csv_row() const {
  std::ostringstream os;
  os << protocol << ',' << trace_id << ',' << runtime_cycles << ',' << reads << ',' << writes;
  for (const auto& t : traffic)
    os << ',' << t.read_req << ',' << t.read_resp << ',' << t.write_req << ',' << t.write_resp << ','
       << t.evict_notice << ',' << t.bytes << ',' << t.bytes_without_ts;
  for (const auto* c : {&l1, &l2})
    os << ',' << c->read_hits << ',' << c->read_tag_misses << ',' << c->read_coherency_misses << ',' << c->write_hits
       << ',' << c->write_misses << ',' << c->evictions << ',' << c->writebacks;
  os << ',' << tsu.inserts << ',' << tsu.extends << ',' << tsu.capacity_evictions << ',' << tsu.notice_evictions
     << ',' << tsu.overflows;
  return os.str();
}

std::string emit_report(std::span<const Stats> runs, const std::string& baseline) {
  const Stats* base = nullptr;
  for (const auto& s : runs) {
    if (s.protocol == baseline) base = &s;
    if (!runs.empty() && s.trace_id != runs.front().trace_id)
      throw ConfigError("runs disagree on trace identity: '" + s.trace_id + "' vs '" + runs.front().trace_id + "'");
  }
  if (base == nullptr) throw ConfigError("baseline '" + baseline + "' not among the runs");
  auto ratio = [](double num, double den) { return den == 0 ? 0.0 : num / den; };
  std::ostringstream os;
  os << "config,runtime_cycles,speedup,l1_l2_transactions,l2_mm_transactions,norm_l1_l2_transactions,"
        "norm_l2_mm_transactions\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& s : runs) {
    const auto l1l2 = s.link(LinkClass::L1L2).transactions();
    const auto l2mm = s.link(LinkClass::L2MM).transactions();
    os << s.protocol << ',' << s.runtime_cycles << ','
       << ratio(static_cast<double>(base->runtime_cycles), static_cast<double>(s.runtime_cycles)) << ',' << l1l2
       << ',' << l2mm << ','
       << ratio(static_cast<double>(l1l2), static_cast<double>(base->link(LinkClass::L1L2).transactions())) << ','
       << ratio(static_cast<double>(l2mm), static_cast<double>(base->link(LinkClass::L2MM).transactions())) << '\n';
  }
  return os.str();
}

StorageAccounting storage_accounting(const SystemConfig& cfg) {
  StorageAccounting a;
  const std::uint64_t l2_blocks_per_gpu = static_cast<std::uint64_t>(cfg.l2.blocks()) * cfg.l2_banks_per_gpu;
  a.l1_bytes_per_cache = static_cast<std::uint64_t>(cfg.l1.blocks()) * kTimestampPairBytes;
  a.l2_bytes_per_gpu = l2_blocks_per_gpu * kTimestampPairBytes;
  a.tsu_memts_bytes_per_gpu = l2_blocks_per_gpu * sizeof(Timestamp);
  a.tsu_total_bytes_per_gpu = l2_blocks_per_gpu * 2 * sizeof(Timestamp);
  a.cts_bytes_per_gpu = (cfg.cus_per_gpu + cfg.l2_banks_per_gpu) * sizeof(CacheTime);
  return a;
}

}  // namespace mgsim
