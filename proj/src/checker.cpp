#include "mgsim/checker.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace mgsim {

const char* to_string(L1Outcome o) {
  switch (o) {
    case L1Outcome::Hit: return "hit";
    case L1Outcome::TagMiss: return "tag_miss";
    case L1Outcome::CoherencyMiss: return "coherency_miss";
    case L1Outcome::NotApplicable: return "-";
  }
  return "?";
}

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::StaleRead: return "StaleRead";
    case ViolationKind::FutureRead: return "FutureRead";
    case ViolationKind::NonmonotonicWts: return "NonmonotonicWts";
    case ViolationKind::OracleMismatch: return "OracleMismatch";
    case ViolationKind::LeaseInverted: return "LeaseInverted";
    case ViolationKind::BlockAheadOfCache: return "BlockAheadOfCache";
    case ViolationKind::CtsRegressed: return "CtsRegressed";
    case ViolationKind::ProgramOrder: return "ProgramOrder";
  }
  return "?";
}

void RecordLog::write_issued(CuId cu, std::uint64_t op_index, BlockAddress addr, WriteId id) {
  EventRecord r;
  r.kind = RecordKind::Write;
  r.cu = cu;
  r.op_index = op_index;
  r.addr = addr;
  r.value = id;
  write_index_[id.value] = records_.size();
  records_.push_back(r);
}

void RecordLog::write_completed(WriteId id, Cycle t) {
  auto it = write_index_.find(id.value);
  if (it != write_index_.end()) records_[it->second].physical_time = t;
}

void RecordLog::write_committed(WriteId id, Cycle t, Timestamp wts, std::uint32_t epoch) {
  auto it = write_index_.find(id.value);
  if (it == write_index_.end()) return;
  EventRecord& r = records_[it->second];
  r.committed = true;
  r.commit_time = t;
  r.commit_seq = next_commit_++;
  r.wts = wts;
  r.epoch = epoch;
}

void RecordLog::read_completed(const EventRecord& r) { records_.push_back(r); }

namespace {

using Key = std::tuple<std::uint32_t, CacheTime>;

std::string describe(const EventRecord& r) {
  std::ostringstream os;
  os << (r.kind == RecordKind::Read ? "read" : "write") << " cu" << r.cu << "#" << r.op_index << " 0x"
     << std::hex << r.addr.value() << std::dec << " value=" << r.value.value;
  if (r.kind == RecordKind::Read)
    os << " at (" << r.epoch << "," << r.reader_time << ")";
  else
    os << " wts=(" << r.epoch << "," << r.wts << ")";
  return os.str();
}

}  // namespace

std::vector<Violation> check_logical_serialization(std::span<const EventRecord> records) {
  std::map<std::uint64_t, std::vector<const EventRecord*>> writes, reads;
  for (const auto& r : records) {
    if (r.kind == RecordKind::Write) {
      if (r.committed) writes[r.addr.value()].push_back(&r);
    } else {
      reads[r.addr.value()].push_back(&r);
    }
  }
  std::vector<Violation> out;
  for (auto& [addr, ws] : writes) {
    std::sort(ws.begin(), ws.end(), [](auto* a, auto* b) { return a->commit_seq < b->commit_seq; });
    for (std::size_t i = 1; i < ws.size(); ++i) {
      if (Key{ws[i]->epoch, ws[i]->wts} <= Key{ws[i - 1]->epoch, ws[i - 1]->wts}) {
        out.push_back({ViolationKind::NonmonotonicWts, {*ws[i - 1], *ws[i]},
                       "commit order does not increase wts: " + describe(*ws[i - 1]) + " then " + describe(*ws[i])});
      }
    }
  }
  static const std::vector<const EventRecord*> kNone;
  for (const auto& [addr, rs] : reads) {
    auto wit = writes.find(addr);
    const auto& ws = wit == writes.end() ? kNone : wit->second;
    std::unordered_map<std::uint64_t, std::size_t> pos;
    for (std::size_t i = 0; i < ws.size(); ++i) pos[ws[i]->value.value] = i + 1;
    for (const EventRecord* r : rs) {
      const Key rk{r->epoch, r->reader_time};
      // Latest write with key <= rk. Keys are increasing in commit order when
      // the wts check above passes; scan from the back to stay correct if not.
      std::size_t expect = 0;
      for (std::size_t i = ws.size(); i > 0; --i) {
        if (Key{ws[i - 1]->epoch, ws[i - 1]->wts} <= rk) {
          expect = i;
          break;
        }
      }
      const WriteId expected = expect == 0 ? WriteId::initial() : ws[expect - 1]->value;
      if (r->value == expected) continue;
      std::size_t observed_pos = 0;
      if (!r->value.is_initial()) {
        auto p = pos.find(r->value.value);
        observed_pos = p == pos.end() ? ws.size() + 1 : p->second;
      }
      Violation v;
      v.kind = observed_pos < expect ? ViolationKind::StaleRead : ViolationKind::FutureRead;
      v.records.push_back(*r);
      if (expect > 0) v.records.push_back(*ws[expect - 1]);
      std::ostringstream os;
      os << describe(*r) << " expected value=" << expected.value;
      v.explanation = os.str();
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> check_program_order(std::span<const EventRecord> records) {
  std::vector<const EventRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    return std::tie(a->cu, a->op_index) < std::tie(b->cu, b->op_index);
  });
  std::vector<Violation> out;
  std::map<std::pair<CuId, std::uint64_t>, const EventRecord*> last_own_write;
  for (const EventRecord* r : sorted) {
    const auto key = std::make_pair(r->cu, r->addr.value());
    if (r->kind == RecordKind::Write) {
      last_own_write[key] = r;
      continue;
    }
    auto it = last_own_write.find(key);
    if (it != last_own_write.end() && it->second->value != r->value) {
      out.push_back({ViolationKind::ProgramOrder, {*it->second, *r},
                     describe(*r) + " does not observe own earlier " + describe(*it->second)});
    }
  }
  return out;
}

std::map<std::uint64_t, WriteId> oracle_final_memory(std::span<const EventRecord> records) {
  std::vector<const EventRecord*> ws;
  for (const auto& r : records)
    if (r.kind == RecordKind::Write && r.committed) ws.push_back(&r);
  std::sort(ws.begin(), ws.end(), [](auto* a, auto* b) { return a->commit_seq < b->commit_seq; });
  std::map<std::uint64_t, WriteId> mem;
  for (const EventRecord* w : ws) mem[w->addr.value()] = w->value;
  return mem;
}

std::vector<Violation> compare_final_memory(const std::map<std::uint64_t, WriteId>& oracle,
                                            const std::map<std::uint64_t, WriteId>& actual) {
  std::vector<Violation> out;
  auto get = [](const std::map<std::uint64_t, WriteId>& m, std::uint64_t a) {
    auto it = m.find(a);
    return it == m.end() ? WriteId::initial() : it->second;
  };
  std::map<std::uint64_t, bool> addrs;
  for (const auto& [a, v] : oracle) addrs[a] = true;
  for (const auto& [a, v] : actual) addrs[a] = true;
  for (const auto& [a, unused] : addrs) {
    const WriteId o = get(oracle, a), s = get(actual, a);
    if (o != s) {
      std::ostringstream os;
      os << "memory 0x" << std::hex << a << std::dec << " holds " << s.value << ", oracle expects " << o.value;
      out.push_back({ViolationKind::OracleMismatch, {}, os.str()});
    }
  }
  return out;
}

std::vector<EventRecord> serialization_order(std::span<const EventRecord> records) {
  std::vector<EventRecord> out(records.begin(), records.end());
  auto key = [](const EventRecord& r) {
    const CacheTime logical = r.kind == RecordKind::Write ? r.wts : r.reader_time;
    const Cycle phys = r.kind == RecordKind::Write ? r.commit_time : r.physical_time;
    return std::make_tuple(r.epoch, logical, phys);
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return out;
}

std::vector<EventRecord> serialization_order(std::span<const EventRecord> records, BlockAddress addr) {
  std::vector<EventRecord> mine;
  for (const auto& r : records)
    if (r.addr == addr) mine.push_back(r);
  return serialization_order(mine);
}

void InvariantMonitor::flag(ViolationKind k, const std::string& why) {
  violations_.push_back({k, {}, why});
}

void InvariantMonitor::observe(const Snapshot& s) {
  ++observed_;
  std::ostringstream os;
  switch (s.kind) {
    case SnapshotKind::CacheBlock:
      if (s.rts < s.wts) {
        os << "component " << s.component << " block 0x" << std::hex << s.addr.value() << std::dec << " has rts "
           << s.rts << " < wts " << s.wts;
        flag(ViolationKind::LeaseInverted, os.str());
      } else if (s.wts > s.cts) {
        os << "component " << s.component << " block 0x" << std::hex << s.addr.value() << std::dec << " has wts "
           << s.wts << " > cts " << s.cts;
        flag(ViolationKind::BlockAheadOfCache, os.str());
      }
      break;
    case SnapshotKind::CacheCts: {
      auto [it, fresh] = last_cts_.try_emplace(s.component, s.cts);
      if (!fresh) {
        if (s.cts < it->second && !s.cts_reset) {
          os << "component " << s.component << " cts went from " << it->second << " to " << s.cts;
          flag(ViolationKind::CtsRegressed, os.str());
        }
        it->second = s.cts;
      }
      break;
    }
    case SnapshotKind::TsuEntry:
      if (s.rts < s.wts) {
        os << "TSU " << s.component << " entry 0x" << std::hex << s.addr.value() << std::dec << " has memts " << s.rts
           << " < mwts " << s.wts;
        flag(ViolationKind::LeaseInverted, os.str());
      }
      break;
  }
}

std::vector<Violation> check_runtime_invariants(std::span<const Snapshot> stream) {
  InvariantMonitor m;
  for (const auto& s : stream) m.observe(s);
  return m.violations();
}

namespace {

nlohmann::json record_json(const EventRecord& r) {
  return {{"kind", r.kind == RecordKind::Read ? "read" : "write"},
          {"cu", r.cu},
          {"op_index", r.op_index},
          {"addr", r.addr.value()},
          {"value", r.value.value},
          {"physical_time", r.physical_time},
          {"reader_time", r.reader_time},
          {"wts", r.wts},
          {"rts", r.rts},
          {"epoch", r.epoch}};
}

}  // namespace

std::string violations_to_json(std::span<const Violation> vs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : vs) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : v.records) recs.push_back(record_json(r));
    arr.push_back({{"kind", to_string(v.kind)}, {"explanation", v.explanation}, {"records", recs}});
  }
  return nlohmann::json{{"violations", arr}, {"count", vs.size()}}.dump(2);
}

static constexpr const char* kRecordHeader =
    "kind\tcu\top_index\taddr\tvalue\tphysical_time\treader_time\twts\trts\tepoch\tcommitted\tcommit_time\t"
    "commit_seq\tl1_outcome\tserved_by";

void write_record_log(std::ostream& os, std::span<const EventRecord> records, const std::string& protocol) {
  os << "# mgsim record log v1\n# protocol=" << protocol << "\n# " << kRecordHeader << '\n';
  for (const auto& r : records) {
    os << (r.kind == RecordKind::Read ? 'R' : 'W') << '\t' << r.cu << '\t' << r.op_index << '\t' << "0x" << std::hex
       << r.addr.value() << std::dec << '\t' << r.value.value << '\t' << r.physical_time << '\t' << r.reader_time
       << '\t' << r.wts << '\t' << r.rts << '\t' << r.epoch << '\t' << (r.committed ? 1 : 0) << '\t'
       << r.commit_time << '\t' << r.commit_seq << '\t' << static_cast<int>(r.l1_outcome) << '\t'
       << static_cast<int>(r.served_by) << '\n';
  }
}

RecordFile read_record_log(std::istream& is) {
  RecordFile f;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# protocol=";
      if (line.rfind(tag, 0) == 0) f.protocol = line.substr(tag.size());
      continue;
    }
    std::istringstream ls(line);
    char kind = 0;
    std::string addr;
    int committed = 0, outcome = 0, served = 0;
    unsigned wts = 0, rts = 0;
    EventRecord r;
    ls >> kind >> r.cu >> r.op_index >> addr >> r.value.value >> r.physical_time >> r.reader_time >> wts >> rts >>
        r.epoch >> committed >> r.commit_time >> r.commit_seq >> outcome >> served;
    if (!ls || (kind != 'R' && kind != 'W'))
      throw ConfigError("record log line " + std::to_string(lineno) + " is malformed");
    r.kind = kind == 'R' ? RecordKind::Read : RecordKind::Write;
    r.addr = BlockAddress::from_byte(std::stoull(addr, nullptr, 16));
    r.wts = static_cast<Timestamp>(wts);
    r.rts = static_cast<Timestamp>(rts);
    r.committed = committed != 0;
    r.l1_outcome = static_cast<L1Outcome>(outcome);
    r.served_by = static_cast<ServedBy>(served);
    f.records.push_back(r);
  }
  return f;
}

void write_memory_dump(std::ostream& os, const std::map<std::uint64_t, WriteId>& mem) {
  os << "# addr\twrite_id\n";
  for (const auto& [a, v] : mem) os << "0x" << std::hex << a << std::dec << '\t' << v.value << '\n';
}

std::map<std::uint64_t, WriteId> read_memory_dump(std::istream& is) {
  std::map<std::uint64_t, WriteId> mem;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string addr;
    std::uint64_t v = 0;
    if (!(ls >> addr >> v)) throw ConfigError("malformed memory dump line: " + line);
    mem[std::stoull(addr, nullptr, 16)] = WriteId{v};
  }
  return mem;
}

}  // namespace mgsim
