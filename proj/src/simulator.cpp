#include "mgsim/simulator.hpp"

#include <algorithm>
#include <optional>

namespace mgsim {

const char* to_string(CheckMode m) {
  switch (m) {
    case CheckMode::Skipped: return "skipped";
    case CheckMode::LogicalTime: return "logical-time";
    case CheckMode::ProgramOrder: return "program-order";
  }
  return "?";
}

namespace {

class ComputeUnit;

// Global barrier. CUs that have run out of ops count as arrived.
class BarrierManager {
 public:
  explicit BarrierManager(std::size_t cus) : total_(cus) {}
  void attach(std::vector<ComputeUnit*> cus) { cus_ = std::move(cus); }
  void arrive(ComputeUnit* cu, std::uint32_t id, Cycle now);
  void finished(Cycle now);

 private:
  void maybe_release(Cycle now);

  std::size_t total_;
  std::vector<ComputeUnit*> cus_;
  std::vector<ComputeUnit*> waiting_;
  std::optional<std::uint32_t> current_;
  std::size_t done_ = 0;
};

class ComputeUnit : public Component {
 public:
  ComputeUnit(ComponentId id, CuId cu, ComponentId l1, const SystemConfig& cfg, const SystemGraph& graph,
              Fabric& fabric, BarrierManager& barriers, std::unique_ptr<CuStream> stream, RecordLog* records,
              Stats& stats)
      : id_(id), cu_(cu), l1_(l1), width_(cfg.issue_width), graph_(graph), fabric_(fabric), barriers_(barriers),
        stream_(std::move(stream)), records_(records), stats_(stats) {}

  std::string name() const override { return graph_.nodes()[id_].name; }

  void start(Cycle t) { wake(t); }
  void release(Cycle t) {
    at_barrier_ = false;
    wake(t);
  }
  bool finished() const { return finished_; }

  void handle(const Event& ev) override {
    if (ev.kind == EventKind::Wakeup) {
      wake_scheduled_ = false;
      issue();
      return;
    }
    complete(ev.msg);
  }

 private:
  void wake(Cycle t) {
    if (wake_scheduled_) return;
    wake_scheduled_ = true;
    fabric_.engine().wakeup(t, id_);
  }

  bool peek(CuOp& op) {
    if (!lookahead_) {
      CuOp next;
      if (!stream_->next(next)) return false;
      lookahead_ = next;
    }
    op = *lookahead_;
    return true;
  }

  void issue() {
    const Cycle now = fabric_.now();
    if (at_barrier_ || finished_ || outstanding_ >= width_) return;
    CuOp op;
    if (!peek(op)) {
      if (outstanding_ == 0) finish(now);
      return;
    }
    if (op.kind == OpKind::Barrier) {
      if (outstanding_ != 0) return;  // drain first
      lookahead_.reset();
      at_barrier_ = true;
      barriers_.arrive(this, op.barrier_id, now);
      return;
    }
    lookahead_.reset();
    // Consecutive accesses to one block by the same instruction coalesce.
    CuOp more;
    while (peek(more) && more.kind == op.kind && more.addr / kBlockBytes == op.addr / kBlockBytes) lookahead_.reset();

    const std::uint64_t index = next_index_++;
    Message m;
    m.kind = op.kind == OpKind::Read ? MsgKind::ReadReq : MsgKind::WriteReq;
    m.addr = BlockAddress::from_byte(op.addr);
    m.src = id_;
    m.dst = l1_;
    m.token = index;
    if (op.kind == OpKind::Write) {
      m.payload = WriteId::make(cu_, index);
      ++stats_.writes;
      if (records_ != nullptr) records_->write_issued(cu_, index, m.addr, m.payload);
    } else {
      ++stats_.reads;
    }
    ++outstanding_;
    fabric_.send(m, now);
    wake(now + 1);
  }

  void complete(const Message& r) {
    --outstanding_;
    const Cycle now = fabric_.now();
    if (records_ != nullptr) {
      if (r.kind == MsgKind::ReadResp) {
        EventRecord e;
        e.kind = RecordKind::Read;
        e.physical_time = now;
        e.cu = cu_;
        e.op_index = r.token;
        e.addr = r.addr;
        e.value = r.payload;
        e.reader_time = r.reader_time;
        e.wts = r.wts;
        e.rts = r.rts;
        e.epoch = r.epoch;
        e.l1_outcome = r.l1_outcome;
        e.served_by = r.served_by;
        records_->read_completed(e);
      } else {
        records_->write_completed(r.payload, now);
      }
    }
    wake(now);
  }

  void finish(Cycle now) {
    finished_ = true;
    barriers_.finished(now);
  }

  ComponentId id_;
  CuId cu_;
  ComponentId l1_;
  std::uint32_t width_;
  const SystemGraph& graph_;
  Fabric& fabric_;
  BarrierManager& barriers_;
  std::unique_ptr<CuStream> stream_;
  RecordLog* records_;
  Stats& stats_;

  std::optional<CuOp> lookahead_;
  std::uint64_t next_index_ = 0;
  std::uint32_t outstanding_ = 0;
  bool at_barrier_ = false;
  bool finished_ = false;
  bool wake_scheduled_ = false;
};

void BarrierManager::arrive(ComputeUnit* cu, std::uint32_t id, Cycle now) {
  if (current_ && *current_ != id)
    throw ConfigError("barrier mismatch: CUs wait at " + std::to_string(*current_) + " and " + std::to_string(id));
  current_ = id;
  waiting_.push_back(cu);
  maybe_release(now);
}

void BarrierManager::finished(Cycle now) {
  ++done_;
  maybe_release(now);
}

void BarrierManager::maybe_release(Cycle now) {
  if (waiting_.empty() || waiting_.size() + done_ < total_) return;
  std::vector<ComputeUnit*> go;
  go.swap(waiting_);
  current_.reset();
  for (ComputeUnit* cu : go) cu->release(now + 1);
}

}  // namespace

struct Simulator::Impl {
  SystemConfig cfg;
  SystemGraph graph;
  SimOptions opts;
  const Workload& workload;
  Engine engine;
  Stats stats;
  RecordLog records;
  InvariantMonitor monitor;
  MainMemory memory;
  Fabric fabric;
  BarrierManager barriers;
  std::vector<std::unique_ptr<ComputeUnit>> cus;
  std::vector<std::unique_ptr<CacheController>> l1s;
  std::vector<std::unique_ptr<CacheController>> l2s;
  std::vector<std::unique_ptr<MemoryController>> mmcs;
  bool ran = false;

  Impl(const SystemConfig& c, const Workload& w, SimOptions o)
      : cfg(c),
        graph(build_system(c)),
        opts(o),
        workload(w),
        engine(c.max_events),
        fabric(engine, graph, stats),
        barriers(c.total_cus()) {
    if (w.cus() != cfg.total_cus())
      throw ConfigError("workload has " + std::to_string(w.cus()) + " CUs, system has " +
                        std::to_string(cfg.total_cus()));
    RecordLog* rec = opts.record ? &records : nullptr;
    InvariantMonitor* mon = opts.monitor ? &monitor : nullptr;
    // Registration order must follow the graph's node order.
    for (std::uint32_t g = 0; g < cfg.gpus; ++g)
      for (std::uint32_t c = 0; c < cfg.cus_per_gpu; ++c) {
        const CuId cu = g * cfg.cus_per_gpu + c;
        cus.push_back(std::make_unique<ComputeUnit>(graph.cu(g, c), cu, graph.l1(g, c), cfg, graph, fabric, barriers,
                                                    w.stream(cu), rec, stats));
        register_node(cus.back().get(), graph.cu(g, c));
      }
    for (std::uint32_t g = 0; g < cfg.gpus; ++g)
      for (std::uint32_t c = 0; c < cfg.cus_per_gpu; ++c) {
        l1s.push_back(std::make_unique<CacheController>(graph.l1(g, c), CacheRole::L1, g, c, cfg, graph, fabric,
                                                        stats.l1, rec, mon));
        register_node(l1s.back().get(), graph.l1(g, c));
      }
    for (std::uint32_t g = 0; g < cfg.gpus; ++g)
      for (std::uint32_t b = 0; b < cfg.l2_banks_per_gpu; ++b) {
        l2s.push_back(std::make_unique<CacheController>(graph.l2(g, b), CacheRole::L2, g, b, cfg, graph, fabric,
                                                        stats.l2, rec, mon));
        register_node(l2s.back().get(), graph.l2(g, b));
      }
    for (std::uint32_t s = 0; s < cfg.hbm_stacks; ++s) {
      mmcs.push_back(std::make_unique<MemoryController>(graph.mmc(s), s, cfg, graph.address_map(), fabric, memory,
                                                        rec, mon));
      register_node(mmcs.back().get(), graph.mmc(s));
    }
    fabric.attach();
    std::vector<ComputeUnit*> raw;
    for (auto& cu : cus) raw.push_back(cu.get());
    barriers.attach(std::move(raw));
    engine.set_event_log(opts.event_log);
  }

  void register_node(Component* c, NodeId expect) {
    if (engine.add_component(c) != expect) throw ProtocolError("component ids out of step with the system graph");
  }
};

Simulator::Simulator(const SystemConfig& cfg, const Workload& workload, SimOptions opts)
    : impl_(std::make_unique<Impl>(cfg, workload, opts)) {}

Simulator::~Simulator() = default;

RunResult Simulator::run() {
  Impl& s = *impl_;
  if (s.ran) throw ProtocolError("a simulator instance runs once");
  s.ran = true;
  // Host-to-device copies in the RDMA setup, when modeled, delay the start.
  const Cycle start = s.cfg.rdma() ? s.cfg.rdma_preamble_cycles : 0;
  for (auto& cu : s.cus) cu->start(start);
  const Cycle end = s.engine.run_until_idle();

  for (auto& cu : s.cus)
    if (!cu->finished()) throw ProtocolError(cu->name() + " never finished (deadlock)");
  for (auto* group : {&s.l1s, &s.l2s})
    for (auto& c : *group)
      if (!c->quiescent()) throw ProtocolError(c->name() + " still has work outstanding at the end of the run");

  // Dirty WB lines hold the latest data; the final image includes them.
  for (auto& l2 : s.l2s) l2->for_each_dirty([&](BlockAddress a, WriteId v) { s.memory.commit(a, v); });

  RunResult r;
  s.stats.protocol = to_string(s.cfg.protocol);
  s.stats.trace_id = s.workload.id();
  s.stats.runtime_cycles = end;
  s.stats.events = s.engine.dispatched();
  for (auto& m : s.mmcs)
    if (const Tsu* t = m->tsu()) {
      const TsuCounters& c = t->counters();
      s.stats.tsu.inserts += c.inserts;
      s.stats.tsu.extends += c.extends;
      s.stats.tsu.capacity_evictions += c.capacity_evictions;
      s.stats.tsu.notice_evictions += c.notice_evictions;
      s.stats.tsu.notices += c.notices;
      s.stats.tsu.overflows += c.overflows;
    }
  r.stats = s.stats;
  r.memory = s.memory.contents();

  if (s.opts.record) {
    r.records = s.records.take();
    if (s.cfg.coherent()) {
      r.check = CheckMode::LogicalTime;
      r.violations = check_logical_serialization(r.records);
    } else if (!s.workload.shares_data()) {
      r.check = CheckMode::ProgramOrder;
      r.violations = check_program_order(r.records);
    }
    if (r.check != CheckMode::Skipped) {
      auto mm = compare_final_memory(oracle_final_memory(r.records), r.memory);
      r.violations.insert(r.violations.end(), mm.begin(), mm.end());
    }
  }
  if (s.opts.monitor) {
    const auto& mv = s.monitor.violations();
    r.violations.insert(r.violations.end(), mv.begin(), mv.end());
  }
  return r;
}

const SystemGraph& Simulator::graph() const { return impl_->graph; }

const CacheController& Simulator::l1(std::uint32_t gpu, std::uint32_t cu) const {
  return *impl_->l1s.at(std::size_t{gpu} * impl_->cfg.cus_per_gpu + cu);
}

const CacheController& Simulator::l2(std::uint32_t gpu, std::uint32_t bank) const {
  return *impl_->l2s.at(std::size_t{gpu} * impl_->cfg.l2_banks_per_gpu + bank);
}

const Tsu* Simulator::tsu(std::uint32_t stack) const { return impl_->mmcs.at(stack)->tsu(); }

const MainMemory& Simulator::memory() const { return impl_->memory; }

const Engine& Simulator::engine() const { return impl_->engine; }

RunResult simulate(const SystemConfig& cfg, const Workload& workload, SimOptions opts) {
  Simulator sim(cfg, workload, opts);
  return sim.run();
}

}  // namespace mgsim
