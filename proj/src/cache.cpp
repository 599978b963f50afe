#include "mgsim/cache.hpp"

#include <algorithm>

namespace mgsim {

CacheArray::CacheArray(const CacheParams& p, AddressMap amap, std::uint32_t interleave)
    : sets_(p.sets()), ways_(p.ways), amap_(amap), interleave_(interleave), blocks_(std::size_t{p.blocks()}) {
  if (sets_ == 0) throw ConfigError("cache needs at least one set");
}

std::uint32_t CacheArray::set_of(BlockAddress a) const {
  return static_cast<std::uint32_t>(amap_.local_block(a.value(), interleave_) % sets_);
}

int CacheArray::find(BlockAddress a) const {
  const CacheBlock* set = &blocks_[std::size_t{set_of(a)} * ways_];
  for (std::uint32_t w = 0; w < ways_; ++w)
    if (set[w].state != BlockState::Invalid && set[w].tag == a) return static_cast<int>(w);
  return -1;
}

int CacheArray::victim(BlockAddress a) const {
  const CacheBlock* set = &blocks_[std::size_t{set_of(a)} * ways_];
  int best = -1;
  for (std::uint32_t w = 0; w < ways_; ++w) {
    if (set[w].state == BlockState::Invalid) return static_cast<int>(w);
    if (set[w].state == BlockState::Valid && (best < 0 || set[w].lru < set[best].lru)) best = static_cast<int>(w);
  }
  return best;
}

CacheController::CacheController(ComponentId id, CacheRole role, std::uint32_t gpu, std::uint32_t /*index*/,
                                 const SystemConfig& cfg, const SystemGraph& graph, Fabric& fabric,
                                 CacheCounters& counters, RecordLog* records, InvariantMonitor* monitor)
    : id_(id),
      role_(role),
      gpu_(gpu),
      cfg_(cfg),
      graph_(graph),
      fabric_(fabric),
      counters_(counters),
      records_(records),
      monitor_(monitor),
      coherent_(cfg.coherent()),
      write_back_(role == CacheRole::L2 && cfg.l2_write_back()),
      latency_(role == CacheRole::L1 ? cfg.l1.latency : cfg.l2.latency),
      array_(role == CacheRole::L1 ? cfg.l1 : cfg.l2, graph.address_map(),
             role == CacheRole::L1 ? 1 : graph.address_map().l2_interleave()) {}

std::string CacheController::name() const { return graph_.nodes()[id_].name; }

std::optional<CacheBlock> CacheController::peek(BlockAddress a) const {
  const int w = array_.find(a);
  if (w < 0) return std::nullopt;
  const CacheBlock& b = array_.at(a, w);
  if (b.state != BlockState::Valid && b.state != BlockState::Locked) return std::nullopt;
  return b;
}

void CacheController::for_each_dirty(const std::function<void(BlockAddress, WriteId)>& fn) const {
  for (const auto& b : array_.blocks())
    if (b.dirty && (b.state == BlockState::Valid || b.state == BlockState::Locked)) fn(b.tag, b.payload);
}

void CacheController::handle(const Event& ev) {
  if (ev.kind == EventKind::Wakeup) {
    pump_scheduled_ = false;
    pump();
    return;
  }
  const Message& m = ev.msg;
  switch (m.kind) {
    case MsgKind::ReadReq:
    case MsgKind::WriteReq: enqueue(m); break;
    case MsgKind::ReadResp: on_read_fill(m); break;
    case MsgKind::WriteResp:
      if (m.writeback) on_writeback_ack();
      else on_write_ack(m);
      break;
    default: throw ProtocolError(name() + " received " + to_string(m.kind));
  }
}

void CacheController::enqueue(const Message& m) {
  input_.push_back(m);
  if (!stalled_) schedule_pump(std::max(fabric_.now(), next_slot_));
}

void CacheController::schedule_pump(Cycle t) {
  if (pump_scheduled_) return;
  pump_scheduled_ = true;
  fabric_.engine().wakeup(t, id_);
}

void CacheController::pump() {
  if (input_.empty()) return;
  if (writeback_pending_ || fabric_.now() < next_slot_) {
    if (writeback_pending_) stalled_ = true;
    else schedule_pump(next_slot_);
    return;
  }
  const Message req = input_.front();
  if (!process(req)) {
    stalled_ = true;
    return;
  }
  input_.pop_front();
  stalled_ = false;
  next_slot_ = fabric_.now() + 1;
  if (!input_.empty()) schedule_pump(next_slot_);
}

void CacheController::resume() {
  if (input_.empty()) return;
  stalled_ = false;
  schedule_pump(std::max(fabric_.now(), next_slot_));
}

bool CacheController::process(const Message& req) {
  if (MshrEntry* e = mshr_find(req.addr)) {
    e->waiters.push_back(req);
    ++counters_.mshr_merges;
    return true;
  }
  if (req.kind == MsgKind::ReadReq) return process_read(req);
  if (write_back_) return process_write_back_store(req);
  return process_write(req);
}

bool CacheController::mshr_full() {
  if (mshr_.size() < (role_ == CacheRole::L1 ? cfg_.l1.mshr_entries : cfg_.l2.mshr_entries)) return false;
  ++counters_.mshr_full_stalls;
  return true;
}

bool CacheController::lease_ok(const CacheBlock& b) const {
  return !coherent_ || lease_contains(cts_, b.wts, b.rts);
}

CacheController::MshrEntry* CacheController::mshr_find(BlockAddress a) {
  for (auto& e : mshr_)
    if (e.addr == a) return &e;
  return nullptr;
}

bool CacheController::process_read(const Message& req) {
  const Cycle t = fabric_.now() + latency_;
  int way = array_.find(req.addr);
  L1Outcome outcome = L1Outcome::TagMiss;
  if (way >= 0) {
    CacheBlock& b = array_.at(req.addr, way);
    if (lease_ok(b)) {
      ++counters_.read_hits;
      array_.touch(b);
      Message data;
      data.payload = b.payload;
      data.wts = b.wts;
      data.rts = b.rts;
      data.epoch = b.epoch;
      data.served_by = role_ == CacheRole::L1 ? ServedBy::L1 : ServedBy::L2;
      reply_read(req, data, L1Outcome::Hit, t);
      return true;
    }
    outcome = L1Outcome::CoherencyMiss;
  }
  if (mshr_full()) return false;
  if (way < 0) {
    way = array_.victim(req.addr);
    if (way < 0) {
      ++counters_.no_victim_stalls;
      return false;
    }
    CacheBlock& v = array_.at(req.addr, way);
    if (v.state == BlockState::Valid) evict(v, t);
    ++counters_.read_tag_misses;
  } else {
    // Expired lease: always re-fetched, never renewed in place.
    ++counters_.read_coherency_misses;
  }
  CacheBlock& b = array_.at(req.addr, way);
  b.tag = req.addr;
  b.state = BlockState::Filling;
  b.dirty = false;
  mshr_.push_back(MshrEntry{req.addr, way, true, req, outcome, {}});

  Message down;
  down.kind = MsgKind::ReadReq;
  down.addr = req.addr;
  address_down(down);
  if (writeback_pending_) after_writeback_ = down;
  else fabric_.send(down, t);
  return true;
}

bool CacheController::process_write(const Message& req) {
  const Cycle t = fabric_.now() + latency_;
  Message down;
  down.kind = MsgKind::WriteReq;
  down.addr = req.addr;
  down.payload = req.payload;
  address_down(down);
  const int way = array_.find(req.addr);
  if (!coherent_ && way >= 0 && array_.at(req.addr, way).state == BlockState::Valid) {
    // No timestamps to wait for: update in place and let the write pass.
    CacheBlock& b = array_.at(req.addr, way);
    b.payload = req.payload;
    array_.touch(b);
    ++counters_.write_hits;
    down.token = next_token_++;
    passing_writes_.emplace(down.token, req);
  } else if (way >= 0 && lease_ok(array_.at(req.addr, way))) {
    if (mshr_full()) return false;
    CacheBlock& b = array_.at(req.addr, way);
    b.payload = req.payload;
    b.state = BlockState::Locked;
    array_.touch(b);
    ++counters_.write_hits;
    mshr_.push_back(MshrEntry{req.addr, way, false, req, L1Outcome::NotApplicable, {}});
  } else {
    ++counters_.write_misses;
    down.token = next_token_++;
    passing_writes_.emplace(down.token, req);
  }
  fabric_.send(down, t);
  return true;
}

bool CacheController::process_write_back_store(const Message& req) {
  const Cycle t = fabric_.now() + latency_;
  int way = array_.find(req.addr);
  if (way >= 0) {
    ++counters_.write_hits;
  } else {
    way = array_.victim(req.addr);
    if (way < 0) {
      ++counters_.no_victim_stalls;
      return false;
    }
    CacheBlock& v = array_.at(req.addr, way);
    if (v.state == BlockState::Valid) evict(v, t);
    ++counters_.write_misses;
  }
  // Full-block store: no fetch needed on a miss.
  CacheBlock& b = array_.at(req.addr, way);
  b.tag = req.addr;
  b.payload = req.payload;
  b.state = BlockState::Valid;
  b.dirty = true;
  array_.touch(b);
  if (records_ != nullptr) records_->write_committed(req.payload, fabric_.now(), 0, 0);

  Message ack;
  ack.kind = MsgKind::WriteResp;
  ack.addr = req.addr;
  ack.payload = req.payload;
  ack.served_by = ServedBy::L2;
  Message up = make_reply(req, ack);
  if (writeback_pending_) after_writeback_ = up;
  else fabric_.send(up, t);
  return true;
}

void CacheController::evict(CacheBlock& b, Cycle t) {
  ++counters_.evictions;
  if (role_ == CacheRole::L2 && coherent_) {
    Message n;
    n.kind = MsgKind::EvictNotice;
    n.addr = b.tag;
    n.evictor_cts = cts_;
    address_down(n);
    fabric_.send(n, t);
  }
  if (write_back_ && b.dirty) {
    Message wb;
    wb.kind = MsgKind::WriteReq;
    wb.addr = b.tag;
    wb.payload = b.payload;
    wb.writeback = true;
    address_down(wb);
    fabric_.send(wb, t);
    ++counters_.writebacks;
    writeback_pending_ = true;
  }
  b.state = BlockState::Invalid;
  b.dirty = false;
}

void CacheController::on_read_fill(const Message& resp) {
  MshrEntry* e = mshr_find(resp.addr);
  if (e == nullptr || !e->is_read) throw ProtocolError(name() + ": read response without a pending read");
  CacheBlock& b = array_.at(resp.addr, e->way);
  bool install = true;
  if (coherent_) {
    if (!resp.has_ts) throw ProtocolError(name() + ": coherent read response without timestamps");
    if (resp.ts_reset) {
      reset_clock(resp.wts);
      install = false;
    } else {
      advance(resp.wts);
    }
  }
  if (install) {
    b.tag = resp.addr;
    b.payload = resp.payload;
    b.wts = resp.wts;
    b.rts = resp.rts;
    b.epoch = resp.epoch;
    b.state = BlockState::Valid;
    b.dirty = false;
    array_.touch(b);
    observe_block(b);
  } else {
    b.state = BlockState::Invalid;
  }

  const Cycle now = fabric_.now();
  reply_read(e->request, resp, e->outcome, now);
  std::size_t served = 0;
  while (served < e->waiters.size() && e->waiters[served].kind == MsgKind::ReadReq)
    reply_read(e->waiters[served++], resp, e->outcome, now);
  e->waiters.erase(e->waiters.begin(), e->waiters.begin() + static_cast<std::ptrdiff_t>(served));
  release(e);
}

void CacheController::on_write_ack(const Message& resp) {
  if (resp.token != 0) {
    auto it = passing_writes_.find(resp.token);
    if (it == passing_writes_.end()) throw ProtocolError(name() + ": write response with an unknown token");
    if (coherent_) {
      if (!resp.has_ts) throw ProtocolError(name() + ": coherent write response without timestamps");
      if (resp.ts_reset) reset_clock(resp.wts);
      else advance(resp.wts);
    }
    fabric_.send(make_reply(it->second, resp), fabric_.now());
    passing_writes_.erase(it);
    return;
  }
  MshrEntry* e = mshr_find(resp.addr);
  if (e == nullptr || e->is_read) throw ProtocolError(name() + ": write response without a pending write");
  bool keep = true;
  if (coherent_) {
    if (!resp.has_ts) throw ProtocolError(name() + ": coherent write response without timestamps");
    if (resp.ts_reset) {
      reset_clock(resp.wts);
      keep = false;
    } else {
      advance(resp.wts);
    }
  }
  if (e->way >= 0) {
    CacheBlock& b = array_.at(resp.addr, e->way);
    if (keep) {
      b.wts = resp.wts;
      b.rts = resp.rts;
      b.epoch = resp.epoch;
      b.state = BlockState::Valid;
      observe_block(b);
    } else {
      b.state = BlockState::Invalid;
    }
  }
  fabric_.send(make_reply(e->request, resp), fabric_.now());
  release(e);
}

void CacheController::on_writeback_ack() {
  if (!writeback_pending_) throw ProtocolError(name() + ": unexpected write-back acknowledgement");
  writeback_pending_ = false;
  if (after_writeback_) {
    fabric_.send(*after_writeback_, fabric_.now());
    after_writeback_.reset();
  }
  resume();
}

void CacheController::release(MshrEntry* e) {
  for (auto it = e->waiters.rbegin(); it != e->waiters.rend(); ++it) input_.push_front(*it);
  mshr_.erase(mshr_.begin() + (e - mshr_.data()));
  resume();
}

void CacheController::advance(Timestamp wts) {
  const CacheTime next = advance_cts(cts_, wts);
  if (next == cts_) return;
  cts_ = next;
  observe_cts(false);
}

void CacheController::reset_clock(Timestamp wts) {
  // Timestamps wrapped below us. Restart the clock at the fresh lease and
  // drop everything readable so no old lease becomes live again.
  ++counters_.cts_resets;
  cts_ = wts;
  for (auto& b : array_.blocks())
    if (b.state == BlockState::Valid) b.state = BlockState::Invalid;
  observe_cts(true);
}

Message CacheController::make_reply(const Message& req, const Message& data) const {
  Message r;
  r.kind = req.kind == MsgKind::ReadReq ? MsgKind::ReadResp : MsgKind::WriteResp;
  r.addr = req.addr;
  r.payload = data.payload;
  r.has_ts = coherent_;
  if (coherent_) {
    r.wts = data.wts;
    r.rts = data.rts;
  }
  r.ts_reset = data.ts_reset;
  r.epoch = data.epoch;
  r.served_by = data.served_by;
  r.src = id_;
  r.dst = req.src;
  r.token = req.token;
  return r;
}

void CacheController::reply_read(const Message& req, const Message& data, L1Outcome outcome, Cycle t) {
  Message r = make_reply(req, data);
  if (role_ == CacheRole::L1) {
    r.l1_outcome = outcome;
    // A fill may carry a lease that ended before our clock (an older copy
    // served by a lagging L2); the read is then ordered at the lease end.
    if (coherent_) r.reader_time = std::max<CacheTime>(data.wts, std::min<CacheTime>(cts_, data.rts));
  }
  fabric_.send(r, t);
}

void CacheController::address_down(Message& m) const {
  m.src = id_;
  m.dst = role_ == CacheRole::L1 ? graph_.l2_for(gpu_, m.addr.value()) : graph_.mmc_for(m.addr.value());
}

void CacheController::observe_block(const CacheBlock& b) {
  if (monitor_ == nullptr || !coherent_) return;
  Snapshot s;
  s.kind = SnapshotKind::CacheBlock;
  s.component = id_;
  s.addr = b.tag;
  s.wts = b.wts;
  s.rts = b.rts;
  s.cts = cts_;
  monitor_->observe(s);
}

void CacheController::observe_cts(bool reset) {
  if (monitor_ == nullptr || !coherent_) return;
  Snapshot s;
  s.kind = SnapshotKind::CacheCts;
  s.component = id_;
  s.cts = cts_;
  s.cts_reset = reset;
  monitor_->observe(s);
}

}  // namespace mgsim
