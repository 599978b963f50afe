#include "mgsim/memory.hpp"

#include <algorithm>

namespace mgsim {

Tsu::Tsu(std::uint32_t sets, std::uint32_t ways, AddressMap amap, std::uint32_t interleave)
    : sets_(sets), ways_(ways), amap_(amap), interleave_(interleave), slots_(std::size_t{sets} * ways),
      high_water_(sets, 0) {
  if (sets == 0 || ways == 0) throw ConfigError("TSU needs at least one set and one way");
}

std::uint32_t Tsu::set_of(BlockAddress addr) const {
  return static_cast<std::uint32_t>(amap_.local_block(addr.value(), interleave_) % sets_);
}

Tsu::Slot* Tsu::lookup(BlockAddress addr) {
  Slot* base = &slots_[std::size_t{set_of(addr)} * ways_];
  for (std::uint32_t w = 0; w < ways_; ++w)
    if (base[w].valid && base[w].entry.addr == addr) return &base[w];
  return nullptr;
}

Tsu::Slot& Tsu::insert(BlockAddress addr) {
  const std::uint32_t set = set_of(addr);
  Slot* base = &slots_[std::size_t{set} * ways_];
  Slot* victim = nullptr;
  for (std::uint32_t w = 0; w < ways_; ++w) {
    if (!base[w].valid) {
      victim = &base[w];
      break;
    }
    if (victim == nullptr || base[w].entry.memts < victim->entry.memts) victim = &base[w];
  }
  if (victim->valid) {
    ++counters_.capacity_evictions;
    high_water_[set] = std::max(high_water_[set], victim->entry.memts);
  }
  ++counters_.inserts;
  victim->valid = true;
  victim->entry = TsuEntry{addr, 0, 0};
  return *victim;
}

TsuGrant Tsu::read(BlockAddress addr, Timestamp rd_lease) {
  TsuGrant g;
  Slot* s = lookup(addr);
  TsAddResult memts;
  if (s == nullptr) {
    // Seed from what this set forgot before now; the victim about to go is
    // another block and cannot constrain this one.
    const Timestamp base = high_water_[set_of(addr)];
    s = &insert(addr);
    g.inserted = true;
    s->entry.mwts = base;
    memts = ts_add(base, rd_lease);
  } else {
    ++counters_.extends;
    memts = ts_add(std::max(s->entry.memts, s->entry.mwts), rd_lease);
  }
  if (memts.overflow) {
    ++counters_.overflows;
    g.overflow = true;
    s->entry.mwts = 0;
    memts.value = rd_lease;
  }
  s->entry.memts = memts.value;
  g.wts = s->entry.mwts;
  g.rts = s->entry.memts;
  return g;
}

TsuGrant Tsu::write(BlockAddress addr, Timestamp wr_lease) {
  TsuGrant g;
  Slot* s = lookup(addr);
  Timestamp prior;
  if (s == nullptr) {
    prior = high_water_[set_of(addr)];
    s = &insert(addr);
    g.inserted = true;
  } else {
    ++counters_.extends;
    prior = s->entry.memts;
  }
  // The write lands after every read lease handed out so far.
  const TsAddResult mwts = ts_add(prior, 1);
  const TsAddResult memts = ts_add(prior, wr_lease);
  if (mwts.overflow || memts.overflow) {
    ++counters_.overflows;
    g.overflow = true;
    s->entry.mwts = 1;
    s->entry.memts = wr_lease;
  } else {
    s->entry.mwts = mwts.value;
    s->entry.memts = memts.value;
  }
  g.wts = s->entry.mwts;
  g.rts = s->entry.memts;
  return g;
}

bool Tsu::evict_notice(BlockAddress addr, CacheTime evictor_cts) {
  ++counters_.notices;
  Slot* s = lookup(addr);
  if (s == nullptr) return false;
  // A memts the evictor has already passed cannot be a live lease elsewhere.
  if (s->entry.memts >= evictor_cts) return false;
  const std::uint32_t set = set_of(addr);
  high_water_[set] = std::max(high_water_[set], s->entry.memts);
  s->valid = false;
  ++counters_.notice_evictions;
  return true;
}

std::optional<TsuEntry> Tsu::find(BlockAddress addr) const {
  const Slot* base = &slots_[std::size_t{set_of(addr)} * ways_];
  for (std::uint32_t w = 0; w < ways_; ++w)
    if (base[w].valid && base[w].entry.addr == addr) return base[w].entry;
  return std::nullopt;
}

std::size_t Tsu::occupancy() const {
  return static_cast<std::size_t>(std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.valid; }));
}

std::uint32_t tsu_sets_per_stack(const SystemConfig& cfg) {
  const std::uint64_t l2_blocks = std::uint64_t{cfg.l2.blocks()} * cfg.l2_banks_per_gpu * cfg.gpus;
  const std::uint64_t per_stack = std::max<std::uint64_t>(l2_blocks / cfg.hbm_stacks, cfg.tsu_ways);
  return static_cast<std::uint32_t>(std::max<std::uint64_t>(per_stack / cfg.tsu_ways, 1));
}

std::map<std::uint64_t, WriteId> MainMemory::contents() const {
  std::map<std::uint64_t, WriteId> out;
  for (const auto& [a, c] : cells_)
    if (!c.value.is_initial()) out.emplace(a, c.value);
  return out;
}

MemoryController::MemoryController(ComponentId id, std::uint32_t stack, const SystemConfig& cfg,
                                   const AddressMap& amap, Fabric& fabric, MainMemory& memory, RecordLog* records,
                                   InvariantMonitor* monitor)
    : id_(id), stack_(stack), cfg_(cfg), fabric_(fabric), memory_(memory), records_(records), monitor_(monitor) {
  if (cfg.coherent()) tsu_.emplace(tsu_sets_per_stack(cfg), cfg.tsu_ways, amap, cfg.hbm_stacks);
  // DRAM and TSU are looked up in parallel.
  access_latency_ = cfg.coherent() ? std::max(cfg.mm_latency, cfg.tsu_latency) : cfg.mm_latency;
}

void MemoryController::snapshot(BlockAddress a) {
  if (monitor_ == nullptr || !tsu_) return;
  if (auto e = tsu_->find(a)) {
    Snapshot s;
    s.kind = SnapshotKind::TsuEntry;
    s.component = id_;
    s.addr = a;
    s.wts = e->mwts;
    s.rts = e->memts;
    monitor_->observe(s);
  }
}

void MemoryController::respond(const Message& req, Message resp) {
  resp.addr = req.addr;
  resp.src = id_;
  resp.dst = req.src;
  resp.token = req.token;
  resp.served_by = ServedBy::Memory;
  fabric_.send(resp, fabric_.now() + access_latency_);
}

void MemoryController::handle(const Event& ev) {
  const Message& m = ev.msg;
  switch (m.kind) {
    case MsgKind::ReadReq: {
      Message r;
      r.kind = MsgKind::ReadResp;
      if (tsu_) {
        const TsuGrant g = tsu_->read(m.addr, cfg_.leases.read_lease_for(m.addr));
        if (g.overflow) memory_.bump_epoch(m.addr);
        r.has_ts = true;
        r.wts = g.wts;
        r.rts = g.rts;
        r.ts_reset = g.overflow;
        snapshot(m.addr);
      }
      const MainMemory::Cell c = memory_.get(m.addr);
      r.payload = c.value;
      r.epoch = c.epoch;
      respond(m, r);
      break;
    }
    case MsgKind::WriteReq: {
      Message r;
      r.kind = MsgKind::WriteResp;
      r.writeback = m.writeback;
      if (tsu_) {
        const TsuGrant g = tsu_->write(m.addr, cfg_.leases.wr_lease);
        if (g.overflow) memory_.bump_epoch(m.addr);
        r.has_ts = true;
        r.wts = g.wts;
        r.rts = g.rts;
        r.ts_reset = g.overflow;
        snapshot(m.addr);
      }
      memory_.commit(m.addr, m.payload);
      r.epoch = memory_.get(m.addr).epoch;
      r.payload = m.payload;
      // Write-backs were already ordered at the L2 that absorbed them.
      if (records_ != nullptr && !m.writeback && !cfg_.l2_write_back())
        records_->write_committed(m.payload, fabric_.now(), r.wts, r.epoch);
      respond(m, r);
      break;
    }
    case MsgKind::EvictNotice:
      if (tsu_) tsu_->evict_notice(m.addr, m.evictor_cts);
      break;
    default:
      throw ProtocolError("memory controller received " + std::string(to_string(m.kind)));
  }
}

}  // namespace mgsim
