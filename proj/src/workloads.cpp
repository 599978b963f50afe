#include "mgsim/workloads.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>

namespace mgsim {

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::uint64_t parse_number(const std::string& tok, int base, int lineno) {
  std::string_view v = tok;
  if (base == 16 && v.size() > 1 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) v.remove_prefix(2);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("trace line " + std::to_string(lineno) + ": bad number '" + tok + "'");
  return out;
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string a, b, c, extra;
    if (!(ls >> a)) continue;
    TraceOp op;
    if (upper(a) == "BARRIER") {
      if (!(ls >> b) || (ls >> extra)) throw ConfigError("trace line " + std::to_string(lineno) + ": expected BARRIER <id>");
      op.kind = OpKind::Barrier;
      op.barrier_id = static_cast<std::uint32_t>(parse_number(b, 10, lineno));
    } else {
      if (!(ls >> b >> c) || (ls >> extra))
        throw ConfigError("trace line " + std::to_string(lineno) + ": expected <cu> <R|W> <hex_addr>");
      op.cu = static_cast<CuId>(parse_number(a, 10, lineno));
      const std::string k = upper(b);
      if (k == "R") op.kind = OpKind::Read;
      else if (k == "W") op.kind = OpKind::Write;
      else throw ConfigError("trace line " + std::to_string(lineno) + ": op must be R or W, got '" + b + "'");
      op.addr = parse_number(c, 16, lineno);
    }
    t.ops.push_back(op);
  }
  return t;
}

Trace parse_trace_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

void emit_trace(std::ostream& os, const Trace& t) {
  for (const auto& op : t.ops) {
    if (op.kind == OpKind::Barrier) {
      os << "BARRIER " << op.barrier_id << '\n';
    } else {
      os << op.cu << (op.kind == OpKind::Read ? " R 0x" : " W 0x") << std::hex << op.addr << std::dec << '\n';
    }
  }
}

std::string emit_trace_text(const Trace& t) {
  std::ostringstream os;
  emit_trace(os, t);
  return os.str();
}

namespace {

// FNV-1a over the emitted text: a cheap, stable trace identity.
std::string fingerprint(const Trace& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : emit_trace_text(t)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

class VectorStream : public CuStream {
 public:
  explicit VectorStream(std::shared_ptr<const std::vector<CuOp>> ops) : ops_(std::move(ops)) {}
  bool next(CuOp& op) override {
    if (pos_ >= ops_->size()) return false;
    op = (*ops_)[pos_++];
    return true;
  }

 private:
  std::shared_ptr<const std::vector<CuOp>> ops_;
  std::size_t pos_ = 0;
};

class TraceWorkload : public Workload {
 public:
  TraceWorkload(const Trace& t, std::uint32_t total_cus) : id_("trace:" + fingerprint(t)) {
    per_cu_.resize(total_cus);
    for (auto& v : per_cu_) v = std::make_shared<std::vector<CuOp>>();
    std::unordered_map<std::uint64_t, CuId> owner;
    for (const auto& op : t.ops) {
      if (op.kind == OpKind::Barrier) {
        for (auto& v : per_cu_) v->push_back(CuOp{OpKind::Barrier, 0, op.barrier_id});
        continue;
      }
      if (op.cu >= total_cus)
        throw ConfigError("trace names CU " + std::to_string(op.cu) + " but the system has " + std::to_string(total_cus));
      per_cu_[op.cu]->push_back(CuOp{op.kind, op.addr, 0});
      ++ops_;
      const auto [it, fresh] = owner.emplace(op.addr / kBlockBytes, op.cu);
      if (!fresh && it->second != op.cu) shares_ = true;
    }
  }

  std::uint32_t cus() const override { return static_cast<std::uint32_t>(per_cu_.size()); }
  std::unique_ptr<CuStream> stream(CuId cu) const override { return std::make_unique<VectorStream>(per_cu_.at(cu)); }
  std::string id() const override { return id_; }
  bool shares_data() const override { return shares_; }
  std::uint64_t op_count() const override { return ops_; }

 private:
  std::vector<std::shared_ptr<std::vector<CuOp>>> per_cu_;
  std::string id_;
  bool shares_ = false;
  std::uint64_t ops_ = 0;
};

}  // namespace

std::unique_ptr<Workload> trace_workload(Trace t, std::uint32_t total_cus) {
  return std::make_unique<TraceWorkload>(t, total_cus);
}

Trace materialize(const Workload& w) {
  Trace t;
  std::vector<std::unique_ptr<CuStream>> streams;
  for (CuId c = 0; c < w.cus(); ++c) streams.push_back(w.stream(c));
  std::vector<bool> done(w.cus(), false);
  for (;;) {
    std::optional<std::uint32_t> barrier;
    std::size_t ended = 0;
    for (CuId c = 0; c < w.cus(); ++c) {
      CuOp op;
      bool hit_barrier = false;
      while (!done[c] && streams[c]->next(op)) {
        if (op.kind == OpKind::Barrier) {
          if (barrier && *barrier != op.barrier_id) throw ConfigError("CUs disagree on barrier order");
          barrier = op.barrier_id;
          hit_barrier = true;
          break;
        }
        t.ops.push_back(TraceOp{c, op.kind, op.addr, 0});
      }
      if (!hit_barrier) {
        done[c] = true;
        ++ended;
      }
    }
    if (!barrier) break;
    if (ended != 0) throw ConfigError("some CUs end before a barrier the others reach");
    t.ops.push_back(TraceOp{0, OpKind::Barrier, 0, *barrier});
  }
  return t;
}

void XtremeSpec::validate() const {
  if (gpus < 1 || cus_per_gpu < 1) throw ConfigError("xtreme: gpus and cus_per_gpu must be positive");
  if (repeats < 1) throw ConfigError("xtreme: repeats must be positive");
  const std::uint64_t unit = std::uint64_t{total_cus()} * 4;
  if (vector_bytes == 0 || vector_bytes % unit != 0)
    throw ConfigError("xtreme: vector size " + std::to_string(vector_bytes) + " is not divisible by " +
                      std::to_string(unit) + " (CUs x 4 B)");
  if (variant == XtremeVariant::Three && gpus < 2) throw ConfigError("xtreme3 needs at least two GPUs");
  if (variant != XtremeVariant::One && cus_per_gpu < 2) throw ConfigError("xtreme2/3 need at least two CUs per GPU");
}

namespace {

// A barrier-terminated step of a vector kernel: one pass over a slice.
struct Phase {
  std::int64_t slice = -1;  // -1: idle this step
  bool to_c = true;         // C = A + B, else A = C + B
};

struct VectorLayout {
  std::uint64_t a = 0, b = 0, c = 0;
  std::uint64_t slice_bytes = 0;

  std::uint64_t first_block(std::int64_t s) const { return static_cast<std::uint64_t>(s) * slice_bytes / kBlockBytes; }
  std::uint64_t end_block(std::int64_t s) const {
    return (static_cast<std::uint64_t>(s + 1) * slice_bytes + kBlockBytes - 1) / kBlockBytes;
  }
};

class PhaseStream : public CuStream {
 public:
  PhaseStream(VectorLayout layout, std::vector<Phase> phases, std::uint32_t first_barrier)
      : l_(layout), phases_(std::move(phases)), barrier_(first_barrier) {
    enter();
  }

  bool next(CuOp& op) override {
    for (;;) {
      if (p_ >= phases_.size()) return false;
      const Phase& ph = phases_[p_];
      if (ph.slice >= 0 && block_ < end_) {
        const std::uint64_t off = block_ * kBlockBytes;
        switch (sub_) {
          case 0: op = {OpKind::Read, (ph.to_c ? l_.a : l_.c) + off, 0}; break;
          case 1: op = {OpKind::Read, l_.b + off, 0}; break;
          default: op = {OpKind::Write, (ph.to_c ? l_.c : l_.a) + off, 0}; break;
        }
        if (++sub_ == 3) {
          sub_ = 0;
          ++block_;
        }
        return true;
      }
      op = {OpKind::Barrier, 0, barrier_++};
      ++p_;
      enter();
      return true;
    }
  }

 private:
  void enter() {
    if (p_ >= phases_.size() || phases_[p_].slice < 0) return;
    block_ = l_.first_block(phases_[p_].slice);
    end_ = l_.end_block(phases_[p_].slice);
    sub_ = 0;
  }

  VectorLayout l_;
  std::vector<Phase> phases_;
  std::uint32_t barrier_;
  std::size_t p_ = 0;
  std::uint64_t block_ = 0, end_ = 0;
  int sub_ = 0;
};

class XtremeWorkload : public Workload {
 public:
  explicit XtremeWorkload(const XtremeSpec& s) : s_(s) {
    s.validate();
    const std::uint64_t span = (s.vector_bytes + 4095) / 4096 * 4096;
    l_.a = s.base_addr;
    l_.b = s.base_addr + span;
    l_.c = s.base_addr + 2 * span;
    l_.slice_bytes = s.vector_bytes / s.total_cus();
  }

  std::uint32_t cus() const override { return s_.total_cus(); }

  std::unique_ptr<CuStream> stream(CuId cu) const override { return std::make_unique<PhaseStream>(l_, phases(cu), 1); }

  std::string id() const override {
    std::ostringstream os;
    os << "xtreme" << static_cast<int>(s_.variant) << ":v=" << s_.vector_bytes << ":r=" << s_.repeats
       << ":g=" << s_.gpus << ":c=" << s_.cus_per_gpu << ":base=" << s_.base_addr;
    return os.str();
  }

  bool shares_data() const override {
    // Slices that are not block multiples share their boundary blocks.
    return s_.variant != XtremeVariant::One || l_.slice_bytes % kBlockBytes != 0;
  }

  std::uint64_t op_count() const override {
    std::uint64_t n = 0;
    for (CuId cu = 0; cu < cus(); ++cu)
      for (const Phase& p : phases(cu))
        if (p.slice >= 0) n += 3 * (l_.end_block(p.slice) - l_.first_block(p.slice));
    return n;
  }

 private:
  // Slice index this CU writes during the shared steps, or -1.
  std::int64_t partner_slice(CuId cu) const {
    const std::uint32_t g = cu / s_.cus_per_gpu, c = cu % s_.cus_per_gpu;
    if (c % 2 != 0 || c + 1 >= s_.cus_per_gpu) return -1;
    const std::uint32_t target_gpu = s_.variant == XtremeVariant::Three ? (g + 1) % s_.gpus : g;
    return std::int64_t{target_gpu} * s_.cus_per_gpu + c + 1;
  }

  std::vector<Phase> phases(CuId cu) const {
    std::vector<Phase> out;
    const std::int64_t own = cu;
    if (s_.variant == XtremeVariant::One) {
      for (std::uint32_t r = 0; r < s_.repeats; ++r) out.push_back({own, true});
      for (std::uint32_t r = 0; r < s_.repeats; ++r) out.push_back({own, false});
      return out;
    }
    out.push_back({own, true});
    const std::int64_t other = partner_slice(cu);
    for (std::uint32_t r = 0; r < s_.repeats; ++r) out.push_back({other, false});
    out.push_back({own, true});
    return out;
  }

  XtremeSpec s_;
  VectorLayout l_;
};

class RmwStream : public CuStream {
 public:
  RmwStream(std::uint64_t begin, std::uint64_t end) : block_(begin), end_(end) {}
  bool next(CuOp& op) override {
    if (block_ >= end_) return false;
    op = {write_ ? OpKind::Write : OpKind::Read, block_ * kBlockBytes, 0};
    if (write_) ++block_;
    write_ = !write_;
    return true;
  }

 private:
  std::uint64_t block_, end_;
  bool write_ = false;
};

class StreamWorkload : public Workload {
 public:
  StreamWorkload(std::uint64_t total, std::uint32_t gpus, std::uint32_t cus_per_gpu)
      : total_(total), gpus_(gpus), cus_(gpus * cus_per_gpu) {
    if (cus_ == 0) throw ConfigError("stream: need at least one CU");
    if (total == 0 || total % (std::uint64_t{cus_} * kBlockBytes) != 0)
      throw ConfigError("stream: total size must be a positive multiple of CUs x 64 B");
    slice_blocks_ = total / cus_ / kBlockBytes;
  }
  std::uint32_t cus() const override { return cus_; }
  std::unique_ptr<CuStream> stream(CuId cu) const override {
    return std::make_unique<RmwStream>(cu * slice_blocks_, (cu + 1) * slice_blocks_);
  }
  std::string id() const override {
    return "stream:bytes=" + std::to_string(total_) + ":g=" + std::to_string(gpus_) + ":cus=" + std::to_string(cus_);
  }
  bool shares_data() const override { return false; }
  std::uint64_t op_count() const override { return 2 * slice_blocks_ * cus_; }

 private:
  std::uint64_t total_;
  std::uint32_t gpus_;
  std::uint32_t cus_;
  std::uint64_t slice_blocks_ = 0;
};

}  // namespace

std::unique_ptr<Workload> xtreme_workload(const XtremeSpec& spec) { return std::make_unique<XtremeWorkload>(spec); }

Trace gen_xtreme(const XtremeSpec& spec) { return materialize(*xtreme_workload(spec)); }

std::unique_ptr<Workload> stream_workload(std::uint64_t total_bytes, std::uint32_t gpus, std::uint32_t cus_per_gpu) {
  return std::make_unique<StreamWorkload>(total_bytes, gpus, cus_per_gpu);
}

Trace gen_stream(std::uint64_t total_bytes, std::uint32_t gpus, std::uint32_t cus_per_gpu) {
  return materialize(*stream_workload(total_bytes, gpus, cus_per_gpu));
}

Trace gen_random(const RandomSpec& s) {
  if (s.n_ops == 0 || s.n_addrs == 0 || s.gpus == 0 || s.cus_per_gpu == 0)
    throw ConfigError("random: parameters must be positive");
  if (!(s.write_ratio >= 0.0 && s.write_ratio <= 1.0)) throw ConfigError("random: write ratio must be in [0, 1]");
  std::mt19937_64 rng(s.seed);
  const std::uint32_t total = s.gpus * s.cus_per_gpu;
  std::uniform_int_distribution<std::uint32_t> pick_cu(0, total - 1);
  std::uniform_int_distribution<std::uint32_t> pick_addr(0, s.n_addrs - 1);
  std::bernoulli_distribution is_write(s.write_ratio);
  Trace t;
  std::uint32_t barrier = 1;
  for (std::uint64_t i = 0; i < s.n_ops; ++i) {
    if (s.barrier_every != 0 && i != 0 && i % s.barrier_every == 0)
      t.ops.push_back(TraceOp{0, OpKind::Barrier, 0, barrier++});
    TraceOp op;
    op.cu = pick_cu(rng);
    op.kind = is_write(rng) ? OpKind::Write : OpKind::Read;
    op.addr = pick_addr(rng) * s.stride;
    t.ops.push_back(op);
  }
  return t;
}

}  // namespace mgsim
