#include "mgsim/topology.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace mgsim {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::SmWtHalcone: return "sm-wt-c-halcone";
    case Protocol::SmWtNc: return "sm-wt-nc";
    case Protocol::SmWbNc: return "sm-wb-nc";
    case Protocol::RdmaWbNc: return "rdma-wb-nc";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Protocol p : {Protocol::SmWtHalcone, Protocol::SmWtNc, Protocol::SmWbNc, Protocol::RdmaWbNc}) {
    if (lower == to_string(p)) return p;
  }
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

const char* to_string(LinkClass c) {
  switch (c) {
    case LinkClass::L1L2: return "l1_l2";
    case LinkClass::L2MM: return "l2_mm";
    case LinkClass::Rdma: return "rdma";
  }
  return "?";
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (gpus < 1 || gpus > 16) fail("system.gpus must be in [1, 16]");
  if (cus_per_gpu < 1) fail("system.cus_per_gpu must be positive");
  if (l2_banks_per_gpu < 1) fail("system.l2_banks_per_gpu must be positive");
  if (hbm_stacks < 1) fail("system.hbm_stacks must be positive");
  if (page_bytes < kBlockBytes || page_bytes % kBlockBytes != 0) fail("system.page_bytes must be a multiple of 64");
  if (hbm_stack_bytes == 0 || hbm_stack_bytes % page_bytes != 0) fail("system.hbm_stack_bytes must be a positive multiple of the page size");
  for (const auto* c : {&l1, &l2}) {
    const char* which = c == &l1 ? "l1" : "l2";
    if (c->ways < 1 || c->size_bytes == 0 || c->size_bytes % (kBlockBytes * c->ways) != 0)
      fail(std::string(which) + ": size must be a positive multiple of 64 * ways");
    if (c->mshr_entries < 1) fail(std::string(which) + ".mshr must be positive");
    if (c->latency < 1) fail(std::string(which) + ".latency must be positive");
  }
  if (tsu_ways < 1) fail("tsu.ways must be positive");
  if (issue_width < 1) fail("cu.issue_width must be positive");
  if (l1l2_bytes_per_cycle < 1 || l2mm_bytes_per_cycle < 1 || rdma_bytes_per_cycle < 1)
    fail("link bandwidths must be positive");
  if (max_events < 1) fail("sim.max_events must be positive");
  leases.validate();
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Integer with optional 0x prefix and K/M/G (binary) suffix.
std::uint64_t parse_uint(const std::string& key, std::string_view v) {
  std::uint64_t mult = 1;
  if (!v.empty() && !(v.size() > 1 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X'))) {
    switch (std::toupper(static_cast<unsigned char>(v.back()))) {
      case 'K': mult = 1ULL << 10; v.remove_suffix(1); break;
      case 'M': mult = 1ULL << 20; v.remove_suffix(1); break;
      case 'G': mult = 1ULL << 30; v.remove_suffix(1); break;
      default: break;
    }
  }
  int base = 10;
  if (v.size() > 1 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("invalid integer for '" + key + "': '" + std::string(v) + "'");
  return out * mult;
}

template <typename T>
T narrow(const std::string& key, std::uint64_t v) {
  if (v > std::numeric_limits<T>::max()) throw ConfigError("value out of range for '" + key + "'");
  return static_cast<T>(v);
}

}  // namespace

SystemConfig parse_config(std::string_view text) {
  SystemConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  const std::string override_prefix = "lease.rd.override.";
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string l = trim(line);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(std::string_view(l).substr(0, eq));
    const std::string val = trim(std::string_view(l).substr(eq + 1));
    auto u = [&] { return parse_uint(key, val); };
    auto u32 = [&] { return narrow<std::uint32_t>(key, u()); };
    auto ts = [&] { return narrow<Timestamp>(key, u()); };

    if (key == "protocol") cfg.protocol = parse_protocol(val);
    else if (key == "system.gpus") cfg.gpus = u32();
    else if (key == "system.cus_per_gpu") cfg.cus_per_gpu = u32();
    else if (key == "system.l2_banks_per_gpu") cfg.l2_banks_per_gpu = u32();
    else if (key == "system.hbm_stacks") cfg.hbm_stacks = u32();
    else if (key == "system.hbm_stack_bytes") cfg.hbm_stack_bytes = u();
    else if (key == "system.page_bytes") cfg.page_bytes = u();
    else if (key == "lease.rd") cfg.leases.rd_lease = ts();
    else if (key == "lease.wr") cfg.leases.wr_lease = ts();
    else if (key.rfind(override_prefix, 0) == 0)
      cfg.leases.rd_override[parse_uint(key, key.substr(override_prefix.size()))] = ts();
    else if (key == "l1.size") cfg.l1.size_bytes = u();
    else if (key == "l1.ways") cfg.l1.ways = u32();
    else if (key == "l1.latency") cfg.l1.latency = u();
    else if (key == "l1.mshr") cfg.l1.mshr_entries = u32();
    else if (key == "l2.size") cfg.l2.size_bytes = u();
    else if (key == "l2.ways") cfg.l2.ways = u32();
    else if (key == "l2.latency") cfg.l2.latency = u();
    else if (key == "l2.mshr") cfg.l2.mshr_entries = u32();
    else if (key == "mm.latency") cfg.mm_latency = u();
    else if (key == "tsu.latency") cfg.tsu_latency = u();
    else if (key == "tsu.ways") cfg.tsu_ways = u32();
    else if (key == "net.l1l2.bytes_per_cycle") cfg.l1l2_bytes_per_cycle = u32();
    else if (key == "net.l1l2.latency") cfg.l1l2_latency = u();
    else if (key == "net.l2mm.bytes_per_cycle") cfg.l2mm_bytes_per_cycle = u32();
    else if (key == "net.switch.latency") cfg.switch_latency = u();
    else if (key == "rdma.bytes_per_cycle") cfg.rdma_bytes_per_cycle = u32();
    else if (key == "rdma.latency") cfg.rdma_latency = u();
    else if (key == "rdma.preamble") cfg.rdma_preamble_cycles = u();
    else if (key == "cu.issue_width") cfg.issue_width = u32();
    else if (key == "sim.max_events") cfg.max_events = u();
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const SystemConfig& c) {
  std::ostringstream os;
  os << "protocol=" << to_string(c.protocol) << '\n'
     << "system.gpus=" << c.gpus << '\n'
     << "system.cus_per_gpu=" << c.cus_per_gpu << '\n'
     << "system.l2_banks_per_gpu=" << c.l2_banks_per_gpu << '\n'
     << "system.hbm_stacks=" << c.hbm_stacks << '\n'
     << "system.hbm_stack_bytes=" << c.hbm_stack_bytes << '\n'
     << "system.page_bytes=" << c.page_bytes << '\n'
     << "lease.rd=" << c.leases.rd_lease << '\n'
     << "lease.wr=" << c.leases.wr_lease << '\n';
  for (const auto& [addr, lease] : c.leases.rd_override)
    os << "lease.rd.override.0x" << std::hex << addr << std::dec << '=' << lease << '\n';
  os << "l1.size=" << c.l1.size_bytes << "\nl1.ways=" << c.l1.ways << "\nl1.latency=" << c.l1.latency
     << "\nl1.mshr=" << c.l1.mshr_entries << '\n'
     << "l2.size=" << c.l2.size_bytes << "\nl2.ways=" << c.l2.ways << "\nl2.latency=" << c.l2.latency
     << "\nl2.mshr=" << c.l2.mshr_entries << '\n'
     << "mm.latency=" << c.mm_latency << "\ntsu.latency=" << c.tsu_latency << "\ntsu.ways=" << c.tsu_ways << '\n'
     << "net.l1l2.bytes_per_cycle=" << c.l1l2_bytes_per_cycle << "\nnet.l1l2.latency=" << c.l1l2_latency << '\n'
     << "net.l2mm.bytes_per_cycle=" << c.l2mm_bytes_per_cycle << "\nnet.switch.latency=" << c.switch_latency << '\n'
     << "rdma.bytes_per_cycle=" << c.rdma_bytes_per_cycle << "\nrdma.latency=" << c.rdma_latency
     << "\nrdma.preamble=" << c.rdma_preamble_cycles << '\n'
     << "cu.issue_width=" << c.issue_width << "\nsim.max_events=" << c.max_events << '\n';
  return os.str();
}

std::uint64_t parse_size(std::string_view text) { return parse_uint("size", trim(text)); }

AddressMap::AddressMap(const SystemConfig& cfg)
    : page_bytes_(cfg.page_bytes),
      stacks_(cfg.hbm_stacks),
      banks_(cfg.l2_banks_per_gpu),
      gpus_(cfg.gpus),
      capacity_(cfg.memory_bytes()),
      rdma_(cfg.rdma()) {}

AddressRoute AddressMap::map(std::uint64_t addr) const {
  if (addr >= capacity_) {
    std::ostringstream os;
    os << "address 0x" << std::hex << addr << " beyond memory capacity 0x" << capacity_;
    throw SimulationFault(os.str());
  }
  const std::uint64_t page = addr / page_bytes_;
  return {static_cast<std::uint32_t>(page % stacks_), static_cast<std::uint32_t>(page % banks_)};
}

std::uint32_t AddressMap::home_gpu(std::uint64_t addr) const {
  if (!rdma_) return 0;
  return map(addr).hbm_stack % gpus_;
}

std::uint32_t AddressMap::l2_bank(std::uint64_t addr) const {
  const std::uint64_t page = addr / page_bytes_;
  map(addr);
  // RDMA: a GPU's L2 caches only its local pages, so spread those over all banks.
  if (rdma_) return static_cast<std::uint32_t>((page / gpus_) % banks_);
  return static_cast<std::uint32_t>(page % banks_);
}

std::uint64_t AddressMap::local_block(std::uint64_t addr, std::uint32_t interleave) const {
  const std::uint64_t page = addr / page_bytes_;
  const std::uint64_t in_page = (addr % page_bytes_) / kBlockBytes;
  return (page / interleave) * (page_bytes_ / kBlockBytes) + in_page;
}

AddressRoute map_address(const SystemConfig& cfg, std::uint64_t addr) { return AddressMap(cfg).map(addr); }

std::size_t SystemGraph::count(NodeKind k) const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [k](const NodeDesc& n) { return n.kind == k; }));
}

std::size_t SystemGraph::count(LinkClass c) const {
  return static_cast<std::size_t>(std::count_if(links_.begin(), links_.end(), [c](const LinkDesc& l) { return l.cls == c; }));
}

NodeId SystemGraph::l2_for(std::uint32_t gpu, std::uint64_t addr) const {
  const std::uint32_t owner = cfg_.rdma() ? amap_.home_gpu(addr) : gpu;
  return l2(owner, amap_.l2_bank(addr));
}

NodeId SystemGraph::mmc_for(std::uint64_t addr) const { return mmc(amap_.map(addr).hbm_stack); }

std::size_t SystemGraph::route_into(NodeId from, NodeId to, LinkId* out) const {
  const NodeDesc& a = nodes_[from];
  const NodeDesc& b = nodes_[to];
  std::size_t n = 0;
  const std::uint32_t banks = cfg_.l2_banks_per_gpu;
  if (a.kind == NodeKind::L1 && b.kind == NodeKind::L2) {
    if (a.gpu != b.gpu) {
      out[n++] = egress_ + a.gpu;
      out[n++] = ingress_ + b.gpu;
    }
    out[n++] = xbar_req_ + b.gpu * banks + b.index;
  } else if (a.kind == NodeKind::L2 && b.kind == NodeKind::L1) {
    out[n++] = xbar_resp_ + a.gpu * banks + a.index;
    if (a.gpu != b.gpu) {
      out[n++] = egress_ + a.gpu;
      out[n++] = ingress_ + b.gpu;
    }
  } else if (a.kind == NodeKind::L2 && b.kind == NodeKind::Mmc) {
    out[n++] = to_mm_ + b.index;
  } else if (a.kind == NodeKind::Mmc && b.kind == NodeKind::L2) {
    out[n++] = from_mm_ + a.index;
  } else if ((a.kind == NodeKind::Cu && b.kind == NodeKind::L1) || (a.kind == NodeKind::L1 && b.kind == NodeKind::Cu)) {
    if (a.gpu != b.gpu || a.index != b.index) throw ProtocolError("CU talks only to its own L1");
  } else {
    throw ProtocolError("no route from " + a.name + " to " + b.name);
  }
  return n;
}

std::vector<LinkId> SystemGraph::route(NodeId from, NodeId to) const {
  LinkId buf[4];
  const std::size_t n = route_into(from, to, buf);
  return {buf, buf + n};
}

SystemGraph build_system(const SystemConfig& cfg) {
  cfg.validate();
  SystemGraph g;
  g.cfg_ = cfg;
  g.amap_ = AddressMap(cfg);
  auto add = [&](NodeKind k, std::uint32_t gpu, std::uint32_t idx, std::string name) {
    g.nodes_.push_back({k, gpu, idx, std::move(name)});
  };
  g.cu_base_ = 0;
  for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
    for (std::uint32_t c = 0; c < cfg.cus_per_gpu; ++c)
      add(NodeKind::Cu, gp, c, "gpu" + std::to_string(gp) + ".cu" + std::to_string(c));
  g.l1_base_ = static_cast<NodeId>(g.nodes_.size());
  for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
    for (std::uint32_t c = 0; c < cfg.cus_per_gpu; ++c)
      add(NodeKind::L1, gp, c, "gpu" + std::to_string(gp) + ".l1_" + std::to_string(c));
  g.l2_base_ = static_cast<NodeId>(g.nodes_.size());
  for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
    for (std::uint32_t b = 0; b < cfg.l2_banks_per_gpu; ++b)
      add(NodeKind::L2, gp, b, "gpu" + std::to_string(gp) + ".l2_" + std::to_string(b));
  g.mmc_base_ = static_cast<NodeId>(g.nodes_.size());
  for (std::uint32_t s = 0; s < cfg.hbm_stacks; ++s) {
    const std::uint32_t home = cfg.rdma() ? s % cfg.gpus : 0;
    add(NodeKind::Mmc, home, s, "hbm" + std::to_string(s));
  }

  auto link = [&](std::string name, LinkClass cls, std::uint32_t num, std::uint32_t den, Cycle lat) {
    g.links_.push_back({std::move(name), cls, num, den, lat});
  };
  const std::uint32_t banks = cfg.l2_banks_per_gpu;
  g.xbar_req_ = static_cast<LinkId>(g.links_.size());
  for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
    for (std::uint32_t b = 0; b < banks; ++b)
      link("gpu" + std::to_string(gp) + ".xbar.to_l2_" + std::to_string(b), LinkClass::L1L2,
           cfg.l1l2_bytes_per_cycle, banks, cfg.l1l2_latency);
  g.xbar_resp_ = static_cast<LinkId>(g.links_.size());
  for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
    for (std::uint32_t b = 0; b < banks; ++b)
      link("gpu" + std::to_string(gp) + ".xbar.from_l2_" + std::to_string(b), LinkClass::L1L2,
           cfg.l1l2_bytes_per_cycle, banks, cfg.l1l2_latency);
  // The switch complex (SM) or each GPU's local memory network (RDMA) is
  // modeled as one port per stack, each carrying an equal share of the
  // aggregate L2<->MM bandwidth.
  const std::string mm_prefix = cfg.rdma() ? "local_mem" : "swc";
  g.to_mm_ = static_cast<LinkId>(g.links_.size());
  for (std::uint32_t s = 0; s < cfg.hbm_stacks; ++s)
    link(mm_prefix + ".to_hbm" + std::to_string(s), LinkClass::L2MM, cfg.l2mm_bytes_per_cycle, cfg.hbm_stacks,
         cfg.switch_latency);
  g.from_mm_ = static_cast<LinkId>(g.links_.size());
  for (std::uint32_t s = 0; s < cfg.hbm_stacks; ++s)
    link(mm_prefix + ".from_hbm" + std::to_string(s), LinkClass::L2MM, cfg.l2mm_bytes_per_cycle, cfg.hbm_stacks,
         cfg.switch_latency);
  g.egress_ = g.ingress_ = static_cast<LinkId>(g.links_.size());
  if (cfg.rdma() && cfg.gpus > 1) {
    for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
      link("gpu" + std::to_string(gp) + ".sw.egress", LinkClass::Rdma, cfg.rdma_bytes_per_cycle, 1, cfg.rdma_latency);
    g.ingress_ = static_cast<LinkId>(g.links_.size());
    for (std::uint32_t gp = 0; gp < cfg.gpus; ++gp)
      link("gpu" + std::to_string(gp) + ".sw.ingress", LinkClass::Rdma, cfg.rdma_bytes_per_cycle, 1, 0);
  }
  return g;
}

}  // namespace mgsim
