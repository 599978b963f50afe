#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mgsim/core.hpp"

namespace mgsim {

enum class Protocol : std::uint8_t { SmWtHalcone, SmWtNc, SmWbNc, RdmaWbNc };

const char* to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

struct CacheParams {
  std::uint64_t size_bytes = 0;
  std::uint32_t ways = 1;
  Cycle latency = 1;
  std::uint32_t mshr_entries = 16;

  std::uint32_t blocks() const { return static_cast<std::uint32_t>(size_bytes / kBlockBytes); }
  std::uint32_t sets() const { return blocks() / ways; }
};

struct SystemConfig {
  Protocol protocol = Protocol::SmWtHalcone;
  std::uint32_t gpus = 4;
  std::uint32_t cus_per_gpu = 32;
  std::uint32_t l2_banks_per_gpu = 8;
  std::uint32_t hbm_stacks = 8;
  std::uint64_t hbm_stack_bytes = 512ULL << 20;
  std::uint64_t page_bytes = 4096;

  LeaseConfig leases;

  CacheParams l1{16 * 1024, 4, 1, 16};
  CacheParams l2{256 * 1024, 16, 4, 16};

  Cycle mm_latency = 100;
  Cycle tsu_latency = 50;
  std::uint32_t tsu_ways = 8;

  // Intra-GPU L1<->L2 crossbar, aggregate per GPU and split evenly over banks.
  std::uint32_t l1l2_bytes_per_cycle = 256;
  Cycle l1l2_latency = 10;
  // L2<->MM switch complex, aggregate over all stacks (1 TB/s at 1 GHz).
  std::uint32_t l2mm_bytes_per_cycle = 1000;
  Cycle switch_latency = 50;
  // Inter-GPU switch (RDMA), per GPU per direction (32 GB/s at 1 GHz).
  std::uint32_t rdma_bytes_per_cycle = 32;
  Cycle rdma_latency = 50;
  Cycle rdma_preamble_cycles = 0;

  std::uint32_t issue_width = 1;
  std::uint64_t max_events = 4'000'000'000ULL;

  bool coherent() const { return protocol == Protocol::SmWtHalcone; }
  bool l2_write_back() const { return protocol == Protocol::SmWbNc || protocol == Protocol::RdmaWbNc; }
  bool rdma() const { return protocol == Protocol::RdmaWbNc; }
  std::uint32_t total_cus() const { return gpus * cus_per_gpu; }
  std::uint64_t memory_bytes() const { return hbm_stack_bytes * hbm_stacks; }

  void validate() const;
};

/// Parses the flat `key=value` configuration format. Unknown keys throw.
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::string& path);
std::string emit_config(const SystemConfig& cfg);
/// Integer with optional 0x prefix or K/M/G (binary) suffix, e.g. "192K".
std::uint64_t parse_size(std::string_view text);

struct AddressRoute {
  std::uint32_t hbm_stack = 0;
  std::uint32_t l2_bank = 0;
  friend bool operator==(const AddressRoute&, const AddressRoute&) = default;
};

/// Page-interleaved address mapping shared by every component.
class AddressMap {
 public:
  AddressMap() = default;
  explicit AddressMap(const SystemConfig& cfg);

  AddressRoute map(std::uint64_t addr) const;
  /// GPU owning the address's memory; always 0 outside RDMA configurations.
  std::uint32_t home_gpu(std::uint64_t addr) const;
  /// Bank of the serving L2. Equals map().l2_bank except in RDMA, where only
  /// the home GPU's banks cache the page.
  std::uint32_t l2_bank(std::uint64_t addr) const;
  /// Page interleave factor seen by one L2 bank.
  std::uint32_t l2_interleave() const { return rdma_ ? banks_ * gpus_ : banks_; }
  std::uint32_t stacks() const { return stacks_; }
  /// Dense index of the block among all blocks sharing `interleave`-way
  /// page interleaving; used for set selection in banked structures.
  std::uint64_t local_block(std::uint64_t addr, std::uint32_t interleave) const;

 private:
  std::uint64_t page_bytes_ = 4096;
  std::uint32_t stacks_ = 8;
  std::uint32_t banks_ = 8;
  std::uint32_t gpus_ = 1;
  std::uint64_t capacity_ = 0;
  bool rdma_ = false;
};

AddressRoute map_address(const SystemConfig& cfg, std::uint64_t addr);

enum class NodeKind : std::uint8_t { Cu, L1, L2, Mmc };
enum class LinkClass : std::uint8_t { L1L2, L2MM, Rdma };

const char* to_string(LinkClass c);

struct NodeDesc {
  NodeKind kind = NodeKind::Cu;
  std::uint32_t gpu = 0;   // owning GPU (home GPU for memory in RDMA)
  std::uint32_t index = 0; // CU/bank/stack index within its scope
  std::string name;
};

struct LinkDesc {
  std::string name;
  LinkClass cls = LinkClass::L1L2;
  std::uint32_t bytes_num = 1;
  std::uint32_t bytes_den = 1;
  Cycle latency = 0;
};

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

/// The wired system: node instances and the links between them, plus the
/// deterministic routing function over those links.
class SystemGraph {
 public:
  const SystemConfig& config() const { return cfg_; }
  const std::vector<NodeDesc>& nodes() const { return nodes_; }
  const std::vector<LinkDesc>& links() const { return links_; }

  NodeId cu(std::uint32_t gpu, std::uint32_t cu) const { return cu_base_ + gpu * cfg_.cus_per_gpu + cu; }
  NodeId l1(std::uint32_t gpu, std::uint32_t cu) const { return l1_base_ + gpu * cfg_.cus_per_gpu + cu; }
  NodeId l2(std::uint32_t gpu, std::uint32_t bank) const { return l2_base_ + gpu * cfg_.l2_banks_per_gpu + bank; }
  NodeId mmc(std::uint32_t stack) const { return mmc_base_ + stack; }

  std::size_t count(NodeKind k) const;
  std::size_t count(LinkClass c) const;
  bool has_switch_complex() const { return !cfg_.rdma(); }

  /// L2 bank serving `addr` for requests issued from `gpu`.
  NodeId l2_for(std::uint32_t gpu, std::uint64_t addr) const;
  NodeId mmc_for(std::uint64_t addr) const;
  const AddressMap& address_map() const { return amap_; }

  /// Links a message from `from` to `to` traverses, in order. Empty for the
  /// CU <-> L1 port.
  std::vector<LinkId> route(NodeId from, NodeId to) const;
  std::size_t route_into(NodeId from, NodeId to, LinkId* out) const;

  friend SystemGraph build_system(const SystemConfig& cfg);

 private:
  SystemConfig cfg_;
  AddressMap amap_;
  std::vector<NodeDesc> nodes_;
  std::vector<LinkDesc> links_;
  NodeId cu_base_ = 0, l1_base_ = 0, l2_base_ = 0, mmc_base_ = 0;
  LinkId xbar_req_ = 0, xbar_resp_ = 0, to_mm_ = 0, from_mm_ = 0, egress_ = 0, ingress_ = 0;
};

SystemGraph build_system(const SystemConfig& cfg);

}  // namespace mgsim
