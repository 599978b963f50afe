#pragma once

#include <string>
#include <string_view>

#include "mgsim/simulator.hpp"
#include "mgsim/workloads.hpp"

namespace mgsim::fixtures {

inline SystemConfig small_config(Protocol p, std::uint32_t gpus, std::uint32_t cus) {
  SystemConfig c;
  c.protocol = p;
  c.gpus = gpus;
  c.cus_per_gpu = cus;
  return c;
}

inline RunResult run_trace(const SystemConfig& cfg, std::string_view text, SimOptions opts = {}) {
  auto w = trace_workload(parse_trace_text(text), cfg.total_cus());
  return simulate(cfg, *w, opts);
}

// The two-CU worked example: X and Y share a page, barriers impose the
// physical order I0-1, I1-1, I0-2, I1-2, I0-3, I1-3.
inline constexpr std::uint64_t kX = 0x1000;
inline constexpr std::uint64_t kY = 0x1040;

inline std::string worked_example_trace(CuId cu0, CuId cu1) {
  const std::string a = std::to_string(cu0), b = std::to_string(cu1);
  return a + " R 0x1000\nBARRIER 0\n" + b + " R 0x1040\nBARRIER 1\n" + a + " W 0x1040\nBARRIER 2\n" + b +
         " W 0x1000\nBARRIER 3\n" + a + " R 0x1000\nBARRIER 4\n" + b + " R 0x1040\n";
}

inline SystemConfig worked_example_config(std::uint32_t gpus, std::uint32_t cus) {
  SystemConfig c = small_config(Protocol::SmWtHalcone, gpus, cus);
  c.leases.rd_lease = 10;
  c.leases.wr_lease = 5;
  c.leases.rd_override[kY] = 7;
  return c;
}

}  // namespace mgsim::fixtures
