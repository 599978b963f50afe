#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mgsim/cache.hpp"
#include "mgsim/checker.hpp"
#include "mgsim/engine.hpp"
#include "mgsim/memory.hpp"
#include "mgsim/stats.hpp"
#include "mgsim/topology.hpp"
#include "mgsim/workloads.hpp"

namespace mgsim {

struct SimOptions {
  bool record = true;              // keep EventRecords and run the checker
  bool monitor = false;            // online runtime-invariant monitor
  std::ostream* event_log = nullptr;
};

enum class CheckMode : std::uint8_t {
  Skipped,             // no records, or NC on a sharing trace
  LogicalTime,         // coherent configuration
  ProgramOrder,        // NC configuration, no sharing
};

const char* to_string(CheckMode m);

struct RunResult {
  Stats stats;
  std::vector<EventRecord> records;
  std::map<std::uint64_t, WriteId> memory;  // final MM contents, non-initial blocks
  std::vector<Violation> violations;
  CheckMode check = CheckMode::Skipped;
};

/// One simulated system executing one workload. Single use: build, run(),
/// then inspect.
class Simulator {
 public:
  Simulator(const SystemConfig& cfg, const Workload& workload, SimOptions opts = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Runs to completion. Throws LivelockError at the event cap and
  /// ProtocolError if work is left outstanding when events run out.
  RunResult run();

  const SystemGraph& graph() const;
  const CacheController& l1(std::uint32_t gpu, std::uint32_t cu) const;
  const CacheController& l2(std::uint32_t gpu, std::uint32_t bank) const;
  const Tsu* tsu(std::uint32_t stack) const;
  const MainMemory& memory() const;
  const Engine& engine() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

RunResult simulate(const SystemConfig& cfg, const Workload& workload, SimOptions opts = {});

}  // namespace mgsim
