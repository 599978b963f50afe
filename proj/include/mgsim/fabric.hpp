#pragma once

#include <vector>

#include "mgsim/engine.hpp"
#include "mgsim/stats.hpp"
#include "mgsim/topology.hpp"

namespace mgsim {

/// Moves messages between components over the system graph's links, one
/// store-and-forward hop at a time, and accounts the bytes per link class.
class Fabric : public Component {
 public:
  Fabric(Engine& engine, const SystemGraph& graph, Stats& stats);
  /// Registers with the engine. Component ids must equal graph node ids, so
  /// this comes after every node has registered.
  void attach();

  /// Injects `m` (from m.src to m.dst) at time `t` >= now.
  void send(const Message& m, Cycle t);

  void handle(const Event& ev) override;
  std::string name() const override { return "fabric"; }

  ComponentId id() const { return id_; }
  Cycle now() const { return engine_.now(); }
  Engine& engine() { return engine_; }
  const std::vector<Link>& links() const { return links_; }
  const SystemGraph& graph() const { return graph_; }

 private:
  void forward(const Message& m, std::uint32_t hop, Cycle t);

  Engine& engine_;
  const SystemGraph& graph_;
  Stats& stats_;
  std::vector<Link> links_;
  ComponentId id_ = 0;
  bool coherent_;
};

}  // namespace mgsim
