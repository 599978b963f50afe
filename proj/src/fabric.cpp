#include "mgsim/fabric.hpp"

namespace mgsim {

Fabric::Fabric(Engine& engine, const SystemGraph& graph, Stats& stats)
    : engine_(engine), graph_(graph), stats_(stats), coherent_(graph.config().coherent()) {
  for (const auto& l : graph.links()) links_.emplace_back(l.name, l.bytes_num, l.bytes_den, l.latency);
}

void Fabric::attach() {
  if (engine_.component_count() != graph_.nodes().size())
    throw ProtocolError("fabric must register after every graph node");
  id_ = engine_.add_component(this);
}

void Fabric::send(const Message& m, Cycle t) {
  LinkId route[4];
  const std::size_t n = graph_.route_into(m.src, m.dst, route);
  if (n == 0) {
    engine_.deliver(t, m.dst, m);
    return;
  }
  // Account once per link class crossed.
  const std::uint32_t with = message_bytes(m.kind, coherent_);
  const std::uint32_t without = message_bytes(m.kind, false);
  LinkClass seen[4];
  std::size_t nseen = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const LinkClass c = graph_.links()[route[i]].cls;
    bool dup = false;
    for (std::size_t j = 0; j < nseen; ++j) dup = dup || seen[j] == c;
    if (!dup) {
      seen[nseen++] = c;
      stats_.link(c).count(m.kind, with, without);
    }
  }
  forward(m, 0, t);
}

void Fabric::forward(const Message& m, std::uint32_t hop, Cycle t) {
  LinkId route[4];
  const std::size_t n = graph_.route_into(m.src, m.dst, route);
  const Transfer tr = links_[route[hop]].transfer(message_bytes(m.kind, coherent_), t);
  if (hop + 1 == n) {
    engine_.deliver(tr.arrive, m.dst, m);
    return;
  }
  Event ev;
  ev.time = tr.arrive;
  ev.target = id_;
  ev.kind = EventKind::Hop;
  ev.aux = hop + 1;
  ev.msg = m;
  engine_.schedule(std::move(ev));
}

void Fabric::handle(const Event& ev) {
  if (ev.kind != EventKind::Hop) throw ProtocolError("fabric received a non-hop event");
  forward(ev.msg, ev.aux, ev.time);
}

}  // namespace mgsim
