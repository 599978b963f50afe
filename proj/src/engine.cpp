#include "mgsim/engine.hpp"

#include <ostream>
#include <sstream>

namespace mgsim {

ComponentId Engine::add_component(Component* c) {
  components_.push_back(c);
  return static_cast<ComponentId>(components_.size() - 1);
}

void Engine::schedule(Event ev) {
  if (ev.time < now_) {
    std::ostringstream os;
    os << "event scheduled in the past (t=" << ev.time << ", now=" << now_ << ")";
    throw ProtocolError(os.str());
  }
  ev.seq = next_seq_++;
  std::uint32_t slot;
  if (free_slots_.empty()) {
    slot = static_cast<std::uint32_t>(slots_.size());
    slots_.push_back(std::move(ev));
  } else {
    slot = free_slots_.back();
    free_slots_.pop_back();
    slots_[slot] = std::move(ev);
  }
  queue_.push(Key{slots_[slot].time, slots_[slot].seq, slot});
}

void Engine::deliver(Cycle t, ComponentId target, const Message& m) {
  Event ev;
  ev.time = t;
  ev.target = target;
  ev.kind = EventKind::Deliver;
  ev.msg = m;
  schedule(std::move(ev));
}

void Engine::wakeup(Cycle t, ComponentId target, std::uint32_t tag) {
  Event ev;
  ev.time = t;
  ev.target = target;
  ev.kind = EventKind::Wakeup;
  ev.aux = tag;
  schedule(std::move(ev));
}

Cycle Engine::run_until_idle() {
  while (!queue_.empty()) {
    if (dispatched_ >= max_events_) {
      std::ostringstream os;
      os << "event cap of " << max_events_ << " exceeded at t=" << now_;
      throw LivelockError(os.str());
    }
    const std::uint32_t slot = queue_.top().slot;
    queue_.pop();
    const Event ev = slots_[slot];
    free_slots_.push_back(slot);
    now_ = ev.time;
    last_time_ = ev.time;
    ++dispatched_;
    Component& c = *components_.at(ev.target);
    if (log_ != nullptr) {
      *log_ << ev.time << '\t' << c.name() << '\t';
      switch (ev.kind) {
        case EventKind::Deliver: *log_ << to_string(ev.msg.kind); break;
        case EventKind::Hop: *log_ << "Hop:" << to_string(ev.msg.kind); break;
        case EventKind::Wakeup: *log_ << "Wakeup"; break;
      }
      *log_ << '\t' << std::hex << "0x" << ev.msg.addr.value() << std::dec << '\n';
    }
    c.handle(ev);
  }
  return last_time_;
}

Link::Link(std::string name, std::uint32_t bytes_num, std::uint32_t bytes_den, Cycle latency)
    : name_(std::move(name)), num_(bytes_num), den_(bytes_den), latency_(latency) {
  if (num_ == 0 || den_ == 0) throw ConfigError("link bandwidth must be positive: " + name_);
}

Cycle Link::occupancy(std::uint32_t bytes) const {
  const std::uint64_t scaled = static_cast<std::uint64_t>(bytes) * den_;
  return (scaled + num_ - 1) / num_;
}

Transfer Link::transfer(std::uint32_t bytes, Cycle now) {
  if (bytes < 1) throw ProtocolError("link transfer of zero bytes on " + name_);
  const Cycle depart = now > busy_until_ ? now : busy_until_;
  const Cycle occ = occupancy(bytes);
  busy_until_ = depart + occ;
  bytes_ += bytes;
  ++messages_;
  return {depart, depart + occ + latency_};
}

}  // namespace mgsim
