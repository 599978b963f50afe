#pragma once

#include <cstdint>
#include <iosfwd>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgsim/core.hpp"

namespace mgsim {

class LivelockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t { Deliver, Hop, Wakeup };

struct Event {
  Cycle time = 0;
  std::uint64_t seq = 0;
  ComponentId target = 0;
  EventKind kind = EventKind::Deliver;
  std::uint32_t aux = 0;  // hop index or wakeup tag
  Message msg;
};

class Component {
 public:
  virtual ~Component() = default;
  virtual void handle(const Event& ev) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic event kernel. Events dispatch in (time, seq) order; seq is
/// the insertion counter, so simultaneous events run in the order scheduled.
class Engine {
 public:
  explicit Engine(std::uint64_t max_events = 4'000'000'000ULL) : max_events_(max_events) {}

  ComponentId add_component(Component* c);
  Component& component(ComponentId id) { return *components_.at(id); }
  std::size_t component_count() const { return components_.size(); }

  void schedule(Event ev);
  void deliver(Cycle t, ComponentId target, const Message& m);
  void wakeup(Cycle t, ComponentId target, std::uint32_t tag = 0);

  /// Dispatches until the queue drains. Returns the time of the last event.
  Cycle run_until_idle();

  Cycle now() const { return now_; }
  std::uint64_t dispatched() const { return dispatched_; }
  bool idle() const { return queue_.empty(); }

  void set_event_log(std::ostream* os) { log_ = os; }

 private:
  // Heap holds small keys; event bodies sit in a recycled slot pool.
  struct Key {
    Cycle time;
    std::uint64_t seq;
    std::uint32_t slot;
  };
  struct Later {
    bool operator()(const Key& a, const Key& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Key, std::vector<Key>, Later> queue_;
  std::vector<Event> slots_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<Component*> components_;
  Cycle now_ = 0;
  Cycle last_time_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::uint64_t max_events_;
  std::ostream* log_ = nullptr;
};

struct Transfer {
  Cycle depart = 0;
  Cycle arrive = 0;
};

/// Store-and-forward point-to-point link. Messages serialize; a message of n
/// bytes occupies the link for ceil(n / bytes_per_cycle) cycles.
class Link {
 public:
  Link() = default;
  Link(std::string name, std::uint32_t bytes_num, std::uint32_t bytes_den, Cycle latency);

  Transfer transfer(std::uint32_t bytes, Cycle now);

  Cycle occupancy(std::uint32_t bytes) const;
  Cycle busy_until() const { return busy_until_; }
  Cycle latency() const { return latency_; }
  double bytes_per_cycle() const { return static_cast<double>(num_) / den_; }
  std::uint64_t bytes_carried() const { return bytes_; }
  std::uint64_t messages() const { return messages_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::uint32_t num_ = 1;
  std::uint32_t den_ = 1;
  Cycle latency_ = 0;
  Cycle busy_until_ = 0;
  std::uint64_t bytes_ = 0;
  std::uint64_t messages_ = 0;
};

}  // namespace mgsim
