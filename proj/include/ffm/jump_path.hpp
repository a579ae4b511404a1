#pragma once

#include <vector>

#include "ffm/mass_distribution.hpp"

namespace ffm {

enum class EventKind { growth, burn, explosion };

struct JumpEvent {
  double time = 0.0;
  SizeState new_size = 1;  // the size just after the event (cadlag value)
  EventKind kind = EventKind::growth;
};

/// Event log of one tagged-cluster size path. The pre-event size of any
/// event is the previous event's new_size (or initial_size), so both
/// endpoint values of every jump can be reconstructed.
struct JumpPath {
  double start_time = 0.0;
  SizeState initial_size = 1;
  std::vector<JumpEvent> events;

  SizeState state_at(double t) const;
  std::size_t explosion_count(double t_max) const;
  void validate() const;
};

}  // namespace ffm
