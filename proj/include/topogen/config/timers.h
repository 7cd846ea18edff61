#pragma once

#include <cstdint>
#include <vector>

#include "topogen/config/model.h"

namespace topogen::config {

// Active interval of a timer, half-open [begin, end). The window is measured
// from `start`, so `duration` is its length.
struct TimerWindow {
  std::int64_t begin_us = 0;
  std::int64_t end_us = 0;

  bool contains(std::int64_t t_us) const { return t_us >= begin_us && t_us < end_us; }
};

TimerWindow timer_window(const TimerSpec& timer);

// Option values in force at `t_us`. For each option the active timer with the
// latest start wins (declaration order breaks ties); with no active timer the
// base value applies. The returned spec carries no timers.
ImpairmentSpec effective_at(const ImpairmentSpec& base, std::int64_t t_us);

struct ScheduleStep {
  std::int64_t at_us = 0;
  ImpairmentSpec spec;  // effective values from at_us until the next step
};

// Piecewise-constant schedule; the first step is always at 0 with the base
// values, later steps only where the effective values change.
std::vector<ScheduleStep> timer_schedule(const ImpairmentSpec& base);

}  // namespace topogen::config
