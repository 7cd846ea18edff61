#include "topogen/config/timers.h"

#include <algorithm>

namespace topogen::config {

TimerWindow timer_window(const TimerSpec& timer) {
  return {timer.start_us, timer.start_us + timer.duration_us};
}

ImpairmentSpec effective_at(const ImpairmentSpec& base, std::int64_t t_us) {
  ImpairmentSpec out = base;
  out.timers.clear();
  for (Option option : kAllOptions) {
    const TimerSpec* winner = nullptr;
    for (const auto& timer : base.timers) {
      if (timer.option != option || !timer_window(timer).contains(t_us)) continue;
      if (!winner || timer.start_us >= winner->start_us) winner = &timer;
    }
    if (winner) out.set(option, winner->new_value);
  }
  return out;
}

std::vector<ScheduleStep> timer_schedule(const ImpairmentSpec& base) {
  std::vector<ScheduleStep> steps;
  steps.push_back({0, effective_at(base, 0)});
  std::vector<std::int64_t> boundaries;
  for (const auto& timer : base.timers) {
    auto window = timer_window(timer);
    boundaries.push_back(window.begin_us);
    boundaries.push_back(window.end_us);
  }
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
  for (std::int64_t t : boundaries) {
    if (t <= 0) continue;
    auto spec = effective_at(base, t);
    if (spec != steps.back().spec) steps.push_back({t, std::move(spec)});
  }
  return steps;
}

}  // namespace topogen::config
