#include "bopf/timeline.hpp"

#include <cmath>

#include "bopf/errors.hpp"

namespace bopf {

void RateTimeline::ensure_breakpoint(double t) {
  auto it = segments_.lower_bound(t);
  if (it != segments_.end() && it->first == t) return;
  if (it == segments_.begin()) {
    segments_.emplace(t, ResourceVector(dims_));
  } else {
    auto prev = std::prev(it);
    segments_.emplace(t, prev->second);
  }
}

void RateTimeline::add(double begin, double end, const ResourceVector& rate) {
  if (rate.size() != dims_) throw StructuralError("timeline: rate dimension mismatch");
  if (!(end > begin)) throw StructuralError("timeline: empty interval");
  ensure_breakpoint(begin);
  ensure_breakpoint(end);
  for (auto it = segments_.find(begin); it != segments_.end() && it->first < end; ++it) {
    it->second += rate;
  }
  coalesce();
}

void RateTimeline::subtract(double begin, double end, const ResourceVector& rate) {
  if (rate.size() != dims_) throw StructuralError("timeline: rate dimension mismatch");
  if (!(end > begin)) throw StructuralError("timeline: empty interval");
  ensure_breakpoint(begin);
  ensure_breakpoint(end);
  for (auto it = segments_.find(begin); it != segments_.end() && it->first < end; ++it) {
    bool under = false;
    it->second = it->second.saturating_sub(rate, &under);
    if (under) throw StructuralError("timeline: subtracting rate that was never committed");
  }
  coalesce();
}

void RateTimeline::coalesce() {
  for (auto it = segments_.begin(); it != segments_.end();) {
    bool same_as_prev = (it == segments_.begin())
                            ? it->second.is_zero(0.0)
                            : it->second == std::prev(it)->second;
    if (same_as_prev) {
      it = segments_.erase(it);
    } else {
      ++it;
    }
  }
}

ResourceVector RateTimeline::at(double t) const {
  auto it = segments_.upper_bound(t);
  if (it == segments_.begin()) return ResourceVector(dims_);
  return std::prev(it)->second;
}

ResourceVector RateTimeline::max_over(double begin, double end) const {
  ResourceVector m = at(begin);
  for (auto it = segments_.upper_bound(begin); it != segments_.end() && it->first < end; ++it) {
    for (size_t k = 0; k < dims_; ++k) m[k] = std::max(m[k], it->second[k]);
  }
  return m;
}

std::vector<std::pair<double, ResourceVector>> RateTimeline::breakpoints() const {
  return {segments_.begin(), segments_.end()};
}

}  // namespace bopf
