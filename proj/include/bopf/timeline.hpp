#pragma once

#include <map>
#include <vector>

#include "bopf/resource_vector.hpp"

namespace bopf {

// Piecewise-constant rate over time, built from half-open intervals
// [begin, end). Exact interval arithmetic over breakpoints; no sampling.
class RateTimeline {
 public:
  explicit RateTimeline(size_t dims) : dims_(dims) {}

  size_t dims() const { return dims_; }

  void add(double begin, double end, const ResourceVector& rate);
  // Removes a previously added contribution (exact inverse of add).
  void subtract(double begin, double end, const ResourceVector& rate);

  ResourceVector at(double t) const;
  // Componentwise maximum of the rate over [begin, end), evaluated exactly on
  // the breakpoints intersecting the window.
  ResourceVector max_over(double begin, double end) const;

  bool empty() const { return segments_.empty(); }
  // (time, rate-from-that-time) breakpoints, for inspection/tests.
  std::vector<std::pair<double, ResourceVector>> breakpoints() const;

 private:
  void ensure_breakpoint(double t);
  void coalesce();

  size_t dims_;
  // key: segment start; value: rate until the next key (zero after the last).
  std::map<double, ResourceVector> segments_;
};

}  // namespace bopf
