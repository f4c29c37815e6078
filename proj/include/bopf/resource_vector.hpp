#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace bopf {

// Absolute slack applied to every <= comparison in scheduling conditions.
// Rate divisions (d/t, C/N) leave representation noise; comparisons must not
// flip on the last bit.
inline constexpr double kCompareSlack = 1e-9;

// Slack for feasibility checks on share sums (accumulated over many adds).
inline constexpr double kFeasibilitySlack = 1e-6;

// A K-dimensional nonnegative quantity. Depending on context the components
// are rates (resource units per second: capacities, allocations) or
// cumulative demand (resource * seconds: burst sizes). K is fixed per
// experiment at construction; there is no dynamic resource addition.
class ResourceVector {
 public:
  ResourceVector() = default;
  explicit ResourceVector(size_t k, double fill = 0.0);
  ResourceVector(std::initializer_list<double> values);
  explicit ResourceVector(std::vector<double> values);

  size_t size() const { return values_.size(); }
  double operator[](size_t k) const { return values_[k]; }
  double& operator[](size_t k) { return values_[k]; }
  const std::vector<double>& values() const { return values_; }

  ResourceVector& operator+=(const ResourceVector& o);
  ResourceVector operator+(const ResourceVector& o) const;
  ResourceVector operator*(double s) const;
  ResourceVector operator/(double s) const;

  // Componentwise max(this - o, 0). Sets *underflow if any component of o
  // exceeded this beyond the comparison slack; never produces negatives.
  ResourceVector saturating_sub(const ResourceVector& o, bool* underflow = nullptr) const;

  // Componentwise minimum.
  ResourceVector min(const ResourceVector& o) const;

  // Componentwise partial order: a <= b iff a_k <= b_k + slack for all k.
  bool leq(const ResourceVector& o, double slack = kCompareSlack) const;

  bool is_zero(double eps = kCompareSlack) const;
  double max_component() const;
  double sum() const;

  bool operator==(const ResourceVector& o) const { return values_ == o.values_; }

  std::string to_string() const;

 private:
  void check_dims(const ResourceVector& o) const;
  std::vector<double> values_;
};

// max_k v_k / capacity_k; 0 for the zero vector. Throws ConfigError if any
// capacity component is <= 0.
double dominant_share(const ResourceVector& v, const ResourceVector& capacity);

}  // namespace bopf
