#include "bopf/resource_vector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bopf/errors.hpp"

namespace bopf {

ResourceVector::ResourceVector(size_t k, double fill) : values_(k, fill) {}

ResourceVector::ResourceVector(std::initializer_list<double> values) : values_(values) {}

ResourceVector::ResourceVector(std::vector<double> values) : values_(std::move(values)) {}

void ResourceVector::check_dims(const ResourceVector& o) const {
  if (values_.size() != o.values_.size()) {
    throw StructuralError("resource vector dimension mismatch: " +
                          std::to_string(values_.size()) + " vs " +
                          std::to_string(o.values_.size()));
  }
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& o) {
  check_dims(o);
  for (size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

ResourceVector ResourceVector::operator+(const ResourceVector& o) const {
  ResourceVector r = *this;
  r += o;
  return r;
}

ResourceVector ResourceVector::operator*(double s) const {
  ResourceVector r = *this;
  for (double& v : r.values_) v *= s;
  return r;
}

ResourceVector ResourceVector::operator/(double s) const {
  ResourceVector r = *this;
  for (double& v : r.values_) v /= s;
  return r;
}

ResourceVector ResourceVector::saturating_sub(const ResourceVector& o, bool* underflow) const {
  check_dims(o);
  ResourceVector r(values_.size());
  bool under = false;
  for (size_t k = 0; k < values_.size(); ++k) {
    double d = values_[k] - o.values_[k];
    if (d < -kCompareSlack) under = true;
    r.values_[k] = std::max(d, 0.0);
  }
  if (underflow) *underflow = under;
  return r;
}

ResourceVector ResourceVector::min(const ResourceVector& o) const {
  check_dims(o);
  ResourceVector r(values_.size());
  for (size_t k = 0; k < values_.size(); ++k) r.values_[k] = std::min(values_[k], o.values_[k]);
  return r;
}

bool ResourceVector::leq(const ResourceVector& o, double slack) const {
  check_dims(o);
  for (size_t k = 0; k < values_.size(); ++k) {
    if (values_[k] > o.values_[k] + slack) return false;
  }
  return true;
}

bool ResourceVector::is_zero(double eps) const {
  return std::all_of(values_.begin(), values_.end(), [eps](double v) { return std::abs(v) <= eps; });
}

double ResourceVector::max_component() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double ResourceVector::sum() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

std::string ResourceVector::to_string() const {
  std::ostringstream os;
  os << "<";
  for (size_t k = 0; k < values_.size(); ++k) {
    if (k) os << ",";
    os << values_[k];
  }
  os << ">";
  return os.str();
}

double dominant_share(const ResourceVector& v, const ResourceVector& capacity) {
  if (v.size() != capacity.size()) {
    throw StructuralError("dominant_share: dimension mismatch");
  }
  double share = 0.0;
  for (size_t k = 0; k < v.size(); ++k) {
    if (capacity[k] <= 0.0) {
      throw ConfigError("dominant_share: capacity component " + std::to_string(k) +
                        " must be strictly positive");
    }
    share = std::max(share, v[k] / capacity[k]);
  }
  return share;
}

}  // namespace bopf
