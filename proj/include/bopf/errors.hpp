#pragma once

#include <stdexcept>
#include <string>

namespace bopf {

// Structural problems: dimension mismatches, duplicate ids, bad file contents.
class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid cluster/experiment configuration (nonpositive capacity, bad policy name, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A queue/burst/job spec that violates its invariants.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bopf
