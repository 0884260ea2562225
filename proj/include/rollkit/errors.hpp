#pragma once

#include <stdexcept>
#include <string>

namespace rollkit {

// Raised when a point leaves the region where a chart's frame is defined.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an integrator drifts too far from the constraint set to be repaired.
class IntegrationError : public std::runtime_error {
 public:
  explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rollkit
