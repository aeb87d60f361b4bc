#pragma once

#include <stdexcept>
#include <string>

namespace pnn {

// Matrix/layer dimension mismatches.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or rejected experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training loss became non-finite or blew past the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch(epoch) {}
  std::size_t epoch;
};

// Rank-deficient least-squares design.
class SingularFitError : public std::runtime_error {
 public:
  explicit SingularFitError(const std::string& what) : std::runtime_error(what) {}
};

// File/serialization failures and missing stage inputs.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pnn
