#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsym {

/// Invalid option combination or parameter outside its admissible range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel specification violating 0 < r0 <= R0, 0 < m0 <= M0.
class SpecError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Grid spacing too coarse to resolve the kernel's inner plateau.
class ResolutionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Field file could not be parsed; offset() is the byte where parsing failed.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Input outside the mathematical domain of an operation (empty window, psi <= 0, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver gave up; history() holds the residual per iteration.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace nlsym
