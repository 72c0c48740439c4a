#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abmhedge {

/// A parameter lies outside its admissible domain (e.g. |rho| > 1).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An input value lies outside the domain of a function (e.g. a nonpositive price).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Not enough observations to compute a statistic.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The input is degenerate for the requested statistic (zero variance, single symbol, ...).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or weights document.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hedging episode was stepped past maturity.
class EpisodeFinishedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A simulated path produced a non-finite state.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::size_t path, std::size_t step)
      : std::runtime_error(what + " (path " + std::to_string(path) + ", step " +
                           std::to_string(step) + ")"),
        path_(path),
        step_(step) {}

  std::size_t path() const noexcept { return path_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

}  // namespace abmhedge
