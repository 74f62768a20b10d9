#pragma once

#include <stdexcept>
#include <string>

namespace swarm {

/// Malformed input: bad scenario field, bad game file, empty skill name.
/// Message carries the field path where one exists.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter outside its configured operating range (e.g. puzzle
/// difficulty above the cap).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact computation requested beyond the tractable coalition size.
class TractabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Routing had nothing to route to.
class NoCandidateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swarm
