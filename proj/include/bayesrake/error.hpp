#pragma once

#include <stdexcept>
#include <string>

namespace bayesrake {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input files, unknown labels, malformed configs.
struct ParseError : Error {
  using Error::Error;
};

// A margin constraint that no nonnegative table can satisfy given the
// observed sample support (e.g. positive target, all contributing cells empty).
struct InfeasibleError : Error {
  using Error::Error;
};

// Sampler could not find a state with finite log density.
struct InitError : Error {
  using Error::Error;
};

}  // namespace bayesrake
