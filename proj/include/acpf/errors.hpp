#pragma once

#include <stdexcept>
#include <string>

namespace acpf {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid scenario/input data. CLI maps this to exit code 2.
class ScenarioError : public Error {
public:
  using Error::Error;
};

// Unrecoverable target execution failure (spawn problems, not bad samples).
// CLI maps this to exit code 3.
class TargetError : public Error {
public:
  using Error::Error;
};

} // namespace acpf
