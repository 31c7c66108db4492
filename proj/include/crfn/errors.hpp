#pragma once

#include <stdexcept>
#include <string>

namespace crfn {

// Bad user input: config files, duplicate names, missing files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes incompatible with an operation.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse: stepping a finished episode, non-scalar backward root, ...
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Map / scenario / record contents violate their schema.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss).
struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace crfn
