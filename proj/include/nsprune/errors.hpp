#pragma once

#include <stdexcept>
#include <string>

namespace nsprune {

// Bad input: malformed files, violated data invariants, unusable arguments.
// CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal soundness violation (a state the pipeline must never reach).
// CLI maps this to exit code 3.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nsprune
