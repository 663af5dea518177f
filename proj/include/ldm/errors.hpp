#pragma once

#include <stdexcept>
#include <string>

namespace ldm {

/// Bad user input: malformed documents, out-of-range indices, NaN cells.
/// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal cross-check failed (e.g. two evaluation paths disagree).
/// The CLI maps this to exit code 1.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ldm
