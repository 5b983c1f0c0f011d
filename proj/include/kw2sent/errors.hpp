#pragma once

#include <stdexcept>
#include <string>

namespace kw2sent {

/// Mismatched operand shapes, non-scalar backward seeds and the like.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Out-of-range ids or positions.
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Masks that leave no real data to operate on.
struct MaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate numerics: zero-norm cosine, NaN decoder state, divergence.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Lifecycle misuse: double backward, missing gradients, consumed tapes.
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed files and invalid data records.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kw2sent
