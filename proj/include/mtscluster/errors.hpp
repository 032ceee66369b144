#pragma once

#include <stdexcept>
#include <string>

namespace mtscluster {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad files, malformed rows, violated preconditions, invalid configs.
struct input_error : error {
  using error::error;
};

/// Numerical failures: PSD check violations, non-finite intermediates,
/// objective traces that increase beyond tolerance.
struct numerical_error : error {
  using error::error;
};

/// Degenerate data or clustering states: identical cohorts, coincident
/// representatives, silhouette on fewer than two populated clusters.
struct degenerate_error : error {
  using error::error;
};

}  // namespace mtscluster
