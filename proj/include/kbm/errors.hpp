#pragma once

#include <stdexcept>
#include <string>

namespace kbm {

// chart-domain violations (pole in a polar chart, point outside profile domain)
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// degenerate inputs (zero covector, empty window, too few samples)
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// solver/integrator failures; carries diagnostics in the message
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kbm
