#pragma once

#include <stdexcept>

namespace escape_lab {

struct InitOutsideDomain : std::domain_error {
  using std::domain_error::domain_error;
};

struct EmptyInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonPositiveZ : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoEscape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateRegime : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoCycleFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace escape_lab
