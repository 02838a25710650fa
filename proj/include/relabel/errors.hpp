#pragma once

#include <stdexcept>
#include <string>

namespace relabel {

// Base class for everything this library throws.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, schemas, datasets).
struct data_error : error {
  using error::error;
};

// Shape/dimension mismatches between tensors or model components.
struct shape_error : error {
  using error::error;
};

// NaN/Inf encountered in a numeric computation.
struct numeric_error : error {
  using error::error;
};

}  // namespace relabel
