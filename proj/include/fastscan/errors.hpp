// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#pragma once

#include <stdexcept>
#include <string>

namespace fastscan {

// Raised when tensor extents disagree with what an operation requires.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a value lies outside an operation's mathematical domain
// (non-positive step sizes, masking ratios outside [0, 1), ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weight directories whose manifest does not match the requested model.
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fastscan
