#pragma once

#include <stdexcept>
#include <string>

namespace operatrack {

/// Malformed or out-of-range input data (files, annotations, feature frames).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or call-site misuse (bad parameters, wrong mode).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace operatrack
