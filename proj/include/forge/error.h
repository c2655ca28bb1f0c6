#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Every failure raised by the library. The message names the offending input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by FeatureIndex and the embedding/phrase tables on unknown keys.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace forge
