#pragma once

#include <stdexcept>
#include <string>

namespace sobext {

// Exit-code mapping used by the CLI: InputError -> 2, VerificationError -> 1,
// NumericalError -> 3.

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sobext
