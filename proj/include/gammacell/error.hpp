#pragma once

#include <stdexcept>
#include <string>

namespace gammacell {

// Bad input: malformed config, dimension mismatch, out-of-range parameters.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation could not produce a result (all solver starts failed, ...).
class ComputeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace gammacell
