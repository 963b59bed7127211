#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netpol {

// Bad input or violated precondition. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A well-formed request that cannot be computed. The CLI maps this to exit code 3.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroProbabilityEvent : public ComputationError {
 public:
  explicit ZeroProbabilityEvent(const std::string& event)
      : ComputationError("zero-probability event: " + event), event_(event) {}

  const std::string& event() const noexcept { return event_; }

 private:
  std::string event_;
};

class EnumerationTooLarge : public ComputationError {
 public:
  EnumerationTooLarge(std::size_t n, std::size_t cap)
      : ComputationError("enumeration too large: n=" + std::to_string(n) +
                         " exceeds cap " + std::to_string(cap)),
        n_(n),
        cap_(cap) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t n_;
  std::size_t cap_;
};

}  // namespace netpol
