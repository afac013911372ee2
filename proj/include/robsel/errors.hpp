#pragma once

#include <stdexcept>
#include <string>

namespace robsel {

// Pair or alternative index outside the problem dimensions.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed caller input: non-finite observations, bad dimensions, etc.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Posterior state cannot support the requested operation (NaN means,
// undefined posteriors).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unique worst-case scenario / unique worst-case best does not hold.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A radius or balance term has a zero denominator or zero support.
class DegenerateState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A documented precondition of an allocation rule is not met.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robsel
