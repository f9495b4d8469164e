#pragma once

#include <stdexcept>
#include <string>

namespace bitrans {

/// A caller broke a documented precondition (shape mismatch, stale cache, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical or I/O failure while running an otherwise valid request.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or input document. `field()` names the offending key.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {
[[noreturn]] inline void contract_fail(const std::string& what) { throw ContractViolation(what); }
}  // namespace detail

#define BITRANS_EXPECT(cond, msg)                                  \
  do {                                                             \
    if (!(cond)) ::bitrans::detail::contract_fail(std::string(msg)); \
  } while (0)

}  // namespace bitrans
