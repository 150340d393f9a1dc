#pragma once

#include <stdexcept>
#include <string>

namespace ibgp {

// Raised for malformed or inconsistent configuration: bad parameter ranges,
// schema violations in scenario files, shape mismatches between inputs.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an exhaustive computation would exceed its execution budget.
// Callers are expected to surface this as a refusal, not a crash.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, unsigned long long required,
              unsigned long long budget)
      : std::runtime_error(what), required_(required), budget_(budget) {}

  unsigned long long required() const { return required_; }
  unsigned long long budget() const { return budget_; }

 private:
  unsigned long long required_;
  unsigned long long budget_;
};

}  // namespace ibgp
