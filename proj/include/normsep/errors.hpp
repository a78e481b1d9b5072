#pragma once

#include <stdexcept>
#include <string>

namespace normsep {

// Malformed input: bad descriptor, wrong vector length, out-of-range parameter.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Mathematically undefined request, e.g. the gradient of a norm at the origin.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// The space lacks a capability the operation needs.
class UnsupportedError : public std::runtime_error {
 public:
  UnsupportedError(const std::string& capability, const std::string& what)
      : std::runtime_error(what), capability_(capability) {}
  const std::string& capability() const noexcept { return capability_; }

 private:
  std::string capability_;
};

// A stochastic procedure exceeded its hard work cap.
class DiagnosticError : public std::runtime_error {
 public:
  explicit DiagnosticError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace normsep
