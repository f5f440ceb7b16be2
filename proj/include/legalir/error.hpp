#pragma once

#include <stdexcept>
#include <string>

namespace legalir {

/// Raised by every module on contract violations and malformed input.
/// `module()` names the owning module so the CLI can report a single
/// machine-parseable line.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace legalir
