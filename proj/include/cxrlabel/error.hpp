#pragma once

#include <stdexcept>
#include <string>

namespace cxrlabel {

// Coarse failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,
  input = 2,
  compute = 3,
  transport = 4,
};

/// Base exception for every module. `code` is a stable kebab-case reason
/// ("schema-invalid", "malformed-age", ...) suitable for reject files.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string code,
        const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string code_;
  std::string detail_;
};

int exit_code(ErrorKind kind) noexcept;

}  // namespace cxrlabel
