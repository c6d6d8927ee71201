#include "cxrlabel/error.hpp"

namespace cxrlabel {

Error::Error(ErrorKind kind, std::string module, std::string code,
             const std::string& message)
    : std::runtime_error(module + ": " + code + ": " + message),
      kind_(kind),
      module_(std::move(module)),
      code_(std::move(code)),
      detail_(message) {}

int exit_code(ErrorKind kind) noexcept { return static_cast<int>(kind); }

}  // namespace cxrlabel
