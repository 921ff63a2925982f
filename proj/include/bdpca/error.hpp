#ifndef BDPCA_ERROR_HPP
#define BDPCA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bdpca {

// Values match the status codes exported by the C API in bdpca.h.
enum class ErrorCode : int {
  InvalidInput = 1,
  DomainError = 2,
  NotPsd = 3,
  ConvergenceError = 4,
  PreconditionError = 5,
  CorruptMessage = 6,
  IoError = 7,
  ParseError = 8,
  Timeout = 9,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidInput, what);
}

}  // namespace bdpca

#endif  // BDPCA_ERROR_HPP
