#pragma once

#include <stdexcept>
#include <string>

namespace fpsi {

enum class ErrorCode {
  Argument,
  Geometry,
  Format,
  MeshInvalid,
  MeshTangled,
  Numeric,
  BcConflict,
  SingularMatrix,
  Io,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace fpsi
