#pragma once

#include <stdexcept>
#include <string>

namespace funres {

enum class ErrorCode {
  InvalidArgument = 1,
  Io,
  Parse,
  UnknownColumn,
  RankDeficient,
  Separation,
  NotConverged,
  UnsupportedFamily,
  Domain,
  EmptyInput,
  UnknownScenario,
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

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace funres
