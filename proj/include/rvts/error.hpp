#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvts {

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes, so keep the hierarchy flat and the names stable.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RVTS_DECLARE_ERROR(Name)           \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

RVTS_DECLARE_ERROR(OriginPoint);
RVTS_DECLARE_ERROR(BracketFailure);
RVTS_DECLARE_ERROR(ShapeMismatch);
RVTS_DECLARE_ERROR(InvalidParameter);
RVTS_DECLARE_ERROR(NoClosedForm);
RVTS_DECLARE_ERROR(ContractViolation);
RVTS_DECLARE_ERROR(SupportViolation);
RVTS_DECLARE_ERROR(NoExceedances);
RVTS_DECLARE_ERROR(InsufficientData);
RVTS_DECLARE_ERROR(NonPositiveThreshold);
RVTS_DECLARE_ERROR(IoError);
RVTS_DECLARE_ERROR(UnknownSuite);

#undef RVTS_DECLARE_ERROR

// Config problems carry the offending line (0 when not tied to a line) and
// the dotted field name.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what, std::size_t line = 0)
      : Error(format(field, what, line)), field_(field), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& what, std::size_t line) {
    std::string msg = "config error";
    if (line != 0) msg += " at line " + std::to_string(line);
    if (!field.empty()) msg += " [" + field + "]";
    return msg + ": " + what;
  }

  std::string field_;
  std::size_t line_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("parse error at row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Wraps a module error raised while executing a CLI task.
class TaskError : public Error {
 public:
  TaskError(const std::string& task, const std::string& what)
      : Error("task '" + task + "' failed: " + what), task_(task) {}
  const std::string& task() const noexcept { return task_; }

 private:
  std::string task_;
};

}  // namespace rvts
