#pragma once

#include <stdexcept>
#include <string>

namespace vecmotif {

// Exit-status classes used by the CLI: I/O and format problems map to 1,
// precondition and domain violations map to 2.
enum class ErrorKind { io, format, validation, argument, domain };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  const char* kind_name() const noexcept {
    switch (kind_) {
      case ErrorKind::io: return "io";
      case ErrorKind::format: return "format";
      case ErrorKind::validation: return "validation";
      case ErrorKind::argument: return "argument";
      case ErrorKind::domain: return "domain";
    }
    return "unknown";
  }

  int exit_code() const noexcept {
    return (kind_ == ErrorKind::argument || kind_ == ErrorKind::domain) ? 2 : 1;
  }

 private:
  ErrorKind kind_;
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error(ErrorKind::argument, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};

}  // namespace vecmotif
