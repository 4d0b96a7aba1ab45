#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace amulap {

enum class ErrorKind {
  parse,
  label,
  capacity,
  template_syntax,
  compatibility,
  validation,
  coverage,
  shape,
  selection,
  scoring,
  search,
  arity,
  config,
  path,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported as amulap::Error; `kind` lets callers
// (the CLI in particular) map failures to exit codes without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace amulap
