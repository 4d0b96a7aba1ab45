#include "amulap/error.hpp"

namespace amulap {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::label: return "label error";
    case ErrorKind::capacity: return "capacity error";
    case ErrorKind::template_syntax: return "template error";
    case ErrorKind::compatibility: return "compatibility error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::coverage: return "coverage error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::selection: return "selection error";
    case ErrorKind::scoring: return "scoring error";
    case ErrorKind::search: return "search error";
    case ErrorKind::arity: return "arity error";
    case ErrorKind::config: return "config error";
    case ErrorKind::path: return "path error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace amulap
