#include "nudgelab/error.hpp"

namespace nudgelab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::usage: return "usage";
    case ErrorKind::input: return "input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::validation: return "validation";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace nudgelab
