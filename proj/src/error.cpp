#include "nvf/error.hpp"

namespace nvf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::contract: return "contract";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::training: return "training";
    case ErrorKind::edit: return "edit";
    case ErrorKind::optimizer: return "optimizer";
  }
  return "unknown";
}

}  // namespace nvf
