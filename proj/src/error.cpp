#include "fzip/error.hpp"

namespace fzip {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::CorruptStream: return "corrupt stream";
    case ErrorKind::NotAnArchive: return "not an archive";
    case ErrorKind::CorruptArchive: return "corrupt archive";
    case ErrorKind::UnsupportedVersion: return "unsupported version";
    case ErrorKind::ModelMismatch: return "model mismatch";
    case ErrorKind::ExternalTool: return "external tool error";
    case ErrorKind::RemotePredictor: return "remote predictor error";
    case ErrorKind::UndefinedRatio: return "undefined ratio";
  }
  return "error";
}

}  // namespace fzip
