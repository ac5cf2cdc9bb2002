#include "homlab/error.hpp"

namespace homlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotMeanZero: return "NotMeanZero";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EnsembleTooSmall: return "EnsembleTooSmall";
    case ErrorCode::ZeroFrequency: return "ZeroFrequency";
    case ErrorCode::InconsistentProbes: return "InconsistentProbes";
    case ErrorCode::InsufficientProbes: return "InsufficientProbes";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace homlab
