#include "bfly/error.hpp"

namespace bfly {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyWeights: return "EmptyWeights";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::LaneOutOfRange: return "LaneOutOfRange";
    case ErrorCode::MaskOutOfRange: return "MaskOutOfRange";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::StopOutOfRange: return "StopOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::WordIdOutOfRange: return "WordIdOutOfRange";
    case ErrorCode::DegenerateBins: return "DegenerateBins";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace bfly
