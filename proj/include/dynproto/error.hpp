#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynproto {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  InvalidConfig,
  EmptyInput,
  OutOfRange,
  ClassOutOfRange,
  SeedOverflow,
  MissingAlpha,
  MissingClass,
  DetectorInputMissing,
  InsufficientData,
  InsufficientPool,
  DatasetNotFound,
  BadMagic,
  TruncatedPayload,
  UnsupportedVersion,
  InvalidSpec,
  IOFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::SeedOverflow: return "SeedOverflow";
    case ErrorCode::MissingAlpha: return "MissingAlpha";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::DetectorInputMissing: return "DetectorInputMissing";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::DatasetNotFound: return "DatasetNotFound";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dynproto
