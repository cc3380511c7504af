#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace remest {

enum class Errc {
  InvalidArgument,
  ZeroProbabilityRegion,
  DegenerateRegion,
  InfeasibleShift,
  SignMismatch,
  ProtocolViolation,
  UnsupportedBoundary,
  TargetOutOfRange,
  NonConvergence,
  PartitionError,
  CounterexampleOutOfRange,
  TableNotFilled,
  IndexOutOfRange,
  InvariantViolation,
};

constexpr std::string_view to_string(Errc e) noexcept {
  switch (e) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ZeroProbabilityRegion: return "ZeroProbabilityRegion";
    case Errc::DegenerateRegion: return "DegenerateRegion";
    case Errc::InfeasibleShift: return "InfeasibleShift";
    case Errc::SignMismatch: return "SignMismatch";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::UnsupportedBoundary: return "UnsupportedBoundary";
    case Errc::TargetOutOfRange: return "TargetOutOfRange";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::PartitionError: return "PartitionError";
    case Errc::CounterexampleOutOfRange: return "CounterexampleOutOfRange";
    case Errc::TableNotFilled: return "TableNotFilled";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace remest
