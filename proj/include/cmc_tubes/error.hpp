#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmc {

enum class ErrorCode {
  NonPositiveDefinite,
  GridMismatch,
  OutOfChart,
  Degenerate,
  Resonant,
  BlockViolation,
  DegenerateGeodesic,
  BallEscape,
  NoConvergence,
  FoliationViolation,
  NotConverged,
  NullityPresent,
  QuadratureFailure,
  HypothesisViolation,
  ConfigParse,
  ModelParse,
  ContractViolation,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::Resonant: return "Resonant";
    case ErrorCode::BlockViolation: return "BlockViolation";
    case ErrorCode::DegenerateGeodesic: return "DegenerateGeodesic";
    case ErrorCode::BallEscape: return "BallEscape";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::FoliationViolation: return "FoliationViolation";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NullityPresent: return "NullityPresent";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::HypothesisViolation: return "HypothesisViolation";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::ModelParse: return "ModelParse";
    case ErrorCode::ContractViolation: return "ContractViolation";
  }
  return "Unknown";
}

/// Library error. `what()` starts with the error name so the CLI can print it as-is.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& detail) {
  if (!condition) throw Error(code, detail);
}

}  // namespace cmc
