#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wmmd {

enum class Errc {
  EmptyInput,
  NegativeWeight,
  RaggedDimensions,
  NonUnitDirection,
  InvalidArgument,
  DimensionMismatch,
  UnsupportedFamily,
  UnsupportedKernel,
  NonSmoothAtZero,
  SizeGuard,
  NonuniformWeights,
  MismatchedFeatureMap,
  ConstraintViolation,
  DegenerateGrid,
  NonPsdKernel,
  MomentPrecondition,
  OverlappingSupports,
  MismatchedMeans,
  DivergentIntegral,
  SolverFailure,
  Io,
  Parse,
  UnknownFormat,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::RaggedDimensions: return "RaggedDimensions";
    case Errc::NonUnitDirection: return "NonUnitDirection";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::UnsupportedFamily: return "UnsupportedFamily";
    case Errc::UnsupportedKernel: return "UnsupportedKernel";
    case Errc::NonSmoothAtZero: return "NonSmoothAtZero";
    case Errc::SizeGuard: return "SizeGuard";
    case Errc::NonuniformWeights: return "NonuniformWeights";
    case Errc::MismatchedFeatureMap: return "MismatchedFeatureMap";
    case Errc::ConstraintViolation: return "ConstraintViolation";
    case Errc::DegenerateGrid: return "DegenerateGrid";
    case Errc::NonPsdKernel: return "NonPsdKernel";
    case Errc::MomentPrecondition: return "MomentPrecondition";
    case Errc::OverlappingSupports: return "OverlappingSupports";
    case Errc::MismatchedMeans: return "MismatchedMeans";
    case Errc::DivergentIntegral: return "DivergentIntegral";
    case Errc::SolverFailure: return "SolverFailure";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
    case Errc::UnknownFormat: return "UnknownFormat";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report it in a machine-parseable way.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace wmmd
