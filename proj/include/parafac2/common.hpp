#ifndef PARAFAC2_COMMON_HPP_
#define PARAFAC2_COMMON_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace parafac2 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  EmptyInput,
  RowMismatch,
  NonFiniteEntry,
  ShapeMismatch,
  ConvergenceFailure,
  AsymmetricInput,
  ApproximationOutOfRange,
  RejectionBudgetExceeded,
  ModelOrderTooLarge,
  DegenerateData,
  ZeroDataNorm,
  SingularDesign,
  CovarianceNotPD,
  NonFiniteElbo,
  NonMonotoneElbo,
  AllRestartsFailed,
  ZeroSignal,
  ManifestMissing,
  SchemaVersionUnsupported,
  ParseError,
  VariantMismatch,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RowMismatch: return "RowMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::ApproximationOutOfRange: return "ApproximationOutOfRange";
    case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorCode::ModelOrderTooLarge: return "ModelOrderTooLarge";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::ZeroDataNorm: return "ZeroDataNorm";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::CovarianceNotPD: return "CovarianceNotPD";
    case ErrorCode::NonFiniteElbo: return "NonFiniteElbo";
    case ErrorCode::NonMonotoneElbo: return "NonMonotoneElbo";
    case ErrorCode::AllRestartsFailed: return "AllRestartsFailed";
    case ErrorCode::ZeroSignal: return "ZeroSignal";
    case ErrorCode::ManifestMissing: return "ManifestMissing";
    case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::VariantMismatch: return "VariantMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace parafac2

#endif  // PARAFAC2_COMMON_HPP_
