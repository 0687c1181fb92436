#ifndef KAP_ERROR_HPP
#define KAP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace kap {

enum class ErrorKind {
  NonPositiveDensity,
  InvalidMoments,
  SolveFailure,
  QuadratureUnconverged,
  GridMismatch,
  GridIncompatible,
  VacuumState,
  LinearSolveFailure,
  NegativeMass,
  SchemaMismatch,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorKind::InvalidMoments: return "InvalidMoments";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::QuadratureUnconverged: return "QuadratureUnconverged";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::GridIncompatible: return "GridIncompatible";
    case ErrorKind::VacuumState: return "VacuumState";
    case ErrorKind::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorKind::NegativeMass: return "NegativeMass";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kap

#endif  // KAP_ERROR_HPP
