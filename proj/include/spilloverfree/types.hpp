#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace spillfree {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Error classes. Each maps to a distinct process exit code in the CLI.
enum class ErrorCode {
  Usage,
  ParseError,
  IOError,
  DimensionMismatch,
  NonFiniteInput,
  AsymmetricInput,
  SingularBlock,
  DegenerateSpectrum,
  NotConjugateClosed,
  ZeroEigenvalue,
  DuplicateEigenvalue,
  MalformedBlocks,
  NoMatch,
  Overlap,
  RankDeficient,
  Singular,
  IllDefined,
  SingularT,
  ConditionViolated,
  NoFeasiblePoint,
  GenerationFailed,
  StructureInfeasible,
  VerificationFailed,
  HashMismatch,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::NotConjugateClosed: return "NotConjugateClosed";
    case ErrorCode::ZeroEigenvalue: return "ZeroEigenvalue";
    case ErrorCode::DuplicateEigenvalue: return "DuplicateEigenvalue";
    case ErrorCode::MalformedBlocks: return "MalformedBlocks";
    case ErrorCode::NoMatch: return "NoMatch";
    case ErrorCode::Overlap: return "Overlap";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::IllDefined: return "IllDefined";
    case ErrorCode::SingularT: return "SingularT";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::NoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::StructureInfeasible: return "StructureInfeasible";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
    case ErrorCode::HashMismatch: return "HashMismatch";
  }
  return "Unknown";
}

/// Process exit code for an error class. 0 is success, 1 is reserved for
/// unexpected failures.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage: return 2;
    case ErrorCode::ParseError: return 3;
    case ErrorCode::IOError: return 4;
    case ErrorCode::DimensionMismatch: return 10;
    case ErrorCode::NonFiniteInput: return 11;
    case ErrorCode::AsymmetricInput: return 12;
    case ErrorCode::SingularBlock: return 13;
    case ErrorCode::DegenerateSpectrum: return 14;
    case ErrorCode::NotConjugateClosed: return 20;
    case ErrorCode::ZeroEigenvalue: return 21;
    case ErrorCode::DuplicateEigenvalue: return 22;
    case ErrorCode::MalformedBlocks: return 23;
    case ErrorCode::NoMatch: return 24;
    case ErrorCode::Overlap: return 25;
    case ErrorCode::RankDeficient: return 30;
    case ErrorCode::Singular: return 31;
    case ErrorCode::IllDefined: return 32;
    case ErrorCode::SingularT: return 33;
    case ErrorCode::ConditionViolated: return 34;
    case ErrorCode::NoFeasiblePoint: return 40;
    case ErrorCode::GenerationFailed: return 50;
    case ErrorCode::StructureInfeasible: return 51;
    case ErrorCode::VerificationFailed: return 60;
    case ErrorCode::HashMismatch: return 61;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Numerical thresholds shared by every module. All values are relative.
struct Tolerances {
  double symmetry = 1e-10;     // accepted asymmetry of input matrices
  double nonsingular = 1e-12;  // min reciprocal condition of M_u, K_phi, Gamma
  double ill_defined = 1e-13;  // min reciprocal condition of any inverse in an update
  double simplicity = 1e-8;    // eigenvalue separation, scaled by the spectral radius
  double rank = 1e-12;         // singular value cutoff, scaled by the largest one
  double match = 1e-6;         // target-to-spectrum matching
  double residual = 1e-10;     // verification of eigen-relations
};

/// One evaluated condition. `value` is a residual for equality conditions and
/// a margin (reciprocal condition, singular value ratio) for nonsingularity ones.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct CheckReport {
  std::vector<Check> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }

  const Check* find(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  void add_at_most(std::string name, double value, double threshold) {
    checks.push_back({std::move(name), value, threshold, value <= threshold});
  }

  void add_at_least(std::string name, double value, double threshold) {
    checks.push_back({std::move(name), value, threshold, value >= threshold});
  }
};

}  // namespace spillfree
