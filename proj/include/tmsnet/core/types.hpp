#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace tmsnet {

using cplx = std::complex<double>;
using Index = Eigen::Index;

/// Column-major sparse complex matrix; every superoperator acts on column-stacked
/// density operators, vec(A X B) = (B^T (x) A) vec(X).
using SparseMat = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
using DenseMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Bad input: out-of-range parameters, unknown labels, shape mismatches.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical method failed to produce an answer within its budget.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested problem size exceeds a configured memory ceiling.
class ResourceGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostic attached to a result (positivity noise, truncation leakage, ...).
struct Warning {
  std::string code;
  std::string message;
  double value = 0.0;
};

using Warnings = std::vector<Warning>;

}  // namespace tmsnet
