#pragma once

#include <string>
#include <vector>

#include "tmsnet/core/hilbert.hpp"

namespace tmsnet::core {

/// Thresholds a density matrix is held to.
struct StateTolerance {
  double hermiticity = 1e-10;
  double trace = 1e-10;
  /// Eigenvalues below -positivity are reported as a warning, not an error.
  double positivity = 1e-8;
};

/// Hermitian, unit-trace state on a declared space. Construction validates
/// Hermiticity and trace (throws ValidationError) and records positivity
/// violations as warnings.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(HilbertSpec space, DenseMat entries, const StateTolerance& tol = {});

  const HilbertSpec& space() const { return space_; }
  const DenseMat& mat() const { return mat_; }
  Index dim() const { return mat_.rows(); }
  double min_eigenvalue() const { return min_eigenvalue_; }
  const Warnings& warnings() const { return warnings_; }

  cplx expectation(const DenseMat& op) const;
  cplx operator()(Index i, Index j) const { return mat_(i, j); }

  static DensityMatrix pure(HilbertSpec space, const CVec& psi);
  static DensityMatrix basis_state(HilbertSpec space, Index index);

 private:
  HilbertSpec space_;
  DenseMat mat_;
  double min_eigenvalue_ = 0.0;
  Warnings warnings_;
};

/// Reduced state on `keep` (ordered as in the parent space).
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

/// Same contraction on an arbitrary (not necessarily physical) operator.
DenseMat partial_trace_matrix(const DenseMat& x, const HilbertSpec& space,
                              const std::vector<std::string>& keep);

/// Kronecker product of dense states in factor order.
DenseMat kron(const DenseMat& a, const DenseMat& b);

}  // namespace tmsnet::core
