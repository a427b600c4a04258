#include "tmsnet/core/density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace tmsnet::core {

DensityMatrix::DensityMatrix(HilbertSpec space, DenseMat entries, const StateTolerance& tol)
    : space_(std::move(space)), mat_(std::move(entries)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() != space_.dim()) {
    throw ValidationError("DensityMatrix: entries do not match the space dimension");
  }
  const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.hermiticity) {
    std::ostringstream msg;
    msg << "DensityMatrix: not Hermitian (max |rho - rho^dag| = " << herm << ")";
    throw ValidationError(msg.str());
  }
  const double tr_err = std::abs(mat_.trace() - 1.0);
  if (tr_err > tol.trace) {
    std::ostringstream msg;
    msg << "DensityMatrix: trace deviates from 1 by " << tr_err;
    throw ValidationError(msg.str());
  }
  // Symmetrize away the sub-tolerance anti-Hermitian noise before the eigen solve.
  DenseMat h = 0.5 * (mat_ + mat_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMat> es(h, Eigen::EigenvaluesOnly);
  min_eigenvalue_ = es.eigenvalues().minCoeff();
  if (min_eigenvalue_ < -tol.positivity) {
    std::ostringstream msg;
    msg << "state has a negative eigenvalue " << min_eigenvalue_
        << " beyond the truncation noise floor";
    warnings_.push_back({"positivity", msg.str(), min_eigenvalue_});
  }
}

cplx DensityMatrix::expectation(const DenseMat& op) const {
  if (op.rows() != dim() || op.cols() != dim()) throw ValidationError("expectation: shape");
  return (op.transpose().cwiseProduct(mat_)).sum();
}

DensityMatrix DensityMatrix::pure(HilbertSpec space, const CVec& psi) {
  const CVec n = psi / psi.norm();
  return DensityMatrix(std::move(space), n * n.adjoint());
}

DensityMatrix DensityMatrix::basis_state(HilbertSpec space, Index index) {
  DenseMat m = DenseMat::Zero(space.dim(), space.dim());
  if (index < 0 || index >= space.dim()) throw ValidationError("basis_state: index out of range");
  m(index, index) = 1.0;
  return DensityMatrix(std::move(space), std::move(m));
}

DenseMat partial_trace_matrix(const DenseMat& x, const HilbertSpec& space,
                              const std::vector<std::string>& keep) {
  const HilbertSpec reduced = space.subspace(keep);
  const std::size_t nf = space.size();
  std::vector<char> kept(nf, 0);
  for (std::size_t k = 0; k < nf; ++k) kept[k] = reduced.contains(space.factors()[k].label);

  // Composite index -> (kept index, traced index).
  const Index d = space.dim();
  std::vector<Index> keep_idx(static_cast<std::size_t>(d)), trace_idx(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    const auto dig = space.digits(i);
    Index ki = 0, ti = 0;
    for (std::size_t k = 0; k < nf; ++k) {
      const int fd = space.factors()[k].dim;
      if (kept[k]) {
        ki = ki * fd + dig[k];
      } else {
        ti = ti * fd + dig[k];
      }
    }
    keep_idx[i] = ki;
    trace_idx[i] = ti;
  }
  DenseMat out = DenseMat::Zero(reduced.dim(), reduced.dim());
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) {
      if (trace_idx[i] == trace_idx[j]) out(keep_idx[i], keep_idx[j]) += x(i, j);
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  DenseMat red = partial_trace_matrix(rho.mat(), rho.space(), keep);
  // Accumulated rounding grows with the traced dimension.
  StateTolerance tol;
  tol.hermiticity = 1e-9;
  tol.trace = 1e-9;
  return DensityMatrix(rho.space().subspace(keep), std::move(red), tol);
}

DenseMat kron(const DenseMat& a, const DenseMat& b) {
  DenseMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace tmsnet::core
