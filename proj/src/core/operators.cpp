#include "tmsnet/core/operators.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace tmsnet::core {

OperatorMatrix::OperatorMatrix(HilbertSpec space, SparseMat mat)
    : space_(std::move(space)), mat_(std::move(mat)) {
  if (mat_.rows() != mat_.cols()) throw ValidationError("OperatorMatrix: matrix is not square");
  if (mat_.rows() != space_.dim()) {
    throw ValidationError("OperatorMatrix: matrix dimension " + std::to_string(mat_.rows()) +
                          " does not match space dimension " + std::to_string(space_.dim()));
  }
  mat_.makeCompressed();
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return OperatorMatrix(space_, SparseMat(mat_.adjoint()));
}

void require_same_space(const HilbertSpec& a, const HilbertSpec& b, const char* where) {
  if (!(a == b)) throw ValidationError(std::string(where) + ": operators live on different spaces");
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a.space_, b.space_, "operator*");
  return OperatorMatrix(a.space_, SparseMat(a.mat_ * b.mat_));
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a.space_, b.space_, "operator+");
  return OperatorMatrix(a.space_, SparseMat(a.mat_ + b.mat_));
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a.space_, b.space_, "operator-");
  return OperatorMatrix(a.space_, SparseMat(a.mat_ - b.mat_));
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a) {
  return OperatorMatrix(a.space_, SparseMat(s * a.mat_));
}

OperatorMatrix embed_operator(const SparseMat& local_op, std::string_view label,
                              const HilbertSpec& space) {
  const auto pos = space.position(label);
  const auto& factors = space.factors();
  if (local_op.rows() != factors[pos].dim || local_op.cols() != factors[pos].dim) {
    throw ValidationError("embed_operator: local operator dimension does not match factor '" +
                          std::string(label) + "'");
  }
  SparseMat out = local::identity(1);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const SparseMat piece = (k == pos) ? local_op : local::identity(factors[k].dim);
    SparseMat next = Eigen::kroneckerProduct(out, piece);
    out = std::move(next);
  }
  out.prune(cplx(0.0));
  return OperatorMatrix(space, std::move(out));
}

OperatorMatrix identity(const HilbertSpec& space) {
  return OperatorMatrix(space, local::identity(static_cast<int>(space.dim())));
}

namespace local {

SparseMat annihilation(int n) {
  SparseMat a(n, n);
  for (int k = 1; k < n; ++k) a.insert(k - 1, k) = std::sqrt(static_cast<double>(k));
  a.makeCompressed();
  return a;
}

SparseMat identity(int n) {
  SparseMat id(n, n);
  id.setIdentity();
  return id;
}

namespace {
SparseMat two_by_two(cplx m00, cplx m01, cplx m10, cplx m11) {
  SparseMat m(2, 2);
  if (m00 != 0.0) m.insert(0, 0) = m00;
  if (m01 != 0.0) m.insert(0, 1) = m01;
  if (m10 != 0.0) m.insert(1, 0) = m10;
  if (m11 != 0.0) m.insert(1, 1) = m11;
  m.makeCompressed();
  return m;
}
}  // namespace

SparseMat sigma_minus() { return two_by_two(0.0, 1.0, 0.0, 0.0); }
SparseMat sigma_plus() { return two_by_two(0.0, 0.0, 1.0, 0.0); }
SparseMat sigma_z() { return two_by_two(-1.0, 0.0, 0.0, 1.0); }
SparseMat sigma_x() { return two_by_two(0.0, 1.0, 1.0, 0.0); }
SparseMat sigma_y() { return two_by_two(0.0, kI, -kI, 0.0); }

}  // namespace local

}  // namespace tmsnet::core
