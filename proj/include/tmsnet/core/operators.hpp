#pragma once

#include <string_view>

#include "tmsnet/core/hilbert.hpp"

namespace tmsnet::core {

/// A square operator on a declared tensor-product space.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(HilbertSpec space, SparseMat mat);

  const HilbertSpec& space() const { return space_; }
  const SparseMat& mat() const { return mat_; }
  Index dim() const { return mat_.rows(); }

  OperatorMatrix adjoint() const;
  DenseMat dense() const { return DenseMat(mat_); }

  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a);

 private:
  HilbertSpec space_;
  SparseMat mat_;
};

void require_same_space(const HilbertSpec& a, const HilbertSpec& b, const char* where);

/// identity (x) ... (x) local (x) ... (x) identity, with `local` placed on `label`.
OperatorMatrix embed_operator(const SparseMat& local, std::string_view label,
                              const HilbertSpec& space);

OperatorMatrix identity(const HilbertSpec& space);

namespace local {

/// Truncated bosonic annihilation operator on {|0>, ..., |n-1>}.
SparseMat annihilation(int n);
SparseMat identity(int n);
/// Qubit operators in the basis (|0>, |1>): sigma^- = |0><1|, sigma^z = |1><1| - |0><0|,
/// and sigma^+ = (sigma^x + i sigma^y) / 2.
SparseMat sigma_minus();
SparseMat sigma_plus();
SparseMat sigma_z();
SparseMat sigma_x();
SparseMat sigma_y();

}  // namespace local

}  // namespace tmsnet::core
