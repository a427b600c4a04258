#pragma once

#include <optional>
#include <vector>

#include "tmsnet/core/operators.hpp"

namespace tmsnet::core {

/// Column-stacking vectorization: vec(X)[i + d*j] = X(i, j).
CVec vec(const DenseMat& x);
DenseMat unvec(const CVec& v, Index dim);

/// Sparse linear map on column-stacked operators over `space`.
class Superoperator {
 public:
  Superoperator() = default;
  Superoperator(HilbertSpec space, SparseMat mat);

  const HilbertSpec& space() const { return space_; }
  const SparseMat& mat() const { return mat_; }
  Index dim() const { return space_.dim(); }
  Index dim2() const { return mat_.rows(); }

  DenseMat apply(const DenseMat& x) const;

  friend Superoperator operator+(const Superoperator& a, const Superoperator& b);
  friend Superoperator operator*(double s, const Superoperator& a);

 private:
  HilbertSpec space_;
  SparseMat mat_;
};

/// Superoperators for X -> A X, X -> X B.
Superoperator left_multiply(const OperatorMatrix& a);
Superoperator right_multiply(const OperatorMatrix& b);

/// D[A,B] X = A X B - (B A X + X B A) / 2.
Superoperator dissipator(const OperatorMatrix& a, const OperatorMatrix& b);

struct LindbladTerm {
  double rate = 0.0;
  OperatorMatrix a;
  OperatorMatrix b;
};

/// -i[H, .] + sum_k rate_k D[A_k, B_k].
Superoperator assemble_liouvillian(const std::optional<OperatorMatrix>& hamiltonian,
                                   const std::vector<LindbladTerm>& terms,
                                   const std::optional<HilbertSpec>& space = std::nullopt);

/// Largest |(Tr o L)_j|, i.e. how far the vectorized identity is from a left null vector.
double trace_annihilation_defect(const Superoperator& l);

/// Smallest index set containing `seeds` that the generator maps into itself
/// (closure of the directed sparsity graph column -> rows). Sorted ascending.
std::vector<Index> invariant_closure(const SparseMat& generator, const std::vector<Index>& seeds);

/// Square restriction of `m` to a (sorted) index set.
SparseMat restrict_to(const SparseMat& m, const std::vector<Index>& indices);

/// Vec indices of the diagonal entries |i><i|.
std::vector<Index> diagonal_indices(Index dim);

}  // namespace tmsnet::core
