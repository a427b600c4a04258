#include "tmsnet/core/superoperator.hpp"

#include <algorithm>

#include <unsupported/Eigen/KroneckerProduct>

namespace tmsnet::core {

CVec vec(const DenseMat& x) { return Eigen::Map<const CVec>(x.data(), x.size()); }

DenseMat unvec(const CVec& v, Index dim) {
  if (v.size() != dim * dim) throw ValidationError("unvec: length is not dim^2");
  return Eigen::Map<const DenseMat>(v.data(), dim, dim);
}

Superoperator::Superoperator(HilbertSpec space, SparseMat mat)
    : space_(std::move(space)), mat_(std::move(mat)) {
  const Index d = space_.dim();
  if (mat_.rows() != d * d || mat_.cols() != d * d) {
    throw ValidationError("Superoperator: matrix is not dim^2 x dim^2");
  }
  mat_.makeCompressed();
}

DenseMat Superoperator::apply(const DenseMat& x) const {
  if (x.rows() != dim() || x.cols() != dim()) throw ValidationError("Superoperator::apply: shape");
  CVec out = mat_ * vec(x);
  return unvec(out, dim());
}

Superoperator operator+(const Superoperator& a, const Superoperator& b) {
  require_same_space(a.space_, b.space_, "Superoperator+");
  return Superoperator(a.space_, SparseMat(a.mat_ + b.mat_));
}

Superoperator operator*(double s, const Superoperator& a) {
  return Superoperator(a.space_, SparseMat(s * a.mat_));
}

Superoperator left_multiply(const OperatorMatrix& a) {
  const auto id = local::identity(static_cast<int>(a.dim()));
  return Superoperator(a.space(), Eigen::kroneckerProduct(id, a.mat()).eval());
}

Superoperator right_multiply(const OperatorMatrix& b) {
  const auto id = local::identity(static_cast<int>(b.dim()));
  SparseMat bt = b.mat().transpose();
  return Superoperator(b.space(), Eigen::kroneckerProduct(bt, id).eval());
}

namespace {

// Accumulates rate * D[A,B] into `out` without materializing intermediate superoperators.
void add_dissipator(SparseMat& out, double rate, const SparseMat& a, const SparseMat& b) {
  const Index d = a.rows();
  const auto id = local::identity(static_cast<int>(d));
  const SparseMat ba = b * a;
  SparseMat bt = b.transpose();
  SparseMat bat = ba.transpose();
  SparseMat jump = Eigen::kroneckerProduct(bt, a);
  SparseMat pre = Eigen::kroneckerProduct(id, ba);
  SparseMat post = Eigen::kroneckerProduct(bat, id);
  out += cplx(rate) * jump;
  out -= cplx(0.5 * rate) * pre;
  out -= cplx(0.5 * rate) * post;
}

}  // namespace

Superoperator dissipator(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a.space(), b.space(), "dissipator");
  const Index d = a.dim();
  SparseMat out(d * d, d * d);
  add_dissipator(out, 1.0, a.mat(), b.mat());
  out.prune(cplx(0.0));
  return Superoperator(a.space(), std::move(out));
}

Superoperator assemble_liouvillian(const std::optional<OperatorMatrix>& hamiltonian,
                                   const std::vector<LindbladTerm>& terms,
                                   const std::optional<HilbertSpec>& space) {
  std::optional<HilbertSpec> sp = space;
  if (hamiltonian) sp = sp ? *sp : hamiltonian->space();
  if (!sp && !terms.empty()) sp = terms.front().a.space();
  if (!sp) throw ValidationError("assemble_liouvillian: cannot infer the Hilbert space");
  if (hamiltonian) require_same_space(*sp, hamiltonian->space(), "assemble_liouvillian");
  for (const auto& t : terms) {
    require_same_space(*sp, t.a.space(), "assemble_liouvillian");
    require_same_space(*sp, t.b.space(), "assemble_liouvillian");
  }

  const Index d = sp->dim();
  SparseMat out(d * d, d * d);
  if (hamiltonian) {
    const auto id = local::identity(static_cast<int>(d));
    SparseMat ht = hamiltonian->mat().transpose();
    SparseMat pre = Eigen::kroneckerProduct(id, hamiltonian->mat());
    SparseMat post = Eigen::kroneckerProduct(ht, id);
    out += (-kI) * pre;
    out += kI * post;
  }
  for (const auto& t : terms) {
    if (t.rate == 0.0) continue;
    add_dissipator(out, t.rate, t.a.mat(), t.b.mat());
  }
  out.prune(cplx(0.0));
  return Superoperator(*sp, std::move(out));
}

double trace_annihilation_defect(const Superoperator& l) {
  const Index d = l.dim();
  double worst = 0.0;
  const auto& m = l.mat();
  for (Index col = 0; col < m.outerSize(); ++col) {
    cplx sum = 0.0;
    for (SparseMat::InnerIterator it(m, col); it; ++it) {
      if (it.row() % (d + 1) == 0) sum += it.value();
    }
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

std::vector<Index> invariant_closure(const SparseMat& generator,
                                     const std::vector<Index>& seeds) {
  const Index n = generator.cols();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Index> frontier;
  for (Index s : seeds) {
    if (s < 0 || s >= n) throw ValidationError("invariant_closure: seed out of range");
    if (!seen[s]) {
      seen[s] = 1;
      frontier.push_back(s);
    }
  }
  while (!frontier.empty()) {
    const Index col = frontier.back();
    frontier.pop_back();
    for (SparseMat::InnerIterator it(generator, col); it; ++it) {
      if (!seen[it.row()]) {
        seen[it.row()] = 1;
        frontier.push_back(it.row());
      }
    }
  }
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i) {
    if (seen[i]) out.push_back(i);
  }
  return out;
}

SparseMat restrict_to(const SparseMat& m, const std::vector<Index>& indices) {
  std::vector<Index> local_of(static_cast<std::size_t>(m.rows()), -1);
  for (std::size_t k = 0; k < indices.size(); ++k) local_of[indices[k]] = static_cast<Index>(k);
  const Index n = static_cast<Index>(indices.size());
  SparseMat out(n, n);
  Eigen::VectorXi per_col(n);
  for (Index k = 0; k < n; ++k) {
    per_col[k] = static_cast<int>(m.col(indices[k]).nonZeros());
  }
  out.reserve(per_col);
  for (Index k = 0; k < n; ++k) {
    for (SparseMat::InnerIterator it(m, indices[k]); it; ++it) {
      const Index r = local_of[it.row()];
      if (r >= 0) out.insert(r, k) = it.value();
    }
  }
  out.makeCompressed();
  return out;
}

std::vector<Index> diagonal_indices(Index dim) {
  std::vector<Index> out(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) out[i] = i * (dim + 1);
  return out;
}

}  // namespace tmsnet::core
