#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "tmsnet/core/solvers.hpp"

namespace tmsnet::core {

void SolverConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ValidationError("SolverConfig: tolerances must be > 0");
  if (max_steps <= 0) throw ValidationError("SolverConfig: max_steps must be > 0");
  if (krylov_dim < 2) throw ValidationError("SolverConfig: krylov_dim must be >= 2");
}

std::string to_string(SteadyMethod m) {
  switch (m) {
    case SteadyMethod::automatic: return "automatic";
    case SteadyMethod::direct_sparse: return "direct-sparse";
    case SteadyMethod::shift_invert_iterative: return "shift-invert-iterative";
  }
  return "?";
}

std::string to_string(OdeMethod m) {
  return m == OdeMethod::runge_kutta ? "runge-kutta" : "krylov";
}

namespace {

using LU = Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>>;

// Block-Jacobi preconditioner: exact sparse LU of each diagonal block of
// (A - shift I). Blocks come from a caller-supplied group id per unknown.
class BlockJacobiPreconditioner {
 public:
  using Scalar = cplx;
  using RealScalar = double;
  using StorageIndex = int;

  BlockJacobiPreconditioner() = default;

  void set_groups(std::vector<int> group_of, double shift) {
    group_of_ = std::move(group_of);
    shift_ = shift;
  }

  template <typename MatType>
  BlockJacobiPreconditioner& analyzePattern(const MatType&) { return *this; }

  template <typename MatType>
  BlockJacobiPreconditioner& factorize(const MatType& mat) {
    SparseMat a = mat;
    const Index n = a.rows();
    if (group_of_.size() != static_cast<std::size_t>(n)) group_of_.assign(n, 0);
    std::map<int, std::vector<Index>> members;
    for (Index i = 0; i < n; ++i) members[group_of_[i]].push_back(i);
    SparseMat id(n, n);
    id.setIdentity();
    SparseMat shifted = a - cplx(shift_) * id;
    blocks_.clear();
    info_ = Eigen::Success;
    for (auto& [g, idx] : members) {
      Block b;
      b.indices = std::move(idx);
      b.lu = std::make_unique<LU>();
      b.lu->compute(restrict_to(shifted, b.indices));
      if (b.lu->info() != Eigen::Success) info_ = Eigen::NumericalIssue;
      blocks_.push_back(std::move(b));
    }
    return *this;
  }

  template <typename MatType>
  BlockJacobiPreconditioner& compute(const MatType& mat) { return factorize(mat); }

  CVec solve(const CVec& b) const {
    CVec out(b.size());
    CVec piece;
    for (const auto& blk : blocks_) {
      piece.resize(static_cast<Index>(blk.indices.size()));
      for (std::size_t k = 0; k < blk.indices.size(); ++k) piece[k] = b[blk.indices[k]];
      CVec sol = blk.lu->solve(piece);
      for (std::size_t k = 0; k < blk.indices.size(); ++k) out[blk.indices[k]] = sol[k];
    }
    return out;
  }

  Eigen::ComputationInfo info() const { return info_; }

 private:
  struct Block {
    std::vector<Index> indices;
    std::unique_ptr<LU> lu;
  };
  std::vector<int> group_of_;
  double shift_ = 0.0;
  std::vector<Block> blocks_;
  Eigen::ComputationInfo info_ = Eigen::Success;
};

cplx trace_of(const CVec& x, const std::vector<Index>& diag_local) {
  cplx t = 0.0;
  for (Index k : diag_local) t += x[k];
  return t;
}

CVec solve_direct(const SparseMat& a, const std::vector<Index>& diag_local) {
  const Index n = a.rows();
  // Replace the row with the largest |diagonal| by the trace functional.
  Index row = 0;
  double best = -1.0;
  for (Index i = 0; i < n; ++i) {
    const double v = std::abs(a.coeff(i, i));
    if (v > best) {
      best = v;
      row = i;
    }
  }
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() + diag_local.size()));
  for (Index col = 0; col < a.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(a, col); it; ++it) {
      if (it.row() != row) trips.emplace_back(it.row(), col, it.value());
    }
  }
  for (Index k : diag_local) trips.emplace_back(row, k, cplx(1.0));
  SparseMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  CVec rhs = CVec::Zero(n);
  rhs[row] = 1.0;
  LU lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) {
    throw SolverError(
        "steady_state: trace-constrained system is singular; the generator has a degenerate "
        "(dimension != 1) kernel");
  }
  return lu.solve(rhs);
}

struct IterativeOutcome {
  CVec x;
  int iterations = 0;
};

double min_nonzero_diagonal(const SparseMat& a) {
  double best = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    const double v = std::abs(a.coeff(i, i));
    if (v > 0.0 && (best == 0.0 || v < best)) best = v;
  }
  return best > 0.0 ? best : 1.0;
}

IterativeOutcome correct_to_null_vector(Eigen::GMRES<SparseMat, BlockJacobiPreconditioner>& gmres,
                                        const SparseMat& a, CVec x,
                                        const std::vector<Index>& diag_local,
                                        const SolverConfig& cfg) {
  IterativeOutcome out;
  x /= trace_of(x, diag_local);
  for (int outer = 0; outer < 12; ++outer) {
    CVec r = -(a * x);
    if (r.norm() <= cfg.abs_tol) break;
    CVec delta = gmres.solve(r);
    out.iterations += static_cast<int>(gmres.iterations());
    if (out.iterations > cfg.max_steps) break;
    x += delta;
    x /= trace_of(x, diag_local);
  }
  out.x = std::move(x);
  return out;
}

IterativeOutcome solve_iterative(const SparseMat& a, const std::vector<Index>& sector,
                                 const std::vector<Index>& diag_local, const HilbertSpec& space,
                                 const SolverConfig& cfg) {
  const Index n = a.rows();
  const Index d = space.dim();
  std::vector<std::size_t> positions;
  for (const auto& label : cfg.block_factors) positions.push_back(space.position(label));

  std::vector<int> group_of(static_cast<std::size_t>(n), 0);
  if (!positions.empty()) {
    for (Index k = 0; k < n; ++k) {
      const auto ket = space.digits(sector[k] % d);
      const auto bra = space.digits(sector[k] / d);
      int key = 0;
      for (auto p : positions) {
        const int fd = space.factors()[p].dim;
        key = (key * fd + ket[p]) * fd + bra[p];
      }
      group_of[k] = key;
    }
  }

  Eigen::GMRES<SparseMat, BlockJacobiPreconditioner> gmres;
  gmres.preconditioner().set_groups(std::move(group_of), -1e-2 * min_nonzero_diagonal(a));
  gmres.set_restart(120);
  gmres.setMaxIterations(std::max(200, std::min(cfg.max_steps, 4000)));
  gmres.setTolerance(1e-13);
  gmres.compute(a);
  if (gmres.preconditioner().info() != Eigen::Success) {
    throw SolverError("steady_state: preconditioner factorization failed");
  }

  // Seed with the first basis projector, then confirm with a second seed that
  // the kernel is one-dimensional.
  CVec seed = CVec::Zero(n);
  seed[diag_local.front()] = 1.0;
  auto first = correct_to_null_vector(gmres, a, seed, diag_local, cfg);

  CVec seed2 = CVec::Zero(n);
  for (Index k : diag_local) seed2[k] = 1.0;
  auto second = correct_to_null_vector(gmres, a, seed2, diag_local, cfg);
  const double spread = (first.x - second.x).norm() / std::max(first.x.norm(), 1e-300);
  if (spread > 1e-6) {
    std::ostringstream msg;
    msg << "steady_state: two seeds converged to different states (relative spread " << spread
        << "); the kernel is degenerate or the iteration stalled";
    throw SolverError(msg.str());
  }
  first.iterations += second.iterations;
  return first;
}

}  // namespace

SteadyState steady_state(const Superoperator& l, const SolverConfig& cfg) {
  cfg.validate();
  const Index d = l.dim();
  const auto diag = diagonal_indices(d);
  const auto sector = invariant_closure(l.mat(), diag);
  const SparseMat a = restrict_to(l.mat(), sector);
  std::vector<Index> diag_local;
  diag_local.reserve(diag.size());
  for (Index g : diag) {
    diag_local.push_back(std::lower_bound(sector.begin(), sector.end(), g) - sector.begin());
  }

  SolveReport report;
  report.sector_dim = a.rows();
  report.method = cfg.method;
  if (report.method == SteadyMethod::automatic) {
    report.method = a.rows() > cfg.direct_limit ? SteadyMethod::shift_invert_iterative
                                                : SteadyMethod::direct_sparse;
  }

  CVec x;
  if (report.method == SteadyMethod::direct_sparse) {
    x = solve_direct(a, diag_local);
  } else {
    auto it = solve_iterative(a, sector, diag_local, l.space(), cfg);
    x = std::move(it.x);
    report.iterations = it.iterations;
  }
  if (!x.allFinite()) {
    throw SolverError("steady_state: non-finite solution (degenerate kernel?)");
  }
  x /= trace_of(x, diag_local);
  report.residual = (a * x).norm();
  if (report.residual > cfg.abs_tol) {
    std::ostringstream msg;
    msg << "steady_state: residual " << report.residual << " exceeds abs_tol " << cfg.abs_tol
        << " (" << to_string(report.method) << ", sector " << a.rows() << ")";
    throw SolverError(msg.str());
  }

  CVec full = CVec::Zero(d * d);
  for (std::size_t k = 0; k < sector.size(); ++k) full[sector[k]] = x[k];
  DenseMat rho = unvec(full, d);
  report.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  DenseMat herm = 0.5 * (rho + rho.adjoint());
  StateTolerance tol;
  tol.trace = std::max(1e-10, 10.0 * cfg.abs_tol);
  DensityMatrix state(l.space(), std::move(herm), tol);
  report.warnings = state.warnings();
  return {std::move(state), std::move(report)};
}

}  // namespace tmsnet::core
