#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tmsnet/core/density.hpp"
#include "tmsnet/core/superoperator.hpp"

namespace tmsnet::core {

enum class SteadyMethod { automatic, direct_sparse, shift_invert_iterative };
enum class OdeMethod { runge_kutta, krylov };

struct SolverConfig {
  SteadyMethod method = SteadyMethod::automatic;
  OdeMethod ode = OdeMethod::runge_kutta;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_steps = 1000000;
  /// automatic picks the iterative path above this many unknowns (after
  /// restriction to the invariant sector that contains the diagonal).
  Index direct_limit = 6000;
  /// Factors whose (ket, bra) indices define the block-Jacobi groups of the
  /// iterative preconditioner. Empty means a single block.
  std::vector<std::string> block_factors;
  /// Krylov subspace dimension for the exponential integrator.
  int krylov_dim = 30;

  void validate() const;
};

std::string to_string(SteadyMethod m);
std::string to_string(OdeMethod m);

struct SolveReport {
  SteadyMethod method = SteadyMethod::automatic;
  Index sector_dim = 0;
  double residual = 0.0;
  int iterations = 0;
  double hermiticity_defect = 0.0;
  Warnings warnings;
};

struct SteadyState {
  DensityMatrix rho;
  SolveReport report;
};

/// Unique stationary state of `l` (trace 1). Throws SolverError when the
/// kernel is degenerate or the solve does not reach `abs_tol`.
SteadyState steady_state(const Superoperator& l, const SolverConfig& cfg = {});

/// Operator-valued trajectory exp(L t) x0 at each requested time; `times`
/// must start at 0 or later and increase. x0 need not be Hermitian.
std::vector<DenseMat> propagate(const Superoperator& l, const DenseMat& x0,
                                const std::vector<double>& times, const SolverConfig& cfg = {});

/// Streaming form: `sink(k, x)` receives exp(L times[k]) x0 as each output time
/// is reached, so long trajectories need not be held in memory.
using TrajectorySink = std::function<void(std::size_t, const DenseMat&)>;
void propagate(const Superoperator& l, const DenseMat& x0, const std::vector<double>& times,
               const SolverConfig& cfg, const TrajectorySink& sink);

/// Physical-state wrapper around propagate(); also checks the trace drift.
std::vector<DensityMatrix> evolve(const Superoperator& l, const DensityMatrix& rho0,
                                  const std::vector<double>& times, const SolverConfig& cfg = {});

}  // namespace tmsnet::core
