#include "tmsnet/delay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "tmsnet/entanglement.hpp"

namespace tmsnet::delay {

using core::embed_operator;
using core::partial_trace_matrix;
namespace lo = core::local;

namespace {

void require_stationary(const Superoperator& l, const DensityMatrix& rho) {
  core::require_same_space(l.space(), rho.space(), "two_time_correlator");
  const double res = (l.mat() * core::vec(rho.mat())).norm();
  if (res > 1e-8) {
    std::ostringstream msg;
    msg << "two_time_correlator: state is not stationary (||L rho|| = " << res << ")";
    throw ValidationError(msg.str());
  }
}

// Pauli basis (identity, x, y, z) on one qubit.
std::array<DenseMat, 4> paulis() {
  return {DenseMat(lo::identity(2)), DenseMat(lo::sigma_x()), DenseMat(lo::sigma_y()),
          DenseMat(lo::sigma_z())};
}

// Propagates sigma_early^nu rho_ss for nu = x, y, z and hands the qubit
// reduction of each propagated operator back per output time.
class Tomography {
 public:
  Tomography(const NetworkParams& p, const TruncationConfig& t, const SolverConfig& cfg)
      : cfg_(cfg), l_(network::build_cascaded_liouvillian(p, t)),
        ss_(network::cascaded_steady_state(p, t, cfg)), pauli_(paulis()) {}

  const network::NetworkSteadyState& steady() const { return ss_; }
  const Superoperator& liouvillian() const { return l_; }

  // Full-space initial operators sigma_early^nu rho_ss (nu = x, y, z).
  std::array<DenseMat, 3> seeds(bool late_is_q1) const {
    const std::string& early = late_is_q1 ? network::kQubit2 : network::kQubit1;
    std::array<DenseMat, 3> out;
    for (int nu = 1; nu < 4; ++nu) {
      const auto op = embed_operator(SparseMat(pauli_[nu].sparseView()), early, l_.space());
      out[nu - 1] = op.mat() * ss_.full.mat();
    }
    return out;
  }

  DenseMat reduce(const DenseMat& x) const {
    return partial_trace_matrix(x, l_.space(), {network::kQubit1, network::kQubit2});
  }

  // Assemble the tomographic state from the reduced operators X^nu (nu = 0..3,
  // X^0 being the stationary qubit state).
  DelayedState assemble(const std::array<DenseMat, 4>& reduced, double tau, bool late_is_q1) const {
    DelayedState out;
    out.correlators.tau = tau;
    for (int mu = 0; mu < 4; ++mu) {
      for (int nu = 0; nu < 4; ++nu) {
        // Late-qubit index runs over the measured operator, early over the seed.
        const int late = mu, early = nu;
        const DenseMat obs = late_is_q1 ? core::kron(pauli_[late], pauli_[0])
                                        : core::kron(pauli_[0], pauli_[late]);
        const cplx v = (obs * reduced[early]).trace();
        if (late_is_q1) {
          out.correlators.c(late, early) = v;
        } else {
          out.correlators.c(early, late) = v;
        }
      }
    }
    DenseMat rho = DenseMat::Zero(4, 4);
    for (int mu = 0; mu < 4; ++mu) {
      for (int nu = 0; nu < 4; ++nu) {
        rho += 0.25 * out.correlators.c(mu, nu) * core::kron(pauli_[mu], pauli_[nu]);
      }
    }
    out.hermiticity_defect = (rho - rho.adjoint()).norm() / std::max(rho.norm(), 1e-300);
    DenseMat herm = 0.5 * (rho + rho.adjoint());
    core::StateTolerance tol;
    tol.trace = 1e-8;
    tol.positivity = kDelayedPositivityFloor;
    out.rho = DensityMatrix(network::qubit_space(), std::move(herm), tol);
    return out;
  }

  // Reduced operators at each requested time, starting from full operators x0.
  std::vector<std::array<DenseMat, 4>> run(const std::array<DenseMat, 3>& x0,
                                           const std::vector<double>& times,
                                           std::array<DenseMat, 3>* final_full = nullptr) const {
    std::vector<std::array<DenseMat, 4>> out(times.size());
    for (auto& r : out) r[0] = ss_.qubits.mat();
    for (int nu = 0; nu < 3; ++nu) {
      core::propagate(l_, x0[nu], times, cfg_, [&](std::size_t k, const DenseMat& x) {
        out[k][nu + 1] = reduce(x);
        if (final_full && k + 1 == times.size()) (*final_full)[nu] = x;
      });
    }
    return out;
  }

 private:
  SolverConfig cfg_;
  Superoperator l_;
  network::NetworkSteadyState ss_;
  std::array<DenseMat, 4> pauli_;
};

}  // namespace

std::vector<cplx> two_time_correlator(const Superoperator& l, const DensityMatrix& rho_ss,
                                      const DenseMat& o1, const DenseMat& o2,
                                      const std::vector<double>& taus, const SolverConfig& cfg) {
  require_stationary(l, rho_ss);
  const Index d = l.dim();
  if (o1.rows() != d || o1.cols() != d || o2.rows() != d || o2.cols() != d) {
    throw ValidationError("two_time_correlator: operator shape does not match the space");
  }
  std::vector<cplx> out(taus.size());
  core::propagate(l, o2 * rho_ss.mat(), taus, cfg, [&](std::size_t k, const DenseMat& x) {
    out[k] = (o1.transpose().cwiseProduct(x)).sum();
  });
  return out;
}

cplx two_time_correlator(const Superoperator& l, const DensityMatrix& rho_ss, const DenseMat& o1,
                         const DenseMat& o2, double tau, const SolverConfig& cfg) {
  if (!(tau >= 0.0)) throw ValidationError("two_time_correlator: tau must be >= 0");
  return two_time_correlator(l, rho_ss, o1, o2, std::vector<double>{tau}, cfg).front();
}

std::vector<DelayedState> delayed_two_qubit_states(const NetworkParams& p,
                                                   const TruncationConfig& t,
                                                   const std::vector<double>& taus,
                                                   const SolverConfig& cfg) {
  const Tomography tomo(p, t, cfg);
  std::vector<DelayedState> out(taus.size());
  // Positive and negative lags run as two increasing grids of |tau|.
  for (bool late_is_q1 : {true, false}) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < taus.size(); ++k) {
      if ((taus[k] >= 0.0) == late_is_q1) idx.push_back(k);
    }
    if (idx.empty()) continue;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(taus[a]) < std::abs(taus[b]); });
    std::vector<double> grid;
    for (auto k : idx) grid.push_back(std::abs(taus[k]));
    const auto reduced = tomo.run(tomo.seeds(late_is_q1), grid);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out[idx[j]] = tomo.assemble(reduced[j], taus[idx[j]], late_is_q1);
    }
  }
  return out;
}

DelayedState delayed_two_qubit_state(const NetworkParams& p, const TruncationConfig& t, double tau,
                                     const SolverConfig& cfg) {
  return delayed_two_qubit_states(p, t, {tau}, cfg).front();
}

EntanglementTime entanglement_time(const NetworkParams& p, const TruncationConfig& t,
                                   const EntanglementTimeOptions& opt, const SolverConfig& cfg) {
  if (!(p.gamma1 > 0.0)) throw ValidationError("entanglement_time: gamma1 must be > 0");
  if (!(opt.grid_step > 0.0) || !(opt.tolerance > 0.0) || !(opt.max_gamma_tau > 0.0)) {
    throw ValidationError("entanglement_time: options must be positive");
  }
  const double g = p.gamma1;
  const Tomography tomo(p, t, cfg);
  auto conc = [&](const std::array<DenseMat, 4>& r, double tau) {
    return entanglement::concurrence(tomo.assemble(r, tau, true).rho);
  };

  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double gt = std::min(k * opt.grid_step, opt.max_gamma_tau);
    grid.push_back(gt / g);
    if (gt >= opt.max_gamma_tau) break;
  }
  const auto seeds = tomo.seeds(true);
  const auto reduced = tomo.run(seeds, grid);

  EntanglementTime out;
  std::size_t first_zero = grid.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double c = conc(reduced[k], grid[k]);
    out.scan.emplace_back(grid[k] * g, c);
    if (k > 0 && c > out.scan[k - 1].second + 1e-9) out.non_monotone = true;
    if (c <= 0.0 && first_zero == grid.size()) first_zero = k;
  }
  out.concurrence_at_zero = out.scan.front().second;
  if (out.concurrence_at_zero <= 0.0) {
    throw ValidationError("entanglement_time: the zero-delay state is not entangled");
  }
  if (first_zero == grid.size()) return out;

  // Bisection, always propagating forward from the entangled end of the bracket.
  double lo_t = grid[first_zero - 1], hi_t = grid[first_zero];
  std::array<DenseMat, 3> lo_full;
  tomo.run(seeds, {lo_t}, &lo_full);
  while ((hi_t - lo_t) * g > opt.tolerance) {
    const double mid = 0.5 * (lo_t + hi_t);
    std::array<DenseMat, 3> mid_full;
    const auto r = tomo.run(lo_full, {mid - lo_t}, &mid_full);
    if (conc(r.front(), mid) > 0.0) {
      lo_t = mid;
      lo_full = std::move(mid_full);
    } else {
      hi_t = mid;
    }
  }
  out.gamma_tau = 0.5 * (lo_t + hi_t) * g;
  return out;
}

}  // namespace tmsnet::delay
