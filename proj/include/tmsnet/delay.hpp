#pragma once

#include <optional>
#include <vector>

#include "tmsnet/network.hpp"

namespace tmsnet::delay {

using core::DensityMatrix;
using core::SolverConfig;
using core::Superoperator;
using network::NetworkParams;
using network::TruncationConfig;

/// Tr{O1 exp(L tau) (O2 rho_ss)}, i.e. <O1(tau) O2(0)> in the stationary state.
/// Throws ValidationError if rho_ss is not stationary under L or tau < 0.
cplx two_time_correlator(const Superoperator& l, const DensityMatrix& rho_ss, const DenseMat& o1,
                         const DenseMat& o2, double tau, const SolverConfig& cfg = {});

/// Same correlator on an increasing grid of lags, from one propagation.
std::vector<cplx> two_time_correlator(const Superoperator& l, const DensityMatrix& rho_ss,
                                      const DenseMat& o1, const DenseMat& o2,
                                      const std::vector<double>& taus, const SolverConfig& cfg = {});

/// c(mu, nu) = <sigma_1^mu(tau) sigma_2^nu> for mu, nu in (0, x, y, z).
struct DelayedCorrelatorSet {
  Eigen::Matrix4cd c;
  double tau = 0.0;
};

struct DelayedState {
  DensityMatrix rho;
  DelayedCorrelatorSet correlators;
  /// ||rho - rho^dag|| / ||rho|| before Hermitization (Frobenius).
  double hermiticity_defect = 0.0;
};

/// Positivity floor for delayed states; below it a warning is attached.
inline constexpr double kDelayedPositivityFloor = 1e-6;

/// Equal-time qubit state of a network whose second qubit sits tau = tau2 - tau1
/// further downstream, from Pauli tomography of regression correlators:
/// rho = (1/4) sum c(mu, nu) sigma^mu (x) sigma^nu. For tau < 0 the roles of the
/// qubits in the correlator are exchanged.
DelayedState delayed_two_qubit_state(const NetworkParams& p, const TruncationConfig& t, double tau,
                                     const SolverConfig& cfg = network::network_solver_config());

/// Batch form over a grid of delays; shares the steady state and propagations.
std::vector<DelayedState> delayed_two_qubit_states(
    const NetworkParams& p, const TruncationConfig& t, const std::vector<double>& taus,
    const SolverConfig& cfg = network::network_solver_config());

struct EntanglementTimeOptions {
  double max_gamma_tau = 20.0;
  double grid_step = 0.25;    // in units of 1/gamma1
  double tolerance = 1e-3;    // in units of 1/gamma1
};

struct EntanglementTime {
  /// gamma1 * tau_ent, or empty when concurrence survives the whole range.
  std::optional<double> gamma_tau;
  double concurrence_at_zero = 0.0;
  /// Coarse scan (gamma tau, C) used for bracketing.
  std::vector<std::pair<double, double>> scan;
  /// Set when the scan shows C increasing somewhere.
  bool non_monotone = false;
};

/// Smallest delay at which the concurrence vanishes, by bracketing on a grid and
/// bisection. Throws ValidationError when C(0) = 0.
EntanglementTime entanglement_time(const NetworkParams& p, const TruncationConfig& t,
                                   const EntanglementTimeOptions& opt = {},
                                   const SolverConfig& cfg = network::network_solver_config());

}  // namespace tmsnet::delay
