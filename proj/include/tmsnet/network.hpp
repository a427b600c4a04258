#pragma once

#include <string>
#include <vector>

#include "tmsnet/core/solvers.hpp"

namespace tmsnet::network {

using core::DensityMatrix;
using core::HilbertSpec;
using core::SolverConfig;
using core::Superoperator;

/// Rates of the amplifier -> waveguide -> qubit network, in a common rate unit.
struct NetworkParams {
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma_phi = 0.0;
  /// Photon-qubit detunings omega_i - omega_qi.
  double delta1 = 0.0;
  double delta2 = 0.0;
  /// Dimensionless pump, below the parametric threshold.
  double epsilon = 0.0;
  /// Channel transmissivity.
  double eta = 1.0;
  /// Propagation delays (time units); only tau2 - tau1 matters.
  double tau1 = 0.0;
  double tau2 = 0.0;

  /// kappa1 / gamma1.
  double beta() const { return kappa1 / gamma1; }
  /// gamma_phi / gamma1.
  double normalized_dephasing() const { return gamma_phi / gamma1; }
  double delay() const { return tau2 - tau1; }

  /// Throws ValidationError on negative rates, epsilon outside [0, 1) or eta outside [0, 1].
  void validate() const;

  /// Symmetric network with gamma as the rate unit: kappa_i = beta * gamma.
  static NetworkParams symmetric(double epsilon, double beta, double eta = 1.0,
                                 double normalized_dephasing = 0.0, double gamma = 1.0);
};

struct TruncationConfig {
  int n_trunc = 10;
  void validate() const;
};

/// Which pieces of the cascaded generator to include.
struct Parts {
  bool qubits = true;
  bool amplifier = true;
  bool cascade = true;
  static Parts all() { return {}; }
  static Parts amplifier_only() { return {false, true, false}; }
  static Parts qubits_only() { return {true, false, false}; }
};

/// Factor labels, fixed in this order.
inline const std::string kMode1 = "a1";
inline const std::string kMode2 = "a2";
inline const std::string kQubit1 = "q1";
inline const std::string kQubit2 = "q2";

HilbertSpec network_space(const TruncationConfig& t);
HilbertSpec amplifier_space(const TruncationConfig& t);
HilbertSpec qubit_space();

/// Sum of the requested generators. The space holds the amplifier modes when
/// the amplifier or cascade part is requested and the qubits when the qubit or
/// cascade part is requested, always in the order (a1, a2, q1, q2).
Superoperator build_cascaded_liouvillian(const NetworkParams& p, const TruncationConfig& t,
                                         const Parts& parts = Parts::all());

/// Solver settings tuned for the network: block-Jacobi groups by qubit indices.
SolverConfig network_solver_config(SolverConfig base = {});

struct AmplifierMoments {
  double n1 = 0.0;  // <a1^dag a1>
  double n2 = 0.0;  // <a2^dag a2>
  cplx a1a2 = 0.0;
  cplx a1dag_a2 = 0.0;
  cplx a1_sq = 0.0;
  cplx a2_sq = 0.0;
};

struct AmplifierState {
  DensityMatrix rho;
  AmplifierMoments moments;
  /// Population of the highest retained Fock level of each mode.
  double top_population = 0.0;
  core::SolveReport report;
};

/// Top-level Fock population above which a truncation-leakage warning is attached.
inline constexpr double kLeakageThreshold = 1e-6;

AmplifierMoments amplifier_moments(const DensityMatrix& rho);

/// Steady state of the amplifier alone. Throws SolverError if the moments that
/// must vanish (<a1^dag a2>, <a_i^2>) do not.
AmplifierState amplifier_steady_state(const NetworkParams& p, const TruncationConfig& t,
                                      const SolverConfig& cfg = {});

struct NetworkSteadyState {
  DensityMatrix full;
  DensityMatrix qubits;
  AmplifierMoments amplifier;
  double top_population = 0.0;
  core::SolveReport report;
};

/// Exact steady state of the full cascaded network at zero delay.
NetworkSteadyState cascaded_steady_state(const NetworkParams& p, const TruncationConfig& t,
                                         const SolverConfig& cfg = network_solver_config());

/// Qubit observables <sigma_i^+ sigma_i^->, <sigma_1^- sigma_2^-> of a two-qubit state.
struct QubitMoments {
  double excitation1 = 0.0;
  double excitation2 = 0.0;
  cplx correlation = 0.0;
};
QubitMoments qubit_moments(const DensityMatrix& two_qubit);

struct DarkStateResiduals {
  double interaction = 0.0;  // ||H_int (|00> + x|11>) |Psi_TMS>||
  double mode1 = 0.0;        // ||a1 Psi - x a2^dag Psi||
  double mode2 = 0.0;        // ||a2 Psi - x a1^dag Psi||
};

/// Residuals of the two-mode-squeezed dark-state relations for
/// |Psi_TMS> = sqrt(1 - x^2) sum_{n < n_trunc} x^n |n, n>. The ladder operators
/// act into a space with one extra Fock level, so the result measures the
/// truncation tail (inside the truncated space the relations hold exactly).
/// H_int uses unit coupling; residuals scale linearly with it.
DarkStateResiduals tms_dark_state_residual(double x, const TruncationConfig& t);

}  // namespace tmsnet::network
