#pragma once

#include <string>

#include "tmsnet/amplifier.hpp"

namespace tmsnet::reservoir {

using core::DensityMatrix;
using network::NetworkParams;

enum class Provenance { markov, fma_closed, filtered_numeric, user };
std::string to_string(Provenance p);

/// Effective squeezed-bath parameters seen by the qubits.
struct ReservoirMoments {
  double n1 = 0.0;
  double n2 = 0.0;
  cplx m = 0.0;
  Provenance provenance = Provenance::user;
  /// Quadrature and physicality diagnostics.
  Warnings warnings;

  bool symmetric(double tol = 1e-12) const { return std::abs(n1 - n2) <= tol * std::max(1.0, n1); }
  /// |M|^2 - (N1 N2 + min(N1, N2)), i.e. |M|^2 - N (N + 1) when symmetric;
  /// positive means unphysical.
  double physicality_excess() const;
};

/// Infinite-bandwidth limit of a resonant symmetric amplifier.
ReservoirMoments markov_moments(double epsilon, double eta);

struct QuadratureConfig {
  double rel_tol = 1e-9;
  unsigned max_depth = 20;
};

/// Moments of the qubit-filtered amplifier output, by adaptive quadrature over
/// the correlation spectra. Uses tau2 - tau1 from the parameters.
ReservoirMoments filtered_moments(const NetworkParams& p, const QuadratureConfig& q = {});

/// Symmetric resonant filtered moments in closed form (beta = kappa / gamma).
ReservoirMoments fma_symmetric_closed_form(double epsilon, double beta, double eta);

/// First order in 1/beta: r ~ 2 atanh(eps) - 2 eps / (beta (1 - eps^2)^2), mu ~ 1 - 4 eps^2 / (beta (1 - eps^2)^2).
struct BetaExpansion {
  double r = 0.0;
  double mu = 1.0;
};
BetaExpansion beta_expansion(double epsilon, double beta);

struct EffectiveSqueezing {
  double r_eff = 0.0;
  double mu_eff = 1.0;
  double nbar_eff = 0.0;
  /// 10 log10(exp(2 r_eff)).
  double s_db = 0.0;
};

/// Two-mode squeezed thermal state with the same N and |M|. Requires N1 = N2
/// and 2|M| < 2N + 1.
EffectiveSqueezing effective_squeezing(const ReservoirMoments& m);

/// Inverse map; M is returned real and non-negative.
ReservoirMoments moments_from(double r_eff, double mu_eff);

/// Qubit-only master equation driven by the effective bath.
struct EffectiveOptions {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  /// Absolute dephasing rate gamma_phi.
  double gamma_phi = 0.0;
  /// Frequency shifts of H' = sum_i shift_i sigma_i^z (off unless set).
  double shift1 = 0.0;
  double shift2 = 0.0;
};

core::Superoperator effective_liouvillian(const ReservoirMoments& m, const EffectiveOptions& o);

/// Symmetric six-element steady state (gamma = 1, normalized dephasing).
DensityMatrix effective_steady_state_analytic(const ReservoirMoments& m, double normalized_dephasing);

DensityMatrix effective_steady_state_numeric(const ReservoirMoments& m, const EffectiveOptions& o);

/// Analytic form for symmetric moments, the numeric solve otherwise.
DensityMatrix effective_steady_state(const ReservoirMoments& m, double normalized_dephasing);

/// Options for feeding a network's filtered moments into the effective equation;
/// the Lamb shift is only added when requested.
EffectiveOptions effective_options(const NetworkParams& p, bool include_lamb_shift = false);

}  // namespace tmsnet::reservoir
