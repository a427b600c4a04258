#pragma once

#include <optional>

#include "tmsnet/core/density.hpp"

namespace tmsnet::entanglement {

using core::DensityMatrix;

/// <Phi+| rho |Phi+> with |Phi+> = (|00> + |11>)/sqrt(2).
double bell_fidelity(const DensityMatrix& rho);

/// Fidelity of the ideal infinite-bandwidth steady state:
/// (1 + eps)^4 / (2 (1 + 6 eps^2 + eps^4)).
double fidelity_bound(double epsilon);

/// Eigenvalues of rho (sy sy) rho* (sy sy) below this floor count as zero.
inline constexpr double kConcurrenceFloor = 1e-12;

/// Wootters concurrence of a two-qubit state.
double concurrence(const DensityMatrix& rho);

/// Binary Shannon entropy in bits.
double binary_entropy(double p);

double eof_from_concurrence(double c);
double entanglement_of_formation(const DensityMatrix& rho);

/// E_F / (gamma T). Throws ValidationError for T <= 0 or gamma <= 0.
double rate(double eof, double pulse_length, double gamma);

struct FidelityEstimates {
  double weak_driving = 0.0;
  double near_threshold = 0.0;
  double optimal = 0.0;
};

/// Closed-form approximations in the weak-driving, near-threshold and optimized regimes.
FidelityEstimates analytic_fidelity_estimates(double epsilon, double beta, double eta,
                                              double normalized_dephasing);

struct EntanglementReport {
  double fidelity = 0.0;
  double concurrence = 0.0;
  double eof = 0.0;
  std::optional<double> rate;
};

EntanglementReport report(const DensityMatrix& rho);
EntanglementReport report(const DensityMatrix& rho, double pulse_length, double gamma);

}  // namespace tmsnet::entanglement
