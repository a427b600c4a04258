#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tmsnet/network.hpp"

namespace tmsnet::amplifier {

using network::AmplifierMoments;
using network::NetworkParams;
using Mat4 = Eigen::Matrix4cd;

/// Linear drift of v = (a1, a2^dag, a2, a1^dag): dv/dt = M v - f, <f f^dag> = R delta(t).
struct DriftModel {
  Mat4 m;
  Mat4 r;
  NetworkParams params;

  static DriftModel from(const NetworkParams& p);
  Eigen::Vector4cd eigenvalues() const;
  double max_real_eigenvalue() const;
  bool stable() const { return max_real_eigenvalue() < 0.0; }
};

struct Covariance {
  /// V0 = <v v^dag> in the steady state.
  Mat4 v0;
  AmplifierMoments moments;
};

/// Solves M V0 + V0 M^dag = -R. Throws ValidationError above threshold.
Covariance steady_covariance(const NetworkParams& p);

/// Closed-form <a_i^dag a_i> and <a1 a2> (kappa_bar = kappa1 + kappa2,
/// Delta_bar = Delta1 + Delta2); the other second moments vanish.
AmplifierMoments closed_form_moments(const NetworkParams& p);

/// Elements of I(w) = (i w - M)^{-1} V0, scaled to the normalized spectra.
struct CorrelationSpectrum {
  double omega = 0.0;
  Mat4 resolvent;
  cplx n1 = 0.0;    // I_{a1^dag a1}
  cplx n2 = 0.0;    // I_{a2^dag a2}
  cplx a1a2 = 0.0;  // I_{a1 a2}
  cplx a2a1 = 0.0;  // I_{a2 a1}
};

/// Reusable evaluator: V0 and M are computed once, each call factorizes (i w - M).
class SpectrumEvaluator {
 public:
  explicit SpectrumEvaluator(const NetworkParams& p);
  CorrelationSpectrum operator()(double omega) const;
  const DriftModel& drift() const { return drift_; }
  const Covariance& covariance() const { return cov_; }

 private:
  DriftModel drift_;
  Covariance cov_;
};

CorrelationSpectrum spectra(const NetworkParams& p, double omega);
std::vector<CorrelationSpectrum> spectra(const NetworkParams& p, const std::vector<double>& omegas);

/// Gamma_pm(w) = kappa^2 / (kappa^2 (1 pm eps)^2 + 4 w^2).
double lorentzian_plus(double epsilon, double kappa, double omega);
double lorentzian_minus(double epsilon, double kappa, double omega);

/// Symmetric closed forms (kappa_i = kappa, Delta_i = Delta), with
/// delta^2 = eps^2 kappa^2 - 4 Delta^2.
struct SymmetricSpectra {
  cplx n = 0.0;     // I_{a_i^dag a_i}(w)
  cplx a1a2 = 0.0;  // I_{a1 a2}(w)
};
SymmetricSpectra symmetric_spectra(double epsilon, double kappa, double delta, double omega);

/// Frequency shifts delta_i of H' = sum_i delta_i sigma_i^z,
/// delta_i = -eta gamma_i Im I_{a_i^dag a_i}(0).
struct LambShift {
  double shift1 = 0.0;
  double shift2 = 0.0;
};
LambShift lamb_shift(const NetworkParams& p);

}  // namespace tmsnet::amplifier
