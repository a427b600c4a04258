#include "tmsnet/amplifier.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace tmsnet::amplifier {

DriftModel DriftModel::from(const NetworkParams& p) {
  DriftModel d;
  d.params = p;
  const double g = p.epsilon * std::sqrt(p.kappa1 * p.kappa2) / 2.0;
  d.m.setZero();
  d.m(0, 0) = cplx(-p.kappa1 / 2.0, -p.delta1);
  d.m(0, 1) = g;
  d.m(1, 0) = g;
  d.m(1, 1) = cplx(-p.kappa2 / 2.0, p.delta2);
  d.m(2, 2) = cplx(-p.kappa2 / 2.0, -p.delta2);
  d.m(2, 3) = g;
  d.m(3, 2) = g;
  d.m(3, 3) = cplx(-p.kappa1 / 2.0, p.delta1);
  d.r.setZero();
  d.r(0, 0) = p.kappa1;
  d.r(2, 2) = p.kappa2;
  return d;
}

Eigen::Vector4cd DriftModel::eigenvalues() const {
  return Eigen::ComplexEigenSolver<Mat4>(m, false).eigenvalues();
}

double DriftModel::max_real_eigenvalue() const { return eigenvalues().real().maxCoeff(); }

Covariance steady_covariance(const NetworkParams& p) {
  p.validate();
  const DriftModel d = DriftModel::from(p);
  if (!d.stable()) {
    std::ostringstream msg;
    msg << "steady_covariance: amplifier is above threshold (max Re eig = "
        << d.max_real_eigenvalue() << ")";
    throw ValidationError(msg.str());
  }
  // vec(M V) + vec(V M^dag) = (I (x) M + conj(M) (x) I) vec(V).
  Eigen::Matrix<cplx, 16, 16> k = Eigen::Matrix<cplx, 16, 16>::Zero();
  const Mat4 id = Mat4::Identity();
  const Mat4 mc = d.m.conjugate();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      k.block<4, 4>(4 * i, 4 * j) += id(i, j) * d.m + mc(i, j) * id;
    }
  }
  Eigen::Matrix<cplx, 16, 1> rhs = -Eigen::Map<const Eigen::Matrix<cplx, 16, 1>>(d.r.data());
  Eigen::Matrix<cplx, 16, 1> sol = k.fullPivLu().solve(rhs);
  Covariance c;
  c.v0 = Eigen::Map<Mat4>(sol.data());
  c.v0 = 0.5 * (c.v0 + c.v0.adjoint()).eval();
  // v0(i, j) = <v_i v_j^dag>.
  c.moments.n1 = c.v0(3, 3).real();
  c.moments.n2 = c.v0(1, 1).real();
  c.moments.a1a2 = c.v0(0, 1);
  c.moments.a1dag_a2 = c.v0(3, 1);
  c.moments.a1_sq = c.v0(0, 3);
  c.moments.a2_sq = c.v0(2, 1);
  return c;
}

AmplifierMoments closed_form_moments(const NetworkParams& p) {
  p.validate();
  const double kb = p.kappa1 + p.kappa2;
  const double db = p.delta1 + p.delta2;
  const double e = p.epsilon;
  const double den = 4.0 * db * db + (1.0 - e * e) * kb * kb;
  AmplifierMoments m;
  m.n1 = (kb - p.kappa1) * kb * e * e / den;
  m.n2 = (kb - p.kappa2) * kb * e * e / den;
  m.a1a2 = std::sqrt(p.kappa1 * p.kappa2) * cplx(kb, -2.0 * db) * e / den;
  return m;
}

SpectrumEvaluator::SpectrumEvaluator(const NetworkParams& p)
    : drift_(DriftModel::from(p)), cov_(steady_covariance(p)) {}

CorrelationSpectrum SpectrumEvaluator::operator()(double omega) const {
  const NetworkParams& p = drift_.params;
  CorrelationSpectrum s;
  s.omega = omega;
  const Mat4 a = cplx(0.0, omega) * Mat4::Identity() - drift_.m;
  s.resolvent = a.partialPivLu().solve(cov_.v0);
  const double k12 = std::sqrt(p.kappa1 * p.kappa2);
  s.n1 = p.kappa1 * s.resolvent(3, 3);
  s.n2 = p.kappa2 * s.resolvent(1, 1);
  s.a1a2 = k12 * s.resolvent(0, 1);
  s.a2a1 = k12 * s.resolvent(2, 3);
  return s;
}

CorrelationSpectrum spectra(const NetworkParams& p, double omega) {
  return SpectrumEvaluator(p)(omega);
}

std::vector<CorrelationSpectrum> spectra(const NetworkParams& p, const std::vector<double>& omegas) {
  const SpectrumEvaluator ev(p);
  std::vector<CorrelationSpectrum> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back(ev(w));
  return out;
}

double lorentzian_plus(double epsilon, double kappa, double omega) {
  const double s = kappa * (1.0 + epsilon);
  return kappa * kappa / (s * s + 4.0 * omega * omega);
}

double lorentzian_minus(double epsilon, double kappa, double omega) {
  const double s = kappa * (1.0 - epsilon);
  return kappa * kappa / (s * s + 4.0 * omega * omega);
}

SymmetricSpectra symmetric_spectra(double epsilon, double kappa, double delta, double omega) {
  const double d2 = epsilon * epsilon * kappa * kappa - 4.0 * delta * delta;
  const double k2 = kappa * kappa;
  const cplx den = (k2 - d2) * cplx(k2 - d2 - 4.0 * omega * omega, 4.0 * kappa * omega);
  SymmetricSpectra s;
  s.n = 2.0 * epsilon * epsilon * k2 * kappa * cplx(kappa, omega) / den;
  s.a1a2 = epsilon * k2 *
           (d2 + k2 - cplx(0.0, 4.0 * delta) * cplx(kappa, omega) + cplx(0.0, 2.0 * omega * kappa)) /
           den;
  return s;
}

LambShift lamb_shift(const NetworkParams& p) {
  const auto s = spectra(p, 0.0);
  return {-p.eta * p.gamma1 * s.n1.imag(), -p.eta * p.gamma2 * s.n2.imag()};
}

}  // namespace tmsnet::amplifier
