#include "tmsnet/entanglement.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace tmsnet::entanglement {

namespace {

void require_two_qubits(const DensityMatrix& rho, const char* where) {
  if (rho.dim() != 4) throw ValidationError(std::string(where) + ": expected a 4x4 two-qubit state");
}

}  // namespace

double bell_fidelity(const DensityMatrix& rho) {
  require_two_qubits(rho, "bell_fidelity");
  return 0.5 * (rho(0, 0) + rho(3, 3) + rho(0, 3) + rho(3, 0)).real();
}

double fidelity_bound(double epsilon) {
  const double e2 = epsilon * epsilon;
  return std::pow(1.0 + epsilon, 4) / (2.0 * (1.0 + 6.0 * e2 + e2 * e2));
}

double concurrence(const DensityMatrix& rho) {
  require_two_qubits(rho, "concurrence");
  // sigma_y (x) sigma_y is real, anti-diagonal (-1, 1, 1, -1).
  DenseMat yy = DenseMat::Zero(4, 4);
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const DenseMat& r = rho.mat();
  const DenseMat tilde = yy * r.conjugate() * yy;
  const DenseMat prod = r * tilde;
  Eigen::ComplexEigenSolver<DenseMat> es(prod, false);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) {
    const double v = es.eigenvalues()[i].real();
    lam[i] = v > kConcurrenceFloor ? std::sqrt(v) : 0.0;
  }
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return std::clamp(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0);
}

double binary_entropy(double p) {
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(p) + term(1.0 - p);
}

double eof_from_concurrence(double c) {
  c = std::clamp(c, 0.0, 1.0);
  if (c == 0.0) return 0.0;
  return binary_entropy(0.5 * (1.0 + std::sqrt(1.0 - c * c)));
}

double entanglement_of_formation(const DensityMatrix& rho) {
  return eof_from_concurrence(concurrence(rho));
}

double rate(double eof, double pulse_length, double gamma) {
  if (!(pulse_length > 0.0)) throw ValidationError("rate: pulse length must be > 0");
  if (!(gamma > 0.0)) throw ValidationError("rate: gamma must be > 0");
  return eof / (gamma * pulse_length);
}

FidelityEstimates analytic_fidelity_estimates(double epsilon, double beta, double eta,
                                              double gphi) {
  if (!(beta > 0.0)) throw ValidationError("analytic_fidelity_estimates: beta must be > 0");
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    throw ValidationError("analytic_fidelity_estimates: epsilon outside [0, 1)");
  }
  const double loss = 1.0 / (2.0 * beta) + gphi + (1.0 - eta);
  const double om = 1.0 - epsilon;
  FidelityEstimates f;
  f.weak_driving = 0.5 + 2.0 * beta * eta * epsilon / ((1.0 + beta) * (1.0 + 2.0 * gphi));
  f.near_threshold = 1.0 - std::pow(om, 4) / 16.0 - 3.0 / (om * om) * loss;
  f.optimal = 1.0 - (3.0 * std::cbrt(9.0) / 4.0) * std::pow(loss, 2.0 / 3.0);
  return f;
}

EntanglementReport report(const DensityMatrix& rho) {
  EntanglementReport r;
  r.fidelity = bell_fidelity(rho);
  r.concurrence = concurrence(rho);
  r.eof = eof_from_concurrence(r.concurrence);
  return r;
}

EntanglementReport report(const DensityMatrix& rho, double pulse_length, double gamma) {
  EntanglementReport r = report(rho);
  r.rate = rate(r.eof, pulse_length, gamma);
  return r;
}

}  // namespace tmsnet::entanglement
