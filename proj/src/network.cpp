#include "tmsnet/network.hpp"

#include <cmath>
#include <sstream>

namespace tmsnet::network {

using core::embed_operator;
using core::LindbladTerm;
using core::OperatorMatrix;
namespace lo = core::local;

void NetworkParams::validate() const {
  const double rates[] = {kappa1, kappa2, gamma1, gamma2, gamma_phi};
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("NetworkParams: rates must be finite and >= 0");
  }
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    std::ostringstream msg;
    msg << "NetworkParams: epsilon = " << epsilon << " outside [0, 1) (parametric threshold)";
    throw ValidationError(msg.str());
  }
  if (!(eta >= 0.0) || !(eta <= 1.0)) throw ValidationError("NetworkParams: eta must lie in [0, 1]");
  if (!std::isfinite(delta1) || !std::isfinite(delta2) || !std::isfinite(tau1) ||
      !std::isfinite(tau2)) {
    throw ValidationError("NetworkParams: detunings and delays must be finite");
  }
}

NetworkParams NetworkParams::symmetric(double epsilon, double beta, double eta,
                                       double normalized_dephasing, double gamma) {
  NetworkParams p;
  p.gamma1 = p.gamma2 = gamma;
  p.kappa1 = p.kappa2 = beta * gamma;
  p.gamma_phi = normalized_dephasing * gamma;
  p.epsilon = epsilon;
  p.eta = eta;
  return p;
}

void TruncationConfig::validate() const {
  if (n_trunc < 2) throw ValidationError("TruncationConfig: n_trunc must be >= 2");
}

HilbertSpec network_space(const TruncationConfig& t) {
  t.validate();
  return HilbertSpec({{kMode1, t.n_trunc}, {kMode2, t.n_trunc}, {kQubit1, 2}, {kQubit2, 2}});
}

HilbertSpec amplifier_space(const TruncationConfig& t) {
  t.validate();
  return HilbertSpec({{kMode1, t.n_trunc}, {kMode2, t.n_trunc}});
}

HilbertSpec qubit_space() { return HilbertSpec({{kQubit1, 2}, {kQubit2, 2}}); }

Superoperator build_cascaded_liouvillian(const NetworkParams& p, const TruncationConfig& t,
                                         const Parts& parts) {
  p.validate();
  t.validate();
  if (!parts.qubits && !parts.amplifier && !parts.cascade) {
    throw ValidationError("build_cascaded_liouvillian: no parts requested");
  }
  const bool with_modes = parts.amplifier || parts.cascade;
  const bool with_qubits = parts.qubits || parts.cascade;
  std::vector<HilbertSpec::Factor> factors;
  if (with_modes) {
    factors.push_back({kMode1, t.n_trunc});
    factors.push_back({kMode2, t.n_trunc});
  }
  if (with_qubits) {
    factors.push_back({kQubit1, 2});
    factors.push_back({kQubit2, 2});
  }
  const HilbertSpec space(factors);

  std::vector<LindbladTerm> terms;
  std::optional<OperatorMatrix> h;
  auto add_h = [&h](const OperatorMatrix& piece) { h = h ? *h + piece : piece; };

  OperatorMatrix a1, a2, sm1, sm2;
  if (with_modes) {
    a1 = embed_operator(lo::annihilation(t.n_trunc), kMode1, space);
    a2 = embed_operator(lo::annihilation(t.n_trunc), kMode2, space);
  }
  if (with_qubits) {
    sm1 = embed_operator(lo::sigma_minus(), kQubit1, space);
    sm2 = embed_operator(lo::sigma_minus(), kQubit2, space);
  }

  if (parts.qubits) {
    const OperatorMatrix sz1 = embed_operator(lo::sigma_z(), kQubit1, space);
    const OperatorMatrix sz2 = embed_operator(lo::sigma_z(), kQubit2, space);
    terms.push_back({p.gamma1, sm1, sm1.adjoint()});
    terms.push_back({p.gamma2, sm2, sm2.adjoint()});
    terms.push_back({0.5 * p.gamma_phi, sz1, sz1});
    terms.push_back({0.5 * p.gamma_phi, sz2, sz2});
  }
  if (parts.amplifier) {
    const OperatorMatrix a1d = a1.adjoint(), a2d = a2.adjoint();
    const double g = std::sqrt(p.kappa1 * p.kappa2) * p.epsilon / 2.0;
    add_h(cplx(p.delta1) * (a1d * a1) + cplx(p.delta2) * (a2d * a2) +
          cplx(0.0, g) * (a1d * a2d - a1 * a2));
    terms.push_back({p.kappa1, a1, a1d});
    terms.push_back({p.kappa2, a2, a2d});
  }
  if (parts.cascade) {
    // [a rho, s+] + [s-, rho a^dag] = D[a, s+] + D[s-, a^dag] - i[H_c, .],
    // H_c = (i/2)(a^dag s- - s+ a).
    const std::pair<const OperatorMatrix*, const OperatorMatrix*> links[] = {{&a1, &sm1},
                                                                            {&a2, &sm2}};
    const double rates[] = {std::sqrt(p.eta * p.gamma1 * p.kappa1),
                            std::sqrt(p.eta * p.gamma2 * p.kappa2)};
    for (int i = 0; i < 2; ++i) {
      const OperatorMatrix& a = *links[i].first;
      const OperatorMatrix& sm = *links[i].second;
      const OperatorMatrix sp = sm.adjoint(), ad = a.adjoint();
      terms.push_back({rates[i], a, sp});
      terms.push_back({rates[i], sm, ad});
      add_h(cplx(0.0, 0.5 * rates[i]) * (ad * sm - sp * a));
    }
  }
  return core::assemble_liouvillian(h, terms, space);
}

SolverConfig network_solver_config(SolverConfig base) {
  base.block_factors = {kQubit1, kQubit2};
  return base;
}

AmplifierMoments amplifier_moments(const DensityMatrix& rho) {
  const HilbertSpec& s = rho.space();
  const int n = s.factor_dim(kMode1);
  const OperatorMatrix a1 = embed_operator(lo::annihilation(n), kMode1, s);
  const OperatorMatrix a2 = embed_operator(lo::annihilation(n), kMode2, s);
  auto ev = [&rho](const OperatorMatrix& op) { return rho.expectation(op.dense()); };
  AmplifierMoments m;
  m.n1 = ev(a1.adjoint() * a1).real();
  m.n2 = ev(a2.adjoint() * a2).real();
  m.a1a2 = ev(a1 * a2);
  m.a1dag_a2 = ev(a1.adjoint() * a2);
  m.a1_sq = ev(a1 * a1);
  m.a2_sq = ev(a2 * a2);
  return m;
}

namespace {

// Largest population of the top Fock level over both modes.
double top_level_population(const DensityMatrix& rho) {
  const HilbertSpec& s = rho.space();
  double worst = 0.0;
  for (const auto& label : {kMode1, kMode2}) {
    const std::size_t pos = s.position(label);
    const int top = s.factors()[pos].dim - 1;
    double pop = 0.0;
    for (Index i = 0; i < s.dim(); ++i) {
      if (s.digits(i)[pos] == top) pop += rho(i, i).real();
    }
    worst = std::max(worst, pop);
  }
  return worst;
}

void check_vanishing(const AmplifierMoments& m) {
  const double worst = std::max({std::abs(m.a1dag_a2), std::abs(m.a1_sq), std::abs(m.a2_sq)});
  if (worst > 1e-8) {
    std::ostringstream msg;
    msg << "amplifier moments that must vanish reach " << worst;
    throw SolverError(msg.str());
  }
}

Warning leakage_warning(double pop) {
  std::ostringstream msg;
  msg << "top Fock level holds population " << pop << " > " << kLeakageThreshold
      << "; increase n_trunc";
  return {"truncation_leakage", msg.str(), pop};
}

}  // namespace

AmplifierState amplifier_steady_state(const NetworkParams& p, const TruncationConfig& t,
                                      const SolverConfig& cfg) {
  const Superoperator l = build_cascaded_liouvillian(p, t, Parts::amplifier_only());
  auto ss = core::steady_state(l, cfg);
  AmplifierState out{std::move(ss.rho), {}, 0.0, std::move(ss.report)};
  out.moments = amplifier_moments(out.rho);
  check_vanishing(out.moments);
  out.top_population = top_level_population(out.rho);
  if (out.top_population > kLeakageThreshold) {
    out.report.warnings.push_back(leakage_warning(out.top_population));
  }
  return out;
}

NetworkSteadyState cascaded_steady_state(const NetworkParams& p, const TruncationConfig& t,
                                         const SolverConfig& cfg) {
  const Superoperator l = build_cascaded_liouvillian(p, t);
  auto ss = core::steady_state(l, cfg);
  NetworkSteadyState out;
  out.qubits = core::partial_trace(ss.rho, {kQubit1, kQubit2});
  out.amplifier = amplifier_moments(ss.rho);
  out.top_population = top_level_population(ss.rho);
  out.report = std::move(ss.report);
  if (out.top_population > kLeakageThreshold) {
    out.report.warnings.push_back(leakage_warning(out.top_population));
  }
  out.full = std::move(ss.rho);
  return out;
}

QubitMoments qubit_moments(const DensityMatrix& q) {
  if (q.dim() != 4) throw ValidationError("qubit_moments: expected a two-qubit state");
  // Basis |q1 q2>: index = 2 q1 + q2.
  QubitMoments m;
  m.excitation1 = (q(2, 2) + q(3, 3)).real();
  m.excitation2 = (q(1, 1) + q(3, 3)).real();
  m.correlation = q(3, 0);
  return m;
}

DarkStateResiduals tms_dark_state_residual(double x, const TruncationConfig& t) {
  t.validate();
  if (!(x >= 0.0) || !(x < 1.0)) throw ValidationError("tms_dark_state_residual: x must lie in [0, 1)");
  const int n = t.n_trunc;
  const int ne = n + 1;  // room for the image of the top level under a^dag
  const HilbertSpec modes({{kMode1, ne}, {kMode2, ne}});
  CVec psi = CVec::Zero(modes.dim());
  const double norm = std::sqrt(1.0 - x * x);
  double amp = norm;
  for (int k = 0; k < n; ++k) {
    psi[modes.compose({k, k})] = amp;
    amp *= x;
  }
  const SparseMat a = lo::annihilation(ne);
  const SparseMat a1 = embed_operator(a, kMode1, modes).mat();
  const SparseMat a2 = embed_operator(a, kMode2, modes).mat();
  const SparseMat a1d = SparseMat(a1.adjoint());
  const SparseMat a2d = SparseMat(a2.adjoint());

  const CVec r1 = a1 * psi - x * (a2d * psi);
  const CVec r2 = a2 * psi - x * (a1d * psi);
  DarkStateResiduals out;
  out.mode1 = r1.norm();
  out.mode2 = r2.norm();

  // H_int = i(s1- a1^dag - s1+ a1 + s2- a2^dag - s2+ a2) on (|00> + x|11>) Psi.
  const HilbertSpec full({{kMode1, ne}, {kMode2, ne}, {kQubit1, 2}, {kQubit2, 2}});
  CVec state = CVec::Zero(full.dim());
  for (Index i = 0; i < modes.dim(); ++i) {
    if (psi[i] == cplx(0.0)) continue;
    const auto d = modes.digits(i);
    state[full.compose({d[0], d[1], 0, 0})] += psi[i];
    state[full.compose({d[0], d[1], 1, 1})] += x * psi[i];
  }
  const OperatorMatrix fa1 = embed_operator(a, kMode1, full);
  const OperatorMatrix fa2 = embed_operator(a, kMode2, full);
  const OperatorMatrix s1 = embed_operator(lo::sigma_minus(), kQubit1, full);
  const OperatorMatrix s2 = embed_operator(lo::sigma_minus(), kQubit2, full);
  const OperatorMatrix hint = cplx(0.0, 1.0) * (s1 * fa1.adjoint() - s1.adjoint() * fa1 +
                                                s2 * fa2.adjoint() - s2.adjoint() * fa2);
  out.interaction = (hint.mat() * state).norm();
  return out;
}

}  // namespace tmsnet::network
