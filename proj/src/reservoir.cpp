#include "tmsnet/reservoir.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

namespace tmsnet::reservoir {

using core::embed_operator;
using core::OperatorMatrix;
namespace lo = core::local;

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::markov: return "markov";
    case Provenance::fma_closed: return "fma_closed";
    case Provenance::filtered_numeric: return "filtered_numeric";
    case Provenance::user: return "user";
  }
  return "?";
}

double ReservoirMoments::physicality_excess() const {
  return std::norm(m) - (n1 * n2 + std::min(n1, n2));
}

namespace {

void check_epsilon(double epsilon, const char* where) {
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    std::ostringstream msg;
    msg << where << ": epsilon = " << epsilon << " outside [0, 1)";
    throw ValidationError(msg.str());
  }
}

void require_physical(const ReservoirMoments& m, const char* where) {
  if (m.n1 < 0.0 || m.n2 < 0.0) throw ValidationError(std::string(where) + ": negative occupation");
  const double scale = std::max(1.0, std::norm(m.m));
  if (m.physicality_excess() > 1e-9 * scale) {
    std::ostringstream msg;
    msg << where << ": non-physical moments, |M|^2 exceeds the bound by " << m.physicality_excess();
    throw ValidationError(msg.str());
  }
}

}  // namespace

ReservoirMoments markov_moments(double epsilon, double eta) {
  check_epsilon(epsilon, "markov_moments");
  if (!(eta >= 0.0) || !(eta <= 1.0)) throw ValidationError("markov_moments: eta outside [0, 1]");
  const double lm = 1.0 / ((1.0 - epsilon) * (1.0 - epsilon));
  const double lp = 1.0 / ((1.0 + epsilon) * (1.0 + epsilon));
  ReservoirMoments r;
  r.n1 = r.n2 = epsilon * eta * (lm - lp);
  r.m = epsilon * eta * (lm + lp);
  r.provenance = Provenance::markov;
  return r;
}

ReservoirMoments filtered_moments(const NetworkParams& p, const QuadratureConfig& q) {
  p.validate();
  if (!(p.gamma1 > 0.0) || !(p.gamma2 > 0.0)) {
    throw ValidationError("filtered_moments: qubit decay rates must be > 0");
  }
  const amplifier::SpectrumEvaluator spec(p);
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double half_pi = std::numbers::pi / 2.0;
  ReservoirMoments out;
  out.provenance = Provenance::filtered_numeric;

  auto integrate = [&](auto&& f, const char* what) {
    double err = 0.0, l1 = 0.0;
    const double v = GK::integrate(f, -half_pi, half_pi, q.max_depth, q.rel_tol, &err, &l1);
    if (!std::isfinite(v) || err > 1e3 * q.rel_tol * std::max(l1, 1e-300)) {
      std::ostringstream msg;
      msg << "filtered_moments: quadrature for " << what << " did not converge (error " << err
          << ", scale " << l1 << ")";
      throw SolverError(msg.str());
    }
    return v;
  };

  // N_i = 2 eta gamma int dw/2pi I(w) / (gamma^2/4 + w^2). With w = (gamma/2) tan u
  // the Lorentzian weight becomes (2/gamma) du.
  auto occupation = [&](double gamma, int which) {
    auto value = [&, gamma, which](double u) {
      const auto s = spec((gamma / 2.0) * std::tan(u));
      return which == 1 ? s.n1 : s.n2;
    };
    const double re = integrate([&](double u) { return value(u).real(); }, "N (real part)");
    const double im = integrate([&](double u) { return value(u).imag(); }, "N (imaginary part)");
    const double k = 2.0 * p.eta / std::numbers::pi;
    return cplx(k * re, k * im);
  };
  const cplx n1 = occupation(p.gamma1, 1);
  const cplx n2 = occupation(p.gamma2, 2);
  out.n1 = n1.real();
  out.n2 = n2.real();
  const double im = std::max(std::abs(n1.imag()), std::abs(n2.imag()));
  if (im > 1e-8) {
    std::ostringstream msg;
    msg << "occupation integrals carry an imaginary part " << im
        << " (a frequency shift; see lamb_shift)";
    out.warnings.push_back({"occupation_imaginary", msg.str(), im});
  }

  // M = sqrt(g1 g2) eta int dw/2pi [I12(w) + I21(-w)] e^{i w tau} / ((g1/2 + i w)(g2/2 - i w)).
  const double g = 0.5 * (p.gamma1 + p.gamma2);
  const double tau = p.delay();
  auto kernel = [&](double w) {
    const cplx sum = spec(w).a1a2 + spec(-w).a2a1;
    return sum / (cplx(p.gamma1 / 2.0, w) * cplx(p.gamma2 / 2.0, -w));
  };
  double mre = 0.0, mim = 0.0;
  if (tau == 0.0) {
    auto corr = [&](double u) {
      const double t = std::tan(u);
      return kernel((g / 2.0) * t) * (g / 2.0) * (1.0 + t * t);
    };
    mre = integrate([&](double u) { return corr(u).real(); }, "M (real part)");
    mim = integrate([&](double u) { return corr(u).imag(); }, "M (imaginary part)");
  } else {
    // The phase e^{i w tau} never decays, so the delayed case goes through
    // half-line Fourier quadrature of the even and odd parts of the kernel.
    const double at = std::abs(tau), sgn = tau > 0.0 ? 1.0 : -1.0;
    boost::math::quadrature::ooura_fourier_cos<double> fcos(q.rel_tol);
    boost::math::quadrature::ooura_fourier_sin<double> fsin(q.rel_tol);
    auto even = [&](double w) { return kernel(w) + kernel(-w); };
    auto odd = [&](double w) { return kernel(w) - kernel(-w); };
    const std::pair<double, double> parts[] = {
        fcos.integrate([&](double w) { return even(w).real(); }, at),
        fcos.integrate([&](double w) { return even(w).imag(); }, at),
        fsin.integrate([&](double w) { return odd(w).real(); }, at),
        fsin.integrate([&](double w) { return odd(w).imag(); }, at)};
    double scale = 0.0;
    for (const auto& [v, e] : parts) scale += std::abs(v);
    for (const auto& [v, e] : parts) {
      // The error estimate is relative and undefined for a vanishing part.
      const bool negligible = std::abs(v) <= 1e-14 * scale;
      if (!std::isfinite(v) || (!negligible && !(e <= 1e3 * q.rel_tol))) {
        std::ostringstream msg;
        msg << "filtered_moments: Fourier quadrature for M did not converge (relative error " << e << ")";
        throw SolverError(msg.str());
      }
    }
    mre = parts[0].first - sgn * parts[3].first;
    mim = parts[1].first + sgn * parts[2].first;
  }
  out.m = std::sqrt(p.gamma1 * p.gamma2) * p.eta / (2.0 * std::numbers::pi) * cplx(mre, mim);

  if (out.physicality_excess() > 1e-8 * std::max(1.0, std::norm(out.m))) {
    std::ostringstream msg;
    msg << "filtered moments violate |M|^2 <= N1 N2 + min(N1, N2) by " << out.physicality_excess();
    out.warnings.push_back({"physicality", msg.str(), out.physicality_excess()});
  }
  return out;
}

ReservoirMoments fma_symmetric_closed_form(double epsilon, double beta, double eta) {
  check_epsilon(epsilon, "fma_symmetric_closed_form");
  if (!(beta > 0.0)) throw ValidationError("fma_symmetric_closed_form: beta must be > 0");
  if (!(eta >= 0.0) || !(eta <= 1.0)) throw ValidationError("fma_symmetric_closed_form: eta outside [0, 1]");
  const double e2 = epsilon * epsilon;
  const double den = ((beta + 1.0) * (beta + 1.0) - beta * beta * e2) * (1.0 - e2);
  ReservoirMoments r;
  r.n1 = r.n2 = 2.0 * e2 * beta * (1.0 + 2.0 * beta) * eta / den;
  r.m = 2.0 * epsilon * beta * (e2 * beta + beta + 1.0) * eta / den;
  r.provenance = Provenance::fma_closed;
  return r;
}

BetaExpansion beta_expansion(double epsilon, double beta) {
  check_epsilon(epsilon, "beta_expansion");
  if (!(beta > 0.0)) throw ValidationError("beta_expansion: beta must be > 0");
  const double d = (1.0 - epsilon * epsilon) * (1.0 - epsilon * epsilon);
  return {2.0 * std::atanh(epsilon) - 2.0 * epsilon / (beta * d),
          1.0 - 4.0 * epsilon * epsilon / (beta * d)};
}

EffectiveSqueezing effective_squeezing(const ReservoirMoments& m) {
  if (!m.symmetric(1e-9)) throw ValidationError("effective_squeezing: requires N1 = N2");
  const double n = 0.5 * (m.n1 + m.n2);
  const double am = std::abs(m.m);
  if (n < 0.0 || !(2.0 * am < 2.0 * n + 1.0)) {
    throw ValidationError("effective_squeezing: non-physical moments (2|M| >= 2N + 1)");
  }
  const double disc = (2.0 * n + 1.0) * (2.0 * n + 1.0) - 4.0 * am * am;
  EffectiveSqueezing s;
  s.r_eff = 0.5 * std::atanh(2.0 * am / (2.0 * n + 1.0));
  s.mu_eff = 1.0 / std::sqrt(disc);
  s.nbar_eff = 0.5 * (1.0 / s.mu_eff - 1.0);
  s.s_db = 20.0 * s.r_eff / std::numbers::ln10;
  return s;
}

ReservoirMoments moments_from(double r_eff, double mu_eff) {
  if (!(r_eff >= 0.0) || !std::isfinite(r_eff)) throw ValidationError("moments_from: r_eff must be >= 0");
  if (!(mu_eff > 0.0) || !(mu_eff <= 1.0)) throw ValidationError("moments_from: mu_eff outside (0, 1]");
  ReservoirMoments m;
  m.n1 = m.n2 = 0.5 * (std::cosh(2.0 * r_eff) / mu_eff - 1.0);
  m.m = std::sinh(2.0 * r_eff) / (2.0 * mu_eff);
  m.provenance = Provenance::user;
  return m;
}

core::Superoperator effective_liouvillian(const ReservoirMoments& m, const EffectiveOptions& o) {
  const core::HilbertSpec space = network::qubit_space();
  const OperatorMatrix sm1 = embed_operator(lo::sigma_minus(), network::kQubit1, space);
  const OperatorMatrix sm2 = embed_operator(lo::sigma_minus(), network::kQubit2, space);
  const OperatorMatrix sp1 = sm1.adjoint(), sp2 = sm2.adjoint();
  const OperatorMatrix sz1 = embed_operator(lo::sigma_z(), network::kQubit1, space);
  const OperatorMatrix sz2 = embed_operator(lo::sigma_z(), network::kQubit2, space);

  std::vector<core::LindbladTerm> terms = {
      {o.gamma1 * (1.0 + m.n1), sm1, sp1}, {o.gamma1 * m.n1, sp1, sm1},
      {o.gamma2 * (1.0 + m.n2), sm2, sp2}, {o.gamma2 * m.n2, sp2, sm2},
      {0.5 * o.gamma_phi, sz1, sz1},       {0.5 * o.gamma_phi, sz2, sz2},
  };
  std::optional<OperatorMatrix> h;
  if (o.shift1 != 0.0 || o.shift2 != 0.0) h = cplx(o.shift1) * sz1 + cplx(o.shift2) * sz2;
  const core::Superoperator base = core::assemble_liouvillian(h, terms, space);

  // -sqrt(g1 g2) {M (D[s1+, s2+] + D[s2+, s1+]) + h.c.}; the adjoint of
  // M D[A, B] is M* D[B^dag, A^dag].
  const double g12 = std::sqrt(o.gamma1 * o.gamma2);
  SparseMat cross = m.m * (core::dissipator(sp1, sp2).mat() + core::dissipator(sp2, sp1).mat());
  cross += std::conj(m.m) * (core::dissipator(sm2, sm1).mat() + core::dissipator(sm1, sm2).mat());
  SparseMat total = base.mat() - g12 * cross;
  total.prune(cplx(0.0));
  return core::Superoperator(space, std::move(total));
}

DensityMatrix effective_steady_state_analytic(const ReservoirMoments& m, double gphi) {
  if (!m.symmetric(1e-9)) throw ValidationError("effective_steady_state_analytic: requires N1 = N2");
  if (!(gphi >= 0.0)) throw ValidationError("effective_steady_state_analytic: dephasing must be >= 0");
  require_physical(m, "effective_steady_state_analytic");
  const double n = 0.5 * (m.n1 + m.n2);
  // Distance from the pure-state boundary |M|^2 = N (N + 1); a value below the
  // rounding of its inputs is snapped to zero.
  const double nn = n * (n + 1.0), m2 = std::norm(m.m);
  double d = nn - m2;
  if (std::abs(d) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(nn, m2)) d = 0.0;
  const double lambda = (1.0 + 2.0 * n) * (1.0 + 2.0 * gphi * (1.0 + 2.0 * n) + 4.0 * d);
  DenseMat rho = DenseMat::Zero(4, 4);
  rho(0, 0) = ((1.0 + n) * (1.0 + 2.0 * gphi * (1.0 + n)) + d * (3.0 + 2.0 * n)) / lambda;
  rho(2, 2) = (2.0 * gphi * nn + (2.0 * n + 1.0) * d) / lambda;
  rho(1, 1) = rho(2, 2);
  rho(3, 3) = (n * (1.0 + 2.0 * gphi * n) + d * (2.0 * n - 1.0)) / lambda;
  rho(3, 0) = m.m / lambda;
  rho(0, 3) = std::conj(rho(3, 0));
  core::StateTolerance tol;
  tol.trace = 1e-9;
  return DensityMatrix(network::qubit_space(), std::move(rho), tol);
}

DensityMatrix effective_steady_state_numeric(const ReservoirMoments& m, const EffectiveOptions& o) {
  require_physical(m, "effective_steady_state_numeric");
  core::SolverConfig cfg;
  cfg.method = core::SteadyMethod::direct_sparse;
  cfg.abs_tol = 1e-11;
  auto ss = core::steady_state(effective_liouvillian(m, o), cfg);
  return std::move(ss.rho);
}

DensityMatrix effective_steady_state(const ReservoirMoments& m, double gphi) {
  if (m.symmetric(1e-9)) return effective_steady_state_analytic(m, gphi);
  EffectiveOptions o;
  o.gamma_phi = gphi;
  return effective_steady_state_numeric(m, o);
}

EffectiveOptions effective_options(const NetworkParams& p, bool include_lamb_shift) {
  EffectiveOptions o;
  o.gamma1 = p.gamma1;
  o.gamma2 = p.gamma2;
  o.gamma_phi = p.gamma_phi;
  if (include_lamb_shift) {
    const auto ls = amplifier::lamb_shift(p);
    o.shift1 = ls.shift1;
    o.shift2 = ls.shift2;
  }
  return o;
}

}  // namespace tmsnet::reservoir
