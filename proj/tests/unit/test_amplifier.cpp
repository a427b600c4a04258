#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tmsnet/amplifier.hpp"

using namespace tmsnet;
using namespace tmsnet::amplifier;
using network::NetworkParams;

namespace {

NetworkParams random_params(std::mt19937& rng) {
  std::uniform_real_distribution<double> k(0.2, 5.0), d(-1.0, 1.0), e(0.0, 0.95);
  NetworkParams p;
  p.kappa1 = k(rng);
  p.kappa2 = k(rng);
  p.delta1 = d(rng);
  p.delta2 = d(rng);
  p.epsilon = e(rng);
  return p;
}

}  // namespace

TEST_SUITE("amplifier") {

TEST_CASE("no drive: normally ordered moments vanish") {
  const auto c = steady_covariance(NetworkParams::symmetric(0.0, 3.0));
  CHECK(std::abs(c.moments.n1) < 1e-15);
  CHECK(std::abs(c.moments.n2) < 1e-15);
  CHECK(std::abs(c.moments.a1a2) < 1e-15);
  CHECK(std::abs(c.v0(0, 0) - 1.0) < 1e-14);  // <a1 a1^dag> = 1
}

TEST_CASE("symmetric resonant moments") {
  const auto c = steady_covariance(NetworkParams::symmetric(0.5, 1.0));
  CHECK(c.moments.n1 == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(c.moments.a1a2.real() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("Lyapunov solution matches closed forms and the integral form") {
  std::mt19937 rng(42);
  for (int k = 0; k < 30; ++k) {
    const auto p = random_params(rng);
    if (!DriftModel::from(p).stable()) continue;
    const auto c = steady_covariance(p);
    const auto cf = closed_form_moments(p);
    CHECK(std::abs(c.moments.n1 - cf.n1) < 1e-10);
    CHECK(std::abs(c.moments.n2 - cf.n2) < 1e-10);
    CHECK(std::abs(c.moments.a1a2 - cf.a1a2) < 1e-10);
    CHECK(std::abs(c.moments.a1dag_a2) < 1e-12);
    CHECK(std::abs(c.moments.a1_sq) < 1e-12);
    CHECK(std::abs(c.moments.a2_sq) < 1e-12);
    // Lyapunov residual.
    const auto d = DriftModel::from(p);
    CHECK((d.m * c.v0 + c.v0 * d.m.adjoint() + d.r).norm() < 1e-12);
  }
  NetworkParams p;
  p.kappa1 = 1.0;
  p.kappa2 = 1.6;
  p.delta1 = 0.3;
  p.delta2 = 0.1;
  p.epsilon = 0.6;
  const auto d = oracle::drift(p.kappa1, p.kappa2, p.delta1, p.delta2, p.epsilon);
  Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
  r(0, 0) = p.kappa1;
  r(2, 2) = p.kappa2;
  CHECK((DriftModel::from(p).m - d).norm() == 0.0);
  const auto integral = oracle::covariance_by_integral(d, r);
  CHECK((integral - steady_covariance(p).v0).norm() < 1e-8);
}

TEST_CASE("instability is detected") {
  NetworkParams p = NetworkParams::symmetric(0.5, 1.0);
  p.epsilon = 0.999;
  CHECK(DriftModel::from(p).stable());
  // Bisection on the drift eigenvalue crossing, bypassing the epsilon < 1 guard.
  auto max_re = [](double eps) {
    return oracle::drift(1.0, 1.0, 0.0, 0.0, eps).eigenvalues().real().maxCoeff();
  };
  double lo = 0.5, hi = 1.5;
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    (max_re(mid) < 0.0 ? lo : hi) = mid;
  }
  CHECK(std::abs(lo - 1.0) < 1e-10);
  DriftModel above = DriftModel::from(p);
  above.m = oracle::drift(1.0, 1.0, 0.0, 0.0, 1.01);
  CHECK_FALSE(above.stable());
}

TEST_CASE("spectra at zero frequency and far tails") {
  const auto p = NetworkParams::symmetric(0.5, 1.0);
  const auto s0 = spectra(p, 0.0);
  CHECK(2.0 * s0.n1.real() == doctest::Approx(0.5 * (4.0 - 4.0 / 9.0)).epsilon(1e-12));
  CHECK(std::abs(s0.n1.imag()) < 1e-14);
  const auto far = spectra(p, 1e9);
  CHECK(std::abs(far.n1) < 1e-8);
  CHECK(std::abs(far.a1a2) < 1e-8);
  CHECK(std::abs(far.a2a1) < 1e-8);
}

TEST_CASE("resolvent agrees with the symmetric closed forms") {
  for (double eps : {0.2, 0.5, 0.8}) {
    for (double kappa : {0.5, 2.0}) {
      const auto p = NetworkParams::symmetric(eps, kappa);
      std::vector<double> grid;
      for (int k = 0; k < 20; ++k) grid.push_back(-3.0 + 0.3 * k);
      const auto sp = spectra(p, grid);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const double w = grid[k];
        const double gm = lorentzian_minus(eps, kappa, w), gp = lorentzian_plus(eps, kappa, w);
        CHECK(std::abs(2.0 * sp[k].n1.real() - eps * (gm - gp)) < 1e-10);
        const auto neg = spectra(p, -w);
        CHECK(std::abs(sp[k].a1a2 + neg.a2a1 - eps * (gm + gp)) < 1e-10);
        const auto cf = symmetric_spectra(eps, kappa, 0.0, w);
        CHECK(std::abs(sp[k].n1 - cf.n) < 1e-10);
        CHECK(std::abs(sp[k].a1a2 - cf.a1a2) < 1e-10);
      }
    }
  }
}

TEST_CASE("detuned symmetric closed forms") {
  for (double delta : {-0.3, 0.2, 0.7}) {
    NetworkParams p = NetworkParams::symmetric(0.6, 1.5);
    p.delta1 = p.delta2 = delta;
    for (double w : {-2.0, -0.5, 0.0, 0.4, 3.0}) {
      const auto s = spectra(p, w);
      const auto cf = symmetric_spectra(0.6, 1.5, delta, w);
      CHECK(std::abs(s.n1 - cf.n) < 1e-10);
      CHECK(std::abs(s.n2 - cf.n) < 1e-10);
      CHECK(std::abs(s.a1a2 - cf.a1a2) < 1e-10);
    }
  }
}

TEST_CASE("Markov consistency at zero frequency") {
  for (double eps = 0.1; eps < 0.95; eps += 0.1) {
    for (double eta : {0.5, 1.0}) {
      const auto s = spectra(NetworkParams::symmetric(eps, 1.0), 0.0);
      const double lm = 1.0 / ((1 - eps) * (1 - eps)), lp = 1.0 / ((1 + eps) * (1 + eps));
      CHECK(std::abs(2.0 * eta * s.n1.real() - eps * eta * (lm - lp)) < 1e-12);
      CHECK(std::abs(eta * (s.a1a2 + s.a2a1) - eps * eta * (lm + lp)) < 1e-12);
    }
  }
}

TEST_CASE("spectrum integrates to the photon number") {
  NetworkParams p;
  p.kappa1 = 1.2;
  p.kappa2 = 0.8;
  p.delta1 = 0.2;
  p.delta2 = -0.05;
  p.epsilon = 0.5;
  const SpectrumEvaluator ev(p);
  // w = tan(u), dw = sec^2(u) du.
  auto f = [&](double u) {
    const double t = std::tan(u);
    return 2.0 * ev(t).n1.real() * (1.0 + t * t);
  };
  const double integral = oracle::gauss_legendre(f, -M_PI / 2, M_PI / 2, 400) / (2.0 * M_PI);
  // The normalized spectrum carries a factor kappa1.
  CHECK(std::abs(integral / p.kappa1 - ev.covariance().moments.n1) < 1e-8);
}

TEST_CASE("Lamb shift vanishes for symmetric parameters only") {
  const auto sym = lamb_shift(NetworkParams::symmetric(0.5, 2.0));
  CHECK(std::abs(sym.shift1) < 1e-14);
  NetworkParams p = NetworkParams::symmetric(0.5, 2.0);
  p.delta1 = 0.3;
  CHECK(std::abs(lamb_shift(p).shift1) > 1e-4);
}

}  // TEST_SUITE
