#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tmsnet/entanglement.hpp"
#include "tmsnet/network.hpp"
#include "tmsnet/reservoir.hpp"

using namespace tmsnet;
using namespace tmsnet::entanglement;

namespace {

DensityMatrix state(const oracle::Mat& m) { return DensityMatrix(network::qubit_space(), m); }

DensityMatrix from_ket(const oracle::Vec& psi) {
  return state(psi * psi.adjoint() / psi.squaredNorm());
}

}  // namespace

TEST_SUITE("entanglement") {

TEST_CASE("fidelity of simple states") {
  oracle::Vec phi = oracle::Vec::Zero(4);
  phi(0) = phi(3) = 1.0;
  CHECK(bell_fidelity(from_ket(phi)) == doctest::Approx(1.0).epsilon(1e-15));
  oracle::Vec zero = oracle::Vec::Zero(4);
  zero(0) = 1.0;
  CHECK(bell_fidelity(from_ket(zero)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fidelity_bound(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fidelity_bound(0.5) == doctest::Approx(5.0625 / 5.125).epsilon(1e-14));
  CHECK(fidelity_bound(0.5) == doctest::Approx(0.98780).epsilon(1e-5));
}

TEST_CASE("Markov steady state saturates the bound") {
  for (int k = 0; k <= 9; ++k) {
    const double eps = 0.1 * k;
    const auto rho = reservoir::effective_steady_state(reservoir::markov_moments(eps, 1.0), 0.0);
    CHECK(std::abs(bell_fidelity(rho) - fidelity_bound(eps)) < 1e-12);
  }
}

TEST_CASE("concurrence of known states") {
  oracle::Vec phi = oracle::Vec::Zero(4);
  phi(0) = phi(3) = 1.0;
  CHECK(concurrence(from_ket(phi)) == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937 rng(3);
  for (int k = 0; k < 10; ++k) {
    const oracle::Mat a = oracle::random_density(rng, 2), b = oracle::random_density(rng, 2);
    CHECK(concurrence(state(oracle::kron(a, b))) == 0.0);
  }
  const auto m = reservoir::markov_moments(0.5, 1.0);
  const auto pure = reservoir::effective_steady_state(m, 0.0);
  const double expect = 2.0 * std::sqrt(m.n1 * (m.n1 + 1.0)) / (2.0 * m.n1 + 1.0);
  CHECK(concurrence(pure) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(expect == doctest::Approx(0.97561).epsilon(1e-5));
}

TEST_CASE("concurrence agrees with the Hermitian-form oracle") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    // Mix a random Bell-like pure state with a random mixed state to cover both sides of C = 0.
    oracle::Vec psi = oracle::Vec::Zero(4);
    const double th = u(rng) * M_PI / 2.0;
    psi(0) = std::cos(th);
    psi(3) = std::polar(std::sin(th), 2.0 * M_PI * u(rng));
    const double w = u(rng);
    const oracle::Mat rho = w * psi * psi.adjoint() + (1.0 - w) * oracle::random_density(rng, 4);
    CHECK(std::abs(concurrence(state(rho)) - oracle::concurrence(rho)) < 1e-8);
  }
}

TEST_CASE("local phase rotations leave concurrence unchanged") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  for (int k = 0; k < 20; ++k) {
    const oracle::Mat rho = 0.7 * oracle::random_density(rng, 4) +
                            0.3 * from_ket(oracle::Vec::Ones(4)).mat();
    oracle::Mat r1 = oracle::Mat::Zero(2, 2), r2 = oracle::Mat::Zero(2, 2);
    r1(0, 0) = std::polar(1.0, u(rng));
    r1(1, 1) = std::polar(1.0, u(rng));
    r2(0, 0) = std::polar(1.0, u(rng));
    r2(1, 1) = std::polar(1.0, u(rng));
    const oracle::Mat uu = oracle::kron(r1, r2);
    const double c0 = concurrence(state(rho));
    const double c1 = concurrence(state(uu * rho * uu.adjoint()));
    CHECK(std::abs(c0 - c1) < 1e-12);
  }
}

TEST_CASE("entanglement of formation") {
  CHECK(eof_from_concurrence(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eof_from_concurrence(0.0) == 0.0);
  CHECK(eof_from_concurrence(0.97561) == doctest::Approx(0.96497).epsilon(1e-5));
  double prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double e = eof_from_concurrence(0.01 * k);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(rate(1.0, 10.0, 1.0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(rate(1.0, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(rate(1.0, 1.0, -1.0), ValidationError);
  const auto r = report(reservoir::effective_steady_state(reservoir::markov_moments(0.3, 1.0), 0.0), 5.0, 1.0);
  REQUIRE(r.rate.has_value());
  CHECK(*r.rate == doctest::Approx(r.eof / 5.0));
}

TEST_CASE("analytic fidelity estimates") {
  const auto w = analytic_fidelity_estimates(0.05, 10.0, 1.0, 0.0);
  CHECK(w.weak_driving == doctest::Approx(0.5 + 20.0 / 11.0 * 0.05).epsilon(1e-14));
  CHECK(w.weak_driving == doctest::Approx(0.59091).epsilon(1e-5));
  const auto slope = analytic_fidelity_estimates(0.01, 1e9, 1.0, 0.0);
  CHECK((slope.weak_driving - 0.5) / 0.01 == doctest::Approx(2.0).epsilon(1e-8));
  const auto o = analytic_fidelity_estimates(0.5, 100.0, 1.0, 0.0);
  CHECK(o.optimal == doctest::Approx(0.9543).epsilon(1e-4));
  CHECK(o.near_threshold == doctest::Approx(1.0 - 0.0625 / 16.0 - 3.0 / 0.25 * 0.005).epsilon(1e-14));
}

TEST_CASE("entanglement appears exactly when fidelity exceeds one half") {
  int checked = 0;
  for (double mu = 0.2; mu <= 1.0; mu += 0.05) {
    for (double r = 0.05; r <= 3.0; r += 0.15) {
      const auto rho = reservoir::effective_steady_state(reservoir::moments_from(r, mu), 0.0);
      const double f = bell_fidelity(rho);
      if (std::abs(f - 0.5) < 1e-6) continue;
      CHECK((concurrence(rho) > 0.0) == (f > 0.5));
      ++checked;
    }
  }
  CHECK(checked > 200);
}

}  // TEST_SUITE
