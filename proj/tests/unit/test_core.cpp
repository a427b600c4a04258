#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tmsnet/core/solvers.hpp"

using namespace tmsnet;
using namespace tmsnet::core;

namespace {

HilbertSpec qq() { return HilbertSpec({{"q1", 2}, {"q2", 2}}); }

OperatorMatrix wrap(const HilbertSpec& s, const DenseMat& m) {
  return OperatorMatrix(s, m.sparseView());
}

Superoperator decaying_mode(int n, double kappa) {
  const HilbertSpec s({{"a", n}});
  const auto a = embed_operator(local::annihilation(n), "a", s);
  return assemble_liouvillian(std::nullopt, {{kappa, a, a.adjoint()}}, s);
}

Superoperator decaying_qubit(double gamma) {
  const HilbertSpec s({{"q", 2}});
  const auto sm = embed_operator(local::sigma_minus(), "q", s);
  return assemble_liouvillian(std::nullopt, {{gamma, sm, sm.adjoint()}}, s);
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("hilbert spec validates factors") {
  CHECK_THROWS_AS(HilbertSpec({{"a", 0}}), ValidationError);
  CHECK_THROWS_AS(HilbertSpec({{"a", 2}, {"a", 3}}), ValidationError);
  const HilbertSpec s({{"a", 3}, {"q", 2}});
  CHECK(s.dim() == 6);
  CHECK_THROWS_AS(s.position("b"), ValidationError);
  for (Index i = 0; i < s.dim(); ++i) CHECK(s.compose(s.digits(i)) == i);
}

TEST_CASE("embed_operator examples") {
  const HilbertSpec s = qq();
  const auto id = embed_operator(local::identity(2), "q2", s);
  CHECK((id.dense() - DenseMat::Identity(4, 4)).norm() == doctest::Approx(0.0));

  const auto sm1 = embed_operator(local::sigma_minus(), "q1", s);
  // <00| sigma_1^- |10>
  CHECK(std::abs(sm1.dense()(s.compose({0, 0}), s.compose({1, 0})) - 1.0) < 1e-15);

  const HilbertSpec qb({{"q", 2}, {"b", 3}});
  const auto a = embed_operator(local::annihilation(3), "b", qb);
  CHECK(a.mat().nonZeros() == 2 * 2);

  CHECK_THROWS_AS(embed_operator(local::sigma_minus(), "nope", s), ValidationError);
  CHECK_THROWS_AS(embed_operator(local::annihilation(3), "q1", s), ValidationError);
}

TEST_CASE("sigma^+ = (sigma^x + i sigma^y)/2") {
  const DenseMat sp = DenseMat(local::sigma_plus());
  const DenseMat built = 0.5 * (DenseMat(local::sigma_x()) + kI * DenseMat(local::sigma_y()));
  CHECK((sp - built).norm() < 1e-15);
}

TEST_CASE("dissipator examples") {
  const HilbertSpec s({{"a", 3}});
  const auto a = embed_operator(local::annihilation(3), "a", s);
  DenseMat one = DenseMat::Zero(3, 3);
  one(1, 1) = 1.0;
  const DenseMat out = dissipator(a, a.adjoint()).apply(one);
  DenseMat expect = DenseMat::Zero(3, 3);
  expect(0, 0) = 1.0;
  expect(1, 1) = -1.0;
  CHECK((out - expect).norm() < 1e-14);

  const HilbertSpec q({{"q", 2}});
  const auto sz = embed_operator(local::sigma_z(), "q", q);
  CVec plus(2), minus(2);
  plus << 1.0, 1.0;
  minus << 1.0, -1.0;
  plus /= std::sqrt(2.0);
  minus /= std::sqrt(2.0);
  const DenseMat pp = plus * plus.adjoint(), mm = minus * minus.adjoint();
  CHECK((dissipator(sz, sz).apply(pp) - (mm - pp)).norm() < 1e-14);

  CHECK_THROWS_AS(dissipator(a, sz), ValidationError);
}

TEST_CASE("vec convention matches direct products on random 4-dim instances") {
  std::mt19937 rng(7);
  const HilbertSpec s = qq();
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMat a = oracle::random_matrix(rng, 4), b = oracle::random_matrix(rng, 4);
    const DenseMat rho = oracle::random_density(rng, 4);
    const auto l = assemble_liouvillian(std::nullopt, {{1.0, wrap(s, a), wrap(s, b)}}, s);
    const DenseMat got = unvec(l.mat() * vec(rho), 4);
    CHECK((got - oracle::dissipate(a, b, rho)).norm() < 1e-12);
  }
}

TEST_CASE("assembled generator equals the dense oracle and annihilates the trace") {
  std::mt19937 rng(11);
  const HilbertSpec s = qq();
  for (int trial = 0; trial < 5; ++trial) {
    DenseMat h = oracle::random_matrix(rng, 4);
    h = 0.5 * (h + h.adjoint()).eval();
    const DenseMat a = oracle::random_matrix(rng, 4);
    const DenseMat b = oracle::random_matrix(rng, 4);
    const auto l = assemble_liouvillian(wrap(s, h), {{0.7, wrap(s, a), wrap(s, a.adjoint())},
                                                      {1.3, wrap(s, b), wrap(s, b.adjoint())}});
    const DenseMat ref = oracle::dense_liouvillian(
        h, {{0.7, a, a.adjoint()}, {1.3, b, b.adjoint()}});
    CHECK((DenseMat(l.mat()) - ref).norm() < 1e-11);
    CHECK(trace_annihilation_defect(l) < 1e-12);
  }
  // Empty generator.
  const auto zero = assemble_liouvillian(std::nullopt, {}, s);
  CHECK(zero.mat().nonZeros() == 0);
}

TEST_CASE("decaying mode relaxes to vacuum") {
  const auto l = decaying_mode(6, 2.0);
  for (auto method : {SteadyMethod::direct_sparse, SteadyMethod::shift_invert_iterative}) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.abs_tol = 1e-12;
    const auto ss = steady_state(l, cfg);
    CHECK(std::abs(ss.rho(0, 0) - 1.0) < 1e-12);
    CHECK(ss.report.residual < 1e-12);
  }
}

TEST_CASE("degenerate kernel is reported") {
  // Two decoupled qubits, only one of which decays: a family of steady states.
  const HilbertSpec s = qq();
  const auto sm = embed_operator(local::sigma_minus(), "q1", s);
  const auto sz2 = embed_operator(local::sigma_z(), "q2", s);
  const auto l = assemble_liouvillian(std::nullopt, {{1.0, sm, sm.adjoint()}, {1.0, sz2, sz2}}, s);
  for (auto method : {SteadyMethod::direct_sparse, SteadyMethod::shift_invert_iterative}) {
    SolverConfig cfg;
    cfg.method = method;
    CHECK_THROWS_AS(steady_state(l, cfg), SolverError);
  }
}

TEST_CASE("direct and iterative steady states agree with the dense null vector") {
  std::mt19937 rng(3);
  const HilbertSpec s({{"a", 4}, {"q", 2}});
  const auto a = embed_operator(local::annihilation(4), "a", s);
  const auto sm = embed_operator(local::sigma_minus(), "q", s);
  const auto h = cplx(0.4) * (a.adjoint() * sm + sm.adjoint() * a) + cplx(0.3) * (a + a.adjoint());
  const auto l = assemble_liouvillian(h, {{1.0, a, a.adjoint()}, {0.5, sm, sm.adjoint()}});
  const DenseMat ref = oracle::dense_steady_state(DenseMat(l.mat()));
  SolverConfig direct, iterative;
  direct.method = SteadyMethod::direct_sparse;
  iterative.method = SteadyMethod::shift_invert_iterative;
  iterative.block_factors = {"q"};
  const auto r1 = steady_state(l, direct);
  const auto r2 = steady_state(l, iterative);
  CHECK((r1.rho.mat() - ref).norm() < 1e-9);
  CHECK((r2.rho.mat() - ref).norm() < 1e-9);
}

TEST_CASE("qubit decay follows exp(-gamma t) for both integrators") {
  const double gamma = 1.7;
  const auto l = decaying_qubit(gamma);
  const auto rho0 = DensityMatrix::basis_state(l.space(), 1);
  const std::vector<double> times = {0.0, 0.1, 0.5, 1.0, 2.0, 4.0};
  for (auto ode : {OdeMethod::runge_kutta, OdeMethod::krylov}) {
    SolverConfig cfg;
    cfg.ode = ode;
    cfg.abs_tol = 1e-12;
    cfg.rel_tol = 1e-10;
    const auto traj = evolve(l, rho0, times, cfg);
    REQUIRE(traj.size() == times.size());
    CHECK((traj[0].mat() - rho0.mat()).norm() == 0.0);
    for (std::size_t k = 0; k < times.size(); ++k) {
      CHECK(std::abs(traj[k](1, 1).real() - std::exp(-gamma * times[k])) < 1e-8);
    }
  }
}

TEST_CASE("evolution keeps Hermiticity and converges to the steady state") {
  const HilbertSpec s({{"a", 4}, {"q", 2}});
  const auto a = embed_operator(local::annihilation(4), "a", s);
  const auto sm = embed_operator(local::sigma_minus(), "q", s);
  const auto h = cplx(0.5) * (a.adjoint() * sm + sm.adjoint() * a) + cplx(0.4) * (a + a.adjoint());
  const auto l = assemble_liouvillian(h, {{1.0, a, a.adjoint()}, {1.0, sm, sm.adjoint()}});
  SolverConfig cfg;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-10;
  const auto ss = steady_state(l, cfg);

  std::mt19937 rng(5);
  const DensityMatrix rho0(s, oracle::random_density(rng, 8));
  std::vector<double> times;
  for (int k = 0; k <= 40; ++k) times.push_back(k);
  for (auto ode : {OdeMethod::runge_kutta, OdeMethod::krylov}) {
    cfg.ode = ode;
    const auto traj = evolve(l, rho0, times, cfg);
    for (const auto& r : traj) CHECK((r.mat() - r.mat().adjoint()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((traj.back().mat() - ss.rho.mat()).norm() < 10.0 * 1e-10);

    // Idempotence: a stationary state stays put for gamma t = 10.
    const auto held = evolve(l, ss.rho, {10.0}, cfg);
    CHECK((held.front().mat() - ss.rho.mat()).norm() <= 10.0 * cfg.abs_tol + 1e-10);
  }
}

TEST_CASE("partial trace") {
  const HilbertSpec s = qq();
  CVec phi = CVec::Zero(4);
  phi[0] = phi[3] = 1.0 / std::sqrt(2.0);
  const auto bell = DensityMatrix::pure(s, phi);
  const auto m = partial_trace(bell, {"q1"});
  CHECK((m.mat() - 0.5 * DenseMat::Identity(2, 2)).norm() < 1e-14);

  std::mt19937 rng(9);
  const DenseMat ra = oracle::random_density(rng, 2), rb = oracle::random_density(rng, 2);
  const DensityMatrix prod(s, kron(ra, rb));
  CHECK((partial_trace(prod, {"q2"}).mat() - rb).norm() < 1e-13);
  CHECK((partial_trace(prod, {"q1"}).mat() - ra).norm() < 1e-13);

  const DensityMatrix mixed(HilbertSpec({{"a", 3}, {"q", 2}}), oracle::random_density(rng, 6));
  CHECK(std::abs(partial_trace(mixed, {"q"}).mat().trace() - 1.0) < 1e-13);
  CHECK_THROWS_AS(partial_trace(mixed, {"zz"}), ValidationError);
}

TEST_CASE("density matrix validation") {
  const HilbertSpec s({{"q", 2}});
  DenseMat bad = DenseMat::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix(s, bad), ValidationError);  // trace 2
  DenseMat nh = 0.5 * DenseMat::Identity(2, 2);
  nh(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix(s, nh), ValidationError);
  DenseMat neg = DenseMat::Zero(2, 2);
  neg(0, 0) = 1.1;
  neg(1, 1) = -0.1;
  const DensityMatrix w(s, neg);
  REQUIRE(w.warnings().size() == 1);
  CHECK(w.warnings()[0].code == "positivity");
  CHECK(w.warnings()[0].value == doctest::Approx(-0.1));
}

TEST_CASE("solver config rejects non-positive tolerances") {
  SolverConfig cfg;
  cfg.abs_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS(evolve(decaying_qubit(1.0), DensityMatrix::basis_state(HilbertSpec({{"q", 2}}), 0),
                         {1.0, 0.5}),
                  ValidationError);
}

}  // TEST_SUITE
