// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                   run everything
//   acceptance --only 1,2,3      run a subset
//   acceptance --expect-fail 5   report criterion 5 as a known failure (exit status unaffected)
//
// TMSNET_LONG=1 adds the n_trunc = 20 truncation tier to criterion 12.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "tmsnet/amplifier.hpp"
#include "tmsnet/delay.hpp"
#include "tmsnet/entanglement.hpp"
#include "tmsnet/experiments/runner.hpp"
#include "tmsnet/network.hpp"
#include "tmsnet/reservoir.hpp"

using namespace tmsnet;
using network::NetworkParams;
using network::TruncationConfig;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

experiments::Dataset run_spec(const experiments::ExperimentSpec& s) {
  auto res = experiments::run(s);
  if (res.failures > 0) throw SolverError("a unit failed: " + res.manifest.at("units").dump());
  return std::move(res.data);
}

std::size_t col(const experiments::Dataset& d, const std::string& name) {
  const auto it = std::find(d.columns.begin(), d.columns.end(), name);
  if (it == d.columns.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - d.columns.begin());
}

double num(const experiments::Row& r, std::size_t i) { return std::get<double>(r[i]); }

// Closed forms for the amplifier moments, written out independently of the library.
struct ClosedMoments {
  double n1, n2;
  oracle::cplx a1a2;
};

ClosedMoments closed_moments(const NetworkParams& p) {
  const double k = p.kappa1 + p.kappa2, d = p.delta1 + p.delta2, e = p.epsilon;
  const double den = 4.0 * d * d + (1.0 - e * e) * k * k;
  return {p.kappa2 * k * e * e / den, p.kappa1 * k * e * e / den,
          std::sqrt(p.kappa1 * p.kappa2) * e * oracle::cplx(k, -2.0 * d) / den};
}

Outcome c1_gaussian() {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> k(0.2, 5.0), d(-1.0, 1.0), e(0.0, 0.95);
  double worst = 0.0;
  int used = 0;
  while (used < 50) {
    NetworkParams p;
    p.kappa1 = k(rng);
    p.kappa2 = k(rng);
    p.delta1 = d(rng);
    p.delta2 = d(rng);
    p.epsilon = e(rng);
    if (!amplifier::DriftModel::from(p).stable()) continue;
    ++used;
    const auto c = amplifier::steady_covariance(p);
    const auto o = closed_moments(p);
    worst = std::max({worst, std::abs(c.moments.n1 - o.n1), std::abs(c.moments.n2 - o.n2),
                      std::abs(c.moments.a1a2 - o.a1a2)});
  }
  double spec_worst = 0.0;
  for (double eps : {0.2, 0.5, 0.8}) {
    for (double kappa : {0.5, 1.0, 3.0}) {
      const auto p = NetworkParams::symmetric(eps, kappa);
      for (int i = -20; i <= 20; ++i) {
        const double w = 0.25 * i;
        const double lm = kappa * kappa / (std::pow(kappa * (1 - eps), 2) + 4 * w * w);
        const double lp = kappa * kappa / (std::pow(kappa * (1 + eps), 2) + 4 * w * w);
        const auto s = amplifier::spectra(p, w);
        const auto sm = amplifier::spectra(p, -w);
        spec_worst = std::max({spec_worst, std::abs(2.0 * s.n1.real() - eps * (lm - lp)),
                               std::abs(s.a1a2 + sm.a2a1 - eps * (lm + lp))});
      }
    }
  }
  return {worst < 1e-10 && spec_worst < 1e-10,
          "moments max err " + fmt(worst) + " over 50 points, spectra max err " + fmt(spec_worst)};
}

Outcome c2_markov_identity() {
  double worst = 0.0;
  for (int k = 1; k <= 9; ++k) {
    for (double eta : {0.5, 1.0}) {
      const auto m = reservoir::markov_moments(0.1 * k, eta);
      const double rhs = m.n1 * (m.n1 + eta);
      worst = std::max(worst, std::abs(std::norm(m.m) - rhs) / std::max(1.0, rhs));
    }
  }
  return {worst <= 1e-12, "max | |M|^2 - N(N+eta) | = " + fmt(worst)};
}

Outcome c3_bound() {
  double worst = 0.0;
  for (int k = 0; k <= 90; ++k) {
    const double eps = 0.01 * k;
    const auto rho = reservoir::effective_steady_state(reservoir::markov_moments(eps, 1.0), 0.0);
    const double bound = std::pow(1 + eps, 4) / (2.0 * (1 + 6 * eps * eps + std::pow(eps, 4)));
    worst = std::max(worst, std::abs(entanglement::bell_fidelity(rho) - bound));
  }
  const double half = entanglement::bell_fidelity(
      reservoir::effective_steady_state(reservoir::markov_moments(0.5, 1.0), 0.0));
  return {worst <= 1e-12 && std::abs(half - 0.98780) < 5e-6,
          "max deviation " + fmt(worst) + ", F(0.5) = " + fmt(half)};
}

Outcome c4_fma_closed_form() {
  double worst = 0.0;
  int points = 0;
  for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double beta : {0.5, 1.0, 10.0, 100.0, 1000.0}) {
      const auto q = reservoir::filtered_moments(NetworkParams::symmetric(eps, beta));
      const auto c = reservoir::fma_symmetric_closed_form(eps, beta, 1.0);
      worst = std::max({worst, rel(q.n1, c.n1), rel(q.n2, c.n2), std::abs(q.m - c.m) / std::abs(c.m)});
      ++points;
    }
  }
  return {points >= 25 && worst <= 1e-8, std::to_string(points) + " points, max rel err " + fmt(worst)};
}

Outcome c5_weak_driving() {
  double worst = 0.0;
  std::ostringstream os;
  for (double beta : {1.0, 10.0}) {
    const auto p = NetworkParams::symmetric(0.05, beta);
    const auto ss = network::cascaded_steady_state(p, TruncationConfig{8});
    const auto q = network::qubit_moments(ss.qubits);
    const auto f = reservoir::filtered_moments(p);
    const double e1 = rel(q.excitation1, f.n1), e2 = rel(q.excitation2, f.n2);
    const double em = std::abs(q.correlation - f.m) / std::abs(f.m);
    worst = std::max({worst, e1, e2, em});
    os << "beta=" << beta << ": exc " << fmt(100 * std::max(e1, e2)) << "%, corr " << fmt(100 * em) << "%; ";
  }
  os << "max " << fmt(100 * worst) << "% (limit 1%)";
  return {worst <= 0.01, os.str()};
}

// Shared by criteria 6 and 7.
const network::NetworkSteadyState& markov_point() {
  static const auto ss =
      network::cascaded_steady_state(NetworkParams::symmetric(0.2, 1e3), TruncationConfig{10});
  return ss;
}

Outcome c6_markov_limit() {
  const double f = entanglement::bell_fidelity(markov_point().qubits);
  const double fm = entanglement::bell_fidelity(
      reservoir::effective_steady_state(reservoir::markov_moments(0.2, 1.0), 0.0));
  return {std::abs(f - fm) <= 1e-2, "exact " + fmt(f) + " vs Markov " + fmt(fm)};
}

Outcome c7_dark_state() {
  const double x = 0.5;
  const auto r = network::tms_dark_state_residual(x, TruncationConfig{15});
  const double bound = 10.0 * std::pow(x, 14);
  const double res = std::max({r.interaction, r.mode1, r.mode2});
  const auto& q = markov_point().qubits;
  const double singlet = 0.5 * (q(1, 1) + q(2, 2)).real() - q(1, 2).real();
  return {res <= bound && singlet < 0.02,
          "residual " + fmt(res) + " (bound " + fmt(bound) + "), singlet population " + fmt(singlet)};
}

Outcome c8_fidelity_shape() {
  auto s = experiments::default_spec(experiments::Kind::fidelity_sweep);
  s.params = NetworkParams::symmetric(0.1, 10.0);
  s.grid = {{"epsilon", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}}};
  s.trunc.n_trunc = 12;
  s.backends = {experiments::Backend::exact, experiments::Backend::fma};
  const auto d = run_spec(s);
  const auto fc = col(d, "F"), bc = col(d, "backend");
  std::vector<double> ex, fm;
  for (const auto& r : d.rows) {
    (std::get<std::string>(r[bc]) == "exact" ? ex : fm).push_back(num(r, fc));
  }
  const auto best = std::max_element(ex.begin(), ex.end()) - ex.begin();
  const bool interior = best > 0 && best + 1 < static_cast<long>(ex.size());
  double excess = -1.0;
  for (std::size_t i = 0; i < ex.size(); ++i) excess = std::max(excess, fm[i] - ex[i]);
  return {ex.size() == 7 && fm.size() == 7 && interior && excess <= 1e-3,
          "exact max at eps=" + fmt(0.1 * (best + 1)) + " (F=" + fmt(ex[best]) + "), max(FMA - exact) = " +
              fmt(excess)};
}

Outcome c9_optimum_ordering() {
  bool ok = true;
  std::ostringstream os;
  for (double beta : {10.0, 100.0, 1000.0}) {
    auto s = experiments::default_spec(experiments::Kind::optimize_fidelity);
    s.params = NetworkParams::symmetric(0.1, beta);
    s.grid = {{"epsilon", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}}};
    s.trunc.n_trunc = 10;
    s.backends = {beta < 1e3 ? experiments::Backend::exact : experiments::Backend::fma};
    const auto d = run_spec(s);
    const double f = num(d.rows.at(0), col(d, "F_op")), app = num(d.rows.at(0), col(d, "F_op_approx"));
    ok = ok && f >= app;
    os << "beta=" << beta << " (" << experiments::to_string(s.backends[0]) << "): " << fmt(f)
       << " >= " << fmt(app) << "; ";
  }
  return {ok, os.str()};
}

Outcome c10_delay() {
  NetworkParams p = NetworkParams::symmetric(0.5, 1e3);
  const double m0 = std::abs(reservoir::filtered_moments(p).m);
  double worst = 0.0;
  for (int k = 1; k <= 8; ++k) {
    p.tau2 = 0.25 * k;
    worst = std::max(worst, rel(std::abs(reservoir::filtered_moments(p).m) / m0, std::exp(-0.5 * p.tau2)));
  }
  const auto t = delay::entanglement_time(NetworkParams::symmetric(0.5, 1.0), TruncationConfig{10});
  const bool order_one = t.gamma_tau && *t.gamma_tau >= 0.1 && *t.gamma_tau <= 10.0;
  return {worst <= 0.05 && order_one,
          "max rel dev of |M(tau)|/|M(0)| " + fmt(worst) + ", gamma tau_ent = " +
              (t.gamma_tau ? fmt(*t.gamma_tau) : std::string("none"))};
}

Outcome c11_rate() {
  auto s = experiments::default_spec(experiments::Kind::optimize_rate);
  s.params = NetworkParams::symmetric(0.1, 10.0);
  s.trunc.n_trunc = 10;
  s.backends = {experiments::Backend::exact};
  const auto d = run_spec(s);
  const auto& r = d.rows.at(0);
  const double e = num(r, col(d, "epsilon_op"));
  return {e >= 0.2 && e <= 0.5, "argmax eps = " + fmt(e) + ", T = " + fmt(num(r, col(d, "T_op"))) +
                                    ", R = " + fmt(num(r, col(d, "R_max")))};
}

Outcome c12_truncation() {
  auto s = experiments::default_spec(experiments::Kind::truncation_study);
  s.params = NetworkParams::symmetric(0.5, 10.0);
  s.grid = {{"ntrunc", {4, 6, 8, 10, 12}}};
  const auto d = run_spec(s);
  const double df = std::abs(num(d.rows.back(), col(d, "cauchy_dF")));
  std::string detail = "|F(12) - F(10)| = " + fmt(df);
  bool ok = df < 1e-4;
  if (const char* env = std::getenv("TMSNET_LONG"); env && std::string(env) == "1") {
    auto l = experiments::default_spec(experiments::Kind::fidelity_sweep);
    l.params = NetworkParams::symmetric(0.8, 1e3);
    l.grid = {{"epsilon", {0.8}}};
    l.trunc.n_trunc = 20;
    l.backends = {experiments::Backend::exact};
    l.max_liouville_dim = 1e8;
    const auto ld = run_spec(l);
    const double f = num(ld.rows.at(0), col(ld, "F"));
    ok = ok && f > 0.98;
    detail += ", long tier F(eps=0.8, beta=1e3, n=20) = " + fmt(f);
  } else {
    detail += " (long tier skipped; set TMSNET_LONG=1)";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Gaussian oracle agreement", c1_gaussian},
      {"Markov identity", c2_markov_identity},
      {"fidelity bound", c3_bound},
      {"FMA closed form vs quadrature", c4_fma_closed_form},
      {"weak-driving exactness", c5_weak_driving},
      {"Markov-limit convergence of the exact ME", c6_markov_limit},
      {"dark-state interference", c7_dark_state},
      {"fidelity curve shape at beta = 10", c8_fidelity_shape},
      {"optimized fidelity above the approximation", c9_optimum_ordering},
      {"delay study", c10_delay},
      {"rate optimum", c11_rate},
      {"truncation convergence", c12_truncation},
  };
  const std::set<int> run_set(only.begin(), only.end());
  const std::set<int> known(expect_fail.begin(), expect_fail.end());

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!run_set.empty() && !run_set.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string tag = o.pass ? "PASS" : "FAIL";
    if (known.count(id)) tag += o.pass ? " (expected failure passed)" : " (known)";
    else if (!o.pass) ++unexpected;
    std::cout << tag << "  " << std::setw(2) << id << ". " << criteria[i].first << ": " << o.detail << "  ["
              << std::fixed << std::setprecision(1) << secs << " s]" << std::defaultfloat << std::endl;
  }
  return unexpected == 0 ? 0 : 1;
}
