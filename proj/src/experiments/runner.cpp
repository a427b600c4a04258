#include "tmsnet/experiments/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "tmsnet/amplifier.hpp"
#include "tmsnet/delay.hpp"
#include "tmsnet/entanglement.hpp"

namespace tmsnet::experiments {

using nlohmann::json;
using network::NetworkParams;
using network::TruncationConfig;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kExactMaxEpsilon = 0.8;
constexpr double kExactMaxBeta = 1e3;

const std::vector<std::string> kParamColumns{"epsilon", "beta",   "eta", "gamma_phi",
                                             "delta1",  "delta2", "tau", "ntrunc"};

Row param_cells(const NetworkParams& p, double ntrunc) {
  return {p.epsilon, p.beta(), p.eta, p.normalized_dephasing(), p.delta1, p.delta2, p.delay(), ntrunc};
}

template <class... T>
Row cat(Row r, T&&... more) {
  (r.emplace_back(std::forward<T>(more)), ...);
  return r;
}

std::vector<std::string> with_params(std::vector<std::string> tail) {
  std::vector<std::string> c = kParamColumns;
  c.insert(c.end(), tail.begin(), tail.end());
  return c;
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json warnings_json(const Warnings& w) {
  json a = json::array();
  for (const auto& x : w) a.push_back({{"code", x.code}, {"message", x.message}, {"value", x.value}});
  return a;
}

json report_json(const core::SolveReport& r) {
  return {{"method", core::to_string(r.method)}, {"sector_dim", r.sector_dim},
          {"residual", r.residual},              {"iterations", r.iterations},
          {"warnings", warnings_json(r.warnings)}};
}

core::DensityMatrix qubit_state_from(const DenseMat& m) {
  core::StateTolerance tol;
  tol.hermiticity = 1e-6;
  tol.trace = 1e-6;
  tol.positivity = 1e-6;
  DenseMat h = 0.5 * (m + m.adjoint());
  h /= h.trace().real();
  return core::DensityMatrix(network::qubit_space(), std::move(h), tol);
}

struct Observables {
  double f = kNaN, c = kNaN, eof = kNaN;
};

Observables observe(const core::DensityMatrix& rho) {
  const auto r = entanglement::report(rho);
  return {r.fidelity, r.concurrence, r.eof};
}

reservoir::ReservoirMoments moments_for(const NetworkParams& p, Backend b) {
  if (b == Backend::markov) {
    const bool symmetric_resonant = p.kappa1 == p.kappa2 && p.gamma1 == p.gamma2 && p.delta1 == 0.0 &&
                                    p.delta2 == 0.0;
    if (!symmetric_resonant) {
      throw ValidationError("markov backend needs a symmetric resonant network");
    }
    return reservoir::markov_moments(p.epsilon, p.eta);
  }
  return reservoir::filtered_moments(p);
}

core::DensityMatrix effective_state(const NetworkParams& p, const reservoir::ReservoirMoments& m) {
  if (m.symmetric() && p.gamma1 == p.gamma2) {
    return reservoir::effective_steady_state_analytic(m, p.normalized_dephasing());
  }
  return reservoir::effective_steady_state_numeric(m, reservoir::effective_options(p));
}

/// Exact requests outside the cap move to fma.
Backend effective_backend(const NetworkParams& p, Backend b, bool cap) {
  return b == Backend::exact && cap && !within_exact_cap(p) ? Backend::fma : b;
}

// One unit of work: a grid point outside the inner axes, or a contour overlay.
struct Unit {
  json point;
  std::function<std::vector<Row>(json&)> work;
  /// Row produced in place of the unit's output when it throws.
  std::function<Row(const std::string&)> failure_row;
};

std::vector<std::string> inner_axes(Kind k) {
  switch (k) {
    case Kind::delay_study: return {"tau"};
    case Kind::pulsed_rate: return {"T"};
    case Kind::truncation_study: return {"ntrunc"};
    case Kind::optimize_fidelity: return {"epsilon"};
    case Kind::optimize_rate: return {"epsilon", "T"};
    default: return {};
  }
}

ExperimentSpec outer_spec(const ExperimentSpec& s) {
  ExperimentSpec o = s;
  const auto inner = inner_axes(s.kind);
  std::erase_if(o.grid, [&](const Axis& a) {
    return std::find(inner.begin(), inner.end(), a.name) != inner.end();
  });
  return o;
}

json point_json(const ExperimentSpec& s, const std::vector<double>& pt) {
  json j = json::object();
  for (std::size_t i = 0; i < s.grid.size(); ++i) j[s.grid[i].name] = pt[i];
  return j;
}

// Row of NaNs with the parameter cells and the status filled in.
Row failed_row(Kind kind, const NetworkParams& p, double ntrunc, const std::string& backend,
               const std::string& status) {
  const auto cols = columns(kind);
  Row r = param_cells(p, ntrunc);
  while (r.size() < cols.size()) r.emplace_back(kNaN);
  r[kParamColumns.size()] = backend;
  r.back() = status;
  return r;
}

std::string error_status(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return std::string("validation_error: ") + e.what();
  return std::string("solver_error: ") + e.what();
}

// Rate trajectory R(T) = E_F(T) / (gamma1 T) for one backend on an increasing T grid.
struct Trajectory {
  std::vector<Observables> obs;
  std::vector<double> rate;
  Backend used = Backend::exact;
  json diag;
};

Trajectory rate_trajectory(const NetworkParams& p, Backend b, const TruncationConfig& t,
                           const core::SolverConfig& cfg, bool cap, const std::vector<double>& times) {
  Trajectory tr;
  tr.used = effective_backend(p, b, cap);
  tr.obs.resize(times.size());
  tr.rate.resize(times.size());
  auto record = [&](std::size_t k, const DenseMat& q) {
    tr.obs[k] = observe(qubit_state_from(q));
    tr.rate[k] = entanglement::rate(tr.obs[k].eof, times[k], p.gamma1);
  };
  DenseMat e00 = DenseMat::Zero(4, 4);
  e00(0, 0) = 1.0;
  if (tr.used == Backend::exact) {
    const auto amp = network::amplifier_steady_state(p, t, cfg);
    const auto l = network::build_cascaded_liouvillian(p, t);
    const DenseMat x0 = core::kron(amp.rho.mat(), e00);
    const auto& space = l.space();
    core::propagate(l, x0, times, cfg, [&](std::size_t k, const DenseMat& x) {
      record(k, core::partial_trace_matrix(x, space, {network::kQubit1, network::kQubit2}));
    });
    tr.diag = {{"amplifier", report_json(amp.report)}, {"top_population", amp.top_population}};
  } else {
    const auto m = moments_for(p, tr.used);
    const auto l = reservoir::effective_liouvillian(m, reservoir::effective_options(p));
    core::propagate(l, e00, times, cfg, record);
    tr.diag = {{"n", m.n1}, {"m_abs", std::abs(m.m)}, {"warnings", warnings_json(m.warnings)}};
  }
  tr.diag["backend"] = to_string(tr.used);
  return tr;
}

std::vector<Unit> fidelity_units(const ExperimentSpec& s) {
  std::vector<Unit> units;
  for (std::size_t k = 0; k < s.grid_size(); ++k) {
    const auto pt = s.point(k);
    const NetworkParams p = params_at(s, pt);
    const TruncationConfig t{static_cast<int>(coordinate(s, pt, "ntrunc", s.trunc.n_trunc))};
    Unit u;
    u.point = point_json(s, pt);
    u.work = [&s, p, t](json& diag) {
      std::vector<Row> rows;
      diag["backends"] = json::array();
      for (Backend b : s.backends) {
        try {
          auto st = qubit_state(p, b, t, s.solver, s.cap_exact, s.max_liouville_dim);
          const auto o = observe(st.rho);
          double n = kNaN, m = kNaN, r = kNaN, mu = kNaN;
          if (st.moments) {
            n = 0.5 * (st.moments->n1 + st.moments->n2);
            m = std::abs(st.moments->m);
            if (st.moments->symmetric()) {
              try {
                const auto es = reservoir::effective_squeezing(*st.moments);
                r = es.r_eff;
                mu = es.mu_eff;
              } catch (const ValidationError&) {
              }
            }
          }
          const std::string status = st.used == b ? "ok" : "routed_from_" + to_string(b);
          rows.push_back(cat(param_cells(p, t.n_trunc), to_string(st.used), o.f, o.c, o.eof, n, m, r, mu,
                             status));
          diag["backends"].push_back(std::move(st.diagnostics));
        } catch (const ResourceGuardError&) {
          throw;
        } catch (const std::exception& e) {
          rows.push_back(failed_row(Kind::fidelity_sweep, p, t.n_trunc, to_string(b), error_status(e)));
          diag["failed"] = true;
        }
      }
      return rows;
    };
    u.failure_row = [p, t](const std::string& st) {
      return failed_row(Kind::fidelity_sweep, p, t.n_trunc, "", st);
    };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> contour_units(const ExperimentSpec& s) {
  std::vector<Unit> units;
  const double gphi = s.params.normalized_dephasing();
  for (std::size_t k = 0; k < s.grid_size(); ++k) {
    const auto pt = s.point(k);
    const double r = coordinate(s, pt, "r_eff", 0.0), mu = coordinate(s, pt, "mu_eff", 1.0);
    Unit u;
    u.point = point_json(s, pt);
    u.work = [r, mu, gphi](json&) {
      const auto o = observe(reservoir::effective_steady_state(reservoir::moments_from(r, mu), gphi));
      return std::vector<Row>{Row{std::string("grid"), kNaN, kNaN, r, mu, o.f, o.c, o.eof, std::string("ok")}};
    };
    u.failure_row = [r, mu](const std::string& st) {
      return Row{std::string("grid"), kNaN, kNaN, r, mu, kNaN, kNaN, kNaN, st};
    };
    units.push_back(std::move(u));
  }
  // Paths traced by the FMA reservoir as epsilon runs up to threshold at fixed beta.
  for (double beta : s.overlay_betas) {
    Unit u;
    u.point = {{"overlay_beta", beta}};
    const double eta = s.params.eta;
    u.work = [beta, eta, gphi](json&) {
      std::vector<Row> rows;
      for (int i = 0; i <= 19; ++i) {
        const double eps = 0.05 * i;
        const auto m = reservoir::fma_symmetric_closed_form(eps, beta, eta);
        const auto es = reservoir::effective_squeezing(m);
        const auto o = observe(reservoir::effective_steady_state(m, gphi));
        rows.push_back(Row{std::string("path"), beta, eps, es.r_eff, es.mu_eff, o.f, o.c, o.eof, std::string("ok")});
      }
      return rows;
    };
    u.failure_row = [beta](const std::string& st) {
      return Row{std::string("path"), beta, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, st};
    };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> delay_units(const ExperimentSpec& s) {
  const ExperimentSpec outer = outer_spec(s);
  const std::vector<double> taus = s.axis("tau")->values;
  std::vector<Unit> units;
  for (std::size_t k = 0; k < outer.grid_size(); ++k) {
    const auto pt = outer.point(k);
    const NetworkParams base = params_at(outer, pt);
    const TruncationConfig t{static_cast<int>(coordinate(outer, pt, "ntrunc", s.trunc.n_trunc))};
    Unit u;
    u.point = point_json(outer, pt);
    u.work = [&s, base, t, taus](json& diag) {
      std::vector<Row> rows;
      auto at_tau = [&base](double tau) {
        NetworkParams q = base;
        q.tau2 = q.tau1 + tau;
        return q;
      };
      for (Backend b : s.backends) {
        const Backend used = effective_backend(base, b, s.cap_exact);
        const std::string status = used == b ? "ok" : "routed_from_" + to_string(b);
        try {
          if (used == Backend::exact) {
            check_resources(t.n_trunc, s.max_liouville_dim);
            const auto states = delay::delayed_two_qubit_states(base, t, taus, s.solver);
            for (std::size_t i = 0; i < taus.size(); ++i) {
              const auto o = observe(states[i].rho);
              rows.push_back(cat(param_cells(at_tau(taus[i]), t.n_trunc), std::string("exact"), o.f, o.c,
                                 o.eof, kNaN, states[i].hermiticity_defect, status));
            }
          } else {
            for (double tau : taus) {
              const auto q = at_tau(tau);
              const auto m = moments_for(q, used);
              const auto o = observe(effective_state(q, m));
              rows.push_back(cat(param_cells(q, t.n_trunc), to_string(used), o.f, o.c, o.eof, std::abs(m.m),
                                 kNaN, status));
            }
          }
        } catch (const ResourceGuardError&) {
          throw;
        } catch (const std::exception& e) {
          for (double tau : taus) {
            rows.push_back(failed_row(Kind::delay_study, at_tau(tau), t.n_trunc, to_string(b), error_status(e)));
          }
          diag["failed"] = true;
        }
      }
      return rows;
    };
    u.failure_row = [base, t](const std::string& st) {
      return failed_row(Kind::delay_study, base, t.n_trunc, "", st);
    };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> rate_units(const ExperimentSpec& s) {
  const ExperimentSpec outer = outer_spec(s);
  const std::vector<double> times = s.axis("T")->values;
  std::vector<Unit> units;
  for (std::size_t k = 0; k < outer.grid_size(); ++k) {
    const auto pt = outer.point(k);
    const NetworkParams p = params_at(outer, pt);
    const TruncationConfig t{static_cast<int>(coordinate(outer, pt, "ntrunc", s.trunc.n_trunc))};
    Unit u;
    u.point = point_json(outer, pt);
    u.work = [&s, p, t, times](json& diag) {
      std::vector<Row> rows;
      diag["backends"] = json::array();
      for (Backend b : s.backends) {
        try {
          auto tr = rate_trajectory(p, b, t, s.solver, s.cap_exact, times);
          const std::string status = tr.used == b ? "ok" : "routed_from_" + to_string(b);
          for (std::size_t i = 0; i < times.size(); ++i) {
            rows.push_back(cat(param_cells(p, t.n_trunc), to_string(tr.used), times[i], tr.obs[i].f,
                               tr.obs[i].c, tr.obs[i].eof, tr.rate[i], status));
          }
          diag["backends"].push_back(std::move(tr.diag));
        } catch (const ResourceGuardError&) {
          throw;
        } catch (const std::exception& e) {
          rows.push_back(failed_row(Kind::pulsed_rate, p, t.n_trunc, to_string(b), error_status(e)));
          diag["failed"] = true;
        }
      }
      return rows;
    };
    u.failure_row = [p, t](const std::string& st) { return failed_row(Kind::pulsed_rate, p, t.n_trunc, "", st); };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> truncation_units(const ExperimentSpec& s) {
  const ExperimentSpec outer = outer_spec(s);
  const std::vector<double> ns = s.axis("ntrunc")->values;
  std::vector<Unit> units;
  for (std::size_t k = 0; k < outer.grid_size(); ++k) {
    const auto pt = outer.point(k);
    const NetworkParams p = params_at(outer, pt);
    Unit u;
    u.point = point_json(outer, pt);
    u.work = [&s, p, ns](json& diag) {
      std::vector<Row> rows;
      const double n1_closed = amplifier::closed_form_moments(p).n1;
      double prev = kNaN;
      diag["solves"] = json::array();
      for (double nd : ns) {
        const int n = static_cast<int>(nd);
        try {
          const auto ss = network::cascaded_steady_state(p, {n}, s.solver);
          const auto o = observe(ss.qubits);
          const double cauchy = std::isnan(prev) ? kNaN : std::abs(o.f - prev);
          prev = o.f;
          rows.push_back(cat(param_cells(p, n), o.f, o.c, o.eof, ss.top_population, ss.amplifier.n1, n1_closed,
                             cauchy, static_cast<double>(ss.report.sector_dim), std::string("ok")));
          diag["solves"].push_back(report_json(ss.report));
        } catch (const std::exception& e) {
          Row r = param_cells(p, n);
          while (r.size() + 1 < columns(Kind::truncation_study).size()) r.emplace_back(kNaN);
          r.emplace_back(error_status(e));
          rows.push_back(std::move(r));
          prev = kNaN;
          diag["failed"] = true;
        }
      }
      return rows;
    };
    u.failure_row = [p](const std::string& st) {
      Row r = param_cells(p, kNaN);
      while (r.size() + 1 < columns(Kind::truncation_study).size()) r.emplace_back(kNaN);
      r.emplace_back(st);
      return r;
    };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<double> capped_scan(const std::vector<double>& scan, Backend used) {
  if (used != Backend::exact) return scan;
  std::vector<double> out;
  for (double e : scan) {
    if (e <= kExactMaxEpsilon) out.push_back(e);
  }
  return out;
}

std::vector<Unit> optimize_fidelity_units(const ExperimentSpec& s) {
  const ExperimentSpec outer = outer_spec(s);
  const std::vector<double> scan = s.axis("epsilon")->values;
  std::vector<Unit> units;
  for (std::size_t k = 0; k < outer.grid_size(); ++k) {
    const auto pt = outer.point(k);
    const NetworkParams p = params_at(outer, pt);
    const TruncationConfig t{static_cast<int>(coordinate(outer, pt, "ntrunc", s.trunc.n_trunc))};
    Unit u;
    u.point = point_json(outer, pt);
    u.work = [&s, p, t, scan](json& diag) {
      std::vector<Row> rows;
      diag["backends"] = json::array();
      for (Backend b : s.backends) {
        try {
          // Route the whole unit so the objective does not mix backends.
          NetworkParams probe = p;
          probe.epsilon = std::min(scan.back(), kExactMaxEpsilon);
          const Backend used = effective_backend(probe, b, s.cap_exact);
          const auto grid = s.cap_exact ? capped_scan(scan, used) : scan;
          if (grid.empty()) throw ValidationError("no epsilon left in the scan after the exact cap");
          auto f = [&](double eps) {
            NetworkParams q = p;
            q.epsilon = eps;
            return observe(qubit_state(q, used, t, s.solver, false, s.max_liouville_dim).rho).f;
          };
          const Maximum m = maximize(f, grid, s.tol);
          NetworkParams at = p;
          at.epsilon = m.x;
          const double app = entanglement::analytic_fidelity_estimates(
                                 0.5, p.beta(), p.eta, p.normalized_dephasing())
                                 .optimal;
          const std::string status = used == b ? "ok" : "routed_from_" + to_string(b);
          rows.push_back(cat(param_cells(at, t.n_trunc), to_string(used), m.x, m.value, m.bracket_lo,
                             m.bracket_hi, m.achieved_tol, m.multimodal ? 1.0 : 0.0,
                             static_cast<double>(m.evaluations), app, status));
          diag["backends"].push_back({{"backend", to_string(used)}, {"evaluations", m.evaluations}});
        } catch (const ResourceGuardError&) {
          throw;
        } catch (const std::exception& e) {
          rows.push_back(failed_row(Kind::optimize_fidelity, p, t.n_trunc, to_string(b), error_status(e)));
          diag["failed"] = true;
        }
      }
      return rows;
    };
    u.failure_row = [p, t](const std::string& st) {
      return failed_row(Kind::optimize_fidelity, p, t.n_trunc, "", st);
    };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> optimize_rate_units(const ExperimentSpec& s) {
  const ExperimentSpec outer = outer_spec(s);
  const std::vector<double> scan = s.axis("epsilon")->values;
  const std::vector<double> times = s.axis("T")->values;
  std::vector<Unit> units;
  for (std::size_t k = 0; k < outer.grid_size(); ++k) {
    const auto pt = outer.point(k);
    const NetworkParams p = params_at(outer, pt);
    const TruncationConfig t{static_cast<int>(coordinate(outer, pt, "ntrunc", s.trunc.n_trunc))};
    Unit u;
    u.point = point_json(outer, pt);
    u.work = [&s, p, t, scan, times](json& diag) {
      std::vector<Row> rows;
      diag["backends"] = json::array();
      for (Backend b : s.backends) {
        try {
          NetworkParams probe = p;
          probe.epsilon = std::min(scan.back(), kExactMaxEpsilon);
          const Backend used = effective_backend(probe, b, s.cap_exact);
          const auto grid = s.cap_exact ? capped_scan(scan, used) : scan;
          if (grid.empty()) throw ValidationError("no epsilon left in the scan after the exact cap");
          auto with_eps = [&p](double eps) {
            NetworkParams q = p;
            q.epsilon = eps;
            return q;
          };
          // Over epsilon the objective is the best rate on the T grid; one
          // trajectory per epsilon covers every T.
          auto best_on_grid = [&](double eps) {
            const auto tr = rate_trajectory(with_eps(eps), used, t, s.solver, false, times);
            const auto it = std::max_element(tr.rate.begin(), tr.rate.end());
            return std::make_pair(*it, static_cast<std::size_t>(it - tr.rate.begin()));
          };
          const Maximum me = maximize([&](double eps) { return best_on_grid(eps).first; }, grid, s.tol);
          // Then T by golden section inside the grid cells around the best T.
          const std::size_t j = best_on_grid(me.x).second;
          std::vector<double> tgrid;
          for (std::size_t i = (j > 0 ? j - 1 : 0); i <= std::min(j + 1, times.size() - 1); ++i) {
            tgrid.push_back(times[i]);
          }
          auto rate_at = [&](double tt) {
            return rate_trajectory(with_eps(me.x), used, t, s.solver, false, {tt}).rate.front();
          };
          const Maximum mt = maximize(rate_at, tgrid, s.tol * std::max(1.0, times.back()));
          const auto fin = rate_trajectory(with_eps(me.x), used, t, s.solver, false, {mt.x});
          const std::string status = used == b ? "ok" : "routed_from_" + to_string(b);
          rows.push_back(cat(param_cells(with_eps(me.x), t.n_trunc), to_string(used), me.x, mt.x,
                             fin.rate.front(), fin.obs.front().f, fin.obs.front().eof, me.bracket_lo,
                             me.bracket_hi, me.achieved_tol, me.multimodal ? 1.0 : 0.0,
                             static_cast<double>(me.evaluations + mt.evaluations + 2), status));
          diag["backends"].push_back({{"backend", to_string(used)},
                                      {"epsilon_evaluations", me.evaluations},
                                      {"T_evaluations", mt.evaluations},
                                      {"T_bracket", {mt.bracket_lo, mt.bracket_hi}}});
        } catch (const ResourceGuardError&) {
          throw;
        } catch (const std::exception& e) {
          rows.push_back(failed_row(Kind::optimize_rate, p, t.n_trunc, to_string(b), error_status(e)));
          diag["failed"] = true;
        }
      }
      return rows;
    };
    u.failure_row = [p, t](const std::string& st) { return failed_row(Kind::optimize_rate, p, t.n_trunc, "", st); };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> spectra_units(const ExperimentSpec& s) {
  const ExperimentSpec outer = [&] {
    ExperimentSpec o = s;
    std::erase_if(o.grid, [](const Axis& a) { return a.name == "omega"; });
    return o;
  }();
  const std::vector<double> omegas = s.axis("omega")->values;
  std::vector<Unit> units;
  for (std::size_t k = 0; k < outer.grid_size(); ++k) {
    const auto pt = outer.point(k);
    const NetworkParams p = params_at(outer, pt);
    Unit u;
    u.point = point_json(outer, pt);
    u.work = [p, omegas](json&) {
      std::vector<Row> rows;
      const amplifier::SpectrumEvaluator ev(p);
      for (double w : omegas) {
        const auto sp = ev(w);
        rows.push_back(cat(param_cells(p, kNaN), w, sp.n1.real(), sp.n1.imag(), sp.n2.real(), sp.n2.imag(),
                           sp.a1a2.real(), sp.a1a2.imag(), sp.a2a1.real(), sp.a2a1.imag(), std::string("ok")));
      }
      return rows;
    };
    u.failure_row = [p](const std::string& st) {
      Row r = param_cells(p, kNaN);
      while (r.size() + 1 < columns(Kind::spectra_dump).size()) r.emplace_back(kNaN);
      r.emplace_back(st);
      return r;
    };
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Unit> make_units(const ExperimentSpec& s) {
  switch (s.kind) {
    case Kind::fidelity_sweep: return fidelity_units(s);
    case Kind::contour: return contour_units(s);
    case Kind::delay_study: return delay_units(s);
    case Kind::pulsed_rate: return rate_units(s);
    case Kind::truncation_study: return truncation_units(s);
    case Kind::optimize_fidelity: return optimize_fidelity_units(s);
    case Kind::optimize_rate: return optimize_rate_units(s);
    case Kind::spectra_dump: return spectra_units(s);
  }
  return {};
}

bool uses_exact(const ExperimentSpec& s) {
  if (s.kind == Kind::truncation_study) return true;
  if (s.kind == Kind::contour || s.kind == Kind::spectra_dump) return false;
  return std::find(s.backends.begin(), s.backends.end(), Backend::exact) != s.backends.end();
}

// Refuse before any work if an exact unit would not fit.
void precheck_resources(const ExperimentSpec& s) {
  if (!uses_exact(s)) return;
  int n = s.trunc.n_trunc;
  if (const Axis* a = s.axis("ntrunc")) n = static_cast<int>(*std::max_element(a->values.begin(), a->values.end()));
  check_resources(n, s.max_liouville_dim);
}

json resume_key(const ExperimentSpec& s) {
  json j = to_json(s);
  j.erase("threads");
  j.erase("output");
  return j;
}

void check_backends(const ExperimentSpec& s) {
  if (s.kind == Kind::delay_study) {
    for (Backend b : s.backends) {
      if (b == Backend::markov) throw ValidationError("delay_study supports the exact and fma backends");
    }
  }
}

}  // namespace

bool within_exact_cap(const NetworkParams& p) {
  return p.epsilon <= kExactMaxEpsilon && p.beta() <= kExactMaxBeta;
}

void check_resources(int n_trunc, double max_liouville_dim) {
  const double dim = 4.0 * n_trunc * n_trunc;
  if (dim * dim > max_liouville_dim) {
    std::ostringstream msg;
    msg << "n_trunc = " << n_trunc << " needs a Liouvillian of dimension " << dim * dim
        << ", above the ceiling " << max_liouville_dim
        << "; lower n_trunc or raise max_liouville_dim in the config";
    throw ResourceGuardError(msg.str());
  }
}

BackendState qubit_state(const NetworkParams& p, Backend b, const TruncationConfig& t,
                         const core::SolverConfig& cfg, bool cap, double max_liouville_dim) {
  BackendState out;
  out.used = effective_backend(p, b, cap);
  if (out.used == Backend::exact) {
    check_resources(t.n_trunc, max_liouville_dim);
    auto ss = network::cascaded_steady_state(p, t, cfg);
    out.diagnostics = report_json(ss.report);
    out.diagnostics["top_population"] = ss.top_population;
    out.rho = std::move(ss.qubits);
  } else {
    auto m = moments_for(p, out.used);
    out.rho = effective_state(p, m);
    out.diagnostics = {{"n1", m.n1}, {"n2", m.n2}, {"m_abs", std::abs(m.m)}, {"warnings", warnings_json(m.warnings)}};
    out.moments = std::move(m);
  }
  out.diagnostics["backend"] = to_string(out.used);
  return out;
}

Maximum maximize(const std::function<double(double)>& f, const std::vector<double>& grid, double tol) {
  if (grid.empty()) throw ValidationError("maximize: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ValidationError("maximize: grid must increase");
  Maximum m;
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
  m.evaluations = static_cast<int>(grid.size());
  const std::size_t best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  int peaks = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool left = i == 0 || v[i] > v[i - 1];
    const bool right = i + 1 == v.size() || v[i] > v[i + 1];
    if (left && right) ++peaks;
  }
  m.multimodal = peaks > 1;
  m.x = grid[best];
  m.value = v[best];
  double a = grid[best > 0 ? best - 1 : best];
  double b = grid[best + 1 < grid.size() ? best + 1 : best];
  if (b - a <= 0.0) {
    m.bracket_lo = m.bracket_hi = m.x;
    return m;
  }
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  m.evaluations += 2;
  while ((b - a) / 2.0 > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    ++m.evaluations;
  }
  const double x = fc > fd ? c : d, fx = std::max(fc, fd);
  if (fx > m.value) {
    m.x = x;
    m.value = fx;
  }
  m.bracket_lo = a;
  m.bracket_hi = b;
  m.achieved_tol = (b - a) / 2.0;
  return m;
}

std::vector<std::string> columns(Kind kind) {
  switch (kind) {
    case Kind::fidelity_sweep:
      return with_params({"backend", "F", "C", "E_F", "N", "M_abs", "r_eff", "mu_eff", "status"});
    case Kind::contour:
      return {"row_type", "beta", "epsilon", "r_eff", "mu_eff", "F", "C", "E_F", "status"};
    case Kind::delay_study:
      return with_params({"backend", "F", "C", "E_F", "M_abs", "hermiticity_defect", "status"});
    case Kind::pulsed_rate:
      return with_params({"backend", "T", "F", "C", "E_F", "R", "status"});
    case Kind::truncation_study:
      return with_params({"F", "C", "E_F", "top_population", "n1", "n1_closed_form", "cauchy_dF",
                          "sector_dim", "status"});
    case Kind::optimize_fidelity:
      return with_params({"backend", "epsilon_op", "F_op", "bracket_lo", "bracket_hi", "achieved_tol",
                          "multimodal", "evaluations", "F_op_approx", "status"});
    case Kind::optimize_rate:
      return with_params({"backend", "epsilon_op", "T_op", "R_max", "F_at_op", "E_F_at_op", "bracket_lo",
                          "bracket_hi", "achieved_tol", "multimodal", "evaluations", "status"});
    case Kind::spectra_dump:
      return with_params({"omega", "S_n1_re", "S_n1_im", "S_n2_re", "S_n2_im", "S_a1a2_re", "S_a1a2_im",
                          "S_a2a1_re", "S_a2a1_im", "status"});
  }
  return {};
}

RunResult run(const ExperimentSpec& spec, const RunOptions& opt) {
  spec.validate();
  check_backends(spec);
  precheck_resources(spec);

  const std::string started = iso_now();
  const auto units = make_units(spec);
  const std::size_t total = units.size();

  struct Done {
    bool present = false;
    std::vector<Row> rows;
    json diag;
    bool failed = false;
  };
  std::vector<Done> done(total);

  const bool checkpoint = opt.checkpoint && !spec.output.path.empty();
  const std::string partial = spec.output.path + ".partial.jsonl";
  std::size_t resumed = 0;
  if (opt.resume && checkpoint && std::filesystem::exists(partial)) {
    std::ifstream in(partial);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        break;  // a torn last line from an interrupted write
      }
      if (!header) {
        if (!j.contains("spec") || j.at("spec") != resume_key(spec)) {
          throw ValidationError("resume: " + partial + " was written for a different experiment");
        }
        header = true;
        continue;
      }
      const std::size_t k = j.at("unit").get<std::size_t>();
      if (k >= total) throw ValidationError("resume: unit index out of range in " + partial);
      Done& d = done[k];
      d.present = true;
      for (const auto& r : j.at("rows")) d.rows.push_back(row_from_json(r));
      d.diag = j.at("diag");
      d.failed = j.value("failed", false);
      ++resumed;
    }
  }

  std::ofstream log;
  std::mutex mu;
  if (checkpoint) {
    const bool fresh = resumed == 0;
    log.open(partial, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw ValidationError("cannot write " + partial);
    if (fresh) log << json{{"spec", resume_key(spec)}}.dump() << '\n' << std::flush;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{resumed};
  // First ResourceGuardError raised inside a worker, rethrown after join.
  std::exception_ptr guard;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      if (done[k].present) continue;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (guard) return;
      }
      Done d;
      d.present = true;
      json diag = json::object();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        d.rows = units[k].work(diag);
        d.failed = diag.value("failed", false);
      } catch (const ResourceGuardError&) {
        std::lock_guard<std::mutex> lock(mu);
        if (!guard) guard = std::current_exception();
        return;
      } catch (const std::exception& e) {
        d.rows = {units[k].failure_row(error_status(e))};
        d.failed = true;
        diag["error"] = e.what();
      }
      diag["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      d.diag = std::move(diag);
      std::lock_guard<std::mutex> lock(mu);
      if (checkpoint) {
        json rows = json::array();
        for (const auto& r : d.rows) rows.push_back(row_to_json(r));
        log << json{{"unit", k}, {"rows", rows}, {"diag", d.diag}, {"failed", d.failed}}.dump() << '\n'
            << std::flush;
      }
      done[k] = std::move(d);
      const std::size_t f = ++finished;
      if (opt.progress) opt.progress(f, total);
    }
  };

  const int nthreads = static_cast<int>(std::min<std::size_t>(spec.threads, std::max<std::size_t>(total, 1)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (guard) std::rethrow_exception(guard);

  RunResult res;
  res.data.columns = columns(spec.kind);
  json unit_log = json::array();
  for (std::size_t k = 0; k < total; ++k) {
    const Done& d = done[k];
    const std::size_t first = res.data.rows.size();
    for (const auto& r : d.rows) {
      if (r.size() != res.data.columns.size()) {
        throw std::logic_error("row width does not match the " + to_string(spec.kind) + " header");
      }
      res.data.rows.push_back(r);
    }
    if (d.failed) ++res.failures;
    unit_log.push_back({{"unit", k},
                        {"point", units[k].point},
                        {"rows", {first, d.rows.size()}},
                        {"status", d.failed ? "failed" : "ok"},
                        {"diagnostics", d.diag}});
  }
  if (checkpoint) {
    log.close();
    std::filesystem::remove(partial);
  }

  json warnings = json::array();
  if (spec.cap_exact && uses_exact(spec)) {
    std::size_t routed = 0;
    const std::size_t status_col = res.data.columns.size() - 1;
    for (const auto& r : res.data.rows) {
      const auto* s = std::get_if<std::string>(&r[status_col]);
      if (s && s->rfind("routed_from_", 0) == 0) ++routed;
    }
    if (routed > 0) {
      warnings.push_back({{"code", "exact_cap"},
                          {"message", std::to_string(routed) +
                                          " rows outside epsilon <= 0.8, beta <= 1e3 ran on the fma backend"}});
    }
  }

  res.manifest = {{"tool", "tmsnet"},
                  {"version", TMSNET_VERSION},
                  {"started", started},
                  {"finished", iso_now()},
                  {"spec", to_json(spec)},
                  {"columns", res.data.columns},
                  {"units", unit_log},
                  {"resumed_units", resumed},
                  {"failures", res.failures},
                  {"warnings", warnings},
                  {"randomness", "none"}};
  return res;
}

}  // namespace tmsnet::experiments
