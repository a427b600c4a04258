#include "tmsnet/experiments/spec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tmsnet::experiments {

using nlohmann::json;

namespace {

template <class E>
struct Names {
  E value;
  const char* name;
};

constexpr Names<Kind> kKinds[] = {{Kind::fidelity_sweep, "fidelity_sweep"},
                                  {Kind::contour, "contour"},
                                  {Kind::delay_study, "delay_study"},
                                  {Kind::pulsed_rate, "pulsed_rate"},
                                  {Kind::truncation_study, "truncation_study"},
                                  {Kind::optimize_fidelity, "optimize_fidelity"},
                                  {Kind::optimize_rate, "optimize_rate"},
                                  {Kind::spectra_dump, "spectra_dump"}};
constexpr Names<Backend> kBackends[] = {
    {Backend::exact, "exact"}, {Backend::fma, "fma"}, {Backend::markov, "markov"}};
constexpr Names<Format> kFormats[] = {{Format::csv, "csv"}, {Format::json, "json"}};

template <class E, std::size_t N>
std::string name_of(const Names<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <class E, std::size_t N>
E parse_name(const Names<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  throw ValidationError(std::string("unknown ") + what + " '" + s + "' (expected one of " + allowed + ")");
}

bool is_network_axis(const std::string& n) {
  static const std::vector<std::string> names{"epsilon", "beta",   "eta",    "gamma_phi",
                                              "delta1",  "delta2", "kappa1", "kappa2",
                                              "gamma1",  "gamma2", "tau"};
  return std::find(names.begin(), names.end(), n) != names.end();
}

std::vector<std::string> required_axes(Kind k) {
  switch (k) {
    case Kind::contour: return {"r_eff", "mu_eff"};
    case Kind::delay_study: return {"tau"};
    case Kind::pulsed_rate: return {"T"};
    case Kind::truncation_study: return {"ntrunc"};
    case Kind::optimize_fidelity: return {"epsilon"};
    case Kind::optimize_rate: return {"epsilon", "T"};
    case Kind::spectra_dump: return {"omega"};
    case Kind::fidelity_sweep: return {};
  }
  return {};
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace

std::string to_string(Kind k) { return name_of(kKinds, k); }
std::string to_string(Backend b) { return name_of(kBackends, b); }
std::string to_string(Format f) { return name_of(kFormats, f); }
Kind parse_kind(const std::string& s) { return parse_name(kKinds, s, "kind"); }
Backend parse_backend(const std::string& s) { return parse_name(kBackends, s, "backend"); }
Format parse_format(const std::string& s) { return parse_name(kFormats, s, "format"); }

const std::vector<std::string>& axis_names() {
  static const std::vector<std::string> names{
      "epsilon", "beta",   "eta",    "gamma_phi", "delta1", "delta2", "kappa1", "kappa2",
      "gamma1",  "gamma2", "tau",    "ntrunc",    "r_eff",  "mu_eff", "T",      "omega"};
  return names;
}

std::size_t ExperimentSpec::grid_size() const {
  std::size_t n = 1;
  for (const auto& a : grid) n *= a.values.size();
  return n;
}

std::vector<double> ExperimentSpec::point(std::size_t k) const {
  std::vector<double> p(grid.size());
  for (std::size_t i = grid.size(); i-- > 0;) {
    const std::size_t m = grid[i].values.size();
    p[i] = grid[i].values[k % m];
    k /= m;
  }
  return p;
}

const Axis* ExperimentSpec::axis(const std::string& name) const {
  for (const auto& a : grid) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void ExperimentSpec::validate() const {
  const auto& names = axis_names();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& a = grid[i];
    if (std::find(names.begin(), names.end(), a.name) == names.end()) {
      throw ValidationError("grid axis '" + a.name + "' does not name a parameter");
    }
    if (a.values.empty()) throw ValidationError("grid axis '" + a.name + "' is empty");
    for (std::size_t j = 0; j < i; ++j) {
      if (grid[j].name == a.name) throw ValidationError("grid axis '" + a.name + "' given twice");
    }
    for (double v : a.values) {
      if (!std::isfinite(v)) throw ValidationError("grid axis '" + a.name + "' has a non-finite value");
    }
  }
  for (const auto& r : required_axes(kind)) {
    if (!axis(r)) throw ValidationError(to_string(kind) + " needs a '" + r + "' axis");
  }
  auto check_positive = [this](const char* n, bool strict) {
    if (const Axis* a = axis(n)) {
      for (double v : a->values) {
        if (strict ? !(v > 0.0) : !(v >= 0.0)) {
          throw ValidationError(std::string("axis '") + n + "' must be " + (strict ? "> 0" : ">= 0"));
        }
      }
    }
  };
  check_positive("T", true);
  check_positive("beta", true);
  check_positive("r_eff", false);
  if (const Axis* a = axis("mu_eff")) {
    for (double v : a->values) {
      if (!(v > 0.0) || v > 1.0) throw ValidationError("axis 'mu_eff' must lie in (0, 1]");
    }
  }
  if (const Axis* a = axis("ntrunc")) {
    for (double v : a->values) {
      if (v < 2.0 || v != std::floor(v)) throw ValidationError("axis 'ntrunc' needs integers >= 2");
    }
    if (kind == Kind::truncation_study && !std::is_sorted(a->values.begin(), a->values.end())) {
      throw ValidationError("truncation_study needs an increasing ntrunc list");
    }
  }
  if (kind == Kind::delay_study || kind == Kind::pulsed_rate || kind == Kind::optimize_rate) {
    const char* inner = kind == Kind::delay_study ? "tau" : "T";
    const auto& v = axis(inner)->values;
    if (!std::is_sorted(v.begin(), v.end())) {
      throw ValidationError(std::string("axis '") + inner + "' must be increasing");
    }
  }
  if (backends.empty()) throw ValidationError("no backend requested");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
  if (!(max_liouville_dim > 0.0)) throw ValidationError("max_liouville_dim must be > 0");
  for (double b : overlay_betas) {
    if (!(b > 0.0)) throw ValidationError("overlay betas must be > 0");
  }
  params.validate();
  trunc.validate();
  solver.validate();
  // Every grid point must give valid parameters.
  for (std::size_t k = 0; k < grid_size(); ++k) params_at(*this, point(k)).validate();
}

Axis parse_axis(const std::string& name, const json& j) {
  Axis a{name, {}};
  if (j.is_number()) {
    a.values = {j.get<double>()};
  } else if (j.is_array()) {
    a.values = j.get<std::vector<double>>();
  } else if (j.is_object() && j.contains("values")) {
    a.values = j.at("values").get<std::vector<double>>();
  } else if (j.is_object() && j.contains("from") && j.contains("to")) {
    const double from = j.at("from").get<double>(), to = j.at("to").get<double>();
    if (j.contains("steps")) {
      const int n = j.at("steps").get<int>();
      if (n < 1) throw ValidationError("axis '" + name + "': steps must be >= 1");
      if (j.value("log", false)) {
        if (!(from > 0.0) || !(to > 0.0)) throw ValidationError("axis '" + name + "': log axis needs positive ends");
        for (double e : linspace(std::log10(from), std::log10(to), n)) a.values.push_back(std::pow(10.0, e));
      } else {
        a.values = linspace(from, to, n);
      }
    } else if (j.contains("step")) {
      const double step = j.at("step").get<double>();
      if (!(step > 0.0)) throw ValidationError("axis '" + name + "': step must be > 0");
      const int n = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
      if (n < 1) throw ValidationError("axis '" + name + "': empty range");
      for (int i = 0; i < n; ++i) a.values.push_back(from + i * step);
    } else {
      throw ValidationError("axis '" + name + "': range needs 'steps' or 'step'");
    }
  } else {
    throw ValidationError("axis '" + name + "': expected a number, list or range object");
  }
  return a;
}

namespace {

void read_params(const json& j, network::NetworkParams& p) {
  // beta and gamma_phi are in units of gamma1.
  p.gamma1 = j.value("gamma1", p.gamma1);
  p.gamma2 = j.value("gamma2", p.gamma2);
  if (j.contains("beta")) p.kappa1 = p.kappa2 = j.at("beta").get<double>() * p.gamma1;
  p.kappa1 = j.value("kappa1", p.kappa1);
  p.kappa2 = j.value("kappa2", p.kappa2);
  if (j.contains("gamma_phi")) p.gamma_phi = j.at("gamma_phi").get<double>() * p.gamma1;
  p.delta1 = j.value("delta1", p.delta1);
  p.delta2 = j.value("delta2", p.delta2);
  p.epsilon = j.value("epsilon", p.epsilon);
  p.eta = j.value("eta", p.eta);
  p.tau1 = j.value("tau1", p.tau1);
  p.tau2 = j.value("tau2", p.tau2);
  if (j.contains("tau")) p.tau2 = p.tau1 + j.at("tau").get<double>();
}

void read_solver(const json& j, core::SolverConfig& c) {
  if (j.contains("method")) {
    const auto m = j.at("method").get<std::string>();
    if (m == "automatic") c.method = core::SteadyMethod::automatic;
    else if (m == "direct") c.method = core::SteadyMethod::direct_sparse;
    else if (m == "iterative") c.method = core::SteadyMethod::shift_invert_iterative;
    else throw ValidationError("solver.method must be automatic, direct or iterative");
  }
  if (j.contains("ode")) {
    const auto m = j.at("ode").get<std::string>();
    if (m == "runge_kutta") c.ode = core::OdeMethod::runge_kutta;
    else if (m == "krylov") c.ode = core::OdeMethod::krylov;
    else throw ValidationError("solver.ode must be runge_kutta or krylov");
  }
  c.abs_tol = j.value("abs_tol", c.abs_tol);
  c.rel_tol = j.value("rel_tol", c.rel_tol);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.direct_limit = j.value("direct_limit", c.direct_limit);
  c.krylov_dim = j.value("krylov_dim", c.krylov_dim);
}

}  // namespace

ExperimentSpec spec_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    ExperimentSpec s = default_spec(parse_kind(j.value("kind", std::string("fidelity_sweep"))));
    if (j.contains("params")) read_params(j.at("params"), s.params);
    if (j.contains("grid")) {
      s.grid.clear();
      const auto& g = j.at("grid");
      if (g.is_array()) {
        // [{"name": ..., ...}, ...] keeps the axis order explicit.
        for (const auto& e : g) s.grid.push_back(parse_axis(e.at("name").get<std::string>(), e));
      } else {
        for (const auto& [k, v] : g.items()) s.grid.push_back(parse_axis(k, v));
      }
    }
    if (j.contains("trunc")) s.trunc.n_trunc = j.at("trunc").value("n_trunc", s.trunc.n_trunc);
    if (j.contains("solver")) read_solver(j.at("solver"), s.solver);
    if (j.contains("backends")) {
      s.backends.clear();
      for (const auto& b : j.at("backends")) s.backends.push_back(parse_backend(b.get<std::string>()));
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      s.output.path = o.value("path", s.output.path);
      if (o.contains("format")) s.output.format = parse_format(o.at("format").get<std::string>());
    }
    s.threads = j.value("threads", s.threads);
    s.tol = j.value("tol", s.tol);
    s.cap_exact = j.value("cap_exact", s.cap_exact);
    s.max_liouville_dim = j.value("max_liouville_dim", s.max_liouville_dim);
    if (j.contains("overlay_betas")) s.overlay_betas = j.at("overlay_betas").get<std::vector<double>>();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

json to_json(const ExperimentSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  const auto& p = s.params;
  j["params"] = {{"kappa1", p.kappa1}, {"kappa2", p.kappa2}, {"gamma1", p.gamma1},
                 {"gamma2", p.gamma2}, {"gamma_phi", p.normalized_dephasing()},
                 {"delta1", p.delta1}, {"delta2", p.delta2}, {"epsilon", p.epsilon},
                 {"eta", p.eta},       {"tau1", p.tau1},     {"tau2", p.tau2}};
  j["grid"] = json::array();
  for (const auto& a : s.grid) j["grid"].push_back({{"name", a.name}, {"values", a.values}});
  j["trunc"] = {{"n_trunc", s.trunc.n_trunc}};
  j["solver"] = {{"method", s.solver.method == core::SteadyMethod::automatic       ? "automatic"
                            : s.solver.method == core::SteadyMethod::direct_sparse ? "direct"
                                                                                   : "iterative"},
                 {"ode", s.solver.ode == core::OdeMethod::krylov ? "krylov" : "runge_kutta"},
                 {"abs_tol", s.solver.abs_tol},
                 {"rel_tol", s.solver.rel_tol},
                 {"max_steps", s.solver.max_steps},
                 {"direct_limit", s.solver.direct_limit},
                 {"krylov_dim", s.solver.krylov_dim}};
  j["backends"] = json::array();
  for (auto b : s.backends) j["backends"].push_back(to_string(b));
  j["output"] = {{"path", s.output.path}, {"format", to_string(s.output.format)}};
  j["threads"] = s.threads;
  j["tol"] = s.tol;
  j["cap_exact"] = s.cap_exact;
  j["max_liouville_dim"] = s.max_liouville_dim;
  j["overlay_betas"] = s.overlay_betas;
  return j;
}

ExperimentSpec default_spec(Kind kind) {
  ExperimentSpec s;
  s.kind = kind;
  s.params = network::NetworkParams::symmetric(0.3, 10.0);
  auto range = [](const char* n, double a, double b, int steps) { return Axis{n, linspace(a, b, steps)}; };
  switch (kind) {
    case Kind::fidelity_sweep:
      s.grid = {range("epsilon", 0.0, 0.8, 9)};
      s.backends = {Backend::fma, Backend::markov};
      break;
    case Kind::contour:
      s.grid = {range("r_eff", 0.0, 3.0, 31), range("mu_eff", 0.5, 1.0, 26)};
      s.overlay_betas = {1.0, 10.0, 100.0};
      break;
    case Kind::delay_study:
      s.params = network::NetworkParams::symmetric(0.5, 1.0);
      s.grid = {range("tau", 0.0, 2.0, 11)};
      s.backends = {Backend::fma};
      break;
    case Kind::pulsed_rate:
      s.params = network::NetworkParams::symmetric(0.3, 10.0);
      s.grid = {range("T", 0.5, 20.0, 40)};
      s.backends = {Backend::exact};
      s.solver.ode = core::OdeMethod::krylov;
      break;
    case Kind::truncation_study:
      s.params = network::NetworkParams::symmetric(0.5, 10.0);
      s.grid = {Axis{"ntrunc", {4, 6, 8, 10, 12}}};
      s.backends = {Backend::exact};
      break;
    case Kind::optimize_fidelity:
      s.grid = {range("epsilon", 0.05, 0.8, 16), Axis{"beta", {10.0, 100.0}}};
      s.backends = {Backend::fma};
      break;
    case Kind::optimize_rate:
      // The T grid (in units of 1/gamma1) and a coarse epsilon scan; 16 x 40
      // resolves the rate ridge at desk scale.
      s.params = network::NetworkParams::symmetric(0.3, 10.0);
      s.grid = {range("epsilon", 0.1, 0.7, 7), range("T", 0.5, 20.0, 40)};
      s.backends = {Backend::exact};
      s.solver.ode = core::OdeMethod::krylov;
      break;
    case Kind::spectra_dump:
      s.params = network::NetworkParams::symmetric(0.5, 1.0);
      s.grid = {range("omega", -5.0, 5.0, 101)};
      break;
  }
  return s;
}

double coordinate(const ExperimentSpec& s, const std::vector<double>& point, const std::string& name,
                  double fallback) {
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (s.grid[i].name == name) return point[i];
  }
  return fallback;
}

network::NetworkParams params_at(const ExperimentSpec& s, const std::vector<double>& point) {
  network::NetworkParams p = s.params;
  // gamma rates first so that beta and gamma_phi scale with the final gamma1.
  for (const char* n : {"gamma1", "gamma2"}) {
    const double v = coordinate(s, point, n, std::nan(""));
    if (!std::isnan(v)) (std::string(n) == "gamma1" ? p.gamma1 : p.gamma2) = v;
  }
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const auto& n = s.grid[i].name;
    const double v = point[i];
    if (!is_network_axis(n)) continue;
    if (n == "epsilon") p.epsilon = v;
    else if (n == "beta") p.kappa1 = p.kappa2 = v * p.gamma1;
    else if (n == "eta") p.eta = v;
    else if (n == "gamma_phi") p.gamma_phi = v * p.gamma1;
    else if (n == "delta1") p.delta1 = v;
    else if (n == "delta2") p.delta2 = v;
    else if (n == "tau") p.tau2 = p.tau1 + v;
  }
  // Explicit kappas win over beta.
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (s.grid[i].name == "kappa1") p.kappa1 = point[i];
    if (s.grid[i].name == "kappa2") p.kappa2 = point[i];
  }
  return p;
}

}  // namespace tmsnet::experiments
