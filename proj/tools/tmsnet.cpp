// tmsnet: command-line driver for the entanglement-distribution experiments.
//
//   tmsnet sweep --beta 10 --epsilon 0:0.8:9 --backend exact,fma --ntrunc 8 --out f.csv
//   tmsnet optimize --config opt.json --threads 4
//
// Exit codes: 0 success, 2 validation error, 3 solver failure (including
// per-point failures), 4 resource guard.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tmsnet/experiments/runner.hpp"

using namespace tmsnet;
using namespace tmsnet::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitResource = 4;

// "0.5", "0.1,0.2,0.4" or "from:to:steps" (append ":log" for a log range).
Axis axis_from_text(const std::string& name, const std::string& text) {
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("--" + name + ": cannot read '" + s + "' as a number");
    }
  };
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
    return out;
  };
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3 && !(parts.size() == 4 && parts[3] == "log")) {
      throw ValidationError("--" + name + ": range must be from:to:steps[:log]");
    }
    nlohmann::json j{{"from", num(parts[0])}, {"to", num(parts[1])}, {"steps", static_cast<int>(num(parts[2]))}};
    if (parts.size() == 4) j["log"] = true;
    return parse_axis(name, j);
  }
  Axis a{name, {}};
  for (const auto& s : split(text, ',')) a.values.push_back(num(s));
  if (a.values.empty()) throw ValidationError("--" + name + ": no values");
  return a;
}

bool required_axis(Kind k, const std::string& name) {
  switch (k) {
    case Kind::contour: return name == "r_eff" || name == "mu_eff";
    case Kind::delay_study: return name == "tau";
    case Kind::pulsed_rate: return name == "T";
    case Kind::truncation_study: return name == "ntrunc";
    case Kind::optimize_fidelity: return name == "epsilon";
    case Kind::optimize_rate: return name == "epsilon" || name == "T";
    case Kind::spectra_dump: return name == "omega";
    case Kind::fidelity_sweep: return false;
  }
  return false;
}

void set_template(ExperimentSpec& s, const std::string& name, double v) {
  auto& p = s.params;
  if (name == "epsilon") p.epsilon = v;
  else if (name == "beta") p.kappa1 = p.kappa2 = v * p.gamma1;
  else if (name == "eta") p.eta = v;
  else if (name == "gamma_phi") p.gamma_phi = v * p.gamma1;
  else if (name == "delta1") p.delta1 = v;
  else if (name == "delta2") p.delta2 = v;
  else if (name == "tau") p.tau2 = p.tau1 + v;
  else if (name == "ntrunc") {
    if (v != std::floor(v)) throw ValidationError("--ntrunc must be an integer");
    s.trunc.n_trunc = static_cast<int>(v);
  } else throw ValidationError("no template value for '" + name + "'");
}

// A single value fixes the template (and drops a default axis of that name);
// several values make it an axis.
void apply_override(ExperimentSpec& s, const std::string& name, const std::string& text) {
  Axis a = axis_from_text(name, text);
  const bool scalar = a.values.size() == 1 && !required_axis(s.kind, name) &&
                      name != "T" && name != "omega" && name != "r_eff" && name != "mu_eff";
  std::erase_if(s.grid, [&](const Axis& x) { return x.name == name; });
  if (scalar) {
    set_template(s, name, a.values.front());
  } else {
    s.grid.push_back(std::move(a));
  }
}

struct Options {
  std::string config;
  std::map<std::string, std::string> params;
  std::vector<std::string> grid;
  std::string backend;
  std::string out;
  std::string format;
  std::string manifest;
  std::optional<int> threads;
  std::optional<double> tol;
  std::optional<double> max_liouville_dim;
  bool no_cap = false;
  bool resume = false;
  bool quiet = false;
  std::string objective = "fidelity";
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON experiment file; flags override it");
  for (const char* n : {"epsilon", "beta", "eta", "gamma-phi", "delta1", "delta2", "tau", "ntrunc"}) {
    std::string key = n;
    std::replace(key.begin(), key.end(), '-', '_');
    sub->add_option(std::string("--") + n, o.params[key],
                    "value, list a,b,c or range from:to:steps[:log]");
  }
  sub->add_option("--grid", o.grid, "extra axis as name=values (e.g. T=0.5:20:40)");
  sub->add_option("--backend", o.backend, "comma list of exact, fma, markov");
  sub->add_option("--out", o.out, "output file (stdout if omitted)");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--manifest", o.manifest, "manifest path (default <out>.manifest.json)");
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--tol", o.tol, "optimization tolerance in epsilon");
  sub->add_option("--max-liouville-dim", o.max_liouville_dim, "resource ceiling for exact runs");
  sub->add_flag("--no-cap", o.no_cap, "run exact points outside epsilon <= 0.8, beta <= 1e3");
  sub->add_flag("--resume", o.resume, "continue an interrupted run with the same spec and --out");
  sub->add_flag("--quiet", o.quiet, "no progress on stderr");
}

ExperimentSpec build_spec(Kind kind, const Options& o) {
  ExperimentSpec s;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ValidationError("cannot open config " + o.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config " + o.config + ": " + e.what());
    }
    if (!j.contains("kind")) j["kind"] = to_string(kind);
    s = spec_from_json(j);
    if (s.kind != kind) {
      throw ValidationError("config kind " + to_string(s.kind) + " does not match the subcommand");
    }
  } else {
    s = default_spec(kind);
  }
  for (const auto& [name, text] : o.params) {
    if (!text.empty()) apply_override(s, name, text);
  }
  for (const auto& g : o.grid) {
    const auto eq = g.find('=');
    if (eq == std::string::npos) throw ValidationError("--grid expects name=values");
    const std::string name = g.substr(0, eq);
    std::erase_if(s.grid, [&](const Axis& x) { return x.name == name; });
    s.grid.push_back(axis_from_text(name, g.substr(eq + 1)));
  }
  if (!o.backend.empty()) {
    s.backends.clear();
    std::stringstream ss(o.backend);
    for (std::string b; std::getline(ss, b, ',');) s.backends.push_back(parse_backend(b));
  }
  if (!o.out.empty()) s.output.path = o.out;
  if (!o.format.empty()) s.output.format = parse_format(o.format);
  else if (o.out.size() > 5 && o.out.substr(o.out.size() - 5) == ".json") s.output.format = Format::json;
  if (o.threads) s.threads = *o.threads;
  if (o.tol) s.tol = *o.tol;
  if (o.max_liouville_dim) s.max_liouville_dim = *o.max_liouville_dim;
  if (o.no_cap) s.cap_exact = false;
  return s;
}

int execute(Kind kind, const Options& o) {
  const ExperimentSpec spec = build_spec(kind, o);
  RunOptions ro;
  ro.resume = o.resume;
  if (!o.quiet) {
    ro.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\r[" << done << "/" << total << "]" << (done == total ? "\n" : "") << std::flush;
    };
  }
  const RunResult res = run(spec, ro);

  auto write = [&](std::ostream& os) {
    if (spec.output.format == Format::json) write_json(os, res.data);
    else write_csv(os, res.data);
  };
  if (spec.output.path.empty()) {
    write(std::cout);
  } else {
    std::ofstream f(spec.output.path);
    if (!f) throw ValidationError("cannot write " + spec.output.path);
    write(f);
  }
  const std::string mpath = !o.manifest.empty()          ? o.manifest
                            : !spec.output.path.empty() ? spec.output.path + ".manifest.json"
                                                        : "";
  if (!mpath.empty()) {
    std::ofstream m(mpath);
    if (!m) throw ValidationError("cannot write " + mpath);
    m << res.manifest.dump(2) << '\n';
  }
  for (const auto& w : res.manifest.at("warnings")) {
    std::cerr << "warning: " << w.at("message").get<std::string>() << '\n';
  }
  if (res.failures > 0) {
    std::cerr << res.failures << " unit(s) failed; see the status column\n";
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement distribution with a two-mode squeezing amplifier: experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TMSNET_VERSION);

  Options o;
  struct Sub {
    const char* name;
    const char* help;
    Kind kind;
  };
  const Sub subs[] = {
      {"sweep", "fidelity, concurrence and E_F over a parameter grid", Kind::fidelity_sweep},
      {"contour", "fidelity over (r_eff, mu_eff) with beta paths", Kind::contour},
      {"delay", "qubit state versus delay tau = tau2 - tau1", Kind::delay_study},
      {"rate", "pulsed protocol: F, E_F and rate versus pulse length T", Kind::pulsed_rate},
      {"truncation", "convergence in the Fock cutoff", Kind::truncation_study},
      {"optimize", "optimal fidelity (or rate with --objective rate)", Kind::optimize_fidelity},
      {"spectra", "amplifier correlation spectra", Kind::spectra_dump}};
  std::map<CLI::App*, Kind> kinds;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, o);
    if (s.kind == Kind::optimize_fidelity) {
      sub->add_option("--objective", o.objective, "fidelity or rate")->check(CLI::IsMember({"fidelity", "rate"}));
    }
    kinds[sub] = s.kind;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  Kind kind = Kind::fidelity_sweep;
  for (const auto& [sub, k] : kinds) {
    if (sub->parsed()) kind = k;
  }
  if (kind == Kind::optimize_fidelity && o.objective == "rate") kind = Kind::optimize_rate;

  try {
    return execute(kind, o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ResourceGuardError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitResource;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}
