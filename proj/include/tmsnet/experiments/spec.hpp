#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmsnet/network.hpp"

namespace tmsnet::experiments {

enum class Kind {
  fidelity_sweep,
  contour,
  delay_study,
  pulsed_rate,
  truncation_study,
  optimize_fidelity,
  optimize_rate,
  spectra_dump
};

enum class Backend { exact, fma, markov };
enum class Format { csv, json };

std::string to_string(Kind k);
std::string to_string(Backend b);
std::string to_string(Format f);
Kind parse_kind(const std::string& s);
Backend parse_backend(const std::string& s);
Format parse_format(const std::string& s);

/// One named grid axis with explicit values.
struct Axis {
  std::string name;
  std::vector<double> values;
};

/// Names an axis may carry. Network parameters (beta scales kappa1 and kappa2
/// with gamma1 as the unit) plus the per-kind coordinates.
const std::vector<std::string>& axis_names();

struct OutputSpec {
  std::string path;  // empty: stdout
  Format format = Format::csv;
};

struct ExperimentSpec {
  Kind kind = Kind::fidelity_sweep;
  network::NetworkParams params;
  std::vector<Axis> grid;
  network::TruncationConfig trunc;
  core::SolverConfig solver = network::network_solver_config();
  std::vector<Backend> backends{Backend::fma};
  OutputSpec output;
  int threads = 1;
  /// Target tolerance of optimizations in epsilon (and T).
  double tol = 1e-3;
  /// Exact runs outside epsilon <= 0.8 and beta <= 1e3 are routed to the FMA
  /// backend unless this is switched off.
  bool cap_exact = true;
  /// Largest Liouvillian dimension (dim^2 of the Hilbert space) an exact run may request.
  double max_liouville_dim = 1.0e7;
  /// Contour overlays: beta values whose FMA path through (r_eff, mu_eff) is emitted.
  std::vector<double> overlay_betas;

  /// Number of points in the Cartesian product of the axes (1 for an empty grid).
  std::size_t grid_size() const;
  /// Point k of the product, last axis fastest.
  std::vector<double> point(std::size_t k) const;
  const Axis* axis(const std::string& name) const;

  /// Throws ValidationError on unknown axis names, empty axes, missing
  /// per-kind axes or bad parameter ranges.
  void validate() const;
};

/// Axis from a JSON value: a list, {"values": [...]}, {"from", "to", "steps"},
/// {"from", "to", "step"} or {"from", "to", "steps", "log": true}.
Axis parse_axis(const std::string& name, const nlohmann::json& j);

ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentSpec& s);

/// Default grids for each kind, used when the config names no axes.
ExperimentSpec default_spec(Kind kind);

/// Network parameters at a grid point: the template with axis values applied.
network::NetworkParams params_at(const ExperimentSpec& s, const std::vector<double>& point);
/// Value of a named coordinate at a grid point, or the fallback.
double coordinate(const ExperimentSpec& s, const std::vector<double>& point, const std::string& name,
                  double fallback);

}  // namespace tmsnet::experiments
