#pragma once

#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "tmsnet/experiments/output.hpp"
#include "tmsnet/experiments/spec.hpp"
#include "tmsnet/reservoir.hpp"

namespace tmsnet::experiments {

struct RunOptions {
  /// Continue from the partial-results file next to the output, if present.
  bool resume = false;
  /// Keep completed units in `<output>.partial.jsonl` while running.
  bool checkpoint = true;
  /// Called after each finished unit with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

struct RunResult {
  Dataset data;
  /// Spec echo, version, timestamps and per-unit diagnostics.
  nlohmann::json manifest;
  /// Units whose computation threw; their rows carry the error in `status`.
  std::size_t failures = 0;
};

/// Runs an experiment. Work is split into units (grid points outside the
/// kind's inner axes), dispatched to `spec.threads` workers and merged in grid
/// order, so the dataset does not depend on the thread count.
/// Throws ValidationError for a bad spec and ResourceGuardError before any
/// work if an exact unit would exceed `max_liouville_dim`.
RunResult run(const ExperimentSpec& spec, const RunOptions& opt = {});

/// Fixed header of a kind's dataset.
std::vector<std::string> columns(Kind kind);

/// Result of a scan-then-golden-section maximization over one variable.
struct Maximum {
  double x = 0.0;
  double value = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  /// Half-width of the final bracket.
  double achieved_tol = 0.0;
  /// More than one strict local maximum on the scan grid.
  bool multimodal = false;
  int evaluations = 0;
};

/// Scans `grid` (increasing), then refines around the best grid point by
/// golden-section search until the bracket half-width is below `tol`.
Maximum maximize(const std::function<double(double)>& f, const std::vector<double>& grid, double tol);

/// Qubit steady state from one backend, with the backend actually used (exact
/// requests outside the capped regime fall back to fma when `cap` is set).
struct BackendState {
  core::DensityMatrix rho;
  Backend used = Backend::fma;
  std::optional<reservoir::ReservoirMoments> moments;
  nlohmann::json diagnostics;
};

BackendState qubit_state(const network::NetworkParams& p, Backend b, const network::TruncationConfig& t,
                         const core::SolverConfig& cfg, bool cap, double max_liouville_dim);

/// Parameters inside the default exact regime (epsilon <= 0.8, beta <= 1e3).
bool within_exact_cap(const network::NetworkParams& p);

/// Throws ResourceGuardError when the cascaded Liouvillian at truncation n exceeds the ceiling.
void check_resources(int n_trunc, double max_liouville_dim);

}  // namespace tmsnet::experiments
