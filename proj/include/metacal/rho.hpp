#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metacal/calibrate.hpp"
#include "metacal/eval.hpp"

namespace metacal {

/// Rolling-horizon configuration. Each subproblem is scored over
/// prediction_horizon_steps and its solution executed for
/// control_horizon_steps (H_c < H_p); parameters change every H_c steps.
struct RhoConfig {
  int control_horizon_steps = 0;    // H_c
  int prediction_horizon_steps = 0; // H_p
  /// Weight of || normalize(theta_k) - normalize(theta_{k-1}) ||^2 added to
  /// each subproblem objective.
  double jump_penalty_weight = 1.0;
  /// Optional trust region around a nominal block (normalized values,
  /// per-coordinate clip radius).
  std::optional<std::pair<std::vector<double>, double>> nominal_anchor;
  /// Optional per-update change cap, per coordinate in normalized space.
  std::optional<double> jump_cap;
  /// Reset each window's starting state to the observations instead of the
  /// model-propagated state.
  bool reanchor_to_observations = false;
  SolverConfig inner;
};

/// Sequential rolling-horizon calibration producing a piecewise-constant
/// ParameterSchedule; the state at the end of each executed window seeds
/// the next subproblem.
CalibrationResult calibrate_rho(const ObservedField& observed, const BoundaryConditions& bc,
                                const NetworkGeometry& geom, const ParameterBounds& bounds,
                                const ParameterVector& warm_start, const RhoConfig& cfg,
                                const LossOptions& loss = {});

struct HorizonSweepEntry {
  int hc = 0;
  int hp = 0;
  bool failed = false;
  std::string error;
  CalibrationResult result;
  double fit_mape = 0.0; // unperturbed schedule MAPE vs observations
  std::vector<double> noise_levels;
  std::vector<double> avg_mape;   // robustness average per level
  std::vector<double> worst_mape;
  double mean_avg_mape = 0.0; // mean of avg_mape across levels
};

/// Runs calibrate_rho once per (H_c, H_p) pair. When a NoiseSpec is given,
/// each schedule is additionally replayed under inflow noise. Per-pair
/// failures are recorded and the sweep continues.
std::vector<HorizonSweepEntry> horizon_sweep(
    const ObservedField& observed, const BoundaryConditions& bc,
    const NetworkGeometry& geom, const ParameterBounds& bounds,
    const ParameterVector& warm_start, const std::vector<std::pair<int, int>>& horizons,
    const RhoConfig& base_cfg, const std::optional<NoiseSpec>& noise = std::nullopt,
    const LossOptions& loss = {}, int workers = 1);

} // namespace metacal
