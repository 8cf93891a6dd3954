#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metacal/loss.hpp"
#include "metacal/params.hpp"
#include "metacal/solver.hpp"

namespace metacal {

/// MAPE recorded for runs whose evaluation simulation blows up.
inline constexpr double kPenaltyMapePct = 1e6;

struct WindowDiagnostics {
  int t_start = 0;
  int t_pred_end = 0; // scored subproblem window end (inclusive row)
  int t_exec_end = 0; // executed up to this step
  double subproblem_loss = 0.0;
  int iterations = 0;
  bool failed = false;
  std::vector<double> loss_trace; // accepted iterates of this subproblem
};

struct CalibrationResult {
  ParameterVector theta_star;
  ParameterSchedule schedule;
  /// Accepted-iterate losses for single solves (static, GA best-so-far);
  /// for rolling-horizon runs, the per-window final subproblem losses.
  std::vector<double> loss_trace;
  double final_loss = 0.0;
  double final_mape_pct = 0.0;
  long mape_excluded = 0;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string termination_reason;
  ParameterVector warm_start_used;
  std::uint64_t seed = 0;
  long instability_incidents = 0;
  long clamp_events = 0;
  std::vector<WindowDiagnostics> windows; // rolling-horizon runs only
};

/// One-shot bound-constrained calibration of a single parameter block over
/// the full horizon (or the given window).
CalibrationResult calibrate_static(const ObservedField& observed,
                                   const BoundaryConditions& bc,
                                   const NetworkGeometry& geom,
                                   const ParameterBounds& bounds,
                                   const ParameterVector& warm_start,
                                   const SolverConfig& cfg, const LossOptions& loss = {});

/// Convenience overload building the warm-start vector from per-segment
/// parameters.
CalibrationResult calibrate_static(const ObservedField& observed,
                                   const BoundaryConditions& bc,
                                   const NetworkGeometry& geom,
                                   const ParameterBounds& bounds,
                                   std::span<const SegmentParameters> warm_params,
                                   const SolverConfig& cfg, const LossOptions& loss = {});

/// Simulates the schedule over the full observed horizon and returns the
/// speed-field MAPE vs the observations (kPenaltyMapePct on blow-up).
MapeResult schedule_mape(const ParameterSchedule& schedule, const ObservedField& observed,
                         const BoundaryConditions& bc, const NetworkGeometry& geom,
                         const SimOptions& sim = {});

} // namespace metacal
