#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include "metacal/grid.hpp"
#include "metacal/params.hpp"
#include "metacal/types.hpp"

namespace metacal {

/// Shape of the equilibrium speed-density relation.
///   scaled_base: V(rho) = v_free * exp(-(rho / (a * rho_cr))^a)
///   classical:  V(rho) = v_free * exp(-(1/a) * (rho/rho_cr)^a)
enum class FdForm { scaled_base, classical };

struct SimOptions {
  FdForm fd_form = FdForm::scaled_base;
  /// Clamp negative densities/speeds at the floors below and count the
  /// events. In strict mode nothing is clamped; non-finite values raise
  /// SimulationError in both modes.
  bool strict = false;
  double density_floor = 0.0;
  double speed_floor = 0.0;
};

struct SimStats {
  long clamp_events = 0;
  int first_clamp_time = -1;
};

/// Raised when a state or intermediate term becomes non-finite; carries
/// where it happened.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& term, int segment, int time_step);
  const std::string& term() const { return term_; }
  int segment() const { return segment_; }
  int time_step() const { return time_step_; } // -1 when outside a rollout

 private:
  std::string term_;
  int segment_;
  int time_step_;
};

/// Equilibrium (fundamental diagram) speed for a density, km/h.
double equilibrium_speed(double rho, const SegmentParameters& params,
                         FdForm form = FdForm::scaled_base);

/// Analytic partial derivatives of equilibrium_speed, used by the adjoint
/// gradient. Any output pointer may be null.
void equilibrium_speed_derivs(double rho, const SegmentParameters& params, FdForm form,
                              double* d_rho, double* d_a, double* d_v_free, double* d_rho_cr);

/// One-step boundary data.
struct BoundarySlice {
  double upstream_flow = 0.0;
  double upstream_speed = 0.0;
  double downstream_density = 0.0;
};

/// Advances the chain one time step (density, speed and flow updates).
/// `time_step` only labels
/// errors and clamp stats.
TrafficState step(const TrafficState& state, std::span<const SegmentParameters> params,
                  const BoundarySlice& bc, const NetworkGeometry& geom,
                  const SimOptions& opts = {}, SimStats* stats = nullptr,
                  int time_step = -1);

struct SimResult {
  Trajectory trajectory;
  SimStats stats;
};

/// Deterministic rollout over bc.horizon() steps; trajectory.states[0] is a
/// copy of `initial`.
SimResult simulate(const TrafficState& initial, const ParameterSchedule& schedule,
                   const BoundaryConditions& bc, const NetworkGeometry& geom,
                   const SimOptions& opts = {});

/// Speed/density/flow grids of a trajectory ((horizon+1) x segments).
Grid speed_grid(const Trajectory& traj);
Grid density_grid(const Trajectory& traj);
Grid flow_grid(const Trajectory& traj);

} // namespace metacal
