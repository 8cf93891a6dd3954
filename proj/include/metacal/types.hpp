#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace metacal {

/// Fixed highway topology: a chain of equal-length segments with optional
/// on-/off-ramps. All lengths in km, the time step in seconds (converted to
/// hours internally, see dt_hours()).
struct NetworkGeometry {
  int num_segments = 0;
  double segment_length_km = 0.0;
  double time_step_s = 0.0;
  std::vector<int> lanes;            // per segment, >= 1
  std::vector<int> onramp_segments;  // sorted, unique
  std::vector<int> offramp_segments;

  double dt_hours() const { return time_step_s / 3600.0; }
  bool has_onramp(int segment) const;
  bool has_offramp(int segment) const;

  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
};

/// Per-segment model parameters. Units: tau_h in hours, eta in km^2/h,
/// kappa and rho_cr in veh/km/lane, v_free in km/h, r in veh/h, beta in [0,1).
struct SegmentParameters {
  double tau_h = 18.0 / 3600.0;
  double eta = 60.0;
  double kappa = 40.0;
  double a = 1.867;
  double v_free_kmh = 102.0;
  double rho_cr = 33.5;
  double beta = 0.0;   // turning ratio, 0 unless the segment has an off-ramp
  double r_vph = 0.0;  // on-ramp inflow, 0 unless the segment has an on-ramp
};

/// Macroscopic state of the chain at one time step. density is per lane
/// (veh/km/lane), flow is total across lanes (veh/h); flow == density *
/// speed * lanes holds for states produced by the simulator.
struct TrafficState {
  std::vector<double> density;
  std::vector<double> speed;
  std::vector<double> flow;

  int size() const { return static_cast<int>(density.size()); }

  /// Builds a state from density/speed, deriving flow = density * speed * lanes.
  static TrafficState from_density_speed(std::vector<double> density,
                                         std::vector<double> speed,
                                         const std::vector<int>& lanes);
};

/// Exogenous boundary series driving the chain; all three series have one
/// entry per simulation step.
struct BoundaryConditions {
  std::vector<double> upstream_flow;      // veh/h
  std::vector<double> upstream_speed;     // km/h
  std::vector<double> downstream_density; // veh/km/lane

  int horizon() const { return static_cast<int>(upstream_flow.size()); }
  void validate() const;
};

/// Time-indexed rollout, states[0] == initial state, length horizon + 1.
struct Trajectory {
  std::vector<TrafficState> states;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

struct CflResult {
  bool pass = false;
  double limit_kmh = 0.0;  // L / delta
  double margin_kmh = 0.0; // limit - v_free_max
};

/// CFL stability condition for the explicit scheme: L/delta >= v_free.
CflResult cfl_check(const NetworkGeometry& geom, double v_free_max_kmh);

} // namespace metacal
