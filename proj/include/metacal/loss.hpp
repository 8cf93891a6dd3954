#pragma once

#include <optional>
#include <span>
#include <vector>

#include "metacal/grid.hpp"
#include "metacal/params.hpp"
#include "metacal/simulate.hpp"
#include "metacal/types.hpp"

namespace metacal {

/// Observed macroscopic fields on the (horizon+1) x segments grid; speed is
/// required, density/flow optional. initial_state anchors simulations.
struct ObservedField {
  Grid speed;
  std::optional<Grid> density;
  std::optional<Grid> flow;
  TrafficState initial_state;

  int horizon() const { return speed.rows - 1; }
  int num_segments() const { return speed.cols; }
  void validate(const NetworkGeometry& geom) const;
};

/// Which state components enter the squared-residual sum. Speed-only by
/// default; density/flow require the corresponding observed grids.
struct LossWeights {
  double speed = 1.0;
  double density = 0.0;
  double flow = 0.0;
};

/// Inclusive range of state rows [first, last]; last == -1 means the
/// observed horizon.
struct Window {
  int first = 0;
  int last = -1;
};

struct LossOptions {
  LossWeights weights;
  SimOptions sim;
  /// A rollout that becomes non-finite contributes penalty * (steps left in
  /// the window), keeping the objective finite but strongly repulsive.
  double blowup_penalty = 1e12;
};

struct LossValue {
  double value = 0.0;
  bool blew_up = false;
  int blowup_time = -1;
  long clamp_events = 0;
};

/// Squared-residual sum of the trajectory against the observed grids over
/// `window`; traj.states[i] is taken as time row window.first + i.
double trajectory_sse(const Trajectory& traj, const ObservedField& observed,
                      const LossWeights& weights, Window window);

/// Squared-residual objective: simulate theta over the window, starting from
/// `start_state` when given, otherwise from observed.initial_state
/// (window.first must then be 0).
LossValue sse_loss_detailed(const ParameterVector& theta, const ObservedField& observed,
                            const BoundaryConditions& bc, const NetworkGeometry& geom,
                            Window window = {}, const LossOptions& opts = {},
                            const TrafficState* start_state = nullptr);

double sse_loss(const ParameterVector& theta, const ObservedField& observed,
                const BoundaryConditions& bc, const NetworkGeometry& geom,
                Window window = {}, const LossOptions& opts = {},
                const TrafficState* start_state = nullptr);

struct MapeResult {
  double value_pct = 0.0;
  long excluded = 0; // observed entries below the floor, skipped
  long scored = 0;
};

/// Mean absolute percent error between two equal-shape grids. Observed
/// entries below floor are excluded from the mean and counted.
MapeResult mape(const Grid& sim, const Grid& obs, double floor = 1.0);

enum class GradientMode { forward_fd, central_fd, adjoint };

struct GradientOptions {
  GradientMode mode = GradientMode::forward_fd;
  double fd_step = 1e-6; // step in normalized coordinates
  int workers = 1;
};

struct GradientResult {
  std::vector<double> gradient; // in normalized parameter space
  LossValue loss;               // loss at theta
};

/// Gradient of sse_loss with respect to the normalized parameter vector.
/// forward_fd / central_fd difference the objective; adjoint runs one
/// reverse pass through the rollout (exact up to floating point).
GradientResult loss_gradient(const ParameterVector& theta, const ObservedField& observed,
                             const BoundaryConditions& bc, const NetworkGeometry& geom,
                             Window window = {}, const LossOptions& opts = {},
                             const GradientOptions& gopts = {},
                             const TrafficState* start_state = nullptr);

} // namespace metacal
