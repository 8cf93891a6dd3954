#include "metacal/calibrate.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace metacal {

MapeResult schedule_mape(const ParameterSchedule& schedule, const ObservedField& observed,
                         const BoundaryConditions& bc, const NetworkGeometry& geom,
                         const SimOptions& sim) {
  try {
    SimResult run = simulate(observed.initial_state, schedule, bc, geom, sim);
    return mape(speed_grid(run.trajectory), observed.speed);
  } catch (const SimulationError&) {
    MapeResult res;
    res.value_pct = kPenaltyMapePct;
    return res;
  }
}

CalibrationResult calibrate_static(const ObservedField& observed,
                                   const BoundaryConditions& bc,
                                   const NetworkGeometry& geom,
                                   const ParameterBounds& bounds,
                                   const ParameterVector& warm_start,
                                   const SolverConfig& cfg, const LossOptions& loss) {
  const auto t0 = std::chrono::steady_clock::now();
  observed.validate(geom);
  bc.validate();
  if (!warm_start.within_bounds(1e-12))
    throw std::invalid_argument("calibrate_static: warm start outside bounds");
  if (warm_start.num_blocks() != 1)
    throw std::invalid_argument("calibrate_static: warm start must be a single block");
  if (!cfl_check(geom, bounds.v_free.upper).pass)
    throw std::invalid_argument("calibrate_static: CFL violated at the v_free upper bound");

  ParameterVector theta = warm_start;
  theta.horizon = observed.horizon();

  GradientOptions gopts;
  gopts.mode = cfg.gradient_mode;
  gopts.fd_step = cfg.fd_step;
  gopts.workers = cfg.workers;

  auto f = [&](const std::vector<double>& x) {
    ParameterVector probe = theta;
    probe.set_normalized(x);
    return sse_loss(probe, observed, bc, geom, {}, loss);
  };
  auto df = [&](const std::vector<double>& x) {
    ParameterVector probe = theta;
    probe.set_normalized(x);
    return loss_gradient(probe, observed, bc, geom, {}, loss, gopts).gradient;
  };

  const std::vector<double> lo(theta.size(), 0.0), hi(theta.size(), 1.0);
  MinimizeResult min = minimize_box(f, df, theta.normalized(), lo, hi, cfg);

  CalibrationResult res;
  theta.set_normalized(min.x);
  theta.clamp_to_bounds(); // set_normalized can overshoot a bound by one ulp
  res.theta_star = theta;
  res.schedule = theta.to_schedule();
  res.loss_trace = std::move(min.loss_trace);
  res.iterations = min.iterations;
  res.termination_reason = termination_name(min.reason);
  res.warm_start_used = warm_start;
  res.seed = cfg.seed;

  const LossValue check = sse_loss_detailed(theta, observed, bc, geom, {}, loss);
  res.final_loss = check.value;
  res.clamp_events = check.clamp_events;
  if (check.blew_up) ++res.instability_incidents;
  MapeResult m = schedule_mape(res.schedule, observed, bc, geom, loss.sim);
  res.final_mape_pct = m.value_pct;
  res.mape_excluded = m.excluded;

  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

CalibrationResult calibrate_static(const ObservedField& observed,
                                   const BoundaryConditions& bc,
                                   const NetworkGeometry& geom,
                                   const ParameterBounds& bounds,
                                   std::span<const SegmentParameters> warm_params,
                                   const SolverConfig& cfg, const LossOptions& loss) {
  ParameterVector warm =
      ParameterVector::single_block(geom, warm_params, bounds, observed.horizon());
  return calibrate_static(observed, bc, geom, bounds, warm, cfg, loss);
}

} // namespace metacal
