#include "metacal/rho.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace metacal {

namespace {

// Window starting state when re-anchoring: observed speed row, density from
// the observed grid when present (otherwise the propagated densities), flow
// re-derived.
TrafficState anchored_state(const ObservedField& observed, const NetworkGeometry& geom,
                            const TrafficState& propagated, int row) {
  std::vector<double> density(geom.num_segments);
  std::vector<double> speed(geom.num_segments);
  for (int s = 0; s < geom.num_segments; ++s) {
    speed[s] = observed.speed.at(row, s);
    density[s] = observed.density ? observed.density->at(row, s) : propagated.density[s];
  }
  return TrafficState::from_density_speed(std::move(density), std::move(speed), geom.lanes);
}

} // namespace

CalibrationResult calibrate_rho(const ObservedField& observed, const BoundaryConditions& bc,
                                const NetworkGeometry& geom, const ParameterBounds& bounds,
                                const ParameterVector& warm_start, const RhoConfig& cfg,
                                const LossOptions& loss) {
  const auto t_begin = std::chrono::steady_clock::now();
  observed.validate(geom);
  bc.validate();
  const int H = observed.horizon();
  if (bc.horizon() < H)
    throw std::invalid_argument("calibrate_rho: boundary conditions shorter than horizon");
  if (cfg.control_horizon_steps < 1)
    throw std::invalid_argument("calibrate_rho: control horizon must be >= 1 step");
  if (cfg.control_horizon_steps >= cfg.prediction_horizon_steps)
    throw std::invalid_argument("calibrate_rho: requires H_c < H_p");
  if (!warm_start.within_bounds(1e-12))
    throw std::invalid_argument("calibrate_rho: warm start outside bounds");
  if (warm_start.num_blocks() != 1)
    throw std::invalid_argument("calibrate_rho: warm start must be a single block");
  if (!cfl_check(geom, bounds.v_free.upper).pass)
    throw std::invalid_argument("calibrate_rho: CFL violated at the v_free upper bound");

  GradientOptions gopts;
  gopts.mode = cfg.inner.gradient_mode;
  gopts.fd_step = cfg.inner.fd_step;
  gopts.workers = cfg.inner.workers;

  CalibrationResult res;
  res.warm_start_used = warm_start;
  res.seed = cfg.inner.seed;

  ParameterSchedule schedule;
  schedule.horizon = H;

  TrafficState state = observed.initial_state;
  ParameterVector prev = warm_start; // previous block, jump-penalty anchor
  prev.horizon = H;

  for (int t = 0; t < H; t += cfg.control_horizon_steps) {
    const int pred_end = std::min(t + cfg.prediction_horizon_steps, H);
    const int exec_end = std::min(t + cfg.control_horizon_steps, H);

    if (cfg.reanchor_to_observations && t > 0)
      state = anchored_state(observed, geom, state, t);

    const Window window{t, pred_end};
    const std::vector<double> anchor = prev.normalized();
    const double w_jump = cfg.jump_penalty_weight;

    auto f = [&](const std::vector<double>& x) {
      ParameterVector probe = prev;
      probe.set_normalized(x);
      double value = sse_loss(probe, observed, bc, geom, window, loss, &state);
      if (w_jump > 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double d = x[i] - anchor[i];
          value += w_jump * d * d;
        }
      }
      return value;
    };
    auto df = [&](const std::vector<double>& x) {
      ParameterVector probe = prev;
      probe.set_normalized(x);
      std::vector<double> g =
          loss_gradient(probe, observed, bc, geom, window, loss, gopts, &state).gradient;
      if (w_jump > 0.0)
        for (std::size_t i = 0; i < x.size(); ++i) g[i] += 2.0 * w_jump * (x[i] - anchor[i]);
      return g;
    };

    WindowDiagnostics diag;
    diag.t_start = t;
    diag.t_pred_end = pred_end;
    diag.t_exec_end = exec_end;

    ParameterVector theta_k = prev;
    try {
      const std::vector<double> lo(prev.size(), 0.0), hi(prev.size(), 1.0);
      MinimizeResult min = minimize_box(f, df, anchor, lo, hi, cfg.inner);
      std::vector<double> x = min.x;
      if (cfg.nominal_anchor) {
        const auto& [nominal, eps] = *cfg.nominal_anchor;
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = std::clamp(x[i], nominal[i] - eps, nominal[i] + eps);
      }
      if (cfg.jump_cap) {
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = std::clamp(x[i], anchor[i] - *cfg.jump_cap, anchor[i] + *cfg.jump_cap);
      }
      theta_k.set_normalized(x);
      theta_k.clamp_to_bounds();
      diag.subproblem_loss = min.fx;
      diag.iterations = min.iterations;
      diag.loss_trace = std::move(min.loss_trace);
    } catch (const std::exception&) {
      // keep the previous block for this interval
      diag.failed = true;
      ++res.instability_incidents;
      theta_k = prev;
    }

    // execute the committed block for H_c steps
    BoundaryConditions bc_exec;
    bc_exec.upstream_flow.assign(bc.upstream_flow.begin() + t,
                                 bc.upstream_flow.begin() + exec_end);
    bc_exec.upstream_speed.assign(bc.upstream_speed.begin() + t,
                                  bc.upstream_speed.begin() + exec_end);
    bc_exec.downstream_density.assign(bc.downstream_density.begin() + t,
                                      bc.downstream_density.begin() + exec_end);
    ParameterSchedule block_schedule =
        ParameterSchedule::constant(theta_k.layout.unflatten(theta_k.block_value(0)),
                                    exec_end - t);
    try {
      SimResult run = simulate(state, block_schedule, bc_exec, geom, loss.sim);
      state = run.trajectory.states.back();
      res.clamp_events += run.stats.clamp_events;
    } catch (const SimulationError&) {
      ++res.instability_incidents;
      // keep the last finite state and continue with the next window
    }

    schedule.block_starts.push_back(t);
    schedule.blocks.push_back(block_schedule.blocks[0]);
    res.loss_trace.push_back(diag.subproblem_loss);
    res.iterations += diag.iterations;
    res.windows.push_back(std::move(diag));
    prev = theta_k;
  }

  res.schedule = schedule;
  res.theta_star = ParameterVector::from_schedule(geom, schedule, bounds);

  // full-horizon diagnostics with the emitted schedule
  const LossValue full =
      sse_loss_detailed(res.theta_star, observed, bc, geom, {0, H}, loss);
  res.final_loss = full.value;
  if (full.blew_up) ++res.instability_incidents;
  MapeResult m = schedule_mape(schedule, observed, bc, geom, loss.sim);
  res.final_mape_pct = m.value_pct;
  res.mape_excluded = m.excluded;
  res.termination_reason = "windows_exhausted";
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return res;
}

std::vector<HorizonSweepEntry> horizon_sweep(
    const ObservedField& observed, const BoundaryConditions& bc,
    const NetworkGeometry& geom, const ParameterBounds& bounds,
    const ParameterVector& warm_start, const std::vector<std::pair<int, int>>& horizons,
    const RhoConfig& base_cfg, const std::optional<NoiseSpec>& noise,
    const LossOptions& loss, int workers) {
  std::vector<HorizonSweepEntry> table;
  for (const auto& [hc, hp] : horizons) {
    HorizonSweepEntry entry;
    entry.hc = hc;
    entry.hp = hp;
    try {
      RhoConfig cfg = base_cfg;
      cfg.control_horizon_steps = hc;
      cfg.prediction_horizon_steps = hp;
      entry.result = calibrate_rho(observed, bc, geom, bounds, warm_start, cfg, loss);
      entry.fit_mape = entry.result.final_mape_pct;
      if (noise) {
        RobustnessReport rep = robustness_sweep(entry.result.schedule, observed, bc, geom,
                                                *noise, loss.sim, workers);
        double acc = 0.0;
        for (const LevelStats& ls : rep.per_level) {
          entry.noise_levels.push_back(ls.level);
          entry.avg_mape.push_back(ls.avg_mape);
          entry.worst_mape.push_back(ls.worst_mape);
          acc += ls.avg_mape;
        }
        entry.mean_avg_mape =
            rep.per_level.empty() ? entry.fit_mape
                                  : acc / static_cast<double>(rep.per_level.size());
      } else {
        entry.mean_avg_mape = entry.fit_mape;
      }
    } catch (const std::exception& e) {
      entry.failed = true;
      entry.error = e.what();
    }
    table.push_back(std::move(entry));
  }
  return table;
}

} // namespace metacal
