#include "metacal/simulate.hpp"

#include <cmath>

#include "step_kernel.hpp"

namespace metacal {

SimulationError::SimulationError(const std::string& term, int segment, int time_step)
    : std::runtime_error("non-finite value in term '" + term + "' at segment " +
                         std::to_string(segment) +
                         (time_step >= 0 ? " (time step " + std::to_string(time_step) + ")" : "")),
      term_(term), segment_(segment), time_step_(time_step) {}

double equilibrium_speed(double rho, const SegmentParameters& params, FdForm form) {
  if (!std::isfinite(rho)) throw SimulationError("equilibrium_speed input", -1, -1);
  const double ratio = rho / params.rho_cr;
  double exponent;
  if (form == FdForm::scaled_base) {
    exponent = -std::pow(ratio / params.a, params.a);
  } else {
    exponent = -std::pow(ratio, params.a) / params.a;
  }
  const double v = params.v_free_kmh * std::exp(exponent);
  if (!std::isfinite(v)) throw SimulationError("equilibrium_speed", -1, -1);
  return v;
}

void equilibrium_speed_derivs(double rho, const SegmentParameters& params, FdForm form,
                              double* d_rho, double* d_a, double* d_v_free,
                              double* d_rho_cr) {
  const double a = params.a;
  const double vf = params.v_free_kmh;
  const double rc = params.rho_cr;
  if (form == FdForm::scaled_base) {
    // V = vf * exp(-u^a), u = rho / (a * rc)
    const double u = rho / (a * rc);
    const double ua = u > 0.0 ? std::pow(u, a) : 0.0;
    const double E = std::exp(-ua);
    if (d_v_free) *d_v_free = E;
    if (u <= 0.0) {
      // limits as rho -> 0 (a >= 1): only a == 1 keeps a density slope
      if (d_rho) *d_rho = (a == 1.0) ? -vf * E / rc : 0.0;
      if (d_a) *d_a = 0.0;
      if (d_rho_cr) *d_rho_cr = 0.0;
      return;
    }
    const double ua1 = std::pow(u, a - 1.0);
    if (d_rho) *d_rho = -vf * E * ua1 / rc;
    if (d_rho_cr) *d_rho_cr = vf * E * a * ua / rc;
    if (d_a) *d_a = vf * E * ua * (1.0 - std::log(u));
  } else {
    // V = vf * exp(-w^a / a), w = rho / rc
    const double w = rho / rc;
    const double wa = w > 0.0 ? std::pow(w, a) : 0.0;
    const double E = std::exp(-wa / a);
    if (d_v_free) *d_v_free = E;
    if (w <= 0.0) {
      if (d_rho) *d_rho = (a == 1.0) ? -vf * E / rc : 0.0;
      if (d_a) *d_a = 0.0;
      if (d_rho_cr) *d_rho_cr = 0.0;
      return;
    }
    const double wa1 = std::pow(w, a - 1.0);
    if (d_rho) *d_rho = -vf * E * wa1 / rc;
    if (d_rho_cr) *d_rho_cr = vf * E * wa / rc;
    if (d_a) *d_a = vf * E * wa * (1.0 - a * std::log(w)) / (a * a);
  }
}

namespace {

inline void check_finite(double x, const char* term, int segment, int t) {
  if (!std::isfinite(x)) throw SimulationError(term, segment, t);
}

} // namespace

TrafficState step(const TrafficState& state, std::span<const SegmentParameters> params,
                  const BoundarySlice& bc, const NetworkGeometry& geom,
                  const SimOptions& opts, SimStats* stats, int time_step) {
  const int S = geom.num_segments;
  if (state.size() != S || static_cast<int>(params.size()) != S)
    throw std::invalid_argument("step: state/params size != geometry");

  TrafficState next;
  next.density.resize(S);
  next.speed.resize(S);
  next.flow.resize(S);

  for (int l = 0; l < S; ++l) {
    detail::StepTerms terms;
    try {
      terms = detail::compute_step_terms(state, params[l], bc, geom, l, opts.fd_form);
    } catch (const SimulationError& e) {
      throw SimulationError(e.term(), l, time_step);
    }
    check_finite(terms.outflow, "outflow", l, time_step);
    check_finite(terms.rho_raw, "density", l, time_step);
    check_finite(terms.relax, "relaxation", l, time_step);
    check_finite(terms.convect, "convection", l, time_step);
    check_finite(terms.antic, "anticipation", l, time_step);
    check_finite(terms.v_raw, "speed", l, time_step);

    double rho_next = terms.rho_raw;
    double v_next = terms.v_raw;
    if (!opts.strict) {
      if (rho_next < opts.density_floor) {
        rho_next = opts.density_floor;
        if (stats) {
          ++stats->clamp_events;
          if (stats->first_clamp_time < 0) stats->first_clamp_time = time_step;
        }
      }
      if (v_next < opts.speed_floor) {
        v_next = opts.speed_floor;
        if (stats) {
          ++stats->clamp_events;
          if (stats->first_clamp_time < 0) stats->first_clamp_time = time_step;
        }
      }
    }

    next.density[l] = rho_next;
    next.speed[l] = v_next;
    next.flow[l] = rho_next * v_next * static_cast<double>(geom.lanes[l]);
    check_finite(next.flow[l], "flow", l, time_step);
  }
  return next;
}

SimResult simulate(const TrafficState& initial, const ParameterSchedule& schedule,
                   const BoundaryConditions& bc, const NetworkGeometry& geom,
                   const SimOptions& opts) {
  const int H = bc.horizon();
  if (schedule.horizon < H)
    throw std::invalid_argument("simulate: schedule does not cover the horizon");

  SimResult res;
  res.trajectory.states.reserve(H + 1);
  res.trajectory.states.push_back(initial);
  for (int t = 0; t < H; ++t) {
    BoundarySlice slice{bc.upstream_flow[t], bc.upstream_speed[t], bc.downstream_density[t]};
    res.trajectory.states.push_back(step(res.trajectory.states.back(),
                                         schedule.params_at(t), slice, geom, opts,
                                         &res.stats, t));
  }
  return res;
}

namespace {
Grid component_grid(const Trajectory& traj, const std::vector<double> TrafficState::*member) {
  const int rows = static_cast<int>(traj.states.size());
  const int cols = rows > 0 ? traj.states[0].size() : 0;
  Grid g(rows, cols);
  for (int t = 0; t < rows; ++t)
    for (int s = 0; s < cols; ++s) g.at(t, s) = (traj.states[t].*member)[s];
  return g;
}
} // namespace

Grid speed_grid(const Trajectory& traj) { return component_grid(traj, &TrafficState::speed); }
Grid density_grid(const Trajectory& traj) { return component_grid(traj, &TrafficState::density); }
Grid flow_grid(const Trajectory& traj) { return component_grid(traj, &TrafficState::flow); }

} // namespace metacal
