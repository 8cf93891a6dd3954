#include "metacal/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metacal/parallel.hpp"
#include "step_kernel.hpp"

namespace metacal {

namespace {

Window resolve_window(Window w, int horizon) {
  if (w.last < 0) w.last = horizon;
  if (w.first < 0 || w.first > w.last || w.last > horizon)
    throw std::invalid_argument("loss: window outside the observed horizon");
  return w;
}

void check_weights(const LossWeights& w, const ObservedField& obs) {
  if (w.speed < 0.0 || w.density < 0.0 || w.flow < 0.0)
    throw std::invalid_argument("loss: weights must be nonnegative");
  if (w.density > 0.0 && !obs.density)
    throw std::invalid_argument("loss: density weight set but no observed density grid");
  if (w.flow > 0.0 && !obs.flow)
    throw std::invalid_argument("loss: flow weight set but no observed flow grid");
}

double row_sse(const TrafficState& st, const ObservedField& obs, const LossWeights& w,
               int row) {
  double acc = 0.0;
  const int S = st.size();
  for (int s = 0; s < S; ++s) {
    if (w.speed > 0.0) {
      const double d = st.speed[s] - obs.speed.at(row, s);
      acc += w.speed * d * d;
    }
    if (w.density > 0.0) {
      const double d = st.density[s] - obs.density->at(row, s);
      acc += w.density * d * d;
    }
    if (w.flow > 0.0) {
      const double d = st.flow[s] - obs.flow->at(row, s);
      acc += w.flow * d * d;
    }
  }
  return acc;
}

struct ScoredRollout {
  LossValue loss;
  std::vector<TrafficState> states; // rows window.first .. first+completed
  int steps_completed = 0;
};

ScoredRollout rollout_and_score(const ParameterSchedule& schedule,
                                const ObservedField& observed, const BoundaryConditions& bc,
                                const NetworkGeometry& geom, Window w,
                                const LossOptions& opts, const TrafficState* start_state,
                                bool keep_tape) {
  check_weights(opts.weights, observed);
  const TrafficState* x0 = start_state;
  if (!x0) {
    if (w.first != 0)
      throw std::invalid_argument("loss: window not starting at 0 needs an explicit start state");
    x0 = &observed.initial_state;
  }

  ScoredRollout out;
  SimStats stats;
  TrafficState cur = *x0;
  out.loss.value = row_sse(cur, observed, opts.weights, w.first);
  if (keep_tape) out.states.push_back(cur);

  for (int t = w.first; t < w.last; ++t) {
    BoundarySlice slice{bc.upstream_flow[t], bc.upstream_speed[t], bc.downstream_density[t]};
    try {
      cur = step(cur, schedule.params_at(t), slice, geom, opts.sim, &stats, t);
    } catch (const SimulationError&) {
      out.loss.blew_up = true;
      out.loss.blowup_time = t;
      out.loss.value += opts.blowup_penalty * static_cast<double>(w.last - t);
      out.loss.clamp_events = stats.clamp_events;
      return out;
    }
    out.loss.value += row_sse(cur, observed, opts.weights, t + 1);
    ++out.steps_completed;
    if (keep_tape) out.states.push_back(cur);
  }
  out.loss.clamp_events = stats.clamp_events;
  return out;
}

int block_of(const std::vector<int>& starts, int t) {
  int k = static_cast<int>(starts.size()) - 1;
  while (k > 0 && starts[k] > t) --k;
  return k;
}

} // namespace

void ObservedField::validate(const NetworkGeometry& geom) const {
  if (speed.cols != geom.num_segments)
    throw std::invalid_argument("observed field: speed grid columns != segments");
  if (speed.rows < 1) throw std::invalid_argument("observed field: empty speed grid");
  auto check_grid = [&](const Grid& g, const char* name) {
    if (!g.same_shape(speed))
      throw std::invalid_argument(std::string("observed field: ") + name +
                                  " grid shape differs from speed grid");
    for (double v : g.data)
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument(std::string("observed field: ") + name +
                                    " grid has non-finite or negative entries");
  };
  check_grid(speed, "speed");
  if (density) check_grid(*density, "density");
  if (flow) check_grid(*flow, "flow");
  if (initial_state.size() != geom.num_segments)
    throw std::invalid_argument("observed field: initial state size != segments");
}

double trajectory_sse(const Trajectory& traj, const ObservedField& observed,
                      const LossWeights& weights, Window window) {
  window = resolve_window(window, observed.horizon());
  check_weights(weights, observed);
  const int rows = window.last - window.first + 1;
  if (static_cast<int>(traj.states.size()) < rows)
    throw std::invalid_argument("trajectory_sse: trajectory shorter than the window");
  double acc = 0.0;
  for (int i = 0; i < rows; ++i)
    acc += row_sse(traj.states[i], observed, weights, window.first + i);
  return acc;
}

LossValue sse_loss_detailed(const ParameterVector& theta, const ObservedField& observed,
                            const BoundaryConditions& bc, const NetworkGeometry& geom,
                            Window window, const LossOptions& opts,
                            const TrafficState* start_state) {
  window = resolve_window(window, observed.horizon());
  if (bc.horizon() < window.last)
    throw std::invalid_argument("loss: boundary conditions shorter than the window");
  return rollout_and_score(theta.to_schedule(), observed, bc, geom, window, opts,
                           start_state, /*keep_tape=*/false)
      .loss;
}

double sse_loss(const ParameterVector& theta, const ObservedField& observed,
                const BoundaryConditions& bc, const NetworkGeometry& geom, Window window,
                const LossOptions& opts, const TrafficState* start_state) {
  return sse_loss_detailed(theta, observed, bc, geom, window, opts, start_state).value;
}

MapeResult mape(const Grid& sim, const Grid& obs, double floor) {
  if (!sim.same_shape(obs)) throw std::invalid_argument("mape: grid shapes differ");
  MapeResult res;
  double acc = 0.0;
  for (std::size_t i = 0; i < obs.data.size(); ++i) {
    if (obs.data[i] < floor) {
      ++res.excluded;
      continue;
    }
    acc += std::abs(sim.data[i] - obs.data[i]) / obs.data[i];
    ++res.scored;
  }
  res.value_pct = res.scored > 0 ? 100.0 * acc / static_cast<double>(res.scored) : 0.0;
  return res;
}

namespace {

// Reverse pass through the rollout. Zero gradient (with the penalty loss)
// when the forward pass blows up: the penalty plateau carries no slope.
GradientResult adjoint_gradient(const ParameterVector& theta, const ObservedField& observed,
                                const BoundaryConditions& bc, const NetworkGeometry& geom,
                                Window w, const LossOptions& opts,
                                const TrafficState* start_state) {
  const ParameterSchedule schedule = theta.to_schedule();
  ScoredRollout tape = rollout_and_score(schedule, observed, bc, geom, w, opts,
                                         start_state, /*keep_tape=*/true);
  GradientResult res;
  res.loss = tape.loss;
  res.gradient.assign(theta.size(), 0.0);
  if (tape.loss.blew_up) return res;

  const int S = geom.num_segments;
  const double dt = geom.dt_hours();
  const double L = geom.segment_length_km;
  const LossWeights& wgt = opts.weights;
  const std::size_t bsize = theta.block_size();

  std::vector<double> grad_phys(theta.size(), 0.0);

  auto residual_partials = [&](const TrafficState& st, int row, std::vector<double>& g_rho,
                               std::vector<double>& g_v) {
    for (int s = 0; s < S; ++s) {
      if (wgt.speed > 0.0)
        g_v[s] += 2.0 * wgt.speed * (st.speed[s] - observed.speed.at(row, s));
      if (wgt.density > 0.0)
        g_rho[s] += 2.0 * wgt.density * (st.density[s] - observed.density->at(row, s));
      if (wgt.flow > 0.0) {
        const double lanes = static_cast<double>(geom.lanes[s]);
        const double dq = 2.0 * wgt.flow * (st.flow[s] - observed.flow->at(row, s));
        g_rho[s] += dq * st.speed[s] * lanes;
        g_v[s] += dq * st.density[s] * lanes;
      }
    }
  };

  const int n_steps = tape.steps_completed;
  std::vector<double> g_rho(S, 0.0), g_v(S, 0.0);
  residual_partials(tape.states[n_steps], w.first + n_steps, g_rho, g_v);

  std::vector<double> ng_rho(S), ng_v(S);
  for (int i = n_steps - 1; i >= 0; --i) {
    const int t = w.first + i;
    const TrafficState& x = tape.states[i];
    const int k = block_of(theta.block_starts, t);
    const auto& block = schedule.blocks[k];
    const BoundarySlice slice{bc.upstream_flow[t], bc.upstream_speed[t],
                              bc.downstream_density[t]};
    std::fill(ng_rho.begin(), ng_rho.end(), 0.0);
    std::fill(ng_v.begin(), ng_v.end(), 0.0);

    for (int l = 0; l < S; ++l) {
      const SegmentParameters& p = block[l];
      const double lanes = static_cast<double>(geom.lanes[l]);
      const auto terms = detail::compute_step_terms(x, p, slice, geom, l, opts.sim.fd_form);

      // clamped outputs carry no derivative
      const bool rho_clamped = !opts.sim.strict && terms.rho_raw < opts.sim.density_floor;
      const bool v_clamped = !opts.sim.strict && terms.v_raw < opts.sim.speed_floor;
      const double Gr = rho_clamped ? 0.0 : g_rho[l];
      const double Gv = v_clamped ? 0.0 : g_v[l];
      if (Gr == 0.0 && Gv == 0.0) continue;

      const double one_minus_beta = 1.0 - p.beta;
      const double rho_l = x.density[l];
      const double v_l = x.speed[l];
      const double denom = rho_l + p.kappa;
      const double C = p.eta * dt / (p.tau_h * L); // anticipation factor

      // ---- density equation ----
      ng_rho[l] += Gr * (1.0 - terms.c * v_l * lanes / one_minus_beta);
      ng_v[l] += Gr * (-terms.c * rho_l * lanes / one_minus_beta);
      if (l > 0) {
        const double lanes_up = static_cast<double>(geom.lanes[l - 1]);
        ng_rho[l - 1] += Gr * terms.c * x.speed[l - 1] * lanes_up;
        ng_v[l - 1] += Gr * terms.c * x.density[l - 1] * lanes_up;
      }
      const int ib = theta.layout.index_of(l, ParamKind::beta);
      if (ib >= 0)
        grad_phys[k * bsize + ib] +=
            Gr * (-terms.c * x.flow[l] / (one_minus_beta * one_minus_beta));
      const int ir = theta.layout.index_of(l, ParamKind::r);
      if (ir >= 0) grad_phys[k * bsize + ir] += Gr * terms.c;

      // ---- speed equation ----
      double dV_drho, dV_da, dV_dvf, dV_drc;
      equilibrium_speed_derivs(rho_l, p, opts.sim.fd_form, &dV_drho, &dV_da, &dV_dvf,
                               &dV_drc);

      ng_v[l] += Gv * (1.0 - dt / p.tau_h + dt / L * (terms.v_nb - 2.0 * v_l));
      if (l > 0) ng_v[l - 1] += Gv * dt / L * v_l;
      ng_rho[l] += Gv * (dt / p.tau_h * dV_drho + C * (p.kappa + terms.rho_nb) / (denom * denom));
      if (l < S - 1) ng_rho[l + 1] += Gv * (-C / denom);

      const double antic_core = (terms.rho_nb - rho_l) / denom;
      auto add = [&](ParamKind kind, double d) {
        const int idx = theta.layout.index_of(l, kind);
        if (idx >= 0) grad_phys[k * bsize + idx] += Gv * d;
      };
      add(ParamKind::tau, -dt / (p.tau_h * p.tau_h) * (terms.veq - v_l) +
                              C / p.tau_h * antic_core);
      add(ParamKind::eta, -dt / (p.tau_h * L) * antic_core);
      add(ParamKind::kappa, C * (terms.rho_nb - rho_l) / (denom * denom));
      add(ParamKind::v_free, dt / p.tau_h * dV_dvf);
      add(ParamKind::a, dt / p.tau_h * dV_da);
      add(ParamKind::rho_cr, dt / p.tau_h * dV_drc);
    }

    std::swap(g_rho, ng_rho);
    std::swap(g_v, ng_v);
    residual_partials(x, t, g_rho, g_v);
  }

  // report in normalized space
  for (std::size_t i = 0; i < theta.size(); ++i)
    res.gradient[i] = grad_phys[i] * (theta.upper[i] - theta.lower[i]);
  return res;
}

GradientResult fd_gradient(const ParameterVector& theta, const ObservedField& observed,
                           const BoundaryConditions& bc, const NetworkGeometry& geom,
                           Window w, const LossOptions& opts, const GradientOptions& gopts,
                           const TrafficState* start_state, bool central) {
  GradientResult res;
  res.loss = sse_loss_detailed(theta, observed, bc, geom, w, opts, start_state);
  res.gradient.assign(theta.size(), 0.0);
  const std::vector<double> x0 = theta.normalized();
  const double h = gopts.fd_step;

  auto eval_at = [&](std::vector<double> x) {
    ParameterVector probe = theta;
    probe.set_normalized(x);
    return sse_loss(probe, observed, bc, geom, w, opts, start_state);
  };

  parallel_for(theta.size(), gopts.workers, [&](std::size_t i) {
    if (theta.upper[i] <= theta.lower[i]) return; // fixed entry
    std::vector<double> x = x0;
    if (central) {
      const double hi = std::min(x0[i] + h, 1.0);
      const double lo = std::max(x0[i] - h, 0.0);
      if (hi <= lo) return;
      x[i] = hi;
      const double f_hi = eval_at(x);
      x[i] = lo;
      const double f_lo = eval_at(x);
      res.gradient[i] = (f_hi - f_lo) / (hi - lo);
    } else {
      const double hs = (x0[i] + h <= 1.0) ? h : -h; // step inward at the upper bound
      x[i] = x0[i] + hs;
      res.gradient[i] = (eval_at(x) - res.loss.value) / hs;
    }
  });
  return res;
}

} // namespace

GradientResult loss_gradient(const ParameterVector& theta, const ObservedField& observed,
                             const BoundaryConditions& bc, const NetworkGeometry& geom,
                             Window window, const LossOptions& opts,
                             const GradientOptions& gopts, const TrafficState* start_state) {
  Window w = resolve_window(window, observed.horizon());
  if (bc.horizon() < w.last)
    throw std::invalid_argument("loss: boundary conditions shorter than the window");
  switch (gopts.mode) {
    case GradientMode::adjoint:
      return adjoint_gradient(theta, observed, bc, geom, w, opts, start_state);
    case GradientMode::central_fd:
      return fd_gradient(theta, observed, bc, geom, w, opts, gopts, start_state, true);
    case GradientMode::forward_fd:
    default:
      return fd_gradient(theta, observed, bc, geom, w, opts, gopts, start_state, false);
  }
}

} // namespace metacal
