#pragma once

// Shared test fixtures and the independent step oracle. The oracle
// deliberately transcribes the update equations with its own arithmetic
// layout and must stay decoupled from the library implementation.

#include <cmath>
#include <vector>

#include "metacal/rng.hpp"
#include "metacal/scenario.hpp"
#include "metacal/simulate.hpp"
#include "metacal/types.hpp"

namespace testutil {

using namespace metacal;

inline NetworkGeometry make_geometry(int segments, double length_km = 0.5,
                                     double dt_s = 10.0, int lanes = 3) {
  NetworkGeometry geom;
  geom.num_segments = segments;
  geom.segment_length_km = length_km;
  geom.time_step_s = dt_s;
  geom.lanes.assign(segments, lanes);
  return geom;
}

struct EquilibriumScenario {
  TrafficState state;
  BoundaryConditions bc;
};

/// Uniform state at the fundamental-diagram equilibrium with matching
/// boundary conditions; a fixed point of the dynamics.
inline EquilibriumScenario equilibrium_scenario(const NetworkGeometry& geom,
                                                const SegmentParameters& params, double rho,
                                                int horizon,
                                                FdForm form = FdForm::scaled_base) {
  EquilibriumScenario sc;
  const double v = equilibrium_speed(rho, params, form);
  sc.state = TrafficState::from_density_speed(
      std::vector<double>(geom.num_segments, rho),
      std::vector<double>(geom.num_segments, v), geom.lanes);
  sc.bc.upstream_flow.assign(horizon, sc.state.flow[0]);
  sc.bc.upstream_speed.assign(horizon, v);
  sc.bc.downstream_density.assign(horizon, rho);
  return sc;
}

/// Naive transcription of the density/speed/flow updates, independent of
/// the library's step().
inline TrafficState naive_step(const TrafficState& x,
                               const std::vector<SegmentParameters>& p,
                               const BoundarySlice& bc, const NetworkGeometry& geom,
                               FdForm form = FdForm::scaled_base) {
  const int S = geom.num_segments;
  const double delta = geom.time_step_s / 3600.0;
  const double L = geom.segment_length_km;
  TrafficState out;
  out.density.resize(S);
  out.speed.resize(S);
  out.flow.resize(S);
  for (int l = 0; l < S; ++l) {
    const double lam = geom.lanes[l];
    const double q_in = (l == 0) ? bc.upstream_flow : x.density[l - 1] * x.speed[l - 1] * geom.lanes[l - 1];
    const double q_out_total = (x.density[l] * x.speed[l] * lam) / (1.0 - p[l].beta);
    out.density[l] = x.density[l] + (delta * (q_in - q_out_total + p[l].r_vph)) / (L * lam);

    double veq;
    if (form == FdForm::scaled_base)
      veq = p[l].v_free_kmh * std::exp(-std::pow((1.0 / p[l].a) * (x.density[l] / p[l].rho_cr), p[l].a));
    else
      veq = p[l].v_free_kmh * std::exp(-(1.0 / p[l].a) * std::pow(x.density[l] / p[l].rho_cr, p[l].a));

    const double v_prev = (l == 0) ? bc.upstream_speed : x.speed[l - 1];
    const double rho_next_seg = (l == S - 1) ? bc.downstream_density : x.density[l + 1];
    double v = x.speed[l];
    v += (delta / p[l].tau_h) * (veq - x.speed[l]);
    v += (delta / L) * x.speed[l] * (v_prev - x.speed[l]);
    v -= (p[l].eta * delta) / (p[l].tau_h * L) * (rho_next_seg - x.density[l]) /
         (x.density[l] + p[l].kappa);
    out.speed[l] = v;
    out.flow[l] = out.density[l] * out.speed[l] * lam;
  }
  return out;
}

/// Random stable-ish instance generator used by property tests.
struct RandomInstance {
  NetworkGeometry geom;
  std::vector<SegmentParameters> params;
  TrafficState initial;
  BoundaryConditions bc;
};

inline RandomInstance random_instance(SplitMix64& rng, int segments, int horizon,
                                      bool with_ramps = false) {
  RandomInstance inst;
  inst.geom = make_geometry(segments, 0.5, 10.0, 3);
  if (with_ramps && segments >= 3) {
    inst.geom.onramp_segments = {1};
    inst.geom.offramp_segments = {segments - 1};
  }
  inst.params.resize(segments);
  for (auto& p : inst.params) {
    p.tau_h = rng.uniform(16.0, 25.0) / 3600.0;
    p.eta = rng.uniform(40.0, 70.0);
    p.kappa = rng.uniform(20.0, 45.0);
    p.a = rng.uniform(1.3, 2.5);
    p.v_free_kmh = rng.uniform(90.0, 115.0);
    p.rho_cr = rng.uniform(28.0, 40.0);
    p.beta = 0.0;
    p.r_vph = 0.0;
  }
  if (with_ramps && segments >= 3) {
    inst.params[1].r_vph = rng.uniform(100.0, 600.0);
    inst.params[segments - 1].beta = rng.uniform(0.05, 0.2);
  }
  const double rho0 = rng.uniform(15.0, 28.0);
  std::vector<double> rho(segments), v(segments);
  for (int s = 0; s < segments; ++s) {
    rho[s] = rho0 * rng.uniform(0.9, 1.1);
    v[s] = equilibrium_speed(rho[s], inst.params[s]) * rng.uniform(0.95, 1.05);
  }
  inst.initial = TrafficState::from_density_speed(rho, v, inst.geom.lanes);
  const double base_flow = inst.initial.flow[0];
  inst.bc.upstream_flow.resize(horizon);
  inst.bc.upstream_speed.resize(horizon);
  inst.bc.downstream_density.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    inst.bc.upstream_flow[t] = base_flow * rng.uniform(0.9, 1.1);
    inst.bc.upstream_speed[t] = inst.initial.speed[0] * rng.uniform(0.95, 1.05);
    inst.bc.downstream_density[t] = rho[segments - 1] * rng.uniform(0.9, 1.1);
  }
  return inst;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Twin with a mid-horizon regime change: v_free and rho_cr drop at
/// switch_step (a capacity-drop event no static parameter set can track).
struct SwitchingTwin {
  ScenarioBundle bundle;
  std::vector<SegmentParameters> regime1;
  std::vector<SegmentParameters> regime2;
  int switch_step = 0;
};

/// congested = two-lane chain with a downstream jam pulse arriving at the
/// regime switch; drives the static compromise fit near instability.
inline SwitchingTwin make_switching_twin(int segments, int horizon, int switch_step,
                                         std::uint64_t seed, double obs_noise_rel,
                                         bool congested = false) {
  NetworkGeometry geom = make_geometry(segments, congested ? 0.4 : 0.5, 10.0,
                                       congested ? 2 : 3);
  SplitMix64 rng(seed);
  SwitchingTwin twin;
  twin.switch_step = switch_step;
  twin.regime1.resize(segments);
  for (auto& p : twin.regime1) {
    p.tau_h = rng.uniform(17.0, 21.0) / 3600.0;
    p.eta = rng.uniform(55.0, 65.0);
    p.kappa = rng.uniform(35.0, 45.0);
    p.a = rng.uniform(1.7, 2.1);
    p.v_free_kmh = rng.uniform(100.0, 108.0);
    p.rho_cr = rng.uniform(32.0, 36.0);
  }
  twin.regime2 = twin.regime1;
  for (auto& p : twin.regime2) {
    p.v_free_kmh -= 24.0; // capacity drop
    p.rho_cr -= 7.0;
  }

  ParameterSchedule truth;
  truth.block_starts = {0, switch_step};
  truth.blocks = {twin.regime1, twin.regime2};
  truth.horizon = horizon;

  BcProfile profile;
  profile.upstream_speed = SeriesSpec::constant(92.0);
  if (congested) {
    profile.inflow = {SeriesSpec::Shape::sine, 2400.0, 600.0, horizon / 3};
    profile.downstream_density = {SeriesSpec::Shape::pulse, 25.0, 28.0, 0, switch_step,
                                  horizon - switch_step};
  } else {
    profile.inflow = {SeriesSpec::Shape::sine, 3400.0, 800.0, horizon / 3};
    profile.downstream_density = {SeriesSpec::Shape::sine, 25.0, 5.0, horizon / 4};
  }

  twin.bundle = generate_synthetic(geom, truth, profile, 24.0, seed, obs_noise_rel);
  return twin;
}

} // namespace testutil
