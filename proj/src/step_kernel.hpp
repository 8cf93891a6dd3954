#pragma once

// Internal: raw per-segment terms of one METANET step, shared by the
// simulator and the adjoint gradient so both see bit-identical arithmetic.

#include "metacal/simulate.hpp"

namespace metacal::detail {

struct StepTerms {
  double c = 0.0; // dt / (L * lanes)
  double inflow = 0.0;
  double outflow = 0.0;
  double rho_raw = 0.0;
  double veq = 0.0;
  double v_nb = 0.0;   // upstream neighbor speed (or boundary)
  double rho_nb = 0.0; // downstream neighbor density (or boundary)
  double relax = 0.0;
  double convect = 0.0;
  double antic = 0.0;
  double v_raw = 0.0;
};

inline StepTerms compute_step_terms(const TrafficState& state,
                                    const SegmentParameters& p, const BoundarySlice& bc,
                                    const NetworkGeometry& geom, int l, FdForm form) {
  const int S = geom.num_segments;
  const double dt = geom.dt_hours();
  const double L = geom.segment_length_km;
  StepTerms t;
  t.c = dt / (L * static_cast<double>(geom.lanes[l]));
  t.inflow = l > 0 ? state.flow[l - 1] : bc.upstream_flow;
  t.outflow = state.flow[l] / (1.0 - p.beta);
  t.rho_raw = state.density[l] + t.c * (t.inflow - t.outflow + p.r_vph);

  t.veq = equilibrium_speed(state.density[l], p, form);
  t.v_nb = l > 0 ? state.speed[l - 1] : bc.upstream_speed;
  t.rho_nb = l < S - 1 ? state.density[l + 1] : bc.downstream_density;
  t.relax = dt / p.tau_h * (t.veq - state.speed[l]);
  t.convect = dt / L * state.speed[l] * (t.v_nb - state.speed[l]);
  t.antic = p.eta * dt / (p.tau_h * L) * (t.rho_nb - state.density[l]) /
            (state.density[l] + p.kappa);
  t.v_raw = state.speed[l] + t.relax + t.convect - t.antic;
  return t;
}

} // namespace metacal::detail
