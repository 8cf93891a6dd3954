#include "metacal/types.hpp"

#include <algorithm>
#include <cmath>

namespace metacal {

bool NetworkGeometry::has_onramp(int segment) const {
  return std::find(onramp_segments.begin(), onramp_segments.end(), segment) !=
         onramp_segments.end();
}

bool NetworkGeometry::has_offramp(int segment) const {
  return std::find(offramp_segments.begin(), offramp_segments.end(), segment) !=
         offramp_segments.end();
}

void NetworkGeometry::validate() const {
  if (num_segments <= 0)
    throw std::invalid_argument("geometry: num_segments must be positive");
  if (!(segment_length_km > 0.0))
    throw std::invalid_argument("geometry: segment_length_km must be positive");
  if (!(time_step_s > 0.0))
    throw std::invalid_argument("geometry: time_step_s must be positive");
  if (static_cast<int>(lanes.size()) != num_segments)
    throw std::invalid_argument("geometry: lanes size != num_segments");
  for (int l : lanes)
    if (l < 1) throw std::invalid_argument("geometry: lanes must be >= 1");
  for (int s : onramp_segments)
    if (s < 0 || s >= num_segments)
      throw std::invalid_argument("geometry: on-ramp segment index out of range");
  for (int s : offramp_segments)
    if (s < 0 || s >= num_segments)
      throw std::invalid_argument("geometry: off-ramp segment index out of range");
}

TrafficState TrafficState::from_density_speed(std::vector<double> density,
                                              std::vector<double> speed,
                                              const std::vector<int>& lanes) {
  if (density.size() != speed.size() || density.size() != lanes.size())
    throw std::invalid_argument("TrafficState: inconsistent vector sizes");
  TrafficState st;
  st.flow.resize(density.size());
  for (std::size_t i = 0; i < density.size(); ++i)
    st.flow[i] = density[i] * speed[i] * lanes[i];
  st.density = std::move(density);
  st.speed = std::move(speed);
  return st;
}

void BoundaryConditions::validate() const {
  if (upstream_speed.size() != upstream_flow.size() ||
      downstream_density.size() != upstream_flow.size())
    throw std::invalid_argument("boundary conditions: series lengths differ");
  for (double v : upstream_flow)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("boundary conditions: upstream_flow must be finite and >= 0");
  for (double v : upstream_speed)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("boundary conditions: upstream_speed must be finite and >= 0");
  for (double v : downstream_density)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("boundary conditions: downstream_density must be finite and >= 0");
}

CflResult cfl_check(const NetworkGeometry& geom, double v_free_max_kmh) {
  CflResult res;
  res.limit_kmh = geom.segment_length_km / geom.dt_hours();
  res.margin_kmh = res.limit_kmh - v_free_max_kmh;
  res.pass = res.margin_kmh >= 0.0;
  return res;
}

} // namespace metacal
