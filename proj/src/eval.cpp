#include "metacal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metacal/parallel.hpp"
#include "metacal/rng.hpp"

namespace metacal {

BoundaryConditions perturb_inflow(const BoundaryConditions& bc, double level,
                                  std::uint64_t sample_seed) {
  BoundaryConditions out = bc;
  SplitMix64 rng(sample_seed);
  for (double& q : out.upstream_flow) {
    const double noisy = q + rng.gaussian(0.0, level * q);
    q = std::max(0.0, noisy);
  }
  return out;
}

RobustnessReport robustness_sweep(const ParameterSchedule& schedule,
                                  const ObservedField& observed,
                                  const BoundaryConditions& bc,
                                  const NetworkGeometry& geom, const NoiseSpec& noise,
                                  const SimOptions& sim, int workers) {
  if (noise.samples_per_level < 1)
    throw std::invalid_argument("robustness_sweep: samples_per_level must be >= 1");
  for (std::size_t i = 0; i < noise.levels.size(); ++i) {
    if (noise.levels[i] < 0.0)
      throw std::invalid_argument("robustness_sweep: noise levels must be >= 0");
    if (i > 0 && noise.levels[i] < noise.levels[i - 1])
      throw std::invalid_argument("robustness_sweep: noise levels must be sorted ascending");
  }
  schedule.validate(geom);
  observed.validate(geom);

  RobustnessReport report;
  report.unperturbed_mape = schedule_mape(schedule, observed, bc, geom, sim).value_pct;

  struct Sample {
    double mape = 0.0;
    bool blew_up = false;
    long clamps = 0;
  };

  for (std::size_t li = 0; li < noise.levels.size(); ++li) {
    const double level = noise.levels[li];
    std::vector<Sample> samples(noise.samples_per_level);
    parallel_for(samples.size(), workers, [&](std::size_t i) {
      const std::uint64_t seed = derive_seed(noise.seed, li, i);
      const BoundaryConditions noisy = perturb_inflow(bc, level, seed);
      Sample& s = samples[i];
      try {
        SimResult run = simulate(observed.initial_state, schedule, noisy, geom, sim);
        s.mape = mape(speed_grid(run.trajectory), observed.speed).value_pct;
        s.clamps = run.stats.clamp_events;
      } catch (const SimulationError&) {
        s.mape = kPenaltyMapePct;
        s.blew_up = true;
      }
    });

    LevelStats stats;
    stats.level = level;
    stats.min_mape = samples[0].mape;
    double acc = 0.0;
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      values[i] = s.mape;
      acc += s.mape;
      stats.worst_mape = std::max(stats.worst_mape, s.mape);
      stats.min_mape = std::min(stats.min_mape, s.mape);
      stats.instability_incidents += s.blew_up ? 1 : 0;
      stats.clamp_events += s.clamps;
    }
    stats.avg_mape = acc / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - stats.avg_mape) * (v - stats.avg_mape);
    stats.stddev_mape = std::sqrt(var / static_cast<double>(values.size()));
    std::nth_element(values.begin(), values.begin() + values.size() / 2, values.end());
    stats.median_mape = values[values.size() / 2];
    report.per_level.push_back(stats);
  }
  return report;
}

std::vector<double> default_landscape_grid() {
  std::vector<double> grid(21);
  for (int i = 0; i < 21; ++i) grid[i] = -0.10 + 0.01 * i;
  return grid;
}

LandscapeReport landscape_sweep(const ParameterSchedule& schedule,
                                const ObservedField& observed,
                                const BoundaryConditions& bc, const NetworkGeometry& geom,
                                int segment, std::span<const double> grid,
                                const SimOptions& sim) {
  schedule.validate(geom);
  if (segment < 0 || segment >= geom.num_segments)
    throw std::invalid_argument("landscape_sweep: segment out of range");
  if (geom.has_onramp(segment) || geom.has_offramp(segment))
    throw std::invalid_argument(
        "landscape_sweep: segment has ramps; ramp parameters are excluded, pick a ramp-free segment");

  LandscapeReport report;
  report.segment = segment;
  report.baseline_mape = schedule_mape(schedule, observed, bc, geom, sim).value_pct;

  for (ParamKind kind : kMainParamKinds) {
    LandscapeCurve curve;
    curve.kind = kind;
    for (double f : grid) {
      ParameterSchedule perturbed = schedule;
      for (auto& block : perturbed.blocks) {
        const double base = get_param(block[segment], kind);
        set_param(block[segment], kind, base * (1.0 + f));
      }
      const double m = schedule_mape(perturbed, observed, bc, geom, sim).value_pct;
      if (m >= kPenaltyMapePct) ++curve.instability_incidents;
      curve.perturbation.push_back(f);
      curve.delta_mape.push_back(m - report.baseline_mape);
    }
    report.curves.push_back(std::move(curve));
  }
  return report;
}

FdReport fd_points(const Trajectory& trajectory, const NetworkGeometry& geom,
                   const ParameterSchedule& schedule, int curve_samples, FdForm form) {
  FdReport report;
  double rho_max = 0.0;
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    const TrafficState& st = trajectory.states[t];
    for (int s = 0; s < st.size(); ++s) {
      report.points.push_back({static_cast<int>(t), s, st.density[s], st.flow[s]});
      rho_max = std::max(rho_max, st.density[s]);
    }
  }
  if (trajectory.states.empty()) return report;

  rho_max = std::max(60.0, 1.2 * rho_max);
  for (int s = 0; s < geom.num_segments; ++s) {
    const double lanes = static_cast<double>(geom.lanes[s]);
    for (int k = 0; k < schedule.num_blocks(); ++k) {
      const SegmentParameters& p = schedule.blocks[k][s];
      for (int i = 0; i < curve_samples; ++i) {
        const double rho = rho_max * static_cast<double>(i) /
                           static_cast<double>(std::max(1, curve_samples - 1));
        const double q = rho * equilibrium_speed(rho, p, form) * lanes;
        report.curves.push_back({s, k, rho, q});
      }
    }
  }
  return report;
}

namespace {
std::vector<double> moving_average(const std::vector<double>& in, int half) {
  const int n = static_cast<int>(in.size());
  std::vector<double> out(in.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) acc += in[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}
} // namespace

BoundaryConditions smooth_boundaries(const BoundaryConditions& bc, int window) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("smooth_boundaries: window must be odd and >= 1");
  if (window == 1) return bc;
  const int half = window / 2;
  BoundaryConditions out;
  out.upstream_flow = moving_average(bc.upstream_flow, half);
  out.upstream_speed = moving_average(bc.upstream_speed, half);
  out.downstream_density = moving_average(bc.downstream_density, half);
  return out;
}

} // namespace metacal
