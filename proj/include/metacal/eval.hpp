#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metacal/calibrate.hpp"
#include "metacal/loss.hpp"
#include "metacal/params.hpp"
#include "metacal/simulate.hpp"

namespace metacal {

/// Monte-Carlo inflow-noise specification. Levels are relative standard
/// deviations (fractions of each inflow value).
struct NoiseSpec {
  std::vector<double> levels;
  int samples_per_level = 1000;
  std::uint64_t seed = 0;
};

struct LevelStats {
  double level = 0.0;
  double avg_mape = 0.0;
  double worst_mape = 0.0;
  double min_mape = 0.0;
  double median_mape = 0.0;
  double stddev_mape = 0.0;
  long instability_incidents = 0;
  long clamp_events = 0;
};

struct RobustnessReport {
  double unperturbed_mape = 0.0;
  std::vector<LevelStats> per_level;
};

/// Replays the schedule under mean-zero Gaussian noise on the upstream
/// inflows (downstream conditions and initial state stay fixed), scoring
/// speed MAPE against the observations. Per-sample seeds derive from the
/// master seed, so results do not depend on worker count.
RobustnessReport robustness_sweep(const ParameterSchedule& schedule,
                                  const ObservedField& observed,
                                  const BoundaryConditions& bc,
                                  const NetworkGeometry& geom, const NoiseSpec& noise,
                                  const SimOptions& sim = {}, int workers = 1);

/// Applies one noise draw to the upstream inflows (exposed for tests).
BoundaryConditions perturb_inflow(const BoundaryConditions& bc, double level,
                                  std::uint64_t sample_seed);

struct LandscapeCurve {
  ParamKind kind = ParamKind::tau;
  std::vector<double> perturbation; // relative, e.g. -0.1 .. 0.1
  std::vector<double> delta_mape;   // MAPE - baseline MAPE, percentage points
  long instability_incidents = 0;
};

struct LandscapeReport {
  int segment = 0;
  double baseline_mape = 0.0;
  std::vector<LandscapeCurve> curves; // one per main parameter kind
};

/// Scales each main parameter on one (ramp-free) segment across all time
/// blocks by 1 + fraction and records the MAPE change.
LandscapeReport landscape_sweep(const ParameterSchedule& schedule,
                                const ObservedField& observed,
                                const BoundaryConditions& bc, const NetworkGeometry& geom,
                                int segment, std::span<const double> grid,
                                const SimOptions& sim = {});

/// 21 evenly spaced fractions over [-10%, +10%].
std::vector<double> default_landscape_grid();

struct FdPoint {
  int t = 0;
  int segment = 0;
  double density = 0.0; // veh/km/lane
  double flow = 0.0;    // veh/h
};

struct FdCurveSample {
  int segment = 0;
  int block = 0;
  double density = 0.0;
  double flow = 0.0;
};

struct FdReport {
  std::vector<FdPoint> points;
  std::vector<FdCurveSample> curves;
};

/// Scatter of (density, flow) across all times and segments, plus the
/// parametric flow-density curve rho * V[rho] * lanes per segment and block.
FdReport fd_points(const Trajectory& trajectory, const NetworkGeometry& geom,
                   const ParameterSchedule& schedule, int curve_samples = 101,
                   FdForm form = FdForm::scaled_base);

/// Centered moving average per boundary series; edges shrink the window to
/// the available samples. window must be odd; window == 1 is the identity.
BoundaryConditions smooth_boundaries(const BoundaryConditions& bc, int window);

} // namespace metacal
