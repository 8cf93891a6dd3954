#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "metacal/loss.hpp"
#include "metacal/params.hpp"
#include "metacal/types.hpp"

namespace metacal {

/// One boundary series over the horizon.
struct SeriesSpec {
  enum class Shape { constant, ramp, sine, pulse };
  Shape shape = Shape::constant;
  double base = 0.0;
  double amplitude = 0.0; // ramp endpoint offset, sine amplitude, pulse height
  int period_steps = 1;   // sine only
  int t_start = 0;        // pulse only
  int t_len = 0;          // pulse only

  double value_at(int t, int horizon) const;
  static SeriesSpec constant(double value) { return {Shape::constant, value}; }
};

struct BcProfile {
  SeriesSpec inflow;             // veh/h
  SeriesSpec upstream_speed;     // km/h
  SeriesSpec downstream_density; // veh/km/lane
};

struct ScenarioMeta {
  std::string name = "scenario";
  std::string provenance = "unspecified";
  double v_free_bound = 140.0; // declared bound checked against CFL
};

/// Everything one run needs: topology, observations, boundary series and,
/// for synthetic bundles, the generating truth.
struct ScenarioBundle {
  ScenarioMeta meta;
  NetworkGeometry geometry;
  ObservedField observed;
  BoundaryConditions bc;
  std::optional<ParameterSchedule> truth_schedule;
  std::optional<Grid> truth_speed; // noise-free field for twin scoring

  int horizon() const { return bc.horizon(); }
  void validate() const;
};

/// Reads a scenario directory (scenario.cfg, boundary.tsv, initial_state.tsv,
/// speed_obs.tsv, optional density_obs/flow_obs/truth_schedule/truth_speed).
ScenarioBundle load_scenario(const std::filesystem::path& dir);
void save_scenario(const ScenarioBundle& bundle, const std::filesystem::path& dir);

/// Simulates the truth schedule over generated boundary series and emits an
/// observation bundle; obs_noise_rel > 0 multiplies the emitted speed field
/// by (1 + noise) with mean-zero Gaussian noise. The truth rollout must stay
/// finite or this throws.
ScenarioBundle generate_synthetic(const NetworkGeometry& geom,
                                  const ParameterSchedule& truth_schedule,
                                  const BcProfile& profile, double init_density,
                                  std::uint64_t seed, double obs_noise_rel,
                                  const SimOptions& sim = {});

} // namespace metacal
