#include "metacal/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "metacal/rng.hpp"
#include "metacal/simulate.hpp"
#include "metacal/textio.hpp"

namespace metacal {

double SeriesSpec::value_at(int t, int horizon) const {
  switch (shape) {
    case Shape::constant:
      return base;
    case Shape::ramp: {
      const double frac = horizon > 1 ? static_cast<double>(t) / (horizon - 1) : 0.0;
      return base + amplitude * frac;
    }
    case Shape::sine:
      return base + amplitude * std::sin(6.283185307179586476925286766559 *
                                         static_cast<double>(t) /
                                         static_cast<double>(std::max(1, period_steps)));
    case Shape::pulse:
      return (t >= t_start && t < t_start + t_len) ? base + amplitude : base;
  }
  return base;
}

void ScenarioBundle::validate() const {
  geometry.validate();
  bc.validate();
  observed.validate(geometry);
  if (observed.horizon() != bc.horizon())
    throw std::invalid_argument("scenario: observed grid rows != boundary horizon + 1");
  if (truth_schedule) {
    truth_schedule->validate(geometry);
    if (truth_schedule->horizon < bc.horizon())
      throw std::invalid_argument("scenario: truth schedule shorter than horizon");
  }
  if (truth_speed && !truth_speed->same_shape(observed.speed))
    throw std::invalid_argument("scenario: truth speed grid shape mismatch");
  if (!cfl_check(geometry, meta.v_free_bound).pass)
    throw std::invalid_argument("scenario: CFL violated for the declared v_free bound");
}

namespace {

std::string join_ints(const std::vector<int>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
  return out.str();
}

} // namespace

ScenarioBundle load_scenario(const std::filesystem::path& dir) {
  const auto cfg_path = dir / "scenario.cfg";
  auto kv = read_kv(cfg_path);
  auto need = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(cfg_path, "missing key '" + key + "'");
    return it->second;
  };

  ScenarioBundle bundle;
  bundle.meta.name = kv.count("name") ? kv["name"] : dir.filename().string();
  bundle.meta.provenance = kv.count("provenance") ? kv["provenance"] : "unspecified";
  if (kv.count("v_free_bound"))
    bundle.meta.v_free_bound = parse_double(kv["v_free_bound"], cfg_path, -1);

  bundle.geometry.num_segments = std::atoi(need("num_segments").c_str());
  bundle.geometry.segment_length_km = parse_double(need("segment_length_km"), cfg_path, -1);
  bundle.geometry.time_step_s = parse_double(need("time_step_s"), cfg_path, -1);
  bundle.geometry.lanes = parse_int_list(need("lanes"));
  if (kv.count("onramp_segments"))
    bundle.geometry.onramp_segments = parse_int_list(kv["onramp_segments"]);
  if (kv.count("offramp_segments"))
    bundle.geometry.offramp_segments = parse_int_list(kv["offramp_segments"]);

  bundle.bc = read_boundary_tsv(dir / "boundary.tsv");
  bundle.observed.initial_state = read_state_tsv(dir / "initial_state.tsv");
  bundle.observed.speed = read_grid_tsv(dir / "speed_obs.tsv");
  if (std::filesystem::exists(dir / "density_obs.tsv"))
    bundle.observed.density = read_grid_tsv(dir / "density_obs.tsv");
  if (std::filesystem::exists(dir / "flow_obs.tsv"))
    bundle.observed.flow = read_grid_tsv(dir / "flow_obs.tsv");
  if (std::filesystem::exists(dir / "truth_schedule.tsv"))
    bundle.truth_schedule = read_schedule_tsv(dir / "truth_schedule.tsv");
  if (std::filesystem::exists(dir / "truth_speed.tsv"))
    bundle.truth_speed = read_grid_tsv(dir / "truth_speed.tsv");

  try {
    bundle.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(dir, e.what());
  }
  return bundle;
}

void save_scenario(const ScenarioBundle& bundle, const std::filesystem::path& dir) {
  bundle.validate();
  std::filesystem::create_directories(dir);
  KvPairs kv;
  kv.emplace_back("name", bundle.meta.name);
  kv.emplace_back("provenance", bundle.meta.provenance);
  kv.emplace_back("num_segments", std::to_string(bundle.geometry.num_segments));
  kv.emplace_back("segment_length_km", format_double(bundle.geometry.segment_length_km));
  kv.emplace_back("time_step_s", format_double(bundle.geometry.time_step_s));
  kv.emplace_back("lanes", join_ints(bundle.geometry.lanes));
  kv.emplace_back("onramp_segments", join_ints(bundle.geometry.onramp_segments));
  kv.emplace_back("offramp_segments", join_ints(bundle.geometry.offramp_segments));
  kv.emplace_back("v_free_bound", format_double(bundle.meta.v_free_bound));
  write_kv(dir / "scenario.cfg", kv);

  write_boundary_tsv(dir / "boundary.tsv", bundle.bc);
  write_state_tsv(dir / "initial_state.tsv", bundle.observed.initial_state);
  write_grid_tsv(dir / "speed_obs.tsv", bundle.observed.speed);
  if (bundle.observed.density) write_grid_tsv(dir / "density_obs.tsv", *bundle.observed.density);
  if (bundle.observed.flow) write_grid_tsv(dir / "flow_obs.tsv", *bundle.observed.flow);
  if (bundle.truth_schedule) write_schedule_tsv(dir / "truth_schedule.tsv", *bundle.truth_schedule);
  if (bundle.truth_speed) write_grid_tsv(dir / "truth_speed.tsv", *bundle.truth_speed);
}

ScenarioBundle generate_synthetic(const NetworkGeometry& geom,
                                  const ParameterSchedule& truth_schedule,
                                  const BcProfile& profile, double init_density,
                                  std::uint64_t seed, double obs_noise_rel,
                                  const SimOptions& sim) {
  geom.validate();
  truth_schedule.validate(geom);
  const int H = truth_schedule.horizon;

  ScenarioBundle bundle;
  bundle.meta.name = "synthetic";
  bundle.meta.provenance = "synthetic";
  bundle.geometry = geom;

  bundle.bc.upstream_flow.resize(H);
  bundle.bc.upstream_speed.resize(H);
  bundle.bc.downstream_density.resize(H);
  for (int t = 0; t < H; ++t) {
    bundle.bc.upstream_flow[t] = std::max(0.0, profile.inflow.value_at(t, H));
    bundle.bc.upstream_speed[t] = std::max(0.0, profile.upstream_speed.value_at(t, H));
    bundle.bc.downstream_density[t] =
        std::max(0.0, profile.downstream_density.value_at(t, H));
  }

  // equilibrium initial state under the first truth block
  std::vector<double> rho0(geom.num_segments, init_density);
  std::vector<double> v0(geom.num_segments);
  for (int s = 0; s < geom.num_segments; ++s)
    v0[s] = equilibrium_speed(init_density, truth_schedule.blocks[0][s], sim.fd_form);
  TrafficState initial = TrafficState::from_density_speed(rho0, v0, geom.lanes);

  SimResult truth = simulate(initial, truth_schedule, bundle.bc, geom, sim); // must stay finite
  const Grid truth_v = speed_grid(truth.trajectory);

  bundle.observed.initial_state = initial;
  bundle.observed.speed = truth_v;
  if (obs_noise_rel > 0.0) {
    SplitMix64 rng(derive_seed(seed, 0x0b5));
    for (double& v : bundle.observed.speed.data)
      v = std::max(0.0, v * (1.0 + rng.gaussian(0.0, obs_noise_rel)));
  }
  bundle.observed.density = density_grid(truth.trajectory);
  bundle.observed.flow = flow_grid(truth.trajectory);
  bundle.truth_schedule = truth_schedule;
  bundle.truth_speed = truth_v;
  bundle.validate();
  return bundle;
}

} // namespace metacal
