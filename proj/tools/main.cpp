// metacal: METANET macroscopic traffic simulation and calibration toolkit.
//
// Subcommands: synth, simulate, calibrate-static, calibrate-rho, calibrate-ga,
// horizon-sweep, robustness, landscape, fd-points, smooth-bc. Every run writes
// its artifacts plus a manifest.json recording the resolved configuration,
// seeds and content digests of all files read and written.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metacal/calibrate.hpp"
#include "metacal/eval.hpp"
#include "metacal/ga.hpp"
#include "metacal/manifest.hpp"
#include "metacal/rho.hpp"
#include "metacal/rng.hpp"
#include "metacal/scenario.hpp"
#include "metacal/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metacal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string scenario_dir;
  std::string config_file;
  std::string schedule_file;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  bool strict = false;
};

// Key/value configuration with defaults; every lookup is recorded so the
// manifest carries the fully resolved configuration.
class Config {
 public:
  Config() = default;
  explicit Config(const std::string& file) {
    if (!file.empty()) values_ = read_kv(file);
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    resolved_[key] = it != values_.end() ? it->second : fallback;
    return resolved_[key];
  }
  double get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    const double v =
        it != values_.end() ? std::strtod(it->second.c_str(), nullptr) : fallback;
    resolved_[key] = format_double(v);
    return v;
  }
  int get(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    const int v = it != values_.end() ? std::atoi(it->second.c_str()) : fallback;
    resolved_[key] = std::to_string(v);
    return v;
  }
  bool get(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    bool v = fallback;
    if (it != values_.end())
      v = it->second == "true" || it->second == "1" || it->second == "yes";
    resolved_[key] = v ? "true" : "false";
    return v;
  }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

fs::path resolve_out_dir(const CommonArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("METACAL_OUT_DIR")) return env;
  return "metacal_out";
}

SimOptions sim_options(const CommonArgs& args, const Config& cfg) {
  SimOptions sim;
  sim.strict = args.strict;
  sim.fd_form = cfg.get("sim.fd_form", std::string{"scaled_base"}) == "classical"
                    ? FdForm::classical
                    : FdForm::scaled_base;
  return sim;
}

LossOptions loss_options(const CommonArgs& args, const Config& cfg) {
  LossOptions loss;
  loss.sim = sim_options(args, cfg);
  loss.weights.speed = cfg.get("loss.weight.speed", 1.0);
  loss.weights.density = cfg.get("loss.weight.density", 0.0);
  loss.weights.flow = cfg.get("loss.weight.flow", 0.0);
  loss.blowup_penalty = cfg.get("loss.blowup_penalty", 1e12);
  return loss;
}

SolverConfig solver_config(const CommonArgs& args, const Config& cfg) {
  SolverConfig sc;
  sc.max_iterations = cfg.get("solver.max_iterations", 300);
  sc.tolerance = cfg.get("solver.tolerance", 1e-12);
  sc.history_size = cfg.get("solver.history_size", 10);
  sc.fd_step = cfg.get("solver.fd_step", 1e-6);
  const std::string mode = cfg.get("solver.gradient_mode", std::string{"adjoint"});
  if (mode == "forward_fd") sc.gradient_mode = GradientMode::forward_fd;
  else if (mode == "central_fd") sc.gradient_mode = GradientMode::central_fd;
  else sc.gradient_mode = GradientMode::adjoint;
  sc.workers = args.workers;
  sc.seed = args.seed;
  return sc;
}

ParameterBounds bounds_config(const Config& cfg) {
  ParameterBounds bounds;
  auto load = [&](const char* name, KindBounds& kb) {
    kb.lower = cfg.get(std::string("bounds.") + name + ".lower", kb.lower);
    kb.upper = cfg.get(std::string("bounds.") + name + ".upper", kb.upper);
  };
  load("tau_h", bounds.tau);
  load("eta", bounds.eta);
  load("kappa", bounds.kappa);
  load("a", bounds.a);
  load("v_free_kmh", bounds.v_free);
  load("rho_cr", bounds.rho_cr);
  load("beta", bounds.beta);
  load("r_vph", bounds.r);
  return bounds;
}

ScenarioBundle load_scenario_tracked(const CommonArgs& args, RunManifest& manifest) {
  if (args.scenario_dir.empty())
    throw std::invalid_argument("--scenario is required for this subcommand");
  ScenarioBundle bundle = load_scenario(args.scenario_dir);
  for (const char* name :
       {"scenario.cfg", "boundary.tsv", "initial_state.tsv", "speed_obs.tsv",
        "density_obs.tsv", "flow_obs.tsv", "truth_schedule.tsv", "truth_speed.tsv"}) {
    const fs::path p = fs::path(args.scenario_dir) / name;
    if (fs::exists(p)) manifest.add_input(p, "scenario");
  }
  return bundle;
}

ParameterSchedule load_schedule_tracked(const CommonArgs& args, RunManifest& manifest) {
  if (args.schedule_file.empty())
    throw std::invalid_argument("--schedule is required for this subcommand");
  manifest.add_input(args.schedule_file, "schedule");
  return read_schedule_tsv(args.schedule_file);
}

ParameterVector warm_start_vector(const CommonArgs& args, const Config& cfg,
                                  const ScenarioBundle& bundle,
                                  const ParameterBounds& bounds, RunManifest& manifest) {
  (void)args;
  std::vector<SegmentParameters> warm = default_warm_start(bundle.geometry);
  const std::string file = cfg.get("calib.warm_start_file", std::string{});
  if (!file.empty()) {
    manifest.add_input(file, "warm_start");
    warm = read_schedule_tsv(file).blocks.at(0);
  }
  return ParameterVector::single_block(bundle.geometry, warm, bounds, bundle.horizon());
}

json result_to_json(const CalibrationResult& res) {
  json j;
  j["final_loss"] = res.final_loss;
  j["final_mape_pct"] = res.final_mape_pct;
  j["mape_excluded"] = res.mape_excluded;
  j["iterations"] = res.iterations;
  j["wall_time_s"] = res.wall_time_s;
  j["termination_reason"] = res.termination_reason;
  j["seed"] = res.seed;
  j["instability_incidents"] = res.instability_incidents;
  j["clamp_events"] = res.clamp_events;
  j["loss_trace"] = res.loss_trace;
  j["num_blocks"] = res.schedule.num_blocks();
  j["block_starts"] = res.schedule.block_starts;
  if (!res.windows.empty()) {
    json ws = json::array();
    for (const auto& w : res.windows)
      ws.push_back({{"t_start", w.t_start},
                    {"t_pred_end", w.t_pred_end},
                    {"t_exec_end", w.t_exec_end},
                    {"subproblem_loss", w.subproblem_loss},
                    {"iterations", w.iterations},
                    {"failed", w.failed}});
    j["windows"] = ws;
  }
  return j;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw DataError(file, "cannot open for writing");
  out << j.dump(2) << "\n";
}

// ---- subcommands -------------------------------------------------------

int run_synth(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  NetworkGeometry geom;
  geom.num_segments = cfg.get("synth.num_segments", 8);
  geom.segment_length_km = cfg.get("synth.segment_length_km", 0.5);
  geom.time_step_s = cfg.get("synth.time_step_s", 10.0);
  auto lanes = parse_int_list(cfg.get("synth.lanes", std::string{"3"}));
  if (lanes.size() == 1)
    geom.lanes.assign(geom.num_segments, lanes[0]);
  else
    geom.lanes = lanes;
  geom.onramp_segments = parse_int_list(cfg.get("synth.onramp_segments", std::string{}));
  geom.offramp_segments = parse_int_list(cfg.get("synth.offramp_segments", std::string{}));

  const int horizon = cfg.get("synth.horizon_steps", 180);

  auto series = [&](const std::string& prefix, double base_default) {
    SeriesSpec spec;
    const std::string shape = cfg.get(prefix + ".shape", std::string{"constant"});
    if (shape == "ramp") spec.shape = SeriesSpec::Shape::ramp;
    else if (shape == "sine") spec.shape = SeriesSpec::Shape::sine;
    else if (shape == "pulse") spec.shape = SeriesSpec::Shape::pulse;
    else spec.shape = SeriesSpec::Shape::constant;
    spec.base = cfg.get(prefix + ".base", base_default);
    spec.amplitude = cfg.get(prefix + ".amplitude", 0.0);
    spec.period_steps = cfg.get(prefix + ".period_steps", std::max(1, horizon / 2));
    spec.t_start = cfg.get(prefix + ".t_start", 0);
    spec.t_len = cfg.get(prefix + ".t_len", 0);
    return spec;
  };
  BcProfile profile;
  profile.inflow = series("synth.inflow", 3500.0);
  profile.upstream_speed = series("synth.upstream_speed", 95.0);
  profile.downstream_density = series("synth.downstream_density", 25.0);

  // base truth parameters, optional per-segment jitter, optional second regime
  SegmentParameters base;
  base.tau_h = cfg.get("synth.params.tau_h", base.tau_h);
  base.eta = cfg.get("synth.params.eta", base.eta);
  base.kappa = cfg.get("synth.params.kappa", base.kappa);
  base.a = cfg.get("synth.params.a", base.a);
  base.v_free_kmh = cfg.get("synth.params.v_free_kmh", base.v_free_kmh);
  base.rho_cr = cfg.get("synth.params.rho_cr", base.rho_cr);
  const double beta_default = cfg.get("synth.params.beta", 0.1);
  const double r_default = cfg.get("synth.params.r_vph", 500.0);
  const double jitter = cfg.get("synth.params_jitter_rel", 0.0);

  SplitMix64 jitter_rng(derive_seed(args.seed, 0x11));
  std::vector<SegmentParameters> block(geom.num_segments, base);
  for (int s = 0; s < geom.num_segments; ++s) {
    if (jitter > 0.0) {
      for (ParamKind kind : kMainParamKinds) {
        const double v = get_param(block[s], kind);
        set_param(block[s], kind, v * (1.0 + jitter_rng.uniform(-jitter, jitter)));
      }
    }
    block[s].beta = geom.has_offramp(s) ? beta_default : 0.0;
    block[s].r_vph = geom.has_onramp(s) ? r_default : 0.0;
  }

  ParameterSchedule truth = ParameterSchedule::constant(block, horizon);
  const int switch_step = cfg.get("synth.switch.t_start", -1);
  if (switch_step > 0 && switch_step < horizon) {
    std::vector<SegmentParameters> second = truth.blocks[0];
    for (auto& p : second) {
      p.v_free_kmh = cfg.get("synth.switch.v_free_kmh", p.v_free_kmh);
      p.rho_cr = cfg.get("synth.switch.rho_cr", p.rho_cr);
      p.tau_h = cfg.get("synth.switch.tau_h", p.tau_h);
      p.eta = cfg.get("synth.switch.eta", p.eta);
    }
    truth.block_starts.push_back(switch_step);
    truth.blocks.push_back(second);
  }

  const double init_density = cfg.get("synth.init_density", 24.0);
  const double obs_noise = cfg.get("synth.obs_noise_rel", 0.0);

  ScenarioBundle bundle = generate_synthetic(geom, truth, profile, init_density, args.seed,
                                             obs_noise, sim_options(args, cfg));
  bundle.meta.name = cfg.get("synth.name", std::string{"synthetic"});

  const fs::path out = resolve_out_dir(args);
  save_scenario(bundle, out);
  for (const auto& entry : fs::directory_iterator(out))
    if (entry.path().filename() != "manifest.json")
      manifest.add_output(entry.path(), "scenario");
  return kExitOk;
}

int run_simulate(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  ParameterSchedule schedule;
  if (!args.schedule_file.empty()) {
    schedule = load_schedule_tracked(args, manifest);
  } else if (bundle.truth_schedule) {
    schedule = *bundle.truth_schedule;
  } else {
    schedule = ParameterSchedule::constant(default_warm_start(bundle.geometry),
                                           bundle.horizon());
  }

  BoundaryConditions bc = bundle.bc;
  const int horizon = cfg.get("simulate.horizon_steps", bundle.horizon());
  if (horizon >= 0 && horizon < bc.horizon()) {
    bc.upstream_flow.resize(horizon);
    bc.upstream_speed.resize(horizon);
    bc.downstream_density.resize(horizon);
  }
  if (schedule.horizon < bc.horizon()) schedule.horizon = bc.horizon();

  SimResult res = simulate(bundle.observed.initial_state, schedule, bc, bundle.geometry,
                           sim_options(args, cfg));

  const fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  write_grid_tsv(out / "sim_speed.tsv", speed_grid(res.trajectory));
  write_grid_tsv(out / "sim_density.tsv", density_grid(res.trajectory));
  write_grid_tsv(out / "sim_flow.tsv", flow_grid(res.trajectory));
  json report;
  report["horizon_steps"] = res.trajectory.horizon();
  report["clamp_events"] = res.stats.clamp_events;
  report["first_clamp_time"] = res.stats.first_clamp_time;
  write_json(out / "sim_report.json", report);
  for (const char* f :
       {"sim_speed.tsv", "sim_density.tsv", "sim_flow.tsv", "sim_report.json"})
    manifest.add_output(out / f, "simulation");
  return kExitOk;
}

int run_calibrate(const CommonArgs& args, const Config& cfg, RunManifest& manifest,
                  const std::string& method) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  const ParameterBounds bounds = bounds_config(cfg);
  const LossOptions loss = loss_options(args, cfg);

  CalibrationResult res;
  if (method == "static") {
    auto warm = warm_start_vector(args, cfg, bundle, bounds, manifest);
    res = calibrate_static(bundle.observed, bundle.bc, bundle.geometry, bounds, warm,
                           solver_config(args, cfg), loss);
  } else if (method == "rho") {
    auto warm = warm_start_vector(args, cfg, bundle, bounds, manifest);
    RhoConfig rho_cfg;
    rho_cfg.inner = solver_config(args, cfg);
    const double dt_min = bundle.geometry.time_step_s / 60.0;
    rho_cfg.control_horizon_steps =
        cfg.has("rho.control_horizon_min")
            ? static_cast<int>(cfg.get("rho.control_horizon_min", 15.0) / dt_min)
            : cfg.get("rho.control_horizon_steps", 90);
    rho_cfg.prediction_horizon_steps =
        cfg.has("rho.prediction_horizon_min")
            ? static_cast<int>(cfg.get("rho.prediction_horizon_min", 20.0) / dt_min)
            : cfg.get("rho.prediction_horizon_steps", 120);
    rho_cfg.jump_penalty_weight = cfg.get("rho.jump_penalty_weight", 1.0);
    rho_cfg.reanchor_to_observations = cfg.get("rho.reanchor_to_observations", false);
    if (cfg.has("rho.jump_cap")) rho_cfg.jump_cap = cfg.get("rho.jump_cap", 0.0);
    res = calibrate_rho(bundle.observed, bundle.bc, bundle.geometry, bounds, warm, rho_cfg,
                        loss);
  } else { // ga
    GaConfig ga_cfg;
    ga_cfg.population_size = cfg.get("ga.population_size", 50);
    ga_cfg.crossover_rate = cfg.get("ga.crossover_rate", 0.8);
    ga_cfg.mutation_rate = cfg.get("ga.mutation_rate", 0.1);
    ga_cfg.mutation_scale = cfg.get("ga.mutation_scale", 0.1);
    ga_cfg.generations = cfg.get("ga.generations", 200);
    ga_cfg.elitism_count = cfg.get("ga.elitism_count", 2);
    ga_cfg.tournament_size = cfg.get("ga.tournament_size", 3);
    ga_cfg.seed = args.seed;
    ga_cfg.workers = args.workers;
    res = calibrate_ga(bundle.observed, bundle.bc, bundle.geometry, bounds, ga_cfg, loss);
  }

  const fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  write_schedule_tsv(out / "schedule.tsv", res.schedule);
  write_json(out / "calibration_report.json", result_to_json(res));
  manifest.add_output(out / "schedule.tsv", "schedule");
  manifest.add_output(out / "calibration_report.json", "report");

  std::cout << "final_loss=" << format_double(res.final_loss)
            << " mape_pct=" << format_double(res.final_mape_pct)
            << " blocks=" << res.schedule.num_blocks() << "\n";
  return kExitOk;
}

int run_horizon_sweep(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  const ParameterBounds bounds = bounds_config(cfg);
  auto warm = warm_start_vector(args, cfg, bundle, bounds, manifest);

  const double dt_min = bundle.geometry.time_step_s / 60.0;
  const bool in_minutes = cfg.has("sweep.horizons_min");
  const std::string raw =
      in_minutes ? cfg.get("sweep.horizons_min", std::string{})
                 : cfg.get("sweep.horizons_steps",
                           std::string{"6:12,12:24,30:60,60:90,90:120"});
  std::vector<std::pair<int, int>> pairs;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("sweep horizons must be 'hc:hp' pairs");
    double hc = std::strtod(tok.substr(0, colon).c_str(), nullptr);
    double hp = std::strtod(tok.substr(colon + 1).c_str(), nullptr);
    if (in_minutes) {
      hc /= dt_min;
      hp /= dt_min;
    }
    pairs.emplace_back(static_cast<int>(hc), static_cast<int>(hp));
  }

  RhoConfig base_cfg;
  base_cfg.inner = solver_config(args, cfg);
  base_cfg.jump_penalty_weight = cfg.get("rho.jump_penalty_weight", 1.0);

  std::optional<NoiseSpec> noise;
  if (cfg.has("noise.levels")) {
    NoiseSpec spec;
    spec.levels = parse_double_list(cfg.get("noise.levels", std::string{}));
    spec.samples_per_level = cfg.get("noise.samples", 100);
    spec.seed = args.seed;
    noise = spec;
  }

  auto table = horizon_sweep(bundle.observed, bundle.bc, bundle.geometry, bounds, warm,
                             pairs, base_cfg, noise, loss_options(args, cfg), args.workers);

  const fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  {
    std::ofstream tsv(out / "horizon_sweep.tsv");
    tsv << "hc_steps\thp_steps\tfailed\tfit_mape_pct\tmean_avg_mape_pct";
    if (noise) {
      for (double level : noise->levels) tsv << "\tavg_mape@" << format_double(level);
      for (double level : noise->levels) tsv << "\tworst_mape@" << format_double(level);
    }
    tsv << "\n";
    for (const auto& e : table) {
      tsv << e.hc << '\t' << e.hp << '\t' << (e.failed ? 1 : 0) << '\t'
          << format_double(e.fit_mape) << '\t' << format_double(e.mean_avg_mape);
      if (noise) {
        for (double v : e.avg_mape) tsv << '\t' << format_double(v);
        for (double v : e.worst_mape) tsv << '\t' << format_double(v);
      }
      tsv << "\n";
    }
  }
  manifest.add_output(out / "horizon_sweep.tsv", "report");
  for (const auto& e : table) {
    if (e.failed) continue;
    const fs::path sched = out / ("schedule_hc" + std::to_string(e.hc) + ".tsv");
    write_schedule_tsv(sched, e.result.schedule);
    manifest.add_output(sched, "schedule");
  }
  return kExitOk;
}

int run_robustness(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  ParameterSchedule schedule = load_schedule_tracked(args, manifest);
  NoiseSpec noise;
  noise.levels = parse_double_list(
      cfg.get("noise.levels", std::string{"1e-9,1e-6,1e-4,1e-3,1e-2,5e-2"}));
  noise.samples_per_level = cfg.get("noise.samples", 1000);
  noise.seed = args.seed;

  auto rep = robustness_sweep(schedule, bundle.observed, bundle.bc, bundle.geometry, noise,
                              sim_options(args, cfg), args.workers);

  const fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  {
    std::ofstream tsv(out / "robustness.tsv");
    tsv << "# unperturbed_mape_pct=" << format_double(rep.unperturbed_mape) << "\n";
    tsv << "level\tavg_mape_pct\tworst_mape_pct\tmin_mape_pct\tmedian_mape_pct\t"
           "stddev_mape_pct\tinstability_incidents\tclamp_events\n";
    for (const auto& ls : rep.per_level)
      tsv << format_double(ls.level) << '\t' << format_double(ls.avg_mape) << '\t'
          << format_double(ls.worst_mape) << '\t' << format_double(ls.min_mape) << '\t'
          << format_double(ls.median_mape) << '\t' << format_double(ls.stddev_mape)
          << '\t' << ls.instability_incidents << '\t' << ls.clamp_events << "\n";
  }
  manifest.add_output(out / "robustness.tsv", "report");
  return kExitOk;
}

int run_landscape(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  ParameterSchedule schedule = load_schedule_tracked(args, manifest);
  const int segment = cfg.get("landscape.segment", 0);
  std::vector<double> grid = default_landscape_grid();
  if (cfg.has("landscape.grid"))
    grid = parse_double_list(cfg.get("landscape.grid", std::string{}));

  auto rep = landscape_sweep(schedule, bundle.observed, bundle.bc, bundle.geometry,
                             segment, grid, sim_options(args, cfg));

  const fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  {
    std::ofstream tsv(out / "landscape.tsv");
    tsv << "# segment=" << rep.segment
        << " baseline_mape_pct=" << format_double(rep.baseline_mape) << "\n";
    tsv << "parameter\tperturbation\tdelta_mape_pct\n";
    for (const auto& curve : rep.curves)
      for (std::size_t i = 0; i < curve.perturbation.size(); ++i)
        tsv << param_kind_name(curve.kind) << '\t' << format_double(curve.perturbation[i])
            << '\t' << format_double(curve.delta_mape[i]) << "\n";
  }
  manifest.add_output(out / "landscape.tsv", "report");
  return kExitOk;
}

int run_fd_points(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  ParameterSchedule schedule = load_schedule_tracked(args, manifest);
  SimResult res = simulate(bundle.observed.initial_state, schedule, bundle.bc,
                           bundle.geometry, sim_options(args, cfg));
  auto rep = fd_points(res.trajectory, bundle.geometry, schedule,
                       cfg.get("fd.curve_samples", 101), sim_options(args, cfg).fd_form);

  const fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  {
    std::ofstream tsv(out / "fd_points.tsv");
    tsv << "t\tsegment\tdensity_vpkpl\tflow_vph\n";
    for (const auto& p : rep.points)
      tsv << p.t << '\t' << p.segment << '\t' << format_double(p.density) << '\t'
          << format_double(p.flow) << "\n";
  }
  {
    std::ofstream tsv(out / "fd_curves.tsv");
    tsv << "segment\tblock\tdensity_vpkpl\tflow_vph\n";
    for (const auto& c : rep.curves)
      tsv << c.segment << '\t' << c.block << '\t' << format_double(c.density) << '\t'
          << format_double(c.flow) << "\n";
  }
  manifest.add_output(out / "fd_points.tsv", "report");
  manifest.add_output(out / "fd_curves.tsv", "report");
  return kExitOk;
}

int run_smooth_bc(const CommonArgs& args, const Config& cfg, RunManifest& manifest) {
  ScenarioBundle bundle = load_scenario_tracked(args, manifest);
  bundle.bc = smooth_boundaries(bundle.bc, cfg.get("smooth.window", 5));
  const fs::path out = resolve_out_dir(args);
  save_scenario(bundle, out);
  for (const auto& entry : fs::directory_iterator(out))
    if (entry.path().filename() != "manifest.json")
      manifest.add_output(entry.path(), "scenario");
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"METANET traffic simulation, static/dynamic calibration and evaluation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string command;

  auto add_common = [&](CLI::App* sub, bool needs_scenario, bool takes_schedule) {
    if (needs_scenario)
      sub->add_option("--scenario", args.scenario_dir, "scenario directory");
    if (takes_schedule)
      sub->add_option("--schedule", args.schedule_file, "schedule.tsv to evaluate");
    sub->add_option("--config", args.config_file, "key = value configuration file");
    sub->add_option("--seed", args.seed, "master seed");
    sub->add_option("--out-dir", args.out_dir,
                    "output directory (default $METACAL_OUT_DIR or ./metacal_out)");
    sub->add_option("--workers", args.workers, "parallel worker bound");
    sub->add_flag("--strict-numerics", args.strict,
                  "raise on non-finite values instead of clamping");
    sub->callback([&command, sub]() { command = sub->get_name(); });
  };

  add_common(app.add_subcommand("synth", "generate a synthetic scenario"), false, false);
  add_common(app.add_subcommand("simulate", "roll the model forward"), true, true);
  add_common(app.add_subcommand("calibrate-static", "one-shot calibration"), true, false);
  add_common(app.add_subcommand("calibrate-rho", "rolling-horizon calibration"), true,
             false);
  add_common(app.add_subcommand("calibrate-ga", "genetic-algorithm baseline"), true, false);
  add_common(app.add_subcommand("horizon-sweep", "control-horizon sensitivity table"),
             true, false);
  add_common(app.add_subcommand("robustness", "inflow-noise Monte-Carlo sweep"), true,
             true);
  add_common(app.add_subcommand("landscape", "parameter perturbation landscapes"), true,
             true);
  add_common(app.add_subcommand("fd-points", "fundamental-diagram scatter and curves"),
             true, true);
  add_common(app.add_subcommand("smooth-bc", "moving-average boundary smoothing"), true,
             false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    Config cfg(args.config_file);
    RunManifest manifest;
    manifest.command = command;
    for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);
    manifest.seed = args.seed;
    if (!args.config_file.empty()) manifest.add_input(args.config_file, "config");

    int rc;
    if (command == "synth") rc = run_synth(args, cfg, manifest);
    else if (command == "simulate") rc = run_simulate(args, cfg, manifest);
    else if (command == "calibrate-static") rc = run_calibrate(args, cfg, manifest, "static");
    else if (command == "calibrate-rho") rc = run_calibrate(args, cfg, manifest, "rho");
    else if (command == "calibrate-ga") rc = run_calibrate(args, cfg, manifest, "ga");
    else if (command == "horizon-sweep") rc = run_horizon_sweep(args, cfg, manifest);
    else if (command == "robustness") rc = run_robustness(args, cfg, manifest);
    else if (command == "landscape") rc = run_landscape(args, cfg, manifest);
    else if (command == "fd-points") rc = run_fd_points(args, cfg, manifest);
    else if (command == "smooth-bc") rc = run_smooth_bc(args, cfg, manifest);
    else {
      std::cerr << "unknown subcommand\n";
      return kExitUsage;
    }

    manifest.config = cfg.resolved();
    manifest.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path out = resolve_out_dir(args);
    fs::create_directories(out);
    save_manifest(manifest, out / "manifest.json");
    return rc;
  } catch (const SimulationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
