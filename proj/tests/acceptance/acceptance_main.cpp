// Acceptance suite: one self-contained check per criterion, each printing a
// single [PASS]/[FAIL] line. Run with no arguments for all criteria or with
// an index (1-10) for one. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "metacal/calibrate.hpp"
#include "metacal/eval.hpp"
#include "metacal/ga.hpp"
#include "metacal/manifest.hpp"
#include "metacal/rho.hpp"
#include "metacal/rng.hpp"
#include "metacal/scenario.hpp"
#include "metacal/textio.hpp"

using namespace metacal;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- scenario builders (fixed seeds; these define the acceptance runs) ----

NetworkGeometry corridor_geometry(int segments, int lanes) {
  NetworkGeometry geom;
  geom.num_segments = segments;
  geom.segment_length_km = 0.4;
  geom.time_step_s = 10.0; // CFL limit 144 km/h
  geom.lanes.assign(segments, lanes);
  return geom;
}

std::vector<SegmentParameters> jittered_params(int segments, SplitMix64& rng) {
  std::vector<SegmentParameters> params(segments);
  for (auto& p : params) {
    p.tau_h = rng.uniform(17.0, 21.0) / 3600.0;
    p.eta = rng.uniform(55.0, 65.0);
    p.kappa = rng.uniform(35.0, 45.0);
    p.a = rng.uniform(1.7, 2.1);
    p.v_free_kmh = rng.uniform(100.0, 108.0);
    p.rho_cr = rng.uniform(32.0, 36.0);
  }
  return params;
}

// Static-truth twin for criterion 4: 8 segments, 30 minutes at 10 s steps.
ScenarioBundle static_twin() {
  NetworkGeometry geom = corridor_geometry(8, 3);
  SplitMix64 rng(2025);
  auto truth = jittered_params(8, rng);
  BcProfile profile;
  profile.inflow = {SeriesSpec::Shape::sine, 3400.0, 900.0, 60};
  profile.upstream_speed = SeriesSpec::constant(92.0);
  profile.downstream_density = {SeriesSpec::Shape::sine, 25.0, 6.0, 45};
  return generate_synthetic(geom, ParameterSchedule::constant(truth, 180), profile, 24.0,
                            1, 0.0);
}

// Time-varying twin for criteria 5, 6 and 9: two-lane chain, v_free and
// rho_cr drop at mid-horizon together with a downstream congestion pulse,
// observation noise 2.5%.
ScenarioBundle switching_twin() {
  NetworkGeometry geom = corridor_geometry(8, 2);
  SplitMix64 rng(20250810);
  auto regime1 = jittered_params(8, rng);
  auto regime2 = regime1;
  for (auto& p : regime2) {
    p.v_free_kmh -= 24.0;
    p.rho_cr -= 7.0;
  }
  ParameterSchedule truth;
  truth.block_starts = {0, 180};
  truth.blocks = {regime1, regime2};
  truth.horizon = 360;
  BcProfile profile;
  profile.inflow = {SeriesSpec::Shape::sine, 2400.0, 600.0, 120};
  profile.upstream_speed = SeriesSpec::constant(92.0);
  profile.downstream_density = {SeriesSpec::Shape::pulse, 25.0, 28.0, 0, 180, 180};
  return generate_synthetic(geom, truth, profile, 24.0, 20250810, 0.025);
}

struct StaticVsDynamic {
  CalibrationResult stat;
  CalibrationResult dyn;
};

// Shared by criteria 5 and 6: best-of-two-warm-starts static baseline vs
// rolling-horizon calibration with the control horizon matched to the
// regime-switch granularity.
StaticVsDynamic calibrate_switching(const ScenarioBundle& bundle) {
  ParameterBounds bounds;
  SolverConfig solver;
  solver.max_iterations = 200;
  const int H = bundle.horizon();
  auto warm_default = ParameterVector::single_block(
      bundle.geometry, default_warm_start(bundle.geometry), bounds, H);
  auto warm_truth = ParameterVector::single_block(
      bundle.geometry, bundle.truth_schedule->blocks[0], bounds, H);

  StaticVsDynamic out;
  auto s1 = calibrate_static(bundle.observed, bundle.bc, bundle.geometry, bounds,
                             warm_default, solver);
  auto s2 = calibrate_static(bundle.observed, bundle.bc, bundle.geometry, bounds,
                             warm_truth, solver);
  out.stat = s1.final_mape_pct <= s2.final_mape_pct ? s1 : s2;

  RhoConfig rho_cfg;
  rho_cfg.control_horizon_steps = 90;
  rho_cfg.prediction_horizon_steps = 135;
  rho_cfg.jump_penalty_weight = 1.0;
  rho_cfg.inner = solver;
  out.dyn = calibrate_rho(bundle.observed, bundle.bc, bundle.geometry, bounds,
                          warm_default, rho_cfg);
  return out;
}

// ---- criteria ------------------------------------------------------------

bool criterion_1(std::string& detail) {
  Timer timer;
  NetworkGeometry geom = corridor_geometry(8, 3);
  SegmentParameters p;
  const double rho = 25.0;
  const double veq = equilibrium_speed(rho, p);
  TrafficState state = TrafficState::from_density_speed(
      std::vector<double>(8, rho), std::vector<double>(8, veq), geom.lanes);
  BoundaryConditions bc;
  bc.upstream_flow.assign(1000, state.flow[0]);
  bc.upstream_speed.assign(1000, veq);
  bc.downstream_density.assign(1000, rho);
  auto schedule =
      ParameterSchedule::constant(std::vector<SegmentParameters>(8, p), 1000);
  SimResult res = simulate(state, schedule, bc, geom);
  double drift = 0.0;
  for (const auto& st : res.trajectory.states)
    for (int s = 0; s < 8; ++s) {
      drift = std::max(drift, std::abs(st.density[s] - rho));
      drift = std::max(drift, std::abs(st.speed[s] - veq));
    }
  const double secs = timer.seconds();
  detail = "max drift " + fmt(drift) + " over 1000 steps, " + fmt(secs) + " s";
  return drift <= 1e-12 && secs < 1.0;
}

bool criterion_2(std::string& detail) {
  SplitMix64 rng(20240202);
  double worst_identity = 0.0;
  double worst_balance = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int segments = 3 + static_cast<int>(rng.below(4));
    NetworkGeometry geom = corridor_geometry(segments, 2 + static_cast<int>(rng.below(3)));
    std::vector<SegmentParameters> params(segments);
    for (auto& p : params) {
      p.tau_h = rng.uniform(16.0, 25.0) / 3600.0;
      p.eta = rng.uniform(40.0, 70.0);
      p.kappa = rng.uniform(20.0, 45.0);
      p.a = rng.uniform(1.3, 2.5);
      p.v_free_kmh = rng.uniform(90.0, 115.0);
      p.rho_cr = rng.uniform(28.0, 40.0);
    }
    const int H = 12;
    std::vector<double> rho(segments), v(segments);
    for (int s = 0; s < segments; ++s) {
      rho[s] = rng.uniform(15.0, 30.0);
      v[s] = equilibrium_speed(rho[s], params[s]) * rng.uniform(0.95, 1.05);
    }
    TrafficState initial = TrafficState::from_density_speed(rho, v, geom.lanes);
    BoundaryConditions bc;
    for (int t = 0; t < H; ++t) {
      bc.upstream_flow.push_back(initial.flow[0] * rng.uniform(0.9, 1.1));
      bc.upstream_speed.push_back(initial.speed[0] * rng.uniform(0.95, 1.05));
      bc.downstream_density.push_back(rho[segments - 1] * rng.uniform(0.9, 1.1));
    }
    auto schedule = ParameterSchedule::constant(params, H);
    SimResult res = simulate(initial, schedule, bc, geom);

    const double dt = geom.dt_hours();
    for (int t = 0; t <= H; ++t) {
      const TrafficState& st = res.trajectory.states[t];
      for (int s = 0; s < segments; ++s) {
        const double expect = st.density[s] * st.speed[s] * geom.lanes[s];
        const double denom = std::max({std::abs(expect), std::abs(st.flow[s]), 1e-9});
        worst_identity = std::max(worst_identity, std::abs(st.flow[s] - expect) / denom);
      }
      if (t == H) break;
      const TrafficState& nx = res.trajectory.states[t + 1];
      double n_before = 0.0, n_after = 0.0;
      for (int s = 0; s < segments; ++s) {
        n_before += st.density[s] * geom.segment_length_km * geom.lanes[s];
        n_after += nx.density[s] * geom.segment_length_km * geom.lanes[s];
      }
      const double flux = dt * (bc.upstream_flow[t] - st.flow[segments - 1]);
      worst_balance = std::max(worst_balance, std::abs((n_after - n_before) - flux) /
                                                  std::max(1.0, std::abs(flux)));
    }
  }
  detail = "100 random chains: worst flow-identity " + fmt(worst_identity) +
           ", worst vehicle-balance " + fmt(worst_balance);
  return worst_identity <= 1e-9 && worst_balance <= 1e-9;
}

bool criterion_3(std::string& detail) {
  Timer timer;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SplitMix64 rng(9000 + seed);
    NetworkGeometry geom = corridor_geometry(3, 3);
    auto truth = jittered_params(3, rng);
    const int H = 20;
    BcProfile profile;
    profile.inflow = {SeriesSpec::Shape::sine, rng.uniform(2800.0, 3600.0),
                      rng.uniform(300.0, 700.0), 10};
    profile.upstream_speed = SeriesSpec::constant(rng.uniform(85.0, 95.0));
    profile.downstream_density = {SeriesSpec::Shape::sine, rng.uniform(22.0, 28.0),
                                  rng.uniform(2.0, 5.0), 8};
    auto bundle = generate_synthetic(geom, ParameterSchedule::constant(truth, H), profile,
                                     rng.uniform(20.0, 26.0), seed, 0.0);

    ParameterBounds bounds;
    ParameterVector theta = ParameterVector::single_block(geom, truth, bounds, H);
    auto x = theta.normalized();
    for (double& xi : x) xi = std::clamp(xi + rng.uniform(-0.12, 0.12), 0.05, 0.95);
    theta.set_normalized(x);

    GradientOptions ad, fd;
    ad.mode = GradientMode::adjoint;
    fd.mode = GradientMode::central_fd;
    fd.fd_step = 1e-6;
    auto ga = loss_gradient(theta, bundle.observed, bundle.bc, geom, {}, {}, ad);
    auto gf = loss_gradient(theta, bundle.observed, bundle.bc, geom, {}, {}, fd);
    double gmax = 0.0;
    for (double g : ga.gradient) gmax = std::max(gmax, std::abs(g));
    for (std::size_t i = 0; i < ga.gradient.size(); ++i) {
      const double denom = std::max({std::abs(ga.gradient[i]), std::abs(gf.gradient[i]),
                                     1e-6 * gmax});
      worst = std::max(worst, std::abs(ga.gradient[i] - gf.gradient[i]) / denom);
    }
  }
  const double secs = timer.seconds();
  detail = "20 instances: worst per-coordinate relative error " + fmt(worst) + ", " +
           fmt(secs) + " s";
  return worst <= 1e-4 && secs < 30.0;
}

bool criterion_4(std::string& detail) {
  Timer timer;
  auto bundle = static_twin();
  ParameterBounds bounds;
  auto warm = bundle.truth_schedule->blocks[0];
  for (auto& p : warm) {
    for (ParamKind kind : kMainParamKinds) {
      const KindBounds kb = bounds.for_kind(kind);
      set_param(p, kind, std::clamp(get_param(p, kind) * 1.15, kb.lower, kb.upper));
    }
  }
  SolverConfig cfg;
  cfg.max_iterations = 400;
  auto res = calibrate_static(bundle.observed, bundle.bc, bundle.geometry, bounds, warm,
                              cfg);
  // score against the noise-free truth field
  SimResult sim = simulate(bundle.observed.initial_state, res.schedule, bundle.bc,
                           bundle.geometry);
  const double truth_mape = mape(speed_grid(sim.trajectory), *bundle.truth_speed).value_pct;
  const double secs = timer.seconds();
  detail = "recovered speed-field MAPE " + fmt(truth_mape) + "% vs truth, " + fmt(secs) +
           " s";
  return truth_mape < 2.0 && secs < 300.0;
}

bool criterion_5(std::string& detail) {
  Timer timer;
  auto bundle = switching_twin();
  auto run = calibrate_switching(bundle);
  const double secs = timer.seconds();
  const double improvement = 1.0 - run.dyn.final_mape_pct / run.stat.final_mape_pct;
  detail = "dynamic " + fmt(run.dyn.final_mape_pct) + "% vs best static " +
           fmt(run.stat.final_mape_pct) + "% (" + fmt(100.0 * improvement) +
           "% lower), " + fmt(secs) + " s";
  return run.dyn.final_mape_pct <= 0.7 * run.stat.final_mape_pct && secs < 900.0;
}

bool criterion_6(std::string& detail) {
  Timer timer;
  auto bundle = switching_twin();
  auto run = calibrate_switching(bundle);

  NoiseSpec noise;
  noise.levels = {1e-3, 1e-2, 5e-2};
  noise.samples_per_level = 200;
  noise.seed = 77;
  const int workers = 8;
  auto rd = robustness_sweep(run.dyn.schedule, bundle.observed, bundle.bc,
                             bundle.geometry, noise, {}, workers);
  auto rs = robustness_sweep(run.stat.schedule, bundle.observed, bundle.bc,
                             bundle.geometry, noise, {}, workers);

  bool ordering = true;
  std::ostringstream levels;
  for (std::size_t i = 0; i < noise.levels.size(); ++i) {
    ordering = ordering && rd.per_level[i].avg_mape <= rs.per_level[i].avg_mape;
    levels << " " << fmt(noise.levels[i]) << ":" << fmt(rd.per_level[i].avg_mape) << "/"
           << fmt(rs.per_level[i].avg_mape);
  }
  const double infl_d = rd.per_level[2].avg_mape / rd.unperturbed_mape;
  const double infl_s = rs.per_level[2].avg_mape / rs.unperturbed_mape;
  const double secs = timer.seconds();
  detail = "avg MAPE dyn/stat per level:" + levels.str() + "; inflation " + fmt(infl_d) +
           " vs " + fmt(infl_s) + ", " + fmt(secs) + " s";
  return ordering && infl_d <= infl_s && secs < 1200.0;
}

bool criterion_7(std::string& detail) {
  NetworkGeometry geom = corridor_geometry(4, 3);
  SplitMix64 rng(606);
  auto truth = jittered_params(4, rng);
  ParameterSchedule truth_schedule;
  truth_schedule.block_starts = {0, 30};
  truth_schedule.blocks = {truth, truth};
  truth_schedule.horizon = 60;
  for (auto& p : truth_schedule.blocks[1]) p.v_free_kmh -= 10.0;
  BcProfile profile;
  profile.inflow = {SeriesSpec::Shape::sine, 3300.0, 700.0, 20};
  profile.upstream_speed = SeriesSpec::constant(90.0);
  profile.downstream_density = {SeriesSpec::Shape::sine, 25.0, 4.0, 15};
  auto bundle = generate_synthetic(geom, truth_schedule, profile, 23.0, 42, 0.01);

  ParameterBounds bounds;
  SolverConfig solver;
  solver.max_iterations = 150;
  solver.seed = 31;
  auto warm = ParameterVector::single_block(geom, default_warm_start(geom), bounds, 60);

  auto stat = calibrate_static(bundle.observed, bundle.bc, geom, bounds, warm, solver);

  RhoConfig cfg;
  cfg.control_horizon_steps = 60; // single window
  cfg.prediction_horizon_steps = 90;
  cfg.jump_penalty_weight = 0.0;
  cfg.inner = solver;
  auto dyn = calibrate_rho(bundle.observed, bundle.bc, geom, bounds, warm, cfg);

  const double rel = std::abs(dyn.final_loss - stat.final_loss) /
                     std::max(stat.final_loss, 1e-300);
  detail = "single-window RHO loss " + fmt(dyn.final_loss) + " vs static " +
           fmt(stat.final_loss) + " (relative gap " + fmt(rel) + ")";
  return rel <= 1e-6;
}

bool criterion_8(std::string& detail) {
  auto bundle = static_twin();
  const ParameterSchedule& schedule = *bundle.truth_schedule;

  auto grid = default_landscape_grid();
  auto rep1 = landscape_sweep(schedule, bundle.observed, bundle.bc, bundle.geometry, 0,
                              grid);
  auto rep2 = landscape_sweep(schedule, bundle.observed, bundle.bc, bundle.geometry, 0,
                              grid);
  bool anchor = rep1.curves.size() == 6;
  bool identical = true;
  for (std::size_t c = 0; c < rep1.curves.size(); ++c)
    for (std::size_t i = 0; i < rep1.curves[c].perturbation.size(); ++i) {
      if (rep1.curves[c].perturbation[i] == 0.0 && rep1.curves[c].delta_mape[i] != 0.0)
        anchor = false;
      if (rep1.curves[c].delta_mape[i] != rep2.curves[c].delta_mape[i]) identical = false;
    }

  NoiseSpec noise;
  noise.levels = {1e-3, 1e-2};
  noise.samples_per_level = 50;
  noise.seed = 2024;
  auto ra = robustness_sweep(schedule, bundle.observed, bundle.bc, bundle.geometry, noise,
                             {}, 4);
  auto rb = robustness_sweep(schedule, bundle.observed, bundle.bc, bundle.geometry, noise,
                             {}, 2);
  for (std::size_t i = 0; i < ra.per_level.size(); ++i) {
    if (ra.per_level[i].avg_mape != rb.per_level[i].avg_mape) identical = false;
    if (ra.per_level[i].worst_mape != rb.per_level[i].worst_mape) identical = false;
  }

  GaConfig ga_cfg;
  ga_cfg.population_size = 20;
  ga_cfg.generations = 25;
  ga_cfg.seed = 5;
  ParameterBounds bounds;
  auto ga_res = calibrate_ga(bundle.observed, bundle.bc, bundle.geometry, bounds, ga_cfg);
  bool monotone = true;
  for (std::size_t i = 1; i < ga_res.loss_trace.size(); ++i)
    if (ga_res.loss_trace[i] > ga_res.loss_trace[i - 1]) monotone = false;

  detail = std::string("landscape anchor ") + (anchor ? "exact-0" : "BROKEN") +
           ", repeated runs " + (identical ? "bitwise identical" : "DIFFER") +
           ", GA best-fitness trace " + (monotone ? "non-increasing" : "NOT monotone");
  return anchor && identical && monotone;
}

bool criterion_9(std::string& detail) {
  Timer timer;
  auto bundle = switching_twin();
  ParameterBounds bounds;
  SolverConfig solver;
  solver.max_iterations = 200;
  auto warm = ParameterVector::single_block(bundle.geometry,
                                            default_warm_start(bundle.geometry), bounds,
                                            bundle.horizon());
  RhoConfig base;
  base.inner = solver;
  NoiseSpec noise;
  noise.levels = {1e-3, 1e-2, 5e-2};
  noise.samples_per_level = 60;
  noise.seed = 5;
  const std::vector<std::pair<int, int>> horizons{
      {1, 2}, {3, 6}, {6, 12}, {30, 60}, {90, 135}, {180, 270}, {360, 420}};
  auto table = horizon_sweep(bundle.observed, bundle.bc, bundle.geometry, bounds, warm,
                             horizons, base, noise, {}, 8);

  std::ostringstream curve;
  for (const auto& e : table)
    curve << " hc" << e.hc << "=" << (e.failed ? std::string("failed")
                                              : fmt(e.mean_avg_mape));
  bool ok = !table.empty();
  for (const auto& e : table) ok = ok && !e.failed;
  double interior_min = 1e300;
  int interior_hc = -1;
  for (std::size_t i = 1; i + 1 < table.size(); ++i)
    if (table[i].mean_avg_mape < interior_min) {
      interior_min = table[i].mean_avg_mape;
      interior_hc = table[i].hc;
    }
  const double left = table.front().mean_avg_mape;
  const double right = table.back().mean_avg_mape;
  ok = ok && interior_min < left && interior_min < right;
  const double secs = timer.seconds();
  detail = "avg MAPE curve:" + curve.str() + "; interior min at hc=" +
           std::to_string(interior_hc) + " (" + fmt(interior_min) + ") vs ends " +
           fmt(left) + "/" + fmt(right) + ", " + fmt(secs) + " s";
  return ok && secs < 1800.0;
}

#ifndef METACAL_CLI_PATH
#define METACAL_CLI_PATH "metacal"
#endif

int run_cli(const std::string& command) {
  const int rc = std::system(command.c_str());
  if (rc == -1) return -1;
  return WEXITSTATUS(rc);
}

bool criterion_10(std::string& detail) {
  Timer timer;
  const fs::path root = fs::temp_directory_path() / "metacal_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = METACAL_CLI_PATH;

  {
    std::ofstream cfg(root / "synth.cfg");
    cfg << "synth.num_segments = 6\n"
        << "synth.horizon_steps = 120\n"
        << "synth.lanes = 3\n"
        << "synth.onramp_segments = 2\n"
        << "synth.offramp_segments = 4\n"
        << "synth.inflow.shape = sine\n"
        << "synth.inflow.base = 3300\n"
        << "synth.inflow.amplitude = 700\n"
        << "synth.inflow.period_steps = 40\n"
        << "synth.upstream_speed.shape = constant\n"
        << "synth.upstream_speed.base = 92\n"
        << "synth.downstream_density.shape = sine\n"
        << "synth.downstream_density.base = 25\n"
        << "synth.downstream_density.amplitude = 5\n"
        << "synth.downstream_density.period_steps = 30\n"
        << "synth.params_jitter_rel = 0.03\n"
        << "synth.switch.t_start = 60\n"
        << "synth.switch.v_free_kmh = 82\n"
        << "synth.switch.rho_cr = 27\n"
        << "synth.obs_noise_rel = 0.02\n";
  }
  {
    std::ofstream cfg(root / "rho.cfg");
    cfg << "rho.control_horizon_steps = 30\n"
        << "rho.prediction_horizon_steps = 45\n"
        << "solver.max_iterations = 120\n";
  }
  {
    std::ofstream cfg(root / "rob.cfg");
    cfg << "noise.levels = 1e-3,1e-2\n"
        << "noise.samples = 100\n";
  }

  struct Stage {
    std::string name;
    std::string command;
    std::vector<std::string> expect_outputs;
  };
  const std::string scn = (root / "scn").string();
  const std::vector<Stage> stages{
      {"synth",
       cli + " synth --config " + (root / "synth.cfg").string() + " --seed 7 --out-dir " +
           scn,
       {"scenario.cfg", "speed_obs.tsv"}},
      {"calibrate-rho",
       cli + " calibrate-rho --scenario " + scn + " --config " +
           (root / "rho.cfg").string() + " --seed 7 --out-dir " + (root / "rho").string() +
           " > /dev/null",
       {"schedule.tsv", "calibration_report.json"}},
      {"robustness",
       cli + " robustness --scenario " + scn + " --schedule " +
           (root / "rho" / "schedule.tsv").string() + " --config " +
           (root / "rob.cfg").string() + " --seed 7 --workers 4 --out-dir " +
           (root / "rob").string(),
       {"robustness.tsv"}},
      {"landscape",
       cli + " landscape --scenario " + scn + " --schedule " +
           (root / "rho" / "schedule.tsv").string() + " --seed 7 --out-dir " +
           (root / "land").string(),
       {"landscape.tsv"}},
      {"fd-points",
       cli + " fd-points --scenario " + scn + " --schedule " +
           (root / "rho" / "schedule.tsv").string() + " --out-dir " +
           (root / "fd").string(),
       {"fd_points.tsv", "fd_curves.tsv"}},
  };

  // produced artifact digests, keyed by absolute path
  std::map<std::string, std::string> produced;
  for (const auto& stage : stages) {
    const int rc = run_cli(stage.command);
    if (rc != 0) {
      detail = "stage '" + stage.name + "' exited with code " + std::to_string(rc);
      return false;
    }
    fs::path out_dir;
    if (stage.name == "synth") out_dir = scn;
    else if (stage.name == "calibrate-rho") out_dir = root / "rho";
    else if (stage.name == "robustness") out_dir = root / "rob";
    else if (stage.name == "landscape") out_dir = root / "land";
    else out_dir = root / "fd";

    if (!fs::exists(out_dir / "manifest.json")) {
      detail = "stage '" + stage.name + "' wrote no manifest";
      return false;
    }
    RunManifest manifest = load_manifest(out_dir / "manifest.json");
    for (const auto& expect : stage.expect_outputs) {
      bool found = false;
      for (const auto& ref : manifest.outputs)
        if (fs::path(ref.path).filename() == expect) found = true;
      if (!found || !fs::exists(out_dir / expect)) {
        detail = "stage '" + stage.name + "' missing expected output " + expect;
        return false;
      }
    }
    // chain check: every input produced by an earlier stage must match the
    // digest recorded when it was produced
    for (const auto& ref : manifest.inputs) {
      auto it = produced.find(fs::weakly_canonical(ref.path).string());
      if (it != produced.end() && it->second != ref.digest) {
        detail = "stage '" + stage.name + "' consumed " + ref.path +
                 " whose digest differs from the producing stage";
        return false;
      }
    }
    for (const auto& ref : manifest.outputs)
      produced[fs::weakly_canonical(ref.path).string()] = ref.digest;
  }

  // schedule must have ceil(120/30) = 4 blocks (15-minute analogue)
  auto schedule = read_schedule_tsv(root / "rho" / "schedule.tsv");
  if (schedule.num_blocks() != 4) {
    detail = "expected 4 schedule blocks, got " + std::to_string(schedule.num_blocks());
    return false;
  }

  const double secs = timer.seconds();
  detail = "5 stages, manifest chain of " + std::to_string(produced.size()) +
           " artifacts intact, 4-block schedule, " + fmt(secs) + " s";
  fs::remove_all(root);
  return secs < 600.0;
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<bool(std::string&)>>> criteria{
      {"equilibrium fixed point", criterion_1},
      {"flow identity and conservation", criterion_2},
      {"gradient correctness (adjoint vs central differences)", criterion_3},
      {"static twin recovery", criterion_4},
      {"dynamic beats static on a time-varying twin", criterion_5},
      {"robustness ordering under inflow noise", criterion_6},
      {"degenerate single-window RHO equals static", criterion_7},
      {"landscape anchor, bitwise reproducibility, GA monotonicity", criterion_8},
      {"horizon-sweep interior minimum", criterion_9},
      {"CLI pipeline with intact manifest chain", criterion_10},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int index = static_cast<int>(i) + 1;
    if (only != 0 && only != index) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].second(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", index,
                criteria[i].first, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
