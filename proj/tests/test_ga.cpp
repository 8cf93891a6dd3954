#include <doctest.h>

#include "helpers.hpp"
#include "metacal/ga.hpp"

using namespace metacal;
using namespace testutil;

namespace {

struct GaFixture {
  ScenarioBundle bundle;
  ParameterBounds bounds;
  ParameterVector truth;
};

GaFixture make_fixture(std::uint64_t seed, int segments = 3, int horizon = 24) {
  GaFixture fx;
  NetworkGeometry geom = make_geometry(segments, 0.5, 10.0, 3);
  SplitMix64 rng(seed);
  std::vector<SegmentParameters> truth(segments);
  for (auto& p : truth) {
    p.v_free_kmh = rng.uniform(95.0, 110.0);
    p.rho_cr = rng.uniform(30.0, 36.0);
  }
  BcProfile profile;
  profile.inflow = {SeriesSpec::Shape::sine, 3200.0, 700.0, horizon / 2};
  profile.upstream_speed = SeriesSpec::constant(90.0);
  profile.downstream_density = {SeriesSpec::Shape::sine, 24.0, 4.0, horizon / 3};
  fx.bundle = generate_synthetic(geom, ParameterSchedule::constant(truth, horizon),
                                 profile, 22.0, seed, 0.0);
  fx.truth = ParameterVector::single_block(geom, truth, fx.bounds, horizon);
  return fx;
}

GaConfig quick_ga(int generations) {
  GaConfig cfg;
  cfg.population_size = 24;
  cfg.generations = generations;
  cfg.seed = 99;
  return cfg;
}

} // namespace

TEST_CASE("ga: best-so-far fitness is monotone non-increasing") {
  auto fx = make_fixture(1);
  auto res = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                          quick_ga(30));
  REQUIRE(res.loss_trace.size() == 31);
  for (std::size_t i = 1; i < res.loss_trace.size(); ++i)
    CHECK(res.loss_trace[i] <= res.loss_trace[i - 1]);
  CHECK(res.final_loss == res.loss_trace.back());
  CHECK(res.theta_star.within_bounds());
}

TEST_CASE("ga: zero generations returns the best of the initial population") {
  auto fx = make_fixture(2);
  auto res = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                          quick_ga(0));
  CHECK(res.loss_trace.size() == 1);
  CHECK(res.final_loss == res.loss_trace.front());
}

TEST_CASE("ga: population seeded with the truth keeps loss at zero") {
  auto fx = make_fixture(3);
  std::vector<ParameterVector> seeds{fx.truth};
  auto res = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                          quick_ga(10), {}, seeds);
  CHECK(res.loss_trace.front() <= 1e-15);
  CHECK(res.final_loss <= res.loss_trace.front());
}

TEST_CASE("ga: identical seeds give identical evolution traces") {
  auto fx = make_fixture(4);
  auto a = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                        quick_ga(15));
  auto b = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                        quick_ga(15));
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (std::size_t i = 0; i < a.loss_trace.size(); ++i)
    CHECK(a.loss_trace[i] == b.loss_trace[i]);
  for (std::size_t i = 0; i < a.theta_star.value.size(); ++i)
    CHECK(a.theta_star.value[i] == b.theta_star.value[i]);
}

TEST_CASE("ga: evolution trace does not depend on worker count") {
  auto fx = make_fixture(5);
  GaConfig serial = quick_ga(10);
  GaConfig parallel = quick_ga(10);
  parallel.workers = 4;
  auto a = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                        serial);
  auto b = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry, fx.bounds,
                        parallel);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (std::size_t i = 0; i < a.loss_trace.size(); ++i)
    CHECK(a.loss_trace[i] == b.loss_trace[i]);
}

TEST_CASE("ga: trails the gradient-based static calibration on a twin") {
  auto fx = make_fixture(6, 3, 30);
  auto ga_res = calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry,
                             fx.bounds, quick_ga(40));

  SolverConfig cfg;
  cfg.max_iterations = 200;
  auto grad_res = calibrate_static(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry,
                                   fx.bounds, default_warm_start(fx.bundle.geometry), cfg);
  CHECK(grad_res.final_loss <= ga_res.final_loss);
  CHECK(grad_res.final_mape_pct <= ga_res.final_mape_pct);
}

TEST_CASE("ga: invalid configuration raises") {
  auto fx = make_fixture(7);
  GaConfig cfg = quick_ga(5);
  cfg.population_size = 1;
  CHECK_THROWS_AS(calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry,
                               fx.bounds, cfg),
                  std::invalid_argument);
  cfg = quick_ga(5);
  cfg.elitism_count = cfg.population_size;
  CHECK_THROWS_AS(calibrate_ga(fx.bundle.observed, fx.bundle.bc, fx.bundle.geometry,
                               fx.bounds, cfg),
                  std::invalid_argument);
}
