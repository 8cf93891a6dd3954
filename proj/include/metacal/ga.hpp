#pragma once

#include <cstdint>
#include <span>

#include "metacal/calibrate.hpp"

namespace metacal {

/// Real-valued GA over the normalized parameter box: tournament selection,
/// uniform crossover, Gaussian mutation clipped to bounds, elitism. The
/// fitness is the same squared-residual objective the gradient solvers minimize.
struct GaConfig {
  int population_size = 50;
  double crossover_rate = 0.8;
  double mutation_rate = 0.1;
  double mutation_scale = 0.1; // stddev as a fraction of the bound range
  int generations = 200;
  int elitism_count = 2;
  int tournament_size = 3;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// Evolves a random population (plus optional seeded individuals) and
/// returns the best individual ever seen. loss_trace holds the best-so-far
/// fitness per generation, which elitism keeps non-increasing.
CalibrationResult calibrate_ga(const ObservedField& observed, const BoundaryConditions& bc,
                               const NetworkGeometry& geom, const ParameterBounds& bounds,
                               const GaConfig& cfg, const LossOptions& loss = {},
                               std::span<const ParameterVector> seed_individuals = {});

} // namespace metacal
