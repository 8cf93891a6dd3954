#include "metacal/ga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "metacal/parallel.hpp"
#include "metacal/rng.hpp"

namespace metacal {

void GaConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("ga: population_size must be >= 2");
  if (elitism_count < 0 || elitism_count >= population_size)
    throw std::invalid_argument("ga: elitism_count must be < population_size");
  if (tournament_size < 1) throw std::invalid_argument("ga: tournament_size must be >= 1");
  if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
      mutation_rate > 1.0)
    throw std::invalid_argument("ga: rates must lie in [0, 1]");
  if (generations < 0) throw std::invalid_argument("ga: generations must be >= 0");
}

CalibrationResult calibrate_ga(const ObservedField& observed, const BoundaryConditions& bc,
                               const NetworkGeometry& geom, const ParameterBounds& bounds,
                               const GaConfig& cfg, const LossOptions& loss,
                               std::span<const ParameterVector> seed_individuals) {
  const auto t_begin = std::chrono::steady_clock::now();
  cfg.validate();
  observed.validate(geom);
  bc.validate();

  const int H = observed.horizon();
  ParameterVector proto = ParameterVector::single_block(
      geom, default_warm_start(geom), bounds, H);
  const std::size_t n = proto.size();

  SplitMix64 rng(cfg.seed);

  using Genome = std::vector<double>; // normalized coordinates
  std::vector<Genome> population(cfg.population_size, Genome(n));
  for (auto& genome : population)
    for (double& gene : genome) gene = rng.uniform01();
  for (std::size_t i = 0; i < seed_individuals.size() &&
                          i < static_cast<std::size_t>(cfg.population_size); ++i) {
    if (seed_individuals[i].size() != n)
      throw std::invalid_argument("ga: seeded individual has wrong length");
    population[i] = seed_individuals[i].normalized();
  }

  auto fitness_of = [&](const Genome& genome) {
    ParameterVector probe = proto;
    probe.set_normalized(genome);
    probe.clamp_to_bounds();
    return sse_loss(probe, observed, bc, geom, {}, loss);
  };

  std::vector<double> fitness(cfg.population_size);
  auto evaluate_all = [&](const std::vector<Genome>& pop, std::vector<double>& fit) {
    parallel_for(pop.size(), cfg.workers, [&](std::size_t i) { fit[i] = fitness_of(pop[i]); });
  };
  evaluate_all(population, fitness);

  auto best_index = [&](const std::vector<double>& fit) {
    return static_cast<int>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  };

  Genome best_genome = population[best_index(fitness)];
  double best_fitness = fitness[best_index(fitness)];

  CalibrationResult res;
  res.loss_trace.push_back(best_fitness);

  for (int gen = 0; gen < cfg.generations; ++gen) {
    // rank for elitism
    std::vector<int> order(population.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fitness[a] < fitness[b]; });

    std::vector<Genome> next;
    next.reserve(population.size());
    for (int e = 0; e < cfg.elitism_count; ++e) next.push_back(population[order[e]]);

    auto tournament = [&]() -> const Genome& {
      int winner = static_cast<int>(rng.below(population.size()));
      for (int k = 1; k < cfg.tournament_size; ++k) {
        const int challenger = static_cast<int>(rng.below(population.size()));
        if (fitness[challenger] < fitness[winner]) winner = challenger;
      }
      return population[winner];
    };

    while (static_cast<int>(next.size()) < cfg.population_size) {
      Genome child_a = tournament();
      Genome child_b = tournament();
      if (rng.uniform01() < cfg.crossover_rate) {
        for (std::size_t i = 0; i < n; ++i)
          if (rng.uniform01() < 0.5) std::swap(child_a[i], child_b[i]);
      }
      for (Genome* child : {&child_a, &child_b}) {
        for (double& gene : *child)
          if (rng.uniform01() < cfg.mutation_rate)
            gene = std::clamp(gene + rng.gaussian(0.0, cfg.mutation_scale), 0.0, 1.0);
        if (static_cast<int>(next.size()) < cfg.population_size)
          next.push_back(std::move(*child));
      }
    }

    population = std::move(next);
    evaluate_all(population, fitness);
    const int bi = best_index(fitness);
    if (fitness[bi] < best_fitness) {
      best_fitness = fitness[bi];
      best_genome = population[bi];
    }
    res.loss_trace.push_back(best_fitness);
  }

  ParameterVector theta = proto;
  theta.set_normalized(best_genome);
  theta.clamp_to_bounds();
  res.theta_star = theta;
  res.schedule = theta.to_schedule();
  res.final_loss = best_fitness;
  res.iterations = cfg.generations;
  res.termination_reason = "generations_exhausted";
  res.warm_start_used = proto;
  res.seed = cfg.seed;
  MapeResult m = schedule_mape(res.schedule, observed, bc, geom, loss.sim);
  res.final_mape_pct = m.value_pct;
  res.mape_excluded = m.excluded;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return res;
}

} // namespace metacal
