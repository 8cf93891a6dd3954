#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metacal/loss.hpp"

namespace metacal {

enum class Termination { gradient_tolerance, step_stagnation, max_iterations, no_descent };

const char* termination_name(Termination t);

struct SolverConfig {
  int max_iterations = 300;
  double tolerance = 1e-12; // on the projected-gradient infinity norm
  int history_size = 10;    // quasi-Newton memory
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 50;
  double step_stagnation_tol = 1e-14;
  GradientMode gradient_mode = GradientMode::adjoint;
  double fd_step = 1e-6;
  int workers = 1;
  std::uint64_t seed = 0; // recorded for reproducibility metadata
};

struct MinimizeResult {
  std::vector<double> x;
  double fx = 0.0;
  std::vector<double> loss_trace; // accepted iterates, starting with f(x0)
  int iterations = 0;
  Termination reason = Termination::max_iterations;
  long function_evals = 0;
  long gradient_evals = 0;
};

/// Limited-memory projected quasi-Newton descent with backtracking line
/// search over the box [lower, upper]. Every accepted iterate is feasible
/// and non-increasing in f.
MinimizeResult minimize_box(
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
    std::vector<double> x0, const std::vector<double>& lower,
    const std::vector<double>& upper, const SolverConfig& cfg);

} // namespace metacal
