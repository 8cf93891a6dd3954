#include "metacal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace metacal {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::gradient_tolerance: return "gradient_tolerance";
    case Termination::step_stagnation: return "step_stagnation";
    case Termination::max_iterations: return "max_iterations";
    case Termination::no_descent: return "no_descent";
  }
  return "?";
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inf_norm(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

struct Pair {
  Vec s, y;
  double rho; // 1 / (y.s)
};

// Two-loop recursion restricted to the free coordinates (mask == 1).
Vec lbfgs_direction(const Vec& g, const std::deque<Pair>& mem, const std::vector<char>& free_mask) {
  const std::size_t n = g.size();
  Vec q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = free_mask[i] ? g[i] : 0.0;
  if (mem.empty()) {
    for (double& v : q) v = -v;
    return q;
  }
  std::vector<double> alpha(mem.size());
  for (int k = static_cast<int>(mem.size()) - 1; k >= 0; --k) {
    alpha[k] = mem[k].rho * dot(mem[k].s, q);
    for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[k] * mem[k].y[i];
  }
  const Pair& last = mem.back();
  const double gamma = dot(last.s, last.y) / std::max(dot(last.y, last.y), 1e-300);
  for (double& v : q) v *= gamma;
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double beta = mem[k].rho * dot(mem[k].y, q);
    for (std::size_t i = 0; i < n; ++i) q[i] += (alpha[k] - beta) * mem[k].s[i];
  }
  for (std::size_t i = 0; i < n; ++i) q[i] = free_mask[i] ? -q[i] : 0.0;
  return q;
}

} // namespace

MinimizeResult minimize_box(
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
    std::vector<double> x0, const std::vector<double>& lower,
    const std::vector<double>& upper, const SolverConfig& cfg) {
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("minimize_box: bound sizes differ from x0");
  for (std::size_t i = 0; i < n; ++i)
    if (x0[i] < lower[i] - 1e-12 || x0[i] > upper[i] + 1e-12)
      throw std::invalid_argument("minimize_box: start point outside bounds");

  auto clip = [&](Vec x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  };

  MinimizeResult res;
  res.x = clip(std::move(x0));
  res.fx = f(res.x);
  res.function_evals = 1;
  res.loss_trace.push_back(res.fx);

  Vec g = grad(res.x);
  res.gradient_evals = 1;
  std::deque<Pair> memory;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // projected-gradient convergence measure
    Vec pg(n);
    for (std::size_t i = 0; i < n; ++i)
      pg[i] = res.x[i] - std::clamp(res.x[i] - g[i], lower[i], upper[i]);
    if (inf_norm(pg) <= cfg.tolerance) {
      res.reason = Termination::gradient_tolerance;
      return res;
    }

    // coordinates pinned at a bound with the gradient pushing outward
    std::vector<char> free_mask(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (res.x[i] <= lower[i] && g[i] > 0.0) free_mask[i] = 0;
      if (res.x[i] >= upper[i] && g[i] < 0.0) free_mask[i] = 0;
    }

    bool accepted = false;
    Vec x_new;
    double f_new = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vec d;
      if (attempt == 0) {
        d = lbfgs_direction(g, memory, free_mask);
        double dg = dot(d, g);
        if (!(dg < 0.0)) continue; // not a descent direction, fall back
      } else {
        d.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          if (free_mask[i]) d[i] = -g[i];
      }
      if (inf_norm(d) == 0.0) break;

      double alpha = 1.0;
      for (int bt = 0; bt < cfg.max_backtracks; ++bt, alpha *= cfg.backtrack_factor) {
        Vec cand(n);
        for (std::size_t i = 0; i < n; ++i) cand[i] = res.x[i] + alpha * d[i];
        cand = clip(std::move(cand));
        Vec dx(n);
        double step_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          dx[i] = cand[i] - res.x[i];
          step_norm = std::max(step_norm, std::abs(dx[i]));
        }
        if (step_norm == 0.0) break; // fully clipped
        const double gdx = dot(g, dx);
        if (gdx >= 0.0) continue; // projected step no longer descent
        const double fc = f(cand);
        ++res.function_evals;
        if (fc <= res.fx + cfg.armijo_c1 * gdx) {
          x_new = std::move(cand);
          f_new = fc;
          accepted = true;
          break;
        }
      }
    }

    if (!accepted) {
      res.reason = iter == 0 ? Termination::no_descent : Termination::step_stagnation;
      return res;
    }

    Vec g_new = grad(x_new);
    ++res.gradient_evals;

    Vec s(n), y(n);
    double step_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
      step_norm = std::max(step_norm, std::abs(s[i]));
    }
    const double sy = dot(s, y);
    if (sy > 1e-10 * std::sqrt(std::max(dot(s, s), 0.0)) * std::sqrt(std::max(dot(y, y), 0.0))) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > cfg.history_size) memory.pop_front();
    }

    res.x = std::move(x_new);
    res.fx = f_new;
    g = std::move(g_new);
    res.loss_trace.push_back(res.fx);
    res.iterations = iter + 1;

    if (step_norm <= cfg.step_stagnation_tol) {
      res.reason = Termination::step_stagnation;
      return res;
    }
  }
  res.reason = Termination::max_iterations;
  return res;
}

} // namespace metacal
