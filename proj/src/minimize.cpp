#include "gammacell/minimize.hpp"

#include "gammacell/error.hpp"
#include "gammacell/grid.hpp"
#include "gammacell/support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

namespace gammacell {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sup_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

bool finite_all(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion: returns -H g.
std::vector<double> lbfgs_direction(const std::deque<Pair>& hist, std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(hist.size());
  for (std::size_t i = hist.size(); i-- > 0;) {
    alpha[i] = hist[i].rho * dot(hist[i].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * hist[i].y[j];
  }
  const Pair& last = hist.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (double& v : q) v *= gamma;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double beta = hist[i].rho * dot(hist[i].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * hist[i].s[j];
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

void validate(const SolveOptions& o) {
  require(o.max_iter >= 1, "max_iter must be >= 1");
  require(o.g_tol > 0.0 && o.f_tol > 0.0, "tolerances must be positive");
  require(o.memory >= 1, "quasi-Newton memory must be >= 1");
  require(o.n_starts >= 1, "n_starts must be >= 1");
  require(!o.amp.empty(), "amplitude schedule must not be empty");
  require(o.initial_step > 0.0, "initial_step must be positive");
}

SolveResult minimize(const EnergyFn& energy, const GradientFn& gradient, std::vector<double> x,
                     const SolveOptions& opts) {
  validate(opts);
  constexpr double c1 = 1e-4;
  constexpr int max_halvings = 60;
  const std::size_t m = x.size();

  double f = energy(x);
  std::vector<double> g(m);
  gradient(x, g);
  if (!std::isfinite(f) || !finite_all(g))
    throw ComputeError("non-finite energy or gradient at the start point");

  SolveResult res;
  std::deque<Pair> hist;
  std::vector<double> trial(m), g_new(m);
  constexpr int kStallWindow = 10;
  std::deque<double> recent{f};
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double gnorm = sup_norm(g);
    if (gnorm <= opts.g_tol) {
      res.converged = true;
      res.diagnostic = "gradient tolerance met";
      break;
    }

    std::optional<double> accepted;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      std::vector<double> d;
      double step = 1.0;
      if (!hist.empty()) d = lbfgs_direction(hist, g);
      if (d.empty() || dot(g, d) >= 0.0 || !finite_all(d)) {
        hist.clear();
        d.assign(g.begin(), g.end());
        for (double& v : d) v = -v;
        step = opts.initial_step * (1.0 + sup_norm(x)) / gnorm;
      }
      const double slope = dot(g, d);
      for (int h = 0; h < max_halvings; ++h, step *= 0.5) {
        for (std::size_t j = 0; j < m; ++j) trial[j] = x[j] + step * d[j];
        const double ft = energy(trial);
        if (std::isfinite(ft) && ft <= f + c1 * step * slope) {
          accepted = ft;
          break;
        }
      }
      if (!accepted) hist.clear();  // retry once along steepest descent
    }
    if (!accepted) {
      res.diagnostic = "line search failed";
      break;
    }

    gradient(trial, g_new);
    if (!finite_all(g_new)) {
      res.diagnostic = "non-finite gradient";
      break;
    }
    Pair pr{std::vector<double>(m), std::vector<double>(m), 0.0};
    for (std::size_t j = 0; j < m; ++j) {
      pr.s[j] = trial[j] - x[j];
      pr.y[j] = g_new[j] - g[j];
    }
    const double sy = dot(pr.s, pr.y);
    if (sy > 1e-12 * std::sqrt(dot(pr.s, pr.s) * dot(pr.y, pr.y)) && sy > 0.0) {
      pr.rho = 1.0 / sy;
      hist.push_back(std::move(pr));
      if (static_cast<int>(hist.size()) > opts.memory) hist.pop_front();
    }
    x.swap(trial);
    g.swap(g_new);
    f = *accepted;
    recent.push_back(f);
    if (static_cast<int>(recent.size()) > kStallWindow) recent.pop_front();
    // Stop when the last kStallWindow iterations together decreased f by at most f_tol (relative).
    if (static_cast<int>(recent.size()) == kStallWindow &&
        recent.front() - f <= opts.f_tol * std::max({std::abs(recent.front()), std::abs(f), 1.0})) {
      ++it;
      res.converged = sup_norm(g) <= opts.g_tol;
      res.diagnostic = "relative decrease below f_tol";
      break;
    }
  }
  if (it == opts.max_iter && res.diagnostic.empty()) {
    res.converged = sup_norm(g) <= opts.g_tol;
    res.diagnostic = "iteration limit";
  }
  res.value = f;
  res.x = std::move(x);
  res.iterations = it;
  res.grad_norm = sup_norm(g);
  return res;
}

SolveResult multistart(const EnergyFn& energy, const GradientFn& gradient, const Grid& grid,
                       const SolveOptions& opts, double amp_scale,
                       const std::vector<std::vector<double>>& warm_starts, int workers) {
  validate(opts);
  const std::size_t total = static_cast<std::size_t>(opts.n_starts) + warm_starts.size();
  std::vector<std::optional<SolveResult>> results(total);
  std::vector<std::string> errors(total);
  const auto n = static_cast<std::size_t>(grid.dim());

  parallel_for(total, workers, [&](std::size_t i) {
    std::vector<double> start(grid.dof_count(), 0.0);
    if (i >= static_cast<std::size_t>(opts.n_starts)) {
      start = warm_starts[i - static_cast<std::size_t>(opts.n_starts)];
      require(start.size() == grid.dof_count(), "warm start size does not match grid");
    } else if (i > 0) {
      const double amp = opts.amp[(i - 1) % opts.amp.size()] * amp_scale;
      std::mt19937_64 rng(hash_combine(opts.seed, i));
      std::uniform_real_distribution<double> u(-amp, amp);
      for (std::size_t node = 0; node < grid.node_count(); ++node) {
        for (std::size_t c = 0; c < n; ++c) {
          const double v = u(rng);
          if (!grid.masked(node)) start[node * n + c] = v;
        }
      }
    }
    try {
      SolveResult r = minimize(energy, gradient, std::move(start), opts);
      r.start_index = static_cast<int>(i);
      results[i] = std::move(r);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::optional<SolveResult> best;
  for (std::size_t i = 0; i < total; ++i) {
    if (!results[i]) continue;
    if (!best || results[i]->value < best->value) best = std::move(results[i]);
  }
  if (!best) {
    std::string msg = "all solver starts failed:";
    for (std::size_t i = 0; i < total; ++i) msg += " [" + std::to_string(i) + "] " + errors[i];
    throw ComputeError(msg);
  }
  return std::move(*best);
}

}  // namespace gammacell
