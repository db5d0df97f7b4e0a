#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gammacell {

class Grid;

struct SolveOptions {
  int max_iter = 2000;
  double g_tol = 1e-8;   // sup-norm of the gradient
  double f_tol = 1e-12;  // relative decrease per iteration
  int memory = 10;
  int n_starts = 8;
  std::vector<double> amp{0.1, 0.5, 1.0};  // random-start amplitudes, times max(1, |X|)
  std::uint64_t seed = 0;
  // Trial step of the first (steepest descent) iteration, as a sup-norm displacement.
  double initial_step = 1e-2;
};

void validate(const SolveOptions& opts);

using EnergyFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

struct SolveResult {
  double value = 0.0;
  std::vector<double> x;
  int iterations = 0;
  bool converged = false;
  int start_index = 0;
  double grad_norm = 0.0;  // final sup-norm
  std::string diagnostic;  // why the run stopped
};

// L-BFGS with Armijo backtracking (c1 = 1e-4, step halving). Iterates never
// increase the energy; the best iterate is returned even without convergence.
// Throws ComputeError if the energy or gradient at the start is not finite.
SolveResult minimize(const EnergyFn& energy, const GradientFn& gradient, std::vector<double> start,
                     const SolveOptions& opts);

struct MultistartDiagnostics {
  int start_index = 0;
  std::string message;
};

// Runs minimize from the zero field, (n_starts - 1) random fields on the
// unmasked nodes, and any extra warm starts (indexed after the random ones).
// Returns the best by (value, start_index).
SolveResult multistart(const EnergyFn& energy, const GradientFn& gradient, const Grid& grid,
                       const SolveOptions& opts, double amp_scale = 1.0,
                       const std::vector<std::vector<double>>& warm_starts = {},
                       int workers = 1);

}  // namespace gammacell
