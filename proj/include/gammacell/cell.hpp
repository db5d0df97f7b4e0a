#pragma once

#include "gammacell/density.hpp"
#include "gammacell/grid.hpp"
#include "gammacell/minimize.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gammacell {

// One cell problem: minimize the average of the integrand over zero-boundary
// test fields on (0, k)^n. delta > 0 selects the rescaled elastic integrand
// delta^{-p} W_delta(x, I + delta (X + grad phi)); lambda adds lambda |.|^p.
struct CellJob {
  DensitySpec spec;
  Mat X;
  int k = 1;
  int res = 16;
  bool symmetrized = false;
  double delta = 0.0;
  double lambda = 0.0;
  SolveOptions opts;
};

void validate(const CellJob& job);

struct RunContext {
  int workers = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t max_nodes = kDefaultMaxNodes;
};

struct CellResult {
  double m_value = 0.0;
  double upper_bound = 0.0;  // average energy of phi = 0
  int iterations = 0;
  bool converged = false;
  int start_index = 0;
  double grad_norm = 0.0;
  std::string diagnostic;
  double wall_time = 0.0;
  bool cache_hit = false;
  std::string fingerprint;  // empty when the job cannot be cached
  Field field;
};

// Content hash of the job (spec, X, k, res, delta, lambda, options, warm starts).
std::optional<std::string> job_fingerprint(const CellJob& job,
                                           const std::vector<std::vector<double>>& warm_starts = {});

CellResult cell_energy(const CellJob& job, const RunContext& ctx = {},
                       const std::vector<std::vector<double>>& warm_starts = {});

struct HomEstimate {
  std::vector<int> ks;
  std::vector<CellResult> cells;
  double estimate = 0.0;
  bool monotone_ok = true;
  bool partial = false;
  std::string error;

  std::vector<double> values() const;
};

// Runs the k schedule in order. When k_{j+1} is a multiple of k_j the periodic
// extension of the previous minimizer is added as a warm start, so the tiling
// bound m_{2k} <= m_k is realized by construction.
HomEstimate hom_estimate(const CellJob& base, const std::vector<int>& k_schedule,
                         const RunContext& ctx = {});

HomEstimate f_hom_estimate(const DensitySpec& spec, const Mat& X, const std::vector<int>& k_schedule,
                           int res, const SolveOptions& opts, const RunContext& ctx = {});
HomEstimate v_hom_estimate(const DensitySpec& spec, const Mat& X, const std::vector<int>& k_schedule,
                           int res, const SolveOptions& opts, const RunContext& ctx = {});
HomEstimate w_hom_delta(const DensitySpec& spec, const Mat& X, double delta,
                        const std::vector<int>& k_schedule, int res, const SolveOptions& opts,
                        const RunContext& ctx = {});

struct AdditionTrickEntry {
  double lambda = 0.0;
  CellResult cell;
};

std::vector<AdditionTrickEntry> addition_trick(const DensitySpec& spec, const Mat& X,
                                               const std::vector<double>& lambda_schedule, int k,
                                               int res, const SolveOptions& opts,
                                               const RunContext& ctx = {});

// Classical 1D homogenization: (sum theta_i a_i^{-1/(p-1)})^{-(p-1)} |X|^p.
double oracle_1d_homog(const std::vector<double>& a, const std::vector<double>& theta, double p,
                       double X);

// Coefficients and volume fractions of a 1D phase map (first box wins, a_default elsewhere).
struct PhaseFractions {
  std::vector<double> a;
  std::vector<double> theta;
};
PhaseFractions phase_fractions_1d(const DensitySpec& spec);

}  // namespace gammacell
