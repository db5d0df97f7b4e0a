#pragma once

#include "gammacell/cell.hpp"
#include "gammacell/density.hpp"
#include "gammacell/grid.hpp"
#include "gammacell/minimize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gammacell {

enum class ConstantKind { Korn, KornNonlinear, Rigidity };
std::string to_string(ConstantKind k);

// A discrete maximization result; always a lower bound of the true constant.
struct ConstantEstimate {
  double value = 0.0;
  ConstantKind kind = ConstantKind::Korn;
  int n = 2;
  int k = 1;
  int res = 0;
  double p = 2.0;
  std::string certified_side = "lower bound of true constant";
  std::string method;
  int samples_used = 0;
  int skipped = 0;
  std::vector<double> per_sample;  // NaN for skipped samples
};

struct KornOptions {
  int n_starts = 4;
  int max_iter = 400;
  int random_samples = 64;  // p != 2 random search
  std::uint64_t seed = 0;
};

// L^2 norms of grad u, e(u) and u for a free (unclamped) P1 field.
struct KornNorms {
  double grad = 0.0;
  double sym = 0.0;
  double field = 0.0;
  double quotient() const { return grad / (sym + field); }
};
KornNorms korn_norms(const Grid& grid, std::span<const double> u, double p = 2.0);

// Maximizes |grad u| / (|e(u)| + |u|) over nonzero fields on an unclamped grid.
// p = 2: quasi-Newton ascent from random starts; other p: random search (method
// is stamped "random-search").
ConstantEstimate korn_constant(const Grid& grid, double p = 2.0, const KornOptions& opts = {});

// Rotation minimizing |grad y - R|_p over SO(n) (polar factor of the mean
// gradient for p = 2, parameter search otherwise).
Mat best_rotation(const Grid& grid, std::span<const double> y, double p);

// max over samples of |grad y - R*|_p / |dist(grad y, SO(n))|_p. Samples with
// dist identically zero are skipped.
ConstantEstimate rigidity_ratio(const Grid& grid, const std::vector<Field>& deformations, double p = 2.0);

// Deformation y(x) = (I + delta X) x + delta phi(x) built from a cell minimizer.
Field deformation_from_cell(const Grid& grid, const Mat& X, double delta, const Field& phi);

struct ZhangRow {
  Mat X;
  double lhs = 0.0;  // qc_cell(X)
  double rhs = 0.0;  // slack C^{-p} dist^p(X, SO(n))
  double margin = 0.0;
  bool pass = true;
};

struct ZhangReport {
  std::vector<ZhangRow> rows;
  bool all_pass() const;
};

ZhangReport zhang_check(const DensitySpec& spec, const std::vector<Mat>& X_samples, double C_est, double slack,
                        int res, const SolveOptions& opts, const RunContext& ctx = {});

struct GardingEstimate {
  double alpha_U = 0.0;
  double gamma_U = 0.0;
  int samples = 0;
  int violations = 0;
  double worst_residual = 0.0;
  Field worst_field;
  bool pass() const { return violations == 0; }
};

// Evaluates F(u) - alpha |grad u|_p^p + gamma |u|_p^p (cell averages) on random
// fields and on fields driven downhill on the residual.
GardingEstimate garding_check(const DensitySpec& spec, const Grid& grid, double alpha, double gamma, int n_fields,
                              std::uint64_t seed, int descent_iters = 40);

}  // namespace gammacell
