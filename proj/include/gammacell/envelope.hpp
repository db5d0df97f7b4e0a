#pragma once

#include "gammacell/cell.hpp"
#include "gammacell/density.hpp"

#include <span>
#include <string>
#include <vector>

namespace gammacell {

enum class EnvelopeMethod { QcCell, Convex1d, Laminate };
std::string to_string(EnvelopeMethod m);

struct EnvelopeResult {
  Mat X;
  double value = 0.0;
  EnvelopeMethod method = EnvelopeMethod::QcCell;
  // "upper bound" for qc-cell and laminate, "exact" for the 1D convex hull.
  std::string bound;
  int depth = 0;
  int res = 0;
};

// Cell minimization on the unit cube for an x-independent density: an upper
// bound of the quasiconvex envelope (restricted test space).
EnvelopeResult qc_cell(const DensitySpec& spec, const Mat& X, int res, const SolveOptions& opts,
                       const RunContext& ctx = {});

// Piecewise-linear function through (xs[i], ys[i]).
struct PiecewiseLinear {
  std::vector<double> xs;
  std::vector<double> ys;
  double operator()(double x) const;
};

// Lower convex hull (monotone chain). Rejects unsorted or too-short input.
PiecewiseLinear convexify_1d(std::span<const double> xs, std::span<const double> ys);

// Rank-one directions t a (x) b: a, b on n_dirs-point angular nets (Fibonacci
// hemisphere in 3D), t from `amplitudes`. For n = 1 just the amplitudes.
std::vector<Mat> rank_one_net(int n, int n_dirs = 16, const std::vector<double>& amplitudes = {0.5, 1.0, 2.0});
std::vector<double> default_lambda_net();  // {1/8, ..., 7/8}

struct LaminateOptions {
  std::size_t max_memo_entries = 20'000'000;
};

// Iterated rank-one lamination upper bound of depth `depth`.
EnvelopeResult laminate(const DensitySpec& spec, const Mat& X, int depth, const std::vector<Mat>& direction_net,
                        const std::vector<double>& lambda_net, const LaminateOptions& opts = {});

}  // namespace gammacell
