#include "gammacell/envelope.hpp"

#include "gammacell/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace gammacell {

std::string to_string(EnvelopeMethod m) {
  switch (m) {
    case EnvelopeMethod::QcCell: return "qc-cell";
    case EnvelopeMethod::Convex1d: return "convex-1d";
    case EnvelopeMethod::Laminate: return "laminate";
  }
  return "unknown";
}

EnvelopeResult qc_cell(const DensitySpec& spec, const Mat& X, int res, const SolveOptions& opts,
                       const RunContext& ctx) {
  require(spec.x_independent(), "qc_cell needs an x-independent density");
  const CellResult r = cell_energy(CellJob{spec, X, 1, res, false, 0.0, 0.0, opts}, ctx);
  return {X, r.m_value, EnvelopeMethod::QcCell, "upper bound", 0, res};
}

double PiecewiseLinear::operator()(double x) const {
  if (xs.size() == 1) return ys[0];
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  i = std::min(i, xs.size() - 2);
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

PiecewiseLinear convexify_1d(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() >= 2 && xs.size() == ys.size(), "convexify_1d: need >= 2 matching samples");
  for (std::size_t i = 1; i < xs.size(); ++i)
    require(xs[i] > xs[i - 1], "convexify_1d: abscissae must be strictly increasing");
  PiecewiseLinear hull;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // Pop while the last two hull points and the new one do not turn left.
    while (hull.xs.size() >= 2) {
      const std::size_t m = hull.xs.size();
      const double ox = hull.xs[m - 2], oy = hull.ys[m - 2];
      const double cross = (hull.xs[m - 1] - ox) * (ys[i] - oy) - (hull.ys[m - 1] - oy) * (xs[i] - ox);
      if (cross > 0.0) break;
      hull.xs.pop_back();
      hull.ys.pop_back();
    }
    hull.xs.push_back(xs[i]);
    hull.ys.push_back(ys[i]);
  }
  return hull;
}

std::vector<Mat> rank_one_net(int n, int n_dirs, const std::vector<double>& amplitudes) {
  require(n >= 1 && n <= 3 && n_dirs >= 1 && !amplitudes.empty(), "rank_one_net: bad arguments");
  std::vector<Point> dirs;
  if (n == 1) {
    dirs.push_back(Point::Ones(1));
  } else if (n == 2) {
    for (int i = 0; i < n_dirs; ++i) {
      const double th = std::numbers::pi * i / n_dirs;
      Point d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_dirs; ++i) {
      const double z = 1.0 - (i + 0.5) / n_dirs;  // upper hemisphere
      const double r = std::sqrt(1.0 - z * z);
      Point d(3);
      d << r * std::cos(golden * i), r * std::sin(golden * i), z;
      dirs.push_back(d);
    }
  }
  std::vector<Mat> net;
  for (double t : amplitudes)
    for (const auto& a : dirs)
      for (const auto& b : dirs) net.push_back(t * a * b.transpose());
  return net;
}

std::vector<double> default_lambda_net() {
  std::vector<double> v;
  for (int i = 1; i < 8; ++i) v.push_back(i / 8.0);
  return v;
}

namespace {

struct MemoKey {
  std::array<long long, 10> q{};  // level, then quantized entries
  bool operator==(const MemoKey&) const = default;
};

struct MemoHash {
  std::size_t operator()(const MemoKey& k) const {
    std::size_t h = 1469598103934665603ULL;
    for (long long v : k.q) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
    return h;
  }
};

class Laminator {
public:
  Laminator(const DensitySpec& spec, const std::vector<Mat>& net, const std::vector<double>& lambdas,
            const LaminateOptions& opts)
      : spec_(spec), net_(net), lambdas_(lambdas), opts_(opts), x0_(Point::Zero(spec.n)) {}

  double value(const Mat& X, int level) {
    if (level == 0) return eval(spec_, x0_, X);
    MemoKey key;
    key.q[0] = level;
    int idx = 1;
    for (double v : to_row_major(X)) key.q[static_cast<std::size_t>(idx++)] = std::llround(v * 1e9);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= opts_.max_memo_entries)
      throw ComputeError("laminate: memoization table exceeds " + std::to_string(opts_.max_memo_entries) +
                         " entries");
    double best = value(X, level - 1);
    for (const auto& A : net_) {
      for (double lam : lambdas_) {
        const double v = lam * value(X + (1.0 - lam) * A, level - 1) + (1.0 - lam) * value(X - lam * A, level - 1);
        if (v < best) best = v;
      }
    }
    memo_.emplace(key, best);
    return best;
  }

private:
  const DensitySpec& spec_;
  const std::vector<Mat>& net_;
  const std::vector<double>& lambdas_;
  LaminateOptions opts_;
  Point x0_;
  std::unordered_map<MemoKey, double, MemoHash> memo_;
};

}  // namespace

EnvelopeResult laminate(const DensitySpec& spec, const Mat& X, int depth, const std::vector<Mat>& net,
                        const std::vector<double>& lambdas, const LaminateOptions& opts) {
  validate(spec);
  require(spec.x_independent(), "laminate needs an x-independent density");
  require(depth >= 1, "laminate depth must be >= 1");
  require(X.rows() == spec.n && X.cols() == spec.n, "X dimension does not match density");
  for (const auto& A : net) require(A.rows() == spec.n, "direction net dimension mismatch");
  for (double l : lambdas) require(l > 0.0 && l < 1.0, "lambda net must lie in (0, 1)");
  Laminator lam(spec, net, lambdas, opts);
  return {X, lam.value(X, depth), EnvelopeMethod::Laminate, "upper bound", depth, 0};
}

}  // namespace gammacell
