#include "gammacell/rigidity.hpp"

#include "gammacell/envelope.hpp"
#include "gammacell/error.hpp"
#include "gammacell/support.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace gammacell {

std::string to_string(ConstantKind k) {
  switch (k) {
    case ConstantKind::Korn: return "korn";
    case ConstantKind::KornNonlinear: return "korn-nonlinear";
    case ConstantKind::Rigidity: return "rigidity";
  }
  return "unknown";
}

namespace {

double powp(double r, double p) { return p == 2.0 ? r * r : std::pow(r, p); }

// Integral of |M(G_T)|^p over the grid, M = identity or sym; optional gradient.
double gradient_lp_pow(const Grid& g, std::span<const double> u, double p, bool symmetric, std::span<double> grad) {
  const int n = g.dim();
  const double vol = g.element_volume();
  double total = 0.0;
  for (std::size_t e = 0; e < g.element_count(); ++e) {
    Mat G = element_gradient(g, u, e);
    if (symmetric) G = sym(G);
    const double r = G.norm();
    total += vol * powp(r, p);
    if (grad.empty() || r == 0.0) continue;
    const Mat D = vol * p * (p == 2.0 ? 1.0 : std::pow(r, p - 2.0)) * G;
    const auto nodes = g.element_nodes(e);
    const auto& sg = g.shape_gradients(e);
    for (int a = 0; a <= n; ++a) {
      const std::size_t node = nodes[static_cast<std::size_t>(a)];
      if (g.masked(node)) continue;
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += D(i, j) * sg(a, j);
        grad[node * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] += s;
      }
    }
  }
  return total;
}

// Integral of |u|^p: exact P1 mass matrix for p = 2, vertex quadrature otherwise.
double field_lp_pow(const Grid& g, std::span<const double> u, double p, std::span<double> grad) {
  const auto n = static_cast<std::size_t>(g.dim());
  const double vol = g.element_volume();
  double total = 0.0;
  const double np1 = static_cast<double>(n + 1);
  for (std::size_t e = 0; e < g.element_count(); ++e) {
    const auto nodes = g.element_nodes(e);
    if (p == 2.0) {
      const double c = vol / (np1 * (np1 + 1.0));
      Point sum = Point::Zero(static_cast<Eigen::Index>(n));
      double sq = 0.0;
      for (auto node : nodes)
        for (std::size_t i = 0; i < n; ++i) {
          const double v = u[node * n + i];
          sum(static_cast<Eigen::Index>(i)) += v;
          sq += v * v;
        }
      total += c * (sq + sum.squaredNorm());
      if (!grad.empty())
        for (auto node : nodes) {
          if (g.masked(node)) continue;
          for (std::size_t i = 0; i < n; ++i)
            grad[node * n + i] += 2.0 * c * (u[node * n + i] + sum(static_cast<Eigen::Index>(i)));
        }
    } else {
      const double w = vol / np1;
      for (auto node : nodes) {
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) r2 += u[node * n + i] * u[node * n + i];
        const double r = std::sqrt(r2);
        total += w * std::pow(r, p);
        if (!grad.empty() && r > 0.0 && !g.masked(node))
          for (std::size_t i = 0; i < n; ++i) grad[node * n + i] += w * p * std::pow(r, p - 2.0) * u[node * n + i];
      }
    }
  }
  return total;
}

std::vector<Mat> element_gradients(const Grid& g, std::span<const double> y) {
  std::vector<Mat> out(g.element_count());
  for (std::size_t e = 0; e < g.element_count(); ++e) out[e] = element_gradient(g, y, e);
  return out;
}

Mat rotation_2d(double th) {
  Mat R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return R;
}

Mat rotation_from_vector(const Eigen::Vector3d& w) {
  const double th = w.norm();
  if (th == 0.0) return identity(3);
  return Eigen::AngleAxisd(th, w / th).toRotationMatrix();
}

double rotation_misfit(const std::vector<Mat>& Gs, const Mat& R, double p) {
  double s = 0.0;
  for (const auto& G : Gs) s += powp((G - R).norm(), p);
  return s;
}

std::vector<double> random_field(const Grid& g, std::mt19937_64& rng, bool smooth) {
  std::vector<double> u(g.dof_count(), 0.0);
  const auto n = static_cast<std::size_t>(g.dim());
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  if (!smooth) {
    for (std::size_t node = 0; node < g.node_count(); ++node)
      for (std::size_t i = 0; i < n; ++i) u[node * n + i] = g.masked(node) ? 0.0 : uni(rng);
    return u;
  }
  // A few low Fourier modes plus an affine part.
  constexpr int kModes = 4;
  std::vector<double> amp(kModes * n), phase(kModes * n);
  std::vector<Point> freq(kModes * n);
  for (std::size_t m = 0; m < amp.size(); ++m) {
    amp[m] = uni(rng);
    phase[m] = std::numbers::pi * uni(rng);
    freq[m] = Point(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) freq[m](static_cast<Eigen::Index>(i)) = std::numbers::pi * std::round(3.0 * uni(rng));
  }
  Mat A(static_cast<int>(n), static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = uni(rng);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    if (g.masked(node)) continue;
    const Point x = g.node_coord(node);
    const Point ax = A * x;
    for (std::size_t i = 0; i < n; ++i) {
      double v = ax(static_cast<Eigen::Index>(i));
      for (int m = 0; m < kModes; ++m) {
        const std::size_t idx = static_cast<std::size_t>(m) * n + i;
        v += amp[idx] * std::sin(freq[idx].dot(x) + phase[idx]);
      }
      u[node * n + i] = v;
    }
  }
  return u;
}

}  // namespace

KornNorms korn_norms(const Grid& grid, std::span<const double> u, double p) {
  require(u.size() == grid.dof_count(), "korn_norms: field size mismatch");
  KornNorms out;
  out.grad = std::pow(gradient_lp_pow(grid, u, p, false, {}), 1.0 / p);
  out.sym = std::pow(gradient_lp_pow(grid, u, p, true, {}), 1.0 / p);
  out.field = std::pow(field_lp_pow(grid, u, p, {}), 1.0 / p);
  return out;
}

ConstantEstimate korn_constant(const Grid& grid, double p, const KornOptions& opts) {
  require(grid.dim() >= 2, "korn_constant needs n >= 2");
  require(p > 1.0, "korn_constant needs p > 1");
  ConstantEstimate est;
  est.kind = ConstantKind::Korn;
  est.n = grid.dim();
  est.k = grid.k();
  est.res = grid.res();
  est.p = p;
  std::mt19937_64 rng(splitmix64(opts.seed));

  if (p != 2.0) {
    est.method = "random-search";
    for (int s = 0; s < opts.random_samples; ++s) {
      const auto u = random_field(grid, rng, s % 2 == 0);
      const double q = korn_norms(grid, u, p).quotient();
      if (!std::isfinite(q)) continue;
      est.per_sample.push_back(q);
      est.value = std::max(est.value, q);
      ++est.samples_used;
    }
    require(est.samples_used > 0, "korn_constant: all random samples degenerate");
    return est;
  }

  est.method = "quasi-newton-ascent";
  const std::size_t m = grid.dof_count();
  const EnergyFn neg_q = [&](std::span<const double> u) {
    const KornNorms k = korn_norms(grid, u, 2.0);
    const double q = k.quotient();
    return std::isfinite(q) ? -q : std::numeric_limits<double>::infinity();
  };
  const GradientFn neg_q_grad = [&](std::span<const double> u, std::span<double> g) {
    std::vector<double> ga(m, 0.0), gb(m, 0.0), gc(m, 0.0);
    const double A = gradient_lp_pow(grid, u, 2.0, false, ga);
    const double B = gradient_lp_pow(grid, u, 2.0, true, gb);
    const double C = field_lp_pow(grid, u, 2.0, gc);
    const double N = std::sqrt(A), D = std::sqrt(B), M = std::sqrt(C);
    const double den = D + M;
    for (std::size_t j = 0; j < m; ++j) {
      const double dN = N > 0 ? ga[j] / (2.0 * N) : 0.0;
      const double dD = D > 0 ? gb[j] / (2.0 * D) : 0.0;
      const double dM = M > 0 ? gc[j] / (2.0 * M) : 0.0;
      g[j] = -(dN / den - N * (dD + dM) / (den * den));
    }
  };
  SolveOptions so;
  so.max_iter = opts.max_iter;
  so.g_tol = 1e-10;
  so.f_tol = 1e-13;
  so.n_starts = 1;
  for (int s = 0; s < opts.n_starts; ++s) {
    auto start = random_field(grid, rng, s % 2 == 0);
    if (korn_norms(grid, start, 2.0).grad == 0.0) continue;  // degenerate start
    try {
      const SolveResult r = minimize(neg_q, neg_q_grad, std::move(start), so);
      est.per_sample.push_back(-r.value);
      est.value = std::max(est.value, -r.value);
      ++est.samples_used;
    } catch (const ComputeError&) {
      ++est.skipped;
    }
  }
  if (est.samples_used == 0) throw ComputeError("korn_constant: every start failed");
  return est;
}

Mat best_rotation(const Grid& grid, std::span<const double> y, double p) {
  const int n = grid.dim();
  const auto Gs = element_gradients(grid, y);
  Mat sum = zeros(n);
  for (const auto& G : Gs) sum += G;
  Mat R = procrustes(sum).rotation;
  if (p == 2.0 || n == 1) return R;
  if (n == 2) {
    // Coarse angular scan, then golden-section refinement.
    double best_th = std::atan2(R(1, 0), R(0, 0));
    double best = rotation_misfit(Gs, R, p);
    constexpr int kScan = 720;
    for (int i = 0; i < kScan; ++i) {
      const double th = 2.0 * std::numbers::pi * i / kScan;
      const double v = rotation_misfit(Gs, rotation_2d(th), p);
      if (v < best) {
        best = v;
        best_th = th;
      }
    }
    double lo = best_th - 2.0 * std::numbers::pi / kScan, hi = best_th + 2.0 * std::numbers::pi / kScan;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 60; ++it) {
      const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
      if (rotation_misfit(Gs, rotation_2d(a), p) < rotation_misfit(Gs, rotation_2d(b), p))
        hi = b;
      else
        lo = a;
    }
    const Mat refined = rotation_2d(0.5 * (lo + hi));
    return rotation_misfit(Gs, refined, p) < best ? refined : rotation_2d(best_th);
  }
  // 3D: pattern search over rotation-vector perturbations of the p = 2 answer.
  double best = rotation_misfit(Gs, R, p);
  for (double step = 0.2; step > 1e-9; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int axis = 0; axis < 3; ++axis)
        for (double sgn : {1.0, -1.0}) {
          Eigen::Vector3d w = Eigen::Vector3d::Zero();
          w(axis) = sgn * step;
          const Mat cand = rotation_from_vector(w) * R;
          const double v = rotation_misfit(Gs, cand, p);
          if (v < best) {
            best = v;
            R = cand;
            improved = true;
          }
        }
    }
  }
  return R;
}

ConstantEstimate rigidity_ratio(const Grid& grid, const std::vector<Field>& deformations, double p) {
  require(!deformations.empty(), "rigidity_ratio needs at least one sample");
  require(p > 1.0, "rigidity_ratio needs p > 1");
  ConstantEstimate est;
  est.kind = ConstantKind::Rigidity;
  est.n = grid.dim();
  est.k = grid.k();
  est.res = grid.res();
  est.p = p;
  est.method = p == 2.0 ? "polar-factor" : "rotation-search";
  est.value = 1.0;
  for (const auto& y : deformations) {
    require(y.matches(grid), "rigidity_ratio: sample does not belong to grid");
    const auto Gs = element_gradients(grid, y.values);
    double den = 0.0;
    for (const auto& G : Gs) den += powp(dist_SO(G), p);
    if (den <= 1e-28 * static_cast<double>(Gs.size())) {
      ++est.skipped;
      est.per_sample.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const Mat R = best_rotation(grid, y.values, p);
    const double ratio = std::pow(rotation_misfit(Gs, R, p) / den, 1.0 / p);
    est.per_sample.push_back(ratio);
    est.value = std::max(est.value, ratio);
    ++est.samples_used;
  }
  return est;
}

Field deformation_from_cell(const Grid& grid, const Mat& X, double delta, const Field& phi) {
  require(phi.matches(grid), "deformation_from_cell: field does not belong to grid");
  Field y = phi;
  const auto n = static_cast<std::size_t>(grid.dim());
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    const Point x = grid.node_coord(node);
    const Point lin = x + delta * (X * x);
    for (std::size_t i = 0; i < n; ++i)
      y.values[node * n + i] = lin(static_cast<Eigen::Index>(i)) + delta * phi.values[node * n + i];
  }
  return y;
}

bool ZhangReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

ZhangReport zhang_check(const DensitySpec& spec, const std::vector<Mat>& X_samples, double C_est, double slack,
                        int res, const SolveOptions& opts, const RunContext& ctx) {
  require(spec.kind == DensityKind::SingleWell && spec.x_independent(),
          "zhang_check needs the homogeneous dist^p(., SO(n)) density");
  require(C_est > 0.0 && slack > 0.0, "zhang_check needs C_est > 0 and slack > 0");
  ZhangReport rep;
  for (const auto& X : X_samples) {
    ZhangRow row;
    row.X = X;
    row.lhs = qc_cell(spec, X, res, opts, ctx).value;
    row.rhs = slack * std::pow(C_est, -spec.p) * std::pow(dist_SO(X), spec.p);
    row.margin = row.lhs - row.rhs;
    row.pass = row.margin >= 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

GardingEstimate garding_check(const DensitySpec& spec, const Grid& grid, double alpha, double gamma, int n_fields,
                              std::uint64_t seed, int descent_iters) {
  require(alpha > 0.0 && gamma >= 0.0, "garding_check needs alpha > 0 and gamma >= 0");
  require(n_fields >= 1, "garding_check needs n_fields >= 1");
  require(spec.n == grid.dim(), "garding_check: dimension mismatch");
  const double p = spec.p;
  const double cell = std::pow(static_cast<double>(grid.k()), grid.dim());
  const CellIntegrand F{spec, zeros(spec.n), false, 0.0, 0.0};
  const std::size_t m = grid.dof_count();

  const EnergyFn residual = [&](std::span<const double> u) {
    return assemble_energy(grid, F, u) - alpha * gradient_lp_pow(grid, u, p, false, {}) / cell +
           gamma * field_lp_pow(grid, u, p, {}) / cell;
  };
  const GradientFn residual_grad = [&](std::span<const double> u, std::span<double> g) {
    assemble_gradient(grid, F, u, g);
    std::vector<double> ga(m, 0.0), gc(m, 0.0);
    gradient_lp_pow(grid, u, p, false, ga);
    field_lp_pow(grid, u, p, gc);
    for (std::size_t j = 0; j < m; ++j) g[j] += (-alpha * ga[j] + gamma * gc[j]) / cell;
  };

  GardingEstimate est;
  est.alpha_U = alpha;
  est.gamma_U = gamma;
  std::mt19937_64 rng(splitmix64(seed));
  auto consider = [&](std::vector<double> u) {
    const double r = residual(u);
    ++est.samples;
    const double scale = 1e-12 * (1.0 + assemble_energy(grid, F, u));
    if (r < -scale) ++est.violations;
    if (est.samples == 1 || r < est.worst_residual) {
      est.worst_residual = r;
      est.worst_field = Field{grid.dim(), grid.k(), grid.res(), std::move(u)};
    }
  };
  SolveOptions so;
  so.max_iter = descent_iters;
  so.n_starts = 1;
  for (int s = 0; s < n_fields; ++s) {
    auto u = random_field(grid, rng, s % 2 == 0);
    consider(u);
    if (descent_iters > 0) {
      try {
        consider(minimize(residual, residual_grad, std::move(u), so).x);
      } catch (const ComputeError&) {
      }
    }
  }
  return est;
}

}  // namespace gammacell
