#include "gammacell/density.hpp"

#include "gammacell/error.hpp"
#include "gammacell/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gammacell {

namespace {

constexpr double kFrameTol = 1e-10;

double pow_p(double r, double p) { return p == 2.0 ? r * r : std::pow(r, p); }
// (r^2)^{p/2} without taking a square root when p == 2.
double pow_half_p(double r2, double p) { return p == 2.0 ? r2 : std::pow(r2, 0.5 * p); }

double dist2_to_well(const Mat& X, const Mat& Y) {
  // Residual form; |X|^2 + |Y|^2 - 2 tr cancels near the well.
  const Procrustes pr = procrustes(X * Y.transpose());
  return (X - pr.rotation * Y).squaredNorm();
}

std::vector<Mat> wells_or_identity_well(const DensitySpec& spec) {
  if (!spec.wells.empty()) return spec.wells;
  return {zeros(spec.n)};
}

Mat well_matrix(const DensitySpec& spec, const Mat& U) { return identity(spec.n) + spec.delta * U; }

double sampled_profile(const SampledProfile& prof, double t, double* slope) {
  const auto& xs = prof.xs;
  const auto& ys = prof.ys;
  auto it = std::upper_bound(xs.begin(), xs.end(), t);
  std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  i = std::min(i, xs.size() - 2);
  const double s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
  if (slope) *slope = s;
  return ys[i] + s * (t - xs[i]);
}

void check_args(const DensitySpec& spec, const Point& x, const Mat& X) {
  if (X.rows() != spec.n || X.cols() != spec.n)
    throw ValidationError("matrix dimension " + std::to_string(X.rows()) + "x" +
                          std::to_string(X.cols()) + " does not match density dimension " +
                          std::to_string(spec.n));
  if (x.size() != spec.n)
    throw ValidationError("point dimension does not match density dimension");
  if (!X.allFinite() || !x.allFinite()) throw ValidationError("non-finite density argument");
}

double a_min(const DensitySpec& s) {
  double v = s.a_default;
  for (const auto& b : s.phases) v = std::min(v, b.a);
  return v;
}

double a_max(const DensitySpec& s) {
  double v = s.a_default;
  for (const auto& b : s.phases) v = std::max(v, b.a);
  return v;
}

}  // namespace

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::ConstantPNorm: return "constant-p-norm";
    case DensityKind::TwoPhasePNorm: return "two-phase-p-norm";
    case DensityKind::SingleWell: return "single-well";
    case DensityKind::MultiWell: return "multi-well";
    case DensityKind::LinearizedMultiWell: return "linearized-multi-well";
    case DensityKind::ScalarDoubleWell: return "scalar-double-well";
    case DensityKind::CustomSampled: return "custom-sampled";
  }
  return "unknown";
}

DensityKind density_kind_from_string(const std::string& name) {
  for (auto k : {DensityKind::ConstantPNorm, DensityKind::TwoPhasePNorm, DensityKind::SingleWell,
                 DensityKind::MultiWell, DensityKind::LinearizedMultiWell,
                 DensityKind::ScalarDoubleWell, DensityKind::CustomSampled})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown density kind '" + name + "'");
}

bool DensitySpec::x_independent() const {
  for (const auto& b : phases)
    if (b.a != a_default) return false;
  return true;
}

void validate(const DensitySpec& s) {
  require(s.n >= 1 && s.n <= 3, "density dimension must be 1, 2 or 3");
  require(std::isfinite(s.p) && s.p > 1.0, "growth exponent p must satisfy 1 < p < inf");
  require(s.beta >= 0.0 && s.c_low >= 0.0 && s.C_low >= 0.0, "growth constants must be >= 0");
  require(std::isfinite(s.delta) && s.delta >= 0.0, "delta must be finite and >= 0");
  require(s.a_default > 0.0, "default phase coefficient must be positive");
  for (const auto& b : s.phases) {
    require(b.a > 0.0 && std::isfinite(b.a), "phase coefficients must be positive");
    require(static_cast<int>(b.lo.size()) == s.n && static_cast<int>(b.hi.size()) == s.n,
            "phase box needs lo/hi per axis");
    for (int i = 0; i < s.n; ++i) {
      const double w = b.hi[static_cast<std::size_t>(i)] - b.lo[static_cast<std::size_t>(i)];
      require(w > 0.0 && w <= 1.0, "phase box widths must lie in (0, 1]");
    }
  }
  for (const auto& U : s.wells) {
    require(U.rows() == s.n && U.cols() == s.n, "well dimension does not match density");
    require(U.allFinite(), "well entries must be finite");
    require((U - U.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + U.norm()),
            "wells must be symmetric");
  }
  if (s.kind == DensityKind::ConstantPNorm)
    require(s.x_independent(), "constant-p-norm takes no phase map");
  if (s.kind == DensityKind::ScalarDoubleWell) require(s.n == 1, "scalar-double-well needs n = 1");
  if (s.kind == DensityKind::CustomSampled && !s.custom) {
    require(s.profile.xs.size() >= 2 && s.profile.xs.size() == s.profile.ys.size(),
            "custom-sampled needs >= 2 (x, y) samples");
    for (std::size_t i = 1; i < s.profile.xs.size(); ++i)
      require(s.profile.xs[i] > s.profile.xs[i - 1], "custom-sampled abscissae must increase");
  }
}

DensitySpec complete_growth_constants(DensitySpec s) {
  validate(s);
  const double lo = a_min(s);
  const double hi = a_max(s);
  const double two_pm1 = std::pow(2.0, s.p - 1.0);
  double beta = 0.0, c = 0.0, C = 0.0;
  double umax = 0.0;
  for (const auto& U : s.wells) umax = std::max(umax, U.norm());
  switch (s.kind) {
    case DensityKind::ConstantPNorm:
    case DensityKind::TwoPhasePNorm:
      beta = hi;
      c = lo;
      break;
    case DensityKind::SingleWell:
      beta = hi * two_pm1 * std::max(1.0, std::pow(static_cast<double>(s.n), 0.5 * s.p));
      c = lo;
      break;
    case DensityKind::MultiWell: {
      double ymax = std::sqrt(static_cast<double>(s.n));
      for (const auto& U : wells_or_identity_well(s)) ymax = std::max(ymax, well_matrix(s, U).norm());
      beta = hi * two_pm1 * std::max(1.0, std::pow(ymax, s.p));
      c = lo / two_pm1;
      C = lo * std::pow(umax, s.p);
      break;
    }
    case DensityKind::LinearizedMultiWell:
      beta = hi * two_pm1 * std::max(1.0, std::pow(umax, s.p));
      c = umax == 0.0 ? lo : lo / two_pm1;
      C = lo * std::pow(umax, s.p);
      break;
    case DensityKind::ScalarDoubleWell:
      beta = hi * two_pm1;
      c = lo / two_pm1;
      C = lo;
      break;
    case DensityKind::CustomSampled:
      if (s.custom) {
        beta = std::numeric_limits<double>::infinity();
      } else {
        const auto& xs = s.profile.xs;
        const auto& ys = s.profile.ys;
        for (std::size_t i = 0; i < xs.size(); ++i)
          beta = std::max(beta, std::abs(ys[i]) / (pow_p(std::abs(xs[i]), s.p) + 1.0));
        const std::size_t m = xs.size();
        const double s0 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        const double s1 = (ys[m - 1] - ys[m - 2]) / (xs[m - 1] - xs[m - 2]);
        beta = std::max(beta, std::abs(ys[0]) + std::abs(s0) * (std::abs(xs[0]) + 1.0));
        beta = std::max(beta, std::abs(ys[m - 1]) + std::abs(s1) * (std::abs(xs[m - 1]) + 1.0));
        beta *= hi;
        C = hi * std::max(0.0, -*std::min_element(ys.begin(), ys.end()));
      }
      break;
  }
  if (s.beta == 0.0) s.beta = beta;
  if (s.c_low == 0.0) s.c_low = c;
  if (s.C_low == 0.0) s.C_low = C;
  return s;
}

double phase_coefficient(const DensitySpec& spec, const Point& x) {
  for (const auto& b : spec.phases) {
    bool inside = true;
    for (int i = 0; i < spec.n && inside; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double w = b.hi[ui] - b.lo[ui];
      double t = x(i) - b.lo[ui];
      t -= std::floor(t);
      inside = w >= 1.0 || t < w;
    }
    if (inside) return b.a;
  }
  return spec.a_default;
}

double dist_SO(const Mat& X) {
  require(X.rows() == X.cols() && X.rows() >= 1 && X.rows() <= 3, "dist_SO: need square n <= 3");
  require(X.allFinite(), "dist_SO: non-finite input");
  return std::sqrt(dist2_to_well(X, identity(static_cast<int>(X.rows()))));
}

double dist_to_well(const Mat& X, const Mat& Y) { return std::sqrt(dist2_to_well(X, Y)); }

double eval(const DensitySpec& spec, const Point& x, const Mat& X) {
  check_args(spec, x, X);
  const double a = phase_coefficient(spec, x);
  const double p = spec.p;
  switch (spec.kind) {
    case DensityKind::ConstantPNorm:
    case DensityKind::TwoPhasePNorm:
      return a * pow_half_p(X.squaredNorm(), p);
    case DensityKind::SingleWell:
      return a * pow_half_p(dist2_to_well(X, identity(spec.n)), p);
    case DensityKind::MultiWell: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& U : wells_or_identity_well(spec))
        best = std::min(best, dist2_to_well(X, well_matrix(spec, U)));
      return a * pow_half_p(best, p);
    }
    case DensityKind::LinearizedMultiWell: {
      const Mat S = sym(X);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& U : wells_or_identity_well(spec)) best = std::min(best, (S - U).squaredNorm());
      return a * pow_half_p(best, p);
    }
    case DensityKind::ScalarDoubleWell: {
      const double t = X(0, 0);
      return a * std::min(pow_p(std::abs(t - 1.0), p), pow_p(std::abs(t + 1.0), p));
    }
    case DensityKind::CustomSampled:
      if (spec.custom) return a * spec.custom(X);
      return a * sampled_profile(spec.profile, spec.n == 1 ? X(0, 0) : X.norm(), nullptr);
  }
  return 0.0;
}

Mat eval_grad_X(const DensitySpec& spec, const Point& x, const Mat& X) {
  check_args(spec, x, X);
  const double a = phase_coefficient(spec, x);
  const double p = spec.p;
  const int n = spec.n;
  switch (spec.kind) {
    case DensityKind::ConstantPNorm:
    case DensityKind::TwoPhasePNorm: {
      const double r2 = X.squaredNorm();
      if (r2 == 0.0) return zeros(n);
      return a * p * pow_half_p(r2, p - 2.0) * X;
    }
    case DensityKind::SingleWell:
    case DensityKind::MultiWell: {
      const auto wells = spec.kind == DensityKind::SingleWell ? std::vector<Mat>{zeros(n)}
                                                              : wells_or_identity_well(spec);
      double best = std::numeric_limits<double>::infinity();
      Mat best_Y = identity(n);
      for (const auto& U : wells) {
        const Mat Y = well_matrix(spec, U);
        const double d2 = dist2_to_well(X, Y);
        if (d2 < best) {
          best = d2;
          best_Y = Y;
        }
      }
      if (best == 0.0) return zeros(n);
      const Mat R = procrustes(X * best_Y.transpose()).rotation;
      const double scale = p == 2.0 ? 2.0 : p * std::pow(best, 0.5 * p - 1.0);
      return a * scale * (X - R * best_Y);
    }
    case DensityKind::LinearizedMultiWell: {
      const Mat S = sym(X);
      double best = std::numeric_limits<double>::infinity();
      Mat diff = zeros(n);
      for (const auto& U : wells_or_identity_well(spec)) {
        const double d2 = (S - U).squaredNorm();
        if (d2 < best) {
          best = d2;
          diff = S - U;
        }
      }
      if (best == 0.0) return zeros(n);
      const double scale = p == 2.0 ? 2.0 : p * std::pow(best, 0.5 * p - 1.0);
      return a * scale * diff;
    }
    case DensityKind::ScalarDoubleWell: {
      const double t = X(0, 0);
      const double b1 = pow_p(std::abs(t - 1.0), p);
      const double b2 = pow_p(std::abs(t + 1.0), p);
      const double r = b1 <= b2 ? t - 1.0 : t + 1.0;
      const double g = r == 0.0 ? 0.0 : p * std::pow(std::abs(r), p - 1.0) * (r > 0 ? 1.0 : -1.0);
      return Mat::Constant(1, 1, a * g);
    }
    case DensityKind::CustomSampled: {
      if (spec.custom) {
        const double h = 1e-6 * (1.0 + X.norm());
        Mat G(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            Mat Xp = X, Xm = X;
            Xp(i, j) += h;
            Xm(i, j) -= h;
            G(i, j) = a * (spec.custom(Xp) - spec.custom(Xm)) / (2.0 * h);
          }
        return G;
      }
      double slope = 0.0;
      if (n == 1) {
        sampled_profile(spec.profile, X(0, 0), &slope);
        return Mat::Constant(1, 1, a * slope);
      }
      const double r = X.norm();
      if (r == 0.0) return zeros(n);
      sampled_profile(spec.profile, r, &slope);
      return a * slope / r * X;
    }
  }
  return zeros(n);
}

Mat polar_correction(const Mat& X, double delta) {
  require(delta > 0.0, "polar_correction: delta must be positive");
  const int n = static_cast<int>(X.rows());
  const Mat P = identity(n) + delta * X;
  const double det = P.determinant();
  if (!(det > 0.0))
    throw ValidationError("polar_correction: det(I + delta X) = " + format_double(det) +
                          " is not positive");
  return spd_sqrt(P.transpose() * P) - identity(n) - delta * sym(X);
}

double linearize(const DensitySpec& spec, const Point& x, const Mat& X) {
  require(spec.delta > 0.0, "linearize: delta must be positive");
  return eval(spec, x, identity(spec.n) + spec.delta * X) / std::pow(spec.delta, spec.p);
}

DensityFn as_function(const DensitySpec& spec) {
  return [spec](const Point& x, const Mat& X) { return eval(spec, x, X); };
}

DensityFn linearized_function(const DensitySpec& spec) {
  require(spec.delta > 0.0, "linearize: delta must be positive");
  return [spec](const Point& x, const Mat& X) { return linearize(spec, x, X); };
}

namespace {

std::vector<Mat> matrix_net(int n, const EquivalenceOptions& o) {
  require(o.nX >= 2, "equivalence net needs nX >= 2");
  std::vector<double> ts(static_cast<std::size_t>(o.nX));
  for (int i = 0; i < o.nX; ++i) ts[static_cast<std::size_t>(i)] = -o.R + 2.0 * o.R * i / (o.nX - 1);
  // Free entries: all n^2, or the upper triangle for the symmetric slice.
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < n; ++i)
    for (int j = o.sym_only ? i : 0; j < n; ++j) slots.emplace_back(i, j);
  std::vector<Mat> net;
  std::vector<std::size_t> idx(slots.size(), 0);
  const double bound = o.R * o.R * (1.0 + 1e-12);
  while (true) {
    Mat X = zeros(n);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto [i, j] = slots[s];
      X(i, j) = ts[idx[s]];
      if (o.sym_only) X(j, i) = ts[idx[s]];
    }
    if (X.squaredNorm() <= bound) net.push_back(X);
    std::size_t s = 0;
    while (s < idx.size() && ++idx[s] == ts.size()) idx[s++] = 0;
    if (s == idx.size()) break;
  }
  return net;
}

}  // namespace

double equivalence_metric(const DensityFn& f, const DensityFn& g, int n,
                          const EquivalenceOptions& o) {
  require(o.R > 0.0 && o.T > 0.0, "equivalence_metric: need R > 0 and T > 0");
  require(o.nx >= 1, "equivalence_metric: need nx >= 1");
  const auto net = matrix_net(n, o);
  const int m = std::max(1, static_cast<int>(std::lround(2.0 * o.T * o.nx)));
  const double hx = 2.0 * o.T / m;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= m;
  std::vector<double> sups(static_cast<std::size_t>(total));
  for (long lin = 0; lin < total; ++lin) {
    Point x(n);
    long r = lin;
    for (int i = 0; i < n; ++i) {
      x(i) = -o.T + (static_cast<double>(r % m) + 0.5) * hx;
      r /= m;
    }
    double sup = 0.0;
    for (const auto& X : net) sup = std::max(sup, std::abs(f(x, X) - g(x, X)));
    sups[static_cast<std::size_t>(lin)] = sup;
  }
  return pairwise_sum(sups) / static_cast<double>(total);
}

double equivalence_metric(const DensitySpec& f, const DensitySpec& g, const EquivalenceOptions& o) {
  require(f.n == g.n, "equivalence_metric: dimension mismatch");
  return equivalence_metric(as_function(f), as_function(g), f.n, o);
}

AdmissibilityReport check_admissibility(const DensitySpec& spec_in, int n_samples,
                                        std::uint64_t seed) {
  require(n_samples >= 1, "check_admissibility: n_samples must be >= 1");
  const DensitySpec spec = complete_growth_constants(spec_in);
  const int n = spec.n;
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scales[] = {0.1, 1.0, 3.0};

  AdmissibilityReport rep;
  double worst_frame = 0.0, worst_growth = 0.0, worst_lower = 0.0;
  auto record = [](CheckOutcome& out, double& worst, double violation, Witness w) {
    if (violation > worst) {
      worst = violation;
      out.pass = false;
      out.witness = std::move(w);
    }
  };

  for (int s = 0; s < n_samples; ++s) {
    Point x(n);
    for (int i = 0; i < n; ++i) x(i) = unit(rng);
    const double scale = scales[s % 3];
    Mat X(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) X(i, j) = scale * gauss(rng);
    const Mat R = random_rotation(n, rng);
    const double f = eval(spec, x, X);
    const double tol = kFrameTol * (1.0 + std::abs(f));

    // Linear kinds are tested for invariance under skew additions.
    Mat moved;
    if (spec.is_linearized()) {
      Mat W(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) W(i, j) = scale * gauss(rng);
      moved = X + skew(W);
    } else {
      moved = R * X;
    }
    const double fm = eval(spec, x, moved);
    record(rep.frame_indifferent, worst_frame, std::abs(fm - f) - tol,
           Witness{x, X, R, fm, f});

    const double upper = spec.beta * (pow_half_p(X.squaredNorm(), spec.p) + 1.0);
    record(rep.growth_upper, worst_growth, f - upper - 1e-12 * std::abs(upper),
           Witness{x, X, identity(n), f, upper});

    double lower = 0.0;
    if (spec.is_nonlinear_elastic())
      lower = spec.c_low * std::pow(dist_SO(X), spec.p) - spec.C_low * std::pow(spec.delta, spec.p);
    else if (spec.is_linearized())
      lower = spec.c_low * std::pow(sym(X).norm(), spec.p) - spec.C_low;
    else
      lower = spec.c_low * std::pow(X.norm(), spec.p) - spec.C_low;
    record(rep.nondegeneracy, worst_lower, lower - f - 1e-12 * (1.0 + std::abs(lower)),
           Witness{x, X, identity(n), f, lower});
    ++rep.samples_used;
  }
  return rep;
}

}  // namespace gammacell
