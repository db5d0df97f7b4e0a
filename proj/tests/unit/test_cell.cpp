#include <doctest.h>

#include "gammacell/cell.hpp"
#include "gammacell/error.hpp"

#include <cmath>
#include <filesystem>

using namespace gammacell;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat X(2, 2);
  X << a, b, c, d;
  return X;
}

DensitySpec make(DensityKind kind, int n, double p = 2.0) {
  DensitySpec s;
  s.kind = kind;
  s.n = n;
  s.p = p;
  return s;
}

// a = 1 on x1 in [0, 1/2), 4 elsewhere.
DensitySpec layered(DensityKind kind, int n, double p = 2.0) {
  DensitySpec s = make(kind, n, p);
  s.a_default = 4.0;
  PhaseBox b;
  b.lo.assign(n, 0.0);
  b.hi.assign(n, 1.0);
  b.hi[0] = 0.5;
  b.a = 1.0;
  s.phases = {b};
  if (kind == DensityKind::LinearizedMultiWell) s.wells = {zeros(n)};
  return s;
}

SolveOptions quick(int starts = 3) {
  SolveOptions o;
  o.n_starts = starts;
  return o;
}

// Independent 1D reduction: minimize sum_e h a_e (X + (u_{e+1} - u_e)/h)^2 / k with u_0 = u_N = 0.
// The optimum has constant flux a_e (X + u'_e), solved directly.
double reduced_1d(const std::vector<double>& a_per_element, double X) {
  double inv = 0.0;
  for (double a : a_per_element) inv += 1.0 / a;
  const double sigma = X * static_cast<double>(a_per_element.size()) / inv;  // flux
  double e = 0.0;
  for (double a : a_per_element) e += sigma * sigma / a;
  return e / static_cast<double>(a_per_element.size());
}

}  // namespace

TEST_CASE("constant |X|^2: m_k = |X|^2 for every k") {
  for (int k : {1, 2, 4}) {
    const auto r = cell_energy(CellJob{make(DensityKind::ConstantPNorm, 2), m2(1, 0, 0, 1), k, 4, false, 0, 0, quick()});
    CHECK(std::abs(r.m_value - 2.0) <= 1e-8);
    CHECK(r.m_value <= r.upper_bound + 1e-10);
  }
}

TEST_CASE("1D two-phase matches the harmonic-mean oracle") {
  const auto s = layered(DensityKind::TwoPhasePNorm, 1);
  const auto r = cell_energy(CellJob{s, Mat::Constant(1, 1, 1.0), 8, 64, false, 0, 0, quick()});
  CHECK(r.m_value == doctest::Approx(1.6).epsilon(0.01));
  CHECK(r.upper_bound == doctest::Approx(2.5));
  CHECK(oracle_1d_homog({1, 4}, {0.5, 0.5}, 2.0, 1.0) == doctest::Approx(1.6).epsilon(1e-15));
  // The discrete optimum is the reduced flux solution itself (interfaces on nodes).
  std::vector<double> a;
  for (int e = 0; e < 8 * 64; ++e) a.push_back((e % 64) < 32 ? 1.0 : 4.0);
  CHECK(reduced_1d(a, 1.0) == doctest::Approx(1.6).epsilon(1e-14));
}

TEST_CASE("1D two-phase p = 3") {
  const auto s = layered(DensityKind::TwoPhasePNorm, 1, 3.0);
  const double oracle = oracle_1d_homog({1, 4}, {0.5, 0.5}, 3.0, 1.0);
  CHECK(oracle == doctest::Approx(1.0 / 0.5625).epsilon(1e-14));
  const auto est = f_hom_estimate(s, Mat::Constant(1, 1, 1.0), {1, 2, 4, 8}, 64, quick());
  CHECK(est.estimate == doctest::Approx(oracle).epsilon(0.02));
  CHECK(est.monotone_ok);
}

TEST_CASE("oracle_1d_homog examples and errors") {
  CHECK(oracle_1d_homog({3.0}, {1.0}, 2.5, 2.0) == doctest::Approx(3.0 * std::pow(2.0, 2.5)));
  CHECK(oracle_1d_homog({1, 1}, {0.3, 0.7}, 3.0, 2.0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK_THROWS_AS(oracle_1d_homog({1, 4}, {0.5, 0.6}, 2.0, 1.0), ValidationError);
  CHECK_THROWS_AS(oracle_1d_homog({1, -4}, {0.5, 0.5}, 2.0, 1.0), ValidationError);
}

TEST_CASE("phase fractions of a 1D phase map") {
  auto s = layered(DensityKind::TwoPhasePNorm, 1);
  auto fr = phase_fractions_1d(s);
  REQUIRE(fr.a.size() == 2);
  CHECK(fr.a[0] == 1.0);
  CHECK(fr.theta[0] == doctest::Approx(0.5));
  s.phases[0].lo = {0.75};
  s.phases[0].hi = {1.25};  // wraps around the period
  fr = phase_fractions_1d(s);
  CHECK(fr.theta[0] + fr.theta[1] == doctest::Approx(1.0));
  CHECK(fr.theta[std::find(fr.a.begin(), fr.a.end(), 1.0) - fr.a.begin()] == doctest::Approx(0.5));
}

TEST_CASE("1D double well relaxes to ~0") {
  const auto r = cell_energy(CellJob{make(DensityKind::ScalarDoubleWell, 1), zeros(1), 1, 128, false, 0, 0, SolveOptions{}});
  CHECK(r.m_value <= 0.05);
  CHECK(r.m_value >= 0.0);
  CHECK(r.upper_bound == 1.0);
}

TEST_CASE("v_hom estimates") {
  auto V = make(DensityKind::LinearizedMultiWell, 2);
  V.wells = {zeros(2)};
  const Mat S = m2(0.5, 0.2, 0.2, -0.3);
  auto e = v_hom_estimate(V, S, {1, 2}, 4, quick());
  for (double v : e.values()) CHECK(std::abs(v - S.squaredNorm()) <= 1e-8);
  e = v_hom_estimate(V, m2(0, -0.7, 0.7, 0), {1, 2}, 4, quick());
  for (double v : e.values()) CHECK(std::abs(v) <= 1e-8);
  CHECK_THROWS_AS(v_hom_estimate(make(DensityKind::ConstantPNorm, 2), S, {1}, 4, quick()), ValidationError);
}

TEST_CASE("2D layered v_hom approaches the 1D-reduced reference from above") {
  const auto V = layered(DensityKind::LinearizedMultiWell, 2);
  const auto e = v_hom_estimate(V, m2(1, 0, 0, 0), {1, 2, 4}, 8, quick());
  std::vector<double> a;
  for (int el = 0; el < 8; ++el) a.push_back(el < 4 ? 1.0 : 4.0);
  const double ref = reduced_1d(a, 1.0);  // fields depending on x1 only
  const auto v = e.values();
  REQUIRE(v.size() == 3);
  for (double m : v) {
    CHECK(m >= ref - 1e-9);
    CHECK(m <= 2.5);
  }
  CHECK(v[1] < v[0]);
  CHECK(v[2] < v[1]);
  CHECK(v[2] - ref <= 0.5 * (v[0] - ref));
  CHECK(e.monotone_ok);
}

TEST_CASE("w_hom_delta") {
  auto W = layered(DensityKind::SingleWell, 2);
  auto e = w_hom_delta(W, zeros(2), 0.1, {1, 2}, 4, quick());
  for (double v : e.values()) CHECK(v == 0.0);
  // Homogeneous single well at small delta, symmetric X: |X_sym|^2 within 3%.
  const auto H = make(DensityKind::SingleWell, 2);
  const Mat S = m2(0.5, 0.2, 0.2, -0.3);
  e = w_hom_delta(H, S, 0.1, {1}, 8, quick());
  CHECK(e.estimate == doctest::Approx(S.squaredNorm()).epsilon(0.03));
  CHECK_THROWS_AS(w_hom_delta(H, S, 0.0, {1}, 8, quick()), ValidationError);
}

TEST_CASE("tiling monotonicity and upper bounds on a nonconvex problem") {
  const auto e = f_hom_estimate(make(DensityKind::ScalarDoubleWell, 1), Mat::Constant(1, 1, 0.3), {1, 2, 4}, 16, quick(4));
  CHECK(e.monotone_ok);
  const auto v = e.values();
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] <= v[i - 1] + 10 * 1e-8 * (1 + std::abs(v[i - 1])));
  for (const auto& c : e.cells) CHECK(c.m_value <= c.upper_bound + 1e-10);
}

TEST_CASE("schedules must increase") {
  CHECK_THROWS_AS(f_hom_estimate(make(DensityKind::ConstantPNorm, 1), identity(1), {2, 1}, 4, quick()), ValidationError);
}

TEST_CASE("translation by a full period leaves m unchanged") {
  auto s = layered(DensityKind::LinearizedMultiWell, 2);
  auto t = s;
  t.phases[0].lo = {1.0, -1.0};
  t.phases[0].hi = {1.5, 0.0};
  const Mat X = m2(0.3, 0.1, -0.2, 0.1);
  const auto a = cell_energy(CellJob{s, X, 1, 4, false, 0, 0, quick()});
  const auto b = cell_energy(CellJob{t, X, 1, 4, false, 0, 0, quick()});
  CHECK(a.m_value == doctest::Approx(b.m_value).epsilon(1e-8));
}

TEST_CASE("addition trick") {
  const auto c = addition_trick(make(DensityKind::ConstantPNorm, 2), identity(2), {1.0, 0.1, 0.0}, 1, 4, quick());
  REQUIRE(c.size() == 3);
  CHECK(c[0].cell.m_value == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(c[1].cell.m_value == doctest::Approx(2.2).epsilon(1e-10));
  CHECK(c[2].cell.m_value == doctest::Approx(2.0).epsilon(1e-10));

  const auto dw = make(DensityKind::ScalarDoubleWell, 1);
  const auto d = addition_trick(dw, zeros(1), {1.0, 0.3, 0.1, 0.03, 0.0}, 1, 64, SolveOptions{});
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i].cell.m_value < d[i - 1].cell.m_value);
  const auto plain = cell_energy(CellJob{dw, zeros(1), 1, 64, false, 0, 0, SolveOptions{}});
  CHECK(d.back().cell.m_value == plain.m_value);
  CHECK_THROWS_AS(addition_trick(dw, zeros(1), {1.0, 0.5}, 1, 8, quick()), ValidationError);
  CHECK_THROWS_AS(addition_trick(dw, zeros(1), {0.5, 1.0, 0.0}, 1, 8, quick()), ValidationError);
}

TEST_CASE("job validation") {
  auto V = make(DensityKind::LinearizedMultiWell, 2);
  V.wells = {zeros(2)};
  CHECK_THROWS_AS(validate(CellJob{V, identity(3), 1, 4, true, 0, 0, quick()}), ValidationError);
  CHECK_THROWS_AS(validate(CellJob{V, identity(2), 1, 4, true, -0.1, 0, quick()}), ValidationError);
  CHECK_THROWS_AS(validate(CellJob{V, identity(2), 1, 4, true, 0, -1.0, quick()}), ValidationError);
}

TEST_CASE("fingerprints and the disk cache") {
  const auto dir = std::filesystem::temp_directory_path() / "gammacell_cache_test";
  std::filesystem::remove_all(dir);
  const auto s = layered(DensityKind::SingleWell, 2);
  const CellJob job{s, m2(0.2, 0.1, 0, -0.1), 1, 4, false, 0, 0, quick()};
  const auto fp = job_fingerprint(job);
  REQUIRE(fp.has_value());
  CHECK(fp == job_fingerprint(job));
  CellJob other = job;
  other.res = 5;
  CHECK(fp != job_fingerprint(other));
  other = job;
  other.opts.seed = 1;
  CHECK(fp != job_fingerprint(other));

  RunContext ctx;
  ctx.cache_dir = dir;
  const auto a = cell_energy(job, ctx);
  CHECK_FALSE(a.cache_hit);
  CHECK(std::filesystem::exists(dir / *fp / "result.json"));
  CHECK(std::filesystem::exists(dir / *fp / "field.bin"));
  const auto b = cell_energy(job, ctx);
  CHECK(b.cache_hit);
  CHECK(b.m_value == a.m_value);
  CHECK(b.field.values == a.field.values);
  const auto c = cell_energy(job);  // recompute without cache
  CHECK(c.m_value == a.m_value);

  auto custom = make(DensityKind::CustomSampled, 2);
  custom.custom = [](const Mat& X) { return X.squaredNorm(); };
  CHECK_FALSE(job_fingerprint(CellJob{custom, identity(2), 1, 4, false, 0, 0, quick()}).has_value());
  std::filesystem::remove_all(dir);
}

TEST_CASE("nonnegativity for nonnegative densities") {
  const auto r = cell_energy(CellJob{layered(DensityKind::SingleWell, 2), m2(-0.4, 0.3, 0.2, 0.5), 1, 4, false, 0, 0, quick(4)});
  CHECK(r.m_value >= 0.0);
}
