#include <doctest.h>

#include "gammacell/error.hpp"
#include "gammacell/rigidity.hpp"

#include <cmath>
#include <numbers>

using namespace gammacell;

namespace {

DensitySpec make(DensityKind kind, int n, double p = 2.0) {
  DensitySpec s;
  s.kind = kind;
  s.n = n;
  s.p = p;
  return s;
}

Mat rot(double t) {
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

}  // namespace

TEST_CASE("Korn quotient of an infinitesimal rotation is sqrt(3) on the unit square") {
  const auto g = Grid::build(2, 1, 8, kDefaultMaxNodes, false);
  const auto u = interpolate(g, [](const Point& x) {
    Point v(2);
    v << -x(1), x(0);
    return v;
  }, true);
  const auto q = korn_norms(g, u.values);
  CHECK(q.sym <= 1e-13);
  CHECK(q.grad == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  CHECK(q.quotient() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("Korn quotient of a gradient field is below 1") {
  const auto g = Grid::build(2, 1, 8, kDefaultMaxNodes, false);
  const auto u = interpolate(g, [](const Point& x) {
    Point v(2);
    v << x(0) * x(0), 0.3 * x(1);
    return v;
  }, true);
  CHECK(korn_norms(g, u.values).quotient() < 1.0);
}

TEST_CASE("Korn constant: lower bound, refinement-stable") {
  KornOptions o;
  o.n_starts = 2;
  o.max_iter = 200;
  const auto a = korn_constant(Grid::build(2, 1, 16, kDefaultMaxNodes, false), 2.0, o);
  const auto b = korn_constant(Grid::build(2, 1, 32, kDefaultMaxNodes, false), 2.0, o);
  CHECK(a.value >= std::sqrt(3.0) - 1e-9);
  CHECK(b.value >= std::sqrt(3.0) - 1e-9);
  CHECK(std::abs(a.value - b.value) / b.value <= 0.15);
  CHECK(a.certified_side == "lower bound of true constant");
  CHECK(a.kind == ConstantKind::Korn);
}

TEST_CASE("Korn constant for p != 2 uses random search") {
  KornOptions o;
  o.random_samples = 8;
  const auto a = korn_constant(Grid::build(2, 1, 4, kDefaultMaxNodes, false), 3.0, o);
  CHECK(a.method == "random-search");
  CHECK(a.value > 0.0);
}

TEST_CASE("best rotation recovers a rigid motion") {
  const auto g = Grid::build(2, 1, 4, kDefaultMaxNodes, false);
  const Mat R = rot(0.7);
  const auto y = interpolate(g, [&](const Point& x) { return Point(R * x); }, true);
  CHECK((best_rotation(g, y.values, 2.0) - R).norm() <= 1e-12);
  CHECK((best_rotation(g, y.values, 3.0) - R).norm() <= 1e-6);
}

TEST_CASE("rigidity ratio: >= 1, rigid samples skipped") {
  const auto g = Grid::build(2, 1, 8, kDefaultMaxNodes, false);
  std::vector<Field> ys;
  ys.push_back(interpolate(g, [](const Point& x) { return Point(rot(0.3) * x); }, true));
  ys.push_back(interpolate(g, [](const Point& x) {
    Point v(2);
    v << x(0) + 0.2 * std::sin(std::numbers::pi * x(1)), x(1);
    return v;
  }, true));
  ys.push_back(interpolate(g, [](const Point& x) {
    const double t = 0.5 * x(0);
    Point v(2);
    v << std::cos(t) * x(0) - std::sin(t) * x(1), std::sin(t) * x(0) + std::cos(t) * x(1);
    return v;
  }, true));
  const auto r = rigidity_ratio(g, ys);
  CHECK(r.skipped == 1);
  CHECK(r.samples_used == 2);
  CHECK(std::isnan(r.per_sample[0]));
  CHECK(r.per_sample[1] >= 1.0 - 1e-12);
  CHECK(r.per_sample[2] >= 1.0 - 1e-12);
  CHECK(r.value == std::max(r.per_sample[1], r.per_sample[2]));
}

TEST_CASE("deformation from a cell minimizer") {
  const auto g = Grid::build(2, 1, 4);
  Mat X(2, 2);
  X << 0.1, 0.2, -0.3, 0.0;
  const auto y = deformation_from_cell(g, X, 0.5, Field::zeros(g));
  for (std::size_t e = 0; e < g.element_count(); ++e)
    CHECK((element_gradient(g, y, e) - (identity(2) + 0.5 * X)).norm() <= 1e-12);
}

TEST_CASE("Zhang margins vanish on SO(2), are nonnegative nearby") {
  const auto W = make(DensityKind::SingleWell, 2);
  SolveOptions o;
  o.n_starts = 2;
  Mat S(2, 2);
  S << 1.2, 0.0, 0.0, 0.9;
  const auto rep = zhang_check(W, {rot(0.0), rot(1.1), S}, 1.0, 0.5, 4, o);
  REQUIRE(rep.rows.size() == 3);
  CHECK(std::abs(rep.rows[0].margin) <= 1e-12);
  CHECK(std::abs(rep.rows[1].margin) <= 1e-12);
  CHECK(rep.rows[2].margin >= 0.0);
  CHECK(rep.all_pass());
  CHECK_THROWS_AS(zhang_check(make(DensityKind::ConstantPNorm, 2), {S}, 1.0, 1.0, 4, o), ValidationError);
}

TEST_CASE("Garding check") {
  const auto g = Grid::build(2, 1, 4, kDefaultMaxNodes, false);
  const auto C = make(DensityKind::ConstantPNorm, 2);
  const auto ok = garding_check(C, g, 1.0, 0.0, 6, 3);
  CHECK(ok.pass());
  CHECK(ok.samples >= 6);
  const auto bad = garding_check(C, g, 2.0, 0.0, 4, 3);
  CHECK_FALSE(bad.pass());
  CHECK(bad.worst_residual < 0.0);
  CHECK_THROWS_AS(garding_check(C, g, 0.0, 0.0, 4, 3), ValidationError);
}
