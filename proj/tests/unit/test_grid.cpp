#include <doctest.h>

#include "gammacell/error.hpp"
#include "gammacell/field_io.hpp"
#include "gammacell/grid.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace gammacell;

namespace {

DensitySpec constant(int n, double p = 2.0) {
  DensitySpec s;
  s.kind = DensityKind::ConstantPNorm;
  s.n = n;
  s.p = p;
  return s;
}

DensitySpec two_phase(DensityKind kind, int n, double p = 2.0) {
  DensitySpec s;
  s.kind = kind;
  s.n = n;
  s.p = p;
  s.a_default = 4.0;
  PhaseBox b;
  b.lo.assign(n, 0.0);
  b.hi.assign(n, 1.0);
  b.hi[0] = 0.5;
  b.a = 1.0;
  s.phases = {b};
  return s;
}

Field random_field(const Grid& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-amp, amp);
  Field f = Field::zeros(g);
  const auto n = static_cast<std::size_t>(g.dim());
  for (std::size_t node = 0; node < g.node_count(); ++node)
    for (std::size_t c = 0; c < n; ++c)
      if (!g.masked(node)) f.values[node * n + c] = u(rng);
  return f;
}

Mat random_mat(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = g(rng);
  return X;
}

}  // namespace

TEST_CASE("node and element counts") {
  const auto g1 = Grid::build(1, 1, 4);
  CHECK(g1.node_count() == 5);
  CHECK(g1.element_count() == 4);
  int masked = 0;
  for (std::size_t i = 0; i < g1.node_count(); ++i) masked += g1.masked(i);
  CHECK(masked == 2);
  CHECK(Grid::build(2, 1, 2).node_count() == 9);
  CHECK(Grid::build(2, 1, 2).element_count() == 8);
  CHECK(Grid::build(2, 2, 2).node_count() == 25);
  CHECK(Grid::build(2, 2, 2).element_count() == 32);
  CHECK(Grid::build(3, 1, 3).element_count() == 6 * 27);
}

TEST_CASE("build rejects bad parameters and enforces the node cap") {
  CHECK_THROWS_AS(Grid::build(4, 1, 4), ValidationError);
  CHECK_THROWS_AS(Grid::build(2, 0, 4), ValidationError);
  CHECK_THROWS_AS(Grid::build(2, 1, 1), ValidationError);
  CHECK_THROWS_AS(Grid::build(3, 8, 64, 1'000'000), ValidationError);
}

TEST_CASE("mesh invariants") {
  for (int n : {1, 2, 3}) {
    const auto g = Grid::build(n, 2, 3);
    const double total = g.element_volume() * static_cast<double>(g.element_count());
    CHECK(std::abs(total - std::pow(2.0, n)) <= 1e-12 * std::pow(2.0, n));
    for (std::size_t e = 0; e < g.element_count(); ++e) {
      const auto& G = g.shape_gradients(e);
      CHECK(G.colwise().sum().norm() <= 1e-12);
    }
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      const Point x = g.node_coord(node);
      bool boundary = false;
      for (int i = 0; i < n; ++i) boundary = boundary || x(i) == 0.0 || x(i) == 2.0;
      CHECK(g.masked(node) == boundary);
    }
  }
  const auto free = Grid::build(2, 1, 4, kDefaultMaxNodes, false);
  for (std::size_t node = 0; node < free.node_count(); ++node) CHECK_FALSE(free.masked(node));
}

TEST_CASE("elements tile the cube: barycenters inside, simplices disjoint in volume") {
  const auto g = Grid::build(2, 1, 3);
  for (std::size_t e = 0; e < g.element_count(); ++e) {
    const Point b = g.barycenter(e);
    Point mean = Point::Zero(2);
    for (auto node : g.element_nodes(e)) mean += g.node_coord(node) / 3.0;
    CHECK((b - mean).norm() <= 1e-14);
  }
}

TEST_CASE("affine reproduction of gradients") {
  std::mt19937_64 rng(1);
  for (int n : {1, 2, 3}) {
    const auto g = Grid::build(n, 1, 3);
    const Mat A = random_mat(n, rng);
    const Field f = interpolate(g, [&](const Point& x) { return Point(A * x); }, true);
    for (std::size_t e = 0; e < g.element_count(); ++e) CHECK((element_gradient(g, f, e) - A).norm() <= 1e-12);
    CHECK(element_gradient(g, Field::zeros(g), 0).norm() == 0.0);
  }
}

TEST_CASE("element gradient equals finite differences of the interpolant inside the simplex") {
  std::mt19937_64 rng(2);
  const auto g = Grid::build(2, 1, 4);
  const Field f = random_field(g, rng, 1.0);
  // Interpolant on element e at x by solving for barycentric coordinates from the vertices.
  auto interp = [&](std::size_t e, const Point& x) {
    const auto nodes = g.element_nodes(e);
    Eigen::Matrix3d B;
    for (int a = 0; a < 3; ++a) {
      const Point v = g.node_coord(nodes[a]);
      B(0, a) = v(0);
      B(1, a) = v(1);
      B(2, a) = 1.0;
    }
    const Eigen::Vector3d lam = B.partialPivLu().solve(Eigen::Vector3d(x(0), x(1), 1.0));
    Point u = Point::Zero(2);
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 2; ++c) u(c) += lam(a) * f.values[nodes[a] * 2 + c];
    return u;
  };
  for (std::size_t e = 0; e < g.element_count(); ++e) {
    const Point b = g.barycenter(e);
    const double h = 1e-3;
    Mat F(2, 2);
    for (int j = 0; j < 2; ++j) {
      Point p = b, m = b;
      p(j) += h;
      m(j) -= h;
      F.col(j) = (interp(e, p) - interp(e, m)) / (2 * h);
    }
    CHECK((element_gradient(g, f, e) - F).norm() <= 1e-12);
  }
}

TEST_CASE("energy reference values") {
  const auto g2 = Grid::build(2, 1, 4);
  CHECK(assemble_energy(g2, constant(2), identity(2), Field::zeros(g2), false) == doctest::Approx(2.0).epsilon(1e-14));
  const auto g1 = Grid::build(1, 1, 8);
  CHECK(assemble_energy(g1, two_phase(DensityKind::TwoPhasePNorm, 1), identity(1), Field::zeros(g1), false) ==
        doctest::Approx(2.5).epsilon(1e-14));
  const auto g1k = Grid::build(1, 4, 8);
  CHECK(assemble_energy(g1k, two_phase(DensityKind::TwoPhasePNorm, 1), identity(1), Field::zeros(g1k), false) ==
        doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("affine field energy equals the cell average at X + A") {
  std::mt19937_64 rng(3);
  const auto spec = two_phase(DensityKind::SingleWell, 2);
  const auto g = Grid::build(2, 1, 8);  // phase interface on element edges
  const Mat X = random_mat(2, rng), A = random_mat(2, rng);
  const Field f = interpolate(g, [&](const Point& x) { return Point(A * x); }, true);
  const double avg = 0.5 * eval(spec, Point::Constant(2, 0.25), X + A) + 0.5 * eval(spec, Point::Constant(2, 0.75), X + A);
  CHECK(assemble_energy(g, spec, X, f, false) == doctest::Approx(avg).epsilon(1e-12));
}

TEST_CASE("gradient consistency against central differences") {
  std::mt19937_64 rng(4);
  std::vector<std::pair<DensitySpec, bool>> cases;
  cases.emplace_back(constant(2), false);
  cases.emplace_back(two_phase(DensityKind::TwoPhasePNorm, 1, 3.0), false);
  cases.emplace_back(two_phase(DensityKind::SingleWell, 2), false);
  cases.emplace_back(two_phase(DensityKind::SingleWell, 3, 2.5), false);
  auto lw = two_phase(DensityKind::LinearizedMultiWell, 2);
  lw.wells = {zeros(2)};
  cases.emplace_back(lw, true);
  auto cs = constant(2);
  cs.kind = DensityKind::CustomSampled;
  cs.custom = [](const Mat& X) { return std::pow(X.squaredNorm() + 1.0, 1.5); };
  cases.emplace_back(cs, false);
  for (const auto& [spec, symmetrized] : cases) {
    const auto g = Grid::build(spec.n, 1, spec.n == 3 ? 2 : 4);
    const Mat X = random_mat(spec.n, rng);
    const Field f = random_field(g, rng, 0.2);
    const auto G = assemble_gradient(g, spec, X, f, symmetrized);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) scale = std::max(scale, std::abs(G[i]));
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (g.masked(i / static_cast<std::size_t>(spec.n))) {
        CHECK(G[i] == 0.0);
        continue;
      }
      Field p = f, m = f;
      const double h = 1e-6;
      p.values[i] += h;
      m.values[i] -= h;
      const double fd = (assemble_energy(g, spec, X, p, symmetrized) - assemble_energy(g, spec, X, m, symmetrized)) / (2 * h);
      worst = std::max(worst, std::abs(fd - G[i]) / scale);
    }
    CAPTURE(to_string(spec.kind));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("zero field at X = 0 for a constant density has zero gradient") {
  const auto g = Grid::build(2, 1, 4);
  for (double v : assemble_gradient(g, constant(2), zeros(2), Field::zeros(g), false)) CHECK(v == 0.0);
}

TEST_CASE("symmetrized skew X is invisible to a linear kind") {
  auto lw = two_phase(DensityKind::LinearizedMultiWell, 2);
  lw.wells = {zeros(2)};
  const auto g = Grid::build(2, 1, 4);
  Mat W(2, 2);
  W << 0, -1, 1, 0;
  CHECK(assemble_energy(g, lw, W, Field::zeros(g), true) == 0.0);
}

TEST_CASE("rescaled integrand with delta and the lambda term") {
  DensitySpec sw = two_phase(DensityKind::SingleWell, 2);
  sw.delta = 0.1;
  const auto g = Grid::build(2, 1, 2);
  Mat S(2, 2);
  S << 0.3, 0.1, 0.1, -0.2;
  CellIntegrand in{sw, S, false, 0.1, 0.0};
  const auto zero = Field::zeros(g).values;
  // For symmetric S with I + dS positive definite, dist(I + dS, SO(2)) = d |S|.
  CHECK(assemble_energy(g, in, zero) == doctest::Approx(2.5 * S.squaredNorm()).epsilon(1e-12));
  CellIntegrand lam{constant(2), identity(2), false, 0.0, 0.5};
  CHECK(assemble_energy(g, lam, zero) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("tile is periodic extension and keeps zero boundary") {
  std::mt19937_64 rng(5);
  const auto g = Grid::build(2, 1, 3);
  const Field f = random_field(g, rng, 1.0);
  const Field t = tile(f, 2);
  const auto g2 = Grid::build(2, 2, 3);
  REQUIRE(t.matches(g2));
  for (std::size_t node = 0; node < g2.node_count(); ++node) {
    if (g2.masked(node)) {
      CHECK(t.values[2 * node] == 0.0);
      continue;
    }
    const Point x = g2.node_coord(node);
    // Same position modulo the unit cell.
    const Point y = x.unaryExpr([](double v) { return v - std::floor(v); });
    for (std::size_t src = 0; src < g.node_count(); ++src) {
      if ((g.node_coord(src) - y).norm() < 1e-12) {
        CHECK(t.values[2 * node] == f.values[2 * src]);
        CHECK(t.values[2 * node + 1] == f.values[2 * src + 1]);
      }
    }
  }
  // Energy of a tiled field equals the energy on the unit cell.
  const auto spec = two_phase(DensityKind::SingleWell, 2);
  Mat X(2, 2);
  X << 0.2, 0.1, -0.3, 0.4;
  CHECK(assemble_energy(g2, spec, X, t, false) == doctest::Approx(assemble_energy(g, spec, X, f, false)).epsilon(1e-12));
}

TEST_CASE("field binary round trip") {
  std::mt19937_64 rng(6);
  const auto g = Grid::build(2, 2, 3);
  const Field f = random_field(g, rng, 1.0);
  const auto dir = std::filesystem::temp_directory_path() / "gammacell_field_io";
  std::filesystem::create_directories(dir);
  write_field(dir / "field.bin", f);
  CHECK(std::filesystem::file_size(dir / "field.bin") == 8 * f.values.size());
  CHECK(std::filesystem::exists(dir / "field.bin.json"));
  const Field r = read_field(dir / "field.bin");
  CHECK(r.n == 2);
  CHECK(r.k == 2);
  CHECK(r.res == 3);
  CHECK(r.values == f.values);
  std::filesystem::remove_all(dir);
}
