#include <doctest.h>

#include "gammacell/envelope.hpp"
#include "gammacell/error.hpp"

#include <cmath>

using namespace gammacell;

namespace {

DensitySpec make(DensityKind kind, int n, double p = 2.0) {
  DensitySpec s;
  s.kind = kind;
  s.n = n;
  s.p = p;
  return s;
}

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

}  // namespace

TEST_CASE("1D convex hull of the double well") {
  std::vector<double> xs, ys;
  for (int i = -200; i <= 200; ++i) {
    const double x = i / 100.0;
    xs.push_back(x);
    ys.push_back((x * x - 1) * (x * x - 1));
  }
  const auto hull = convexify_1d(xs, ys);
  for (double x : {-0.9, -0.3, 0.0, 0.5, 1.0}) CHECK(std::abs(hull(x)) <= 1e-12);
  for (double x : {-1.8, 1.3, 1.95}) CHECK(hull(x) == doctest::Approx((x * x - 1) * (x * x - 1)).epsilon(0.01));
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(hull(xs[i]) <= ys[i] + 1e-12);
  // Slopes nondecreasing.
  for (std::size_t i = 2; i < hull.xs.size(); ++i) {
    const double s0 = (hull.ys[i - 1] - hull.ys[i - 2]) / (hull.xs[i - 1] - hull.xs[i - 2]);
    const double s1 = (hull.ys[i] - hull.ys[i - 1]) / (hull.xs[i] - hull.xs[i - 1]);
    CHECK(s1 >= s0 - 1e-12);
  }
}

TEST_CASE("convexify_1d rejects bad input") {
  const std::vector<double> one{0.0};
  CHECK_THROWS_AS(convexify_1d(one, one), ValidationError);
  const std::vector<double> xs{0.0, 2.0, 1.0}, ys{0, 0, 0};
  CHECK_THROWS_AS(convexify_1d(xs, ys), ValidationError);
}

TEST_CASE("a convex hull of a convex function is itself") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 20; ++i) {
    xs.push_back(i * 0.1);
    ys.push_back(std::exp(i * 0.1));
  }
  const auto hull = convexify_1d(xs, ys);
  CHECK(hull.xs.size() == xs.size());
}

TEST_CASE("rank-one net") {
  const auto net = rank_one_net(2, 8, {1.0});
  CHECK(net.size() == 64);
  for (const auto& M : net) {
    Eigen::JacobiSVD<Mat> svd(M);
    CHECK(svd.singularValues()(1) <= 1e-12);
    CHECK(svd.singularValues()(0) == doctest::Approx(1.0));
  }
  CHECK(rank_one_net(1, 16, {0.5, 2.0}).size() == 2);
  const auto l = default_lambda_net();
  CHECK(l.size() == 7);
  CHECK(l.front() == 0.125);
}

TEST_CASE("qc_cell: convex density is reproduced") {
  Mat X(2, 2);
  X << 0.3, -0.2, 0.5, 1.0;
  const auto r = qc_cell(make(DensityKind::ConstantPNorm, 2), X, 4, SolveOptions{});
  CHECK(r.value == doctest::Approx(X.squaredNorm()).epsilon(1e-8));
  CHECK(r.bound == "upper bound");
  CHECK(r.method == EnvelopeMethod::QcCell);
}

TEST_CASE("qc_cell below the density, above the convex hull") {
  const auto dw = make(DensityKind::ScalarDoubleWell, 1);
  for (double x : {0.0, 0.5, 1.5}) {
    const auto r = qc_cell(dw, scalar(x), 64, SolveOptions{});
    const double W = std::min((x - 1) * (x - 1), (x + 1) * (x + 1));
    CHECK(r.value <= W + 1e-12);
    CHECK(r.value >= -1e-12);
  }
  CHECK(qc_cell(dw, scalar(0.0), 64, SolveOptions{}).value <= 0.05);
  CHECK(qc_cell(dw, scalar(1.5), 64, SolveOptions{}).value == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("laminates") {
  const auto dw = make(DensityKind::ScalarDoubleWell, 1);
  const auto net = rank_one_net(1, 16, {0.5, 1.0, 2.0});
  const auto lam = default_lambda_net();
  CHECK_THROWS_AS(laminate(dw, scalar(0.0), 0, net, lam), ValidationError);
  const auto d1 = laminate(dw, scalar(0.0), 1, net, lam);
  CHECK(d1.value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d1.depth == 1);
  CHECK(d1.bound == "upper bound");
  // Deeper never worse.
  const auto a1 = laminate(dw, scalar(0.3), 1, net, lam);
  const auto a2 = laminate(dw, scalar(0.3), 2, net, lam);
  CHECK(a2.value <= a1.value + 1e-15);
  CHECK(a1.value <= 0.49 + 1e-12);

  // Single well in 2D at a symmetric X: laminate <= W and >= 0.
  const auto sw = make(DensityKind::SingleWell, 2);
  Mat X(2, 2);
  X << 0.6, 0.0, 0.0, 0.6;
  const auto s = laminate(sw, X, 1, rank_one_net(2, 8, {0.5, 1.0}), lam);
  CHECK(s.value <= 0.32 + 1e-12);
  CHECK(s.value >= 0.0);
}

TEST_CASE("laminate memo cap is enforced") {
  LaminateOptions o;
  o.max_memo_entries = 1;
  const auto net = rank_one_net(2, 16, {0.5, 1.0, 2.0});
  CHECK_THROWS(laminate(make(DensityKind::SingleWell, 2), Mat::Zero(2, 2), 3, net, default_lambda_net(), o));
}
