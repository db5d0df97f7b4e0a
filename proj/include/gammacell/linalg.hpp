#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace gammacell {

// Square matrix of dimension 1..3, stack allocated.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
// Point in R^n, n <= 3.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline Mat identity(int n) { return Mat::Identity(n, n); }
inline Mat zeros(int n) { return Mat::Zero(n, n); }

inline Mat sym(const Mat& X) { return 0.5 * (X + X.transpose()); }
inline Mat skew(const Mat& X) { return 0.5 * (X - X.transpose()); }

bool all_finite(const Mat& X);

// Row-major flattening, the wire order used by configs and reports.
std::vector<double> to_row_major(const Mat& X);
Mat from_row_major(std::span<const double> values);
std::string format_row_major(const Mat& X, char sep = ';');

struct Procrustes {
  Mat rotation;  // argmax over SO(n) of tr(R^T M)
  double trace;  // the maximum
};

// Solves max_{R in SO(n)} tr(R^T M). Closed form for n <= 2, SVD for n = 3.
Procrustes procrustes(const Mat& M);

// Principal square root of a symmetric positive definite matrix.
Mat spd_sqrt(const Mat& A);

// Uniform random rotation from a Gaussian matrix (QR, sign and determinant fixed).
template <class Rng>
Mat random_rotation(int n, Rng& rng);

}  // namespace gammacell

#include <random>

namespace gammacell {

template <class Rng>
Mat random_rotation(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  Mat Rf = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (Rf(j, j) < 0) Q.col(j) = -Q.col(j);
  if (Q.determinant() < 0) Q.col(0) = -Q.col(0);
  return Q;
}

}  // namespace gammacell
