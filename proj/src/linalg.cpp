#include "gammacell/linalg.hpp"

#include "gammacell/error.hpp"
#include "gammacell/support.hpp"

#include <cmath>

namespace gammacell {

bool all_finite(const Mat& X) { return X.allFinite(); }

std::vector<double> to_row_major(const Mat& X) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(X.size()));
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < X.cols(); ++j) out.push_back(X(i, j));
  return out;
}

Mat from_row_major(std::span<const double> values) {
  int n = 0;
  switch (values.size()) {
    case 1: n = 1; break;
    case 4: n = 2; break;
    case 9: n = 3; break;
    default:
      throw ValidationError("matrix needs 1, 4 or 9 row-major entries, got " +
                            std::to_string(values.size()));
  }
  Mat X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = values[static_cast<std::size_t>(i * n + j)];
  return X;
}

std::string format_row_major(const Mat& X, char sep) {
  std::string out;
  for (double v : to_row_major(X)) {
    if (!out.empty()) out += sep;
    out += format_double(v);
  }
  return out;
}

Procrustes procrustes(const Mat& M) {
  const int n = static_cast<int>(M.rows());
  if (n == 1) return {identity(1), M(0, 0)};
  if (n == 2) {
    const double c = M(0, 0) + M(1, 1);
    const double s = M(1, 0) - M(0, 1);
    const double r = std::hypot(c, s);
    Mat R = identity(2);
    if (r > 0.0) {
      R(0, 0) = c / r;
      R(1, 1) = c / r;
      R(1, 0) = s / r;
      R(0, 1) = -s / r;
    }
    return {R, r};
  }
  Eigen::Matrix3d M3 = M;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M3, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  const double d = (U * V.transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Eigen::Vector3d sv = svd.singularValues();
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = d;
  Mat R = U * D * V.transpose();
  return {R, sv(0) + sv(1) + d * sv(2)};
}

Mat spd_sqrt(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  if (n == 1) {
    require(A(0, 0) > 0.0, "spd_sqrt: matrix not positive definite");
    return Mat::Constant(1, 1, std::sqrt(A(0, 0)));
  }
  if (n == 2) {
    const double det = A.determinant();
    require(det > 0.0 && A.trace() > 0.0, "spd_sqrt: matrix not positive definite");
    const double s = std::sqrt(det);
    const double t = std::sqrt(A.trace() + 2.0 * s);
    return (A + s * identity(2)) / t;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(Eigen::Matrix3d(sym(A)));
  require(es.eigenvalues().minCoeff() > 0.0, "spd_sqrt: matrix not positive definite");
  return es.operatorSqrt();
}

}  // namespace gammacell
