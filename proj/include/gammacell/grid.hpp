#pragma once

#include "gammacell/density.hpp"
#include "gammacell/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gammacell {

inline constexpr std::size_t kDefaultMaxNodes = 4'000'000;

// P1 Kuhn triangulation of the cube (0, k)^n with res subdivisions per unit
// length. Every cell is split into n! congruent simplices, one per axis
// permutation; shape-function gradients are stored once per permutation.
class Grid {
public:
  using ShapeGradients = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 3>;

  // With clamp_boundary = false no node is masked (free fields for the Korn
  // and Garding diagnostics).
  static Grid build(int n, int k, int res, std::size_t max_nodes = kDefaultMaxNodes,
                    bool clamp_boundary = true);

  int dim() const { return n_; }
  int k() const { return k_; }
  int res() const { return res_; }
  double h() const { return 1.0 / res_; }
  int nodes_per_axis() const { return k_ * res_ + 1; }

  std::size_t node_count() const { return node_count_; }
  std::size_t element_count() const { return element_template_.size(); }
  std::size_t dof_count() const { return node_count_ * static_cast<std::size_t>(n_); }

  Point node_coord(std::size_t node) const;
  std::span<const std::uint32_t> element_nodes(std::size_t e) const {
    return {element_nodes_.data() + e * static_cast<std::size_t>(n_ + 1),
            static_cast<std::size_t>(n_ + 1)};
  }
  // Row a holds the gradient of the barycentric coordinate of local vertex a.
  const ShapeGradients& shape_gradients(std::size_t e) const {
    return template_gradients_[element_template_[e]];
  }
  double element_volume() const { return volume_; }
  Point barycenter(std::size_t e) const;

  bool masked(std::size_t node) const { return mask_[node] != 0; }
  const std::vector<std::uint8_t>& dirichlet_mask() const { return mask_; }

private:
  int n_ = 1, k_ = 1, res_ = 2;
  std::size_t node_count_ = 0;
  double volume_ = 0.0;
  std::vector<std::uint32_t> element_nodes_;
  std::vector<std::uint8_t> element_template_;
  std::vector<ShapeGradients> template_gradients_;
  std::vector<Point> template_barycenter_offsets_;
  std::vector<std::uint8_t> mask_;
};

// Nodal displacement field, node-major (values[node * n + component]).
struct Field {
  int n = 1;
  int k = 1;
  int res = 2;
  std::vector<double> values;

  static Field zeros(const Grid& g);
  bool matches(const Grid& g) const {
    return n == g.dim() && k == g.k() && res == g.res() && values.size() == g.dof_count();
  }
};

// Nodal interpolant of u; masked nodes are forced to zero unless keep_boundary.
Field interpolate(const Grid& g, const std::function<Point(const Point&)>& u,
                  bool keep_boundary = false);

// Periodic extension of a zero-boundary field on (0, k)^n to (0, factor k)^n.
Field tile(const Field& f, int factor);

Mat element_gradient(const Grid& g, std::span<const double> values, std::size_t e);
inline Mat element_gradient(const Grid& g, const Field& f, std::size_t e) {
  return element_gradient(g, f.values, e);
}

// The cell integrand evaluated at G = X + grad(phi):
//   A = G (or sym(G)), value = f(x, A)                       when delta == 0,
//                      value = delta^{-p} f(x, I + delta A)  when delta > 0,
// plus lambda |A|^p.
struct CellIntegrand {
  DensitySpec spec;
  Mat X;
  bool symmetrized = false;
  double delta = 0.0;
  double lambda = 0.0;

  double value(const Point& x, const Mat& G) const;
  // Derivative with respect to G; finite differences when the density has no
  // analytic gradient.
  Mat gradient(const Point& x, const Mat& G) const;
};

double assemble_energy(const Grid& g, const CellIntegrand& integrand, std::span<const double> values);
// Writes the gradient with respect to every nodal value; masked entries are zero.
void assemble_gradient(const Grid& g, const CellIntegrand& integrand, std::span<const double> values,
                       std::span<double> grad);

double assemble_energy(const Grid& g, const DensitySpec& spec, const Mat& X, const Field& field,
                       bool symmetrized);
std::vector<double> assemble_gradient(const Grid& g, const DensitySpec& spec, const Mat& X,
                                      const Field& field, bool symmetrized);

}  // namespace gammacell
