#include "gammacell/grid.hpp"

#include "gammacell/error.hpp"
#include "gammacell/support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace gammacell {

Grid Grid::build(int n, int k, int res, std::size_t max_nodes, bool clamp_boundary) {
  require(n >= 1 && n <= 3, "grid dimension must be 1, 2 or 3");
  require(k >= 1, "cube side k must be >= 1");
  require(res >= 2, "resolution must be >= 2");
  Grid g;
  g.n_ = n;
  g.k_ = k;
  g.res_ = res;
  const std::size_t N = static_cast<std::size_t>(k) * static_cast<std::size_t>(res) + 1;
  std::size_t nodes = 1;
  for (int i = 0; i < n; ++i) {
    nodes *= N;
    if (nodes > max_nodes)
      throw ValidationError("grid with " + std::to_string(N) + "^" + std::to_string(n) +
                            " nodes exceeds the node cap " + std::to_string(max_nodes));
  }
  g.node_count_ = nodes;
  const double h = 1.0 / res;

  std::array<int, 3> perm{0, 1, 2};
  int factorial = 1;
  for (int i = 2; i <= n; ++i) factorial *= i;
  g.volume_ = std::pow(h, n) / factorial;

  // One template per permutation: v_0 = 0, v_{i+1} = v_i + e_{perm(i)}.
  std::vector<std::vector<std::array<int, 3>>> offsets;
  do {
    std::vector<std::array<int, 3>> verts(static_cast<std::size_t>(n + 1), {0, 0, 0});
    for (int i = 0; i < n; ++i) {
      verts[static_cast<std::size_t>(i + 1)] = verts[static_cast<std::size_t>(i)];
      verts[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] += 1;
    }
    Mat D(n, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) D(r, c) = h * verts[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(r)];
    const Mat Dinv = D.inverse();
    ShapeGradients grads(n + 1, n);
    grads.row(0).setZero();
    for (int a = 1; a <= n; ++a) {
      grads.row(a) = Dinv.row(a - 1);
      grads.row(0) -= Dinv.row(a - 1);
    }
    Point bc = Point::Zero(n);
    for (const auto& v : verts)
      for (int r = 0; r < n; ++r) bc(r) += h * v[static_cast<std::size_t>(r)];
    bc /= (n + 1);
    g.template_gradients_.push_back(grads);
    g.template_barycenter_offsets_.push_back(bc);
    offsets.push_back(verts);
  } while (std::next_permutation(perm.begin(), perm.begin() + n));

  const std::size_t cells_per_axis = N - 1;
  std::size_t cells = 1;
  for (int i = 0; i < n; ++i) cells *= cells_per_axis;
  g.element_nodes_.reserve(cells * offsets.size() * static_cast<std::size_t>(n + 1));
  g.element_template_.reserve(cells * offsets.size());
  std::array<std::size_t, 3> stride{1, N, N * N};
  for (std::size_t c = 0; c < cells; ++c) {
    std::array<std::size_t, 3> ci{0, 0, 0};
    std::size_t r = c;
    for (int i = 0; i < n; ++i) {
      ci[static_cast<std::size_t>(i)] = r % cells_per_axis;
      r /= cells_per_axis;
    }
    for (std::size_t t = 0; t < offsets.size(); ++t) {
      for (const auto& v : offsets[t]) {
        std::size_t id = 0;
        for (int i = 0; i < n; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          id += (ci[ui] + static_cast<std::size_t>(v[ui])) * stride[ui];
        }
        g.element_nodes_.push_back(static_cast<std::uint32_t>(id));
      }
      g.element_template_.push_back(static_cast<std::uint8_t>(t));
    }
  }

  g.mask_.assign(nodes, 0);
  if (!clamp_boundary) return g;
  for (std::size_t id = 0; id < nodes; ++id) {
    std::size_t r = id;
    for (int i = 0; i < n; ++i) {
      const std::size_t c = r % N;
      r /= N;
      if (c == 0 || c == N - 1) g.mask_[id] = 1;
    }
  }
  return g;
}

Point Grid::node_coord(std::size_t node) const {
  const std::size_t N = static_cast<std::size_t>(nodes_per_axis());
  Point x(n_);
  for (int i = 0; i < n_; ++i) {
    x(i) = static_cast<double>(node % N) * h();
    node /= N;
  }
  return x;
}

Point Grid::barycenter(std::size_t e) const {
  return node_coord(element_nodes(e)[0]) + template_barycenter_offsets_[element_template_[e]];
}

Field Field::zeros(const Grid& g) {
  return Field{g.dim(), g.k(), g.res(), std::vector<double>(g.dof_count(), 0.0)};
}

Field interpolate(const Grid& g, const std::function<Point(const Point&)>& u, bool keep_boundary) {
  Field f = Field::zeros(g);
  const auto n = static_cast<std::size_t>(g.dim());
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    if (!keep_boundary && g.masked(node)) continue;
    const Point v = u(g.node_coord(node));
    for (std::size_t c = 0; c < n; ++c) f.values[node * n + c] = v(static_cast<Eigen::Index>(c));
  }
  return f;
}

Field tile(const Field& f, int factor) {
  require(factor >= 1, "tile factor must be >= 1");
  const std::size_t N = static_cast<std::size_t>(f.k) * static_cast<std::size_t>(f.res) + 1;
  const std::size_t M = static_cast<std::size_t>(f.k * factor) * static_cast<std::size_t>(f.res) + 1;
  const auto n = static_cast<std::size_t>(f.n);
  std::size_t nodes = 1;
  for (std::size_t i = 0; i < n; ++i) nodes *= M;
  Field out{f.n, f.k * factor, f.res, std::vector<double>(nodes * n, 0.0)};
  for (std::size_t id = 0; id < nodes; ++id) {
    std::size_t r = id, src = 0, stride = 1;
    for (std::size_t i = 0; i < n; ++i) {
      src += ((r % M) % (N - 1)) * stride;
      r /= M;
      stride *= N;
    }
    for (std::size_t c = 0; c < n; ++c) out.values[id * n + c] = f.values[src * n + c];
  }
  return out;
}

Mat element_gradient(const Grid& g, std::span<const double> values, std::size_t e) {
  const int n = g.dim();
  const auto nodes = g.element_nodes(e);
  const auto& sg = g.shape_gradients(e);
  Mat G = zeros(n);
  for (int a = 0; a <= n; ++a) {
    const std::size_t base = nodes[static_cast<std::size_t>(a)] * static_cast<std::size_t>(n);
    for (int i = 0; i < n; ++i) {
      const double v = values[base + static_cast<std::size_t>(i)];
      if (v == 0.0) continue;
      for (int j = 0; j < n; ++j) G(i, j) += v * sg(a, j);
    }
  }
  return G;
}

double CellIntegrand::value(const Point& x, const Mat& G) const {
  const Mat A = symmetrized ? sym(G) : G;
  double v = 0.0;
  if (delta > 0.0)
    v = eval(spec, x, identity(spec.n) + delta * A) / std::pow(delta, spec.p);
  else
    v = eval(spec, x, A);
  if (lambda != 0.0) {
    const double r2 = A.squaredNorm();
    v += lambda * (spec.p == 2.0 ? r2 : std::pow(r2, 0.5 * spec.p));
  }
  return v;
}

Mat CellIntegrand::gradient(const Point& x, const Mat& G) const {
  const int n = spec.n;
  if (!spec.has_analytic_gradient()) {
    const double h = 1e-6 * (1.0 + G.norm());
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat Gp = G, Gm = G;
        Gp(i, j) += h;
        Gm(i, j) -= h;
        out(i, j) = (value(x, Gp) - value(x, Gm)) / (2.0 * h);
      }
    return out;
  }
  const Mat A = symmetrized ? sym(G) : G;
  Mat dA;
  if (delta > 0.0)
    dA = eval_grad_X(spec, x, identity(n) + delta * A) * std::pow(delta, 1.0 - spec.p);
  else
    dA = eval_grad_X(spec, x, A);
  if (lambda != 0.0) {
    const double r2 = A.squaredNorm();
    if (r2 > 0.0)
      dA += lambda * spec.p * (spec.p == 2.0 ? 1.0 : std::pow(r2, 0.5 * spec.p - 1.0)) * A;
  }
  return symmetrized ? sym(dA) : dA;
}

namespace {

void check_integrand(const Grid& g, const CellIntegrand& in, std::size_t nvalues) {
  require(in.spec.n == g.dim(), "density dimension does not match grid");
  require(in.X.rows() == g.dim() && in.X.cols() == g.dim(), "X dimension does not match grid");
  require(nvalues == g.dof_count(), "field size does not match grid");
}

double cell_volume(const Grid& g) { return std::pow(static_cast<double>(g.k()), g.dim()); }

}  // namespace

double assemble_energy(const Grid& g, const CellIntegrand& in, std::span<const double> values) {
  check_integrand(g, in, values.size());
  std::vector<double> contrib(g.element_count());
  for (std::size_t e = 0; e < g.element_count(); ++e)
    contrib[e] = in.value(g.barycenter(e), in.X + element_gradient(g, values, e));
  return g.element_volume() * pairwise_sum(contrib) / cell_volume(g);
}

void assemble_gradient(const Grid& g, const CellIntegrand& in, std::span<const double> values,
                       std::span<double> grad) {
  check_integrand(g, in, values.size());
  require(grad.size() == values.size(), "gradient buffer size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const int n = g.dim();
  const double w = g.element_volume() / cell_volume(g);
  for (std::size_t e = 0; e < g.element_count(); ++e) {
    const Mat D = w * in.gradient(g.barycenter(e), in.X + element_gradient(g, values, e));
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
}

double assemble_energy(const Grid& g, const DensitySpec& spec, const Mat& X, const Field& field,
                       bool symmetrized) {
  require(field.matches(g), "field does not belong to grid");
  return assemble_energy(g, CellIntegrand{spec, X, symmetrized}, field.values);
}

std::vector<double> assemble_gradient(const Grid& g, const DensitySpec& spec, const Mat& X,
                                      const Field& field, bool symmetrized) {
  require(field.matches(g), "field does not belong to grid");
  std::vector<double> grad(field.values.size());
  assemble_gradient(g, CellIntegrand{spec, X, symmetrized}, field.values, grad);
  return grad;
}

}  // namespace gammacell
