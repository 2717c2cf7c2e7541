#include "pumrom/discretization.hpp"

#include <algorithm>
#include <cmath>

#include "pumrom/errors.hpp"

namespace pumrom {

Grid1D uniform_grid(double a, double b, int ncells) {
  if (!(b > a)) throw ConfigError("uniform_grid: degenerate interval");
  if (ncells < 1) throw ConfigError("uniform_grid: need at least one cell");
  Grid1D g;
  g.breakpoints.resize(ncells + 1);
  for (int i = 0; i <= ncells; ++i)
    g.breakpoints[i] = a + (b - a) * i / ncells;
  g.breakpoints.back() = b;
  return g;
}

namespace {
std::vector<double> build_nodes(const Grid1D& g, const Eigen::VectorXd& gll) {
  const int p = static_cast<int>(gll.size()) - 1;
  std::vector<double> nodes(g.ncells() * p + 1);
  for (int c = 0; c < g.ncells(); ++c) {
    const double a = g.breakpoints[c], b = g.breakpoints[c + 1];
    for (int j = 0; j <= p; ++j)
      nodes[c * p + j] = a + (gll[j] + 1.0) * 0.5 * (b - a);
  }
  nodes.back() = g.hi();
  return nodes;
}
}  // namespace

Discretization::Discretization(Grid1D gx, Grid1D gy, int degree)
    : gx_(std::move(gx)), gy_(std::move(gy)), p_(degree) {
  if (p_ < 1) throw ConfigError("Discretization: degree must be >= 1");
  for (const Grid1D* g : {&gx_, &gy_}) {
    if (g->ncells() < 1) throw ConfigError("Discretization: empty grid");
    for (int i = 0; i < g->ncells(); ++i)
      if (!(g->breakpoints[i + 1] > g->breakpoints[i]))
        throw ConfigError("Discretization: breakpoints not increasing");
  }
  gll_ = gll_nodes(p_);
  rule_ = gauss_legendre(p_ + 2);  // order 2(p+2)-1 = 2p+3
  basis_quad_ = tabulate_lagrange(gll_, rule_.points);
  basis_nodes_ = tabulate_lagrange(gll_, gll_);
  nodes_x_ = build_nodes(gx_, gll_);
  nodes_y_ = build_nodes(gy_, gll_);
}

Discretization Discretization::uniform(const std::array<double, 4>& rect,
                                       int nx, int ny, int degree) {
  if (!(rect[2] > rect[0]) || !(rect[3] > rect[1]))
    throw ConfigError("Discretization: degenerate rectangle");
  return Discretization(uniform_grid(rect[0], rect[2], nx),
                        uniform_grid(rect[1], rect[3], ny), degree);
}

std::vector<int> Discretization::boundary_dofs() const {
  std::vector<int> out;
  const int nx = nodes_x(), ny = nodes_y();
  for (int ix = 0; ix < nx; ++ix) out.push_back(dof(ix, 0));
  for (int iy = 1; iy < ny - 1; ++iy) {
    out.push_back(dof(0, iy));
    out.push_back(dof(nx - 1, iy));
  }
  for (int ix = 0; ix < nx; ++ix) out.push_back(dof(ix, ny - 1));
  return out;
}

bool Discretization::on_boundary(int d) const {
  const int ix = d % nodes_x(), iy = d / nodes_x();
  return ix == 0 || iy == 0 || ix == nodes_x() - 1 || iy == nodes_y() - 1;
}

std::vector<int> Discretization::side_dofs(Side s) const {
  std::vector<int> out;
  const int nx = nodes_x(), ny = nodes_y();
  switch (s) {
    case Side::Bottom:
      for (int ix = 0; ix < nx; ++ix) out.push_back(dof(ix, 0));
      break;
    case Side::Top:
      for (int ix = 0; ix < nx; ++ix) out.push_back(dof(ix, ny - 1));
      break;
    case Side::Left:
      for (int iy = 0; iy < ny; ++iy) out.push_back(dof(0, iy));
      break;
    case Side::Right:
      for (int iy = 0; iy < ny; ++iy) out.push_back(dof(nx - 1, iy));
      break;
  }
  return out;
}

Field Discretization::interpolate(
    const std::function<double(const Vec2&)>& f) const {
  Field u(num_dofs());
  for (int iy = 0; iy < nodes_y(); ++iy)
    for (int ix = 0; ix < nodes_x(); ++ix)
      u[dof(ix, iy)] = f(Vec2(nodes_x_[ix], nodes_y_[iy]));
  return u;
}

int Discretization::find_cell(const Grid1D& g, double t) const {
  const auto& b = g.breakpoints;
  auto it = std::upper_bound(b.begin(), b.end(), t);
  int c = static_cast<int>(it - b.begin()) - 1;
  return std::clamp(c, 0, g.ncells() - 1);
}

namespace {
// Lagrange basis values (and derivatives) through GLL nodes at point xi.
void eval_basis_1d(const Eigen::VectorXd& nodes, double xi,
                   Eigen::VectorXd& vals, Eigen::VectorXd& ders) {
  Eigen::VectorXd pt(1);
  pt[0] = xi;
  LagrangeTable t = tabulate_lagrange(nodes, pt);
  vals = t.vals.row(0);
  ders = t.derivs.row(0);
}
}  // namespace

double Discretization::evaluate(const Field& u, const Vec2& x) const {
  const int ex = find_cell(gx_, x[0]), ey = find_cell(gy_, x[1]);
  const auto [ax, bx] = cell_x(ex);
  const auto [ay, by] = cell_y(ey);
  const double xix = 2.0 * (x[0] - ax) / (bx - ax) - 1.0;
  const double xiy = 2.0 * (x[1] - ay) / (by - ay) - 1.0;
  Eigen::VectorXd vx, dx, vy, dy;
  eval_basis_1d(gll_, xix, vx, dx);
  eval_basis_1d(gll_, xiy, vy, dy);
  double s = 0.0;
  for (int b = 0; b <= p_; ++b)
    for (int a = 0; a <= p_; ++a)
      s += u[element_dof(ex, ey, a, b)] * vx[a] * vy[b];
  return s;
}

Vec2 Discretization::evaluate_gradient(const Field& u, const Vec2& x) const {
  const int ex = find_cell(gx_, x[0]), ey = find_cell(gy_, x[1]);
  const auto [ax, bx] = cell_x(ex);
  const auto [ay, by] = cell_y(ey);
  const double xix = 2.0 * (x[0] - ax) / (bx - ax) - 1.0;
  const double xiy = 2.0 * (x[1] - ay) / (by - ay) - 1.0;
  Eigen::VectorXd vx, dx, vy, dy;
  eval_basis_1d(gll_, xix, vx, dx);
  eval_basis_1d(gll_, xiy, vy, dy);
  const double sx = 2.0 / (bx - ax), sy = 2.0 / (by - ay);
  Vec2 grad = Vec2::Zero();
  for (int b = 0; b <= p_; ++b)
    for (int a = 0; a <= p_; ++a) {
      const double c = u[element_dof(ex, ey, a, b)];
      grad[0] += c * dx[a] * sx * vy[b];
      grad[1] += c * vx[a] * dy[b] * sy;
    }
  return grad;
}

}  // namespace pumrom
