#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pumrom/quadrature.hpp"

namespace pumrom {

using Vec2 = Eigen::Vector2d;
using Field = Eigen::VectorXd;  // nodal coefficients, one entry per DOF

// Strictly increasing cell breakpoints along one axis.
struct Grid1D {
  std::vector<double> breakpoints;
  int ncells() const { return static_cast<int>(breakpoints.size()) - 1; }
  double lo() const { return breakpoints.front(); }
  double hi() const { return breakpoints.back(); }
};

Grid1D uniform_grid(double a, double b, int ncells);

// Structured tensor-product spectral-element space on a rectangle.
// Nodes are GLL points per cell; quadrature is Gauss-Legendre of order 2p+3.
class Discretization {
 public:
  Discretization(Grid1D gx, Grid1D gy, int degree);
  static Discretization uniform(const std::array<double, 4>& rect /*x0,y0,x1,y1*/,
                                int nx, int ny, int degree);

  int degree() const { return p_; }
  int ncells_x() const { return gx_.ncells(); }
  int ncells_y() const { return gy_.ncells(); }
  int num_elements() const { return ncells_x() * ncells_y(); }
  int nodes_x() const { return ncells_x() * p_ + 1; }
  int nodes_y() const { return ncells_y() * p_ + 1; }
  int num_dofs() const { return nodes_x() * nodes_y(); }

  const Grid1D& grid_x() const { return gx_; }
  const Grid1D& grid_y() const { return gy_; }
  std::array<double, 4> rect() const {
    return {gx_.lo(), gy_.lo(), gx_.hi(), gy_.hi()};
  }

  double node_x(int ix) const { return nodes_x_[ix]; }
  double node_y(int iy) const { return nodes_y_[iy]; }
  int dof(int ix, int iy) const { return iy * nodes_x() + ix; }
  Vec2 node(int d) const {
    return {nodes_x_[d % nodes_x()], nodes_y_[d / nodes_x()]};
  }

  // Element (ex,ey) covers cell_x(ex) x cell_y(ey); its (p+1)^2 local nodes
  // map to global DOFs via element_dofs.
  std::array<double, 2> cell_x(int ex) const {
    return {gx_.breakpoints[ex], gx_.breakpoints[ex + 1]};
  }
  std::array<double, 2> cell_y(int ey) const {
    return {gy_.breakpoints[ey], gy_.breakpoints[ey + 1]};
  }
  int element_id(int ex, int ey) const { return ey * ncells_x() + ex; }
  std::array<int, 2> element_xy(int e) const {
    return {e % ncells_x(), e / ncells_x()};
  }
  // Global DOF of local tensor node (a,b), a,b in 0..p.
  int element_dof(int ex, int ey, int a, int b) const {
    return dof(ex * p_ + a, ey * p_ + b);
  }

  const Eigen::VectorXd& gll() const { return gll_; }
  const QuadratureRule& rule_1d() const { return rule_; }
  // Lagrange values/derivatives of the GLL basis at the 1d quadrature points
  // of the reference interval [-1,1]; derivatives need the per-cell 2/h scale.
  const LagrangeTable& basis_at_quad() const { return basis_quad_; }
  // Same tables at the GLL nodes themselves (for nodal gradient evaluation).
  const LagrangeTable& basis_at_nodes() const { return basis_nodes_; }

  std::vector<int> boundary_dofs() const;
  bool on_boundary(int d) const;
  // DOF indices along one side, ordered by the running coordinate.
  enum class Side { Bottom, Right, Top, Left };
  std::vector<int> side_dofs(Side s) const;

  // Nodal interpolation of a scalar function.
  Field interpolate(const std::function<double(const Vec2&)>& f) const;

  // Point evaluation of a FE function (and gradient) at x inside the domain.
  double evaluate(const Field& u, const Vec2& x) const;
  Vec2 evaluate_gradient(const Field& u, const Vec2& x) const;

  // Locate the cell containing coordinate t along one axis (clamped).
  int find_cell(const Grid1D& g, double t) const;

 private:
  Grid1D gx_, gy_;
  int p_;
  std::vector<double> nodes_x_, nodes_y_;
  Eigen::VectorXd gll_;
  QuadratureRule rule_;
  LagrangeTable basis_quad_;
  LagrangeTable basis_nodes_;
};

// Count of DOFs used by build tests; free function mirroring the contract
// "nodal count per direction = ncells*p+1".
inline int expected_dofs(int nx, int ny, int p) {
  return (nx * p + 1) * (ny * p + 1);
}

}  // namespace pumrom
