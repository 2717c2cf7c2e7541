#pragma once

#include <Eigen/Dense>

namespace pumrom {

// Nodes and weights on the reference interval [-1,1].
struct QuadratureRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};

// Gauss-Legendre rule with n points, exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n);

// Gauss-Lobatto-Legendre nodes for polynomial degree p (p+1 nodes including
// the endpoints); these are the interpolation nodes of the spectral elements.
Eigen::VectorXd gll_nodes(int p);

// Values and derivatives of the Lagrange basis through `nodes` evaluated at
// `points`: vals(q,a) = L_a(points[q]).
struct LagrangeTable {
  Eigen::MatrixXd vals;
  Eigen::MatrixXd derivs;
};
LagrangeTable tabulate_lagrange(const Eigen::VectorXd& nodes,
                                const Eigen::VectorXd& points);

}  // namespace pumrom
