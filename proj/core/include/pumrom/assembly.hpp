#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pumrom/discretization.hpp"
#include "pumrom/models.hpp"

namespace pumrom {

using SpMat = Eigen::SparseMatrix<double>;

// Element -> subdomain lookup for a discretization laid over a SubdomainGrid.
struct SubdomainLayout {
  std::vector<int> elem_sub;
};
SubdomainLayout make_layout(const Discretization& disc, const SubdomainGrid& grid);

// Elementwise quadrature data shared by all assembly loops: tensor-product
// basis values and reference derivatives at the 2d quadrature points.
struct AssemblyTables {
  int nloc, nq;
  Eigen::MatrixXd N;    // (nq x nloc) values
  Eigen::MatrixXd Dx;   // reference d/dxi, scale by 2/hx per cell
  Eigen::MatrixXd Dy;   // reference d/deta, scale by 2/hy per cell
  Eigen::VectorXd wq;   // reference weights (product), scale by hx*hy/4
  Eigen::MatrixXd qx;   // (nq) reference coords in [-1,1]^2
};
const AssemblyTables& assembly_tables(const Discretization& disc);

// Per-quadrature-point callback: physical point, weight, local basis values
// (vals), physical gradients (gx, gy rows of the tables scaled), local dofs.
struct ElementContext {
  int element;
  int sub;
  const std::vector<int>* dofs;
  double sx, sy;  // 2/hx, 2/hy derivative scales
};

// Weak residual of G(u, .) over the given elements (all if elems == nullptr),
// including rows at Dirichlet DOFs; callers mask as needed.
Field assemble_residual(const Discretization& disc, const PDEModel& model,
                        const ModelParams& params, const SubdomainLayout& layout,
                        const Field& u, const std::vector<int>* elems = nullptr);

SpMat assemble_jacobian(const Discretization& disc, const PDEModel& model,
                        const ModelParams& params, const SubdomainLayout& layout,
                        const Field& u, const std::vector<int>* elems = nullptr);

// B^T r(u) assembled directly against the columns of a dense basis matrix.
Eigen::VectorXd assemble_reduced_residual(const Discretization& disc,
                                          const PDEModel& model,
                                          const ModelParams& params,
                                          const SubdomainLayout& layout,
                                          const Field& u,
                                          const Eigen::MatrixXd& B,
                                          const std::vector<int>* elems = nullptr);

// Bilinear form int coeff_d(x) grad(w).grad(v) + coeff_m(x) w v dx.
SpMat assemble_gram(const Discretization& disc,
                    const std::function<double(const Vec2&)>& coeff_d,
                    const std::function<double(const Vec2&)>& coeff_m,
                    const std::vector<int>* elems = nullptr);
SpMat assemble_h1_gram(const Discretization& disc,
                       const std::vector<int>* elems = nullptr);

// Gram of the map v -> I_h(w v) in H1: diag(w) G_h1 diag(w) with nodal w.
// With w == nullptr this is the plain H1 gram. Weight must be >= 0 nodally.
SpMat assemble_weighted_h1_gram(const Discretization& disc, const Field* weight,
                                const std::vector<int>* elems = nullptr);

// Extract the square block of A at the kept indices (in their given order).
SpMat masked_block(const SpMat& A, const std::vector<int>& keep);
Eigen::VectorXd masked_vector(const Eigen::VectorXd& v,
                              const std::vector<int>& keep);

// sqrt(f^T G^-1 f) restricted to the masked block. Throws IndefiniteGram if
// the block is not positive definite.
double dual_norm(const Eigen::VectorXd& f, const SpMat& gram,
                 const std::vector<int>& mask);

inline double gram_norm(const Eigen::VectorXd& u, const SpMat& G) {
  const double s = u.dot(G * u);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

double integrate(const Discretization& disc,
                 const std::function<double(const Vec2&)>& f,
                 const std::vector<int>* elems = nullptr);

// Quadrature of f(x, u(x), grad u(x)) against a FE state.
double integrate_state(const Discretization& disc, const Field& u,
                       const std::function<double(const Vec2&, double, const Vec2&)>& f,
                       const std::vector<int>* elems = nullptr);

}  // namespace pumrom
