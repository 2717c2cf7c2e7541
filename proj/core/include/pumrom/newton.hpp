#pragma once

#include <optional>
#include <vector>

#include "pumrom/assembly.hpp"

namespace pumrom {

struct NewtonSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_iter = 25;
  int max_halvings = 8;  // backtracking line-search depth
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_norms;
  double wall_time_s = 0.0;
};

struct DirichletBC {
  std::vector<int> dofs;
  Eigen::VectorXd values;  // same length as dofs
};

// Newton with damping on the weak residual; Dirichlet data is imposed by
// lifting (values held in the state) with row/column elimination. Throws
// NonConvergence / SingularJacobian. With `elems` the weak form is integrated
// over that element subset only (every free DOF must be interior to it).
Field solve_nonlinear(const Discretization& disc, const PDEModel& model,
                      const ModelParams& params, const SubdomainLayout& layout,
                      const DirichletBC& bc, const NewtonSettings& settings = {},
                      const Field* init = nullptr, NewtonReport* report = nullptr,
                      const std::vector<int>* elems = nullptr);

// Free-DOF list complementary to the fixed set.
std::vector<int> free_dofs(int n, const std::vector<int>& fixed);

}  // namespace pumrom
