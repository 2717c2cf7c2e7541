#pragma once

#include <string>
#include <vector>

#include "pumrom/training.hpp"

namespace pumrom {

// One reduced basis per archetype. Sizes normally agree; enrichment may grow
// them independently, so the ROM tracks per-component block sizes.
struct BasisSet {
  ReducedBasis corner{Archetype::Corner, {}};
  ReducedBasis edge{Archetype::Edge, {}};
  ReducedBasis internal{Archetype::Internal, {}};

  const ReducedBasis& at(Archetype t) const {
    switch (t) {
      case Archetype::Corner: return corner;
      case Archetype::Edge: return edge;
      default: return internal;
    }
  }
  ReducedBasis& at(Archetype t) {
    switch (t) {
      case Archetype::Corner: return corner;
      case Archetype::Edge: return edge;
      default: return internal;
    }
  }
};

// Truncate every archetype basis to its leading n modes.
BasisSet truncate(const BasisSet& bases, int n);

// Galerkin system over the glued space span{ I_h(phi_j zeta_i o Phi_j^-1) }.
// Coefficients are component-major: mode i of component j sits at
// offset[j] + i (j*n + i when all blocks share size n).
struct GlobalROMSystem {
  const GlobalSpace* space = nullptr;
  std::vector<int> offset;  // per component start, size num_components()+1
  std::vector<SpMat> Z;     // per component: (global dofs x n_j), Dirichlet rows 0
  SpMat Z_full;             // column concatenation of Z

  int num_components() const { return static_cast<int>(Z.size()); }
  int N() const { return offset.back(); }
  int block_size(int j) const { return offset[j + 1] - offset[j]; }
  // Common block size, or -1 when archetype sizes differ.
  int uniform_size() const;
};

GlobalROMSystem assemble_rom(const GlobalSpace& space, const BasisSet& bases);

// Residual entries G_mu(u, zeta_{i,j}); each component block integrates over
// its own cover only (test functions vanish elsewhere).
Eigen::VectorXd reduced_residual(const GlobalROMSystem& sys, const PDEModel& model,
                                 const ModelParams& params,
                                 const Eigen::VectorXd& coeffs);

// Analytic Jacobian; block (j,k) present only for k in Neigh(j).
SpMat reduced_jacobian(const GlobalROMSystem& sys, const PDEModel& model,
                       const ModelParams& params, const Eigen::VectorXd& coeffs);

// Nodal HF field sum_j Z_j c_j.
Field reconstruct(const GlobalROMSystem& sys, const Eigen::VectorXd& coeffs);

struct ReducedState {
  Eigen::VectorXd coeffs;  // length N
  NewtonReport report;
};

// Damped Newton on the reduced residual; zero initial state by default.
ReducedState solve_rom(const GlobalROMSystem& sys, const PDEModel& model,
                       const ModelParams& params,
                       const NewtonSettings& settings = {},
                       const Eigen::VectorXd* init = nullptr);

// Best-approximation coefficients of a global field under `gram` (normal
// equations on the reduced space).
Eigen::VectorXd project_to_rom(const GlobalROMSystem& sys, const SpMat& gram,
                               const Field& u);

// Full-order reference: Newton on the global mesh with zero boundary values.
Field solve_global_hf(const GlobalSpace& space, const PDEModel& model,
                      const ModelParams& params,
                      const NewtonSettings& settings = {},
                      const Field* init = nullptr, NewtonReport* report = nullptr);

void save_state(const std::string& path, const ReducedState& state);
ReducedState load_state(const std::string& path);

}  // namespace pumrom
