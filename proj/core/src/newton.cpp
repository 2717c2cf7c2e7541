#include "pumrom/newton.hpp"

#include <chrono>
#include <limits>

#include <Eigen/SparseLU>

#include "pumrom/errors.hpp"

namespace pumrom {

std::vector<int> free_dofs(int n, const std::vector<int>& fixed) {
  std::vector<char> is_fixed(n, 0);
  for (int d : fixed) is_fixed[d] = 1;
  std::vector<int> out;
  out.reserve(n - fixed.size());
  for (int d = 0; d < n; ++d)
    if (!is_fixed[d]) out.push_back(d);
  return out;
}

Field solve_nonlinear(const Discretization& disc, const PDEModel& model,
                      const ModelParams& params, const SubdomainLayout& layout,
                      const DirichletBC& bc, const NewtonSettings& settings,
                      const Field* init, NewtonReport* report,
                      const std::vector<int>* elems) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = disc.num_dofs();
  Field u = init ? *init : Field::Zero(n);
  if (u.size() != n) throw ConfigError("solve_nonlinear: init size mismatch");
  for (size_t k = 0; k < bc.dofs.size(); ++k) u[bc.dofs[k]] = bc.values[k];
  const std::vector<int> free = free_dofs(n, bc.dofs);

  Eigen::SparseLU<SpMat> lu;
  bool pattern_ready = false;
  std::vector<double> history;
  double norm0 = -1.0;
  int it = 0;

  auto eval_residual = [&](const Field& state) {
    return masked_vector(
        assemble_residual(disc, model, params, layout, state, elems), free);
  };

  Eigen::VectorXd r = eval_residual(u);
  double norm = r.norm();
  norm0 = norm;
  history.push_back(norm);

  auto converged = [&](double nrm) {
    return nrm <= settings.abs_tol || (norm0 > 0.0 && nrm <= settings.rel_tol * norm0);
  };

  while (!converged(norm)) {
    if (it >= settings.max_iter)
      throw NonConvergence("solve_nonlinear: no convergence after " +
                               std::to_string(it) + " iterations",
                           history);
    const SpMat J = assemble_jacobian(disc, model, params, layout, u, elems);
    const SpMat Jf = masked_block(J, free);
    if (!pattern_ready) {
      lu.analyzePattern(Jf);
      pattern_ready = true;
    }
    lu.factorize(Jf);
    if (lu.info() != Eigen::Success)
      throw SingularJacobian("solve_nonlinear: jacobian factorization failed");
    const Eigen::VectorXd delta = lu.solve(-r);

    double t = 1.0;
    double best_norm = std::numeric_limits<double>::infinity();
    Field best_u = u;
    Eigen::VectorXd best_r;
    for (int h = 0; h <= settings.max_halvings; ++h) {
      Field trial = u;
      for (size_t k = 0; k < free.size(); ++k) trial[free[k]] += t * delta[k];
      Eigen::VectorXd tr = eval_residual(trial);
      const double tn = tr.norm();
      if (tn < best_norm) {
        best_norm = tn;
        best_u = std::move(trial);
        best_r = std::move(tr);
      }
      if (tn < norm * (1.0 - 1e-4 * t)) break;
      t *= 0.5;
    }
    u = std::move(best_u);
    r = std::move(best_r);
    norm = best_norm;
    history.push_back(norm);
    ++it;
    if (!std::isfinite(norm))
      throw NonConvergence("solve_nonlinear: residual diverged", history);
  }

  if (report) {
    report->iterations = it;
    report->residual_norms = history;
    report->wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }
  return u;
}

}  // namespace pumrom
