#include "pumrom/rom.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/SparseLU>

#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"

namespace pumrom {

BasisSet truncate(const BasisSet& bases, int n) {
  BasisSet out = bases;
  for (Archetype t : {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    const auto& src = bases.at(t);
    if (src.size() < n)
      throw ConfigError("truncate: " + archetype_name(t) + " basis has " +
                        std::to_string(src.size()) + " < " + std::to_string(n) +
                        " modes");
    out.at(t).modes = src.modes.leftCols(n);
  }
  return out;
}

int GlobalROMSystem::uniform_size() const {
  const int n = block_size(0);
  for (int j = 1; j < num_components(); ++j)
    if (block_size(j) != n) return -1;
  return n;
}

GlobalROMSystem assemble_rom(const GlobalSpace& space, const BasisSet& bases) {
  const int nc = static_cast<int>(space.cfg.components.size());
  for (int j = 0; j < nc; ++j) {
    const Archetype t = space.cfg.components[j].type;
    if (bases.at(t).size() < 1)
      throw ConfigError("assemble_rom: empty " + archetype_name(t) + " basis");
    if (bases.at(t).modes.rows() != space.lib->at(t).domain.num_dofs())
      throw ConfigError("assemble_rom: basis rows do not match the " +
                        archetype_name(t) + " domain");
  }

  GlobalROMSystem sys;
  sys.space = &space;
  const int dofs = space.disc.num_dofs();
  std::vector<char> fixed(dofs, 0);
  for (int d : space.dirichlet) fixed[d] = 1;

  sys.offset.assign(1, 0);
  sys.Z.reserve(nc);
  std::vector<Eigen::Triplet<double>> all;
  for (int j = 0; j < nc; ++j) {
    const Eigen::MatrixXd& modes = bases.at(space.cfg.components[j].type).modes;
    const int n = static_cast<int>(modes.cols());
    const std::vector<int>& nmap = space.node_map[j];
    const Field& phi = space.pou.phi[j];
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i)
      for (size_t d = 0; d < nmap.size(); ++d) {
        const int g = nmap[d];
        if (fixed[g] || phi[g] == 0.0) continue;
        const double v = phi[g] * modes(static_cast<Eigen::Index>(d), i);
        if (v != 0.0) {
          trip.emplace_back(g, i, v);
          all.emplace_back(g, sys.offset[j] + i, v);
        }
      }
    SpMat Zj(dofs, n);
    Zj.setFromTriplets(trip.begin(), trip.end());
    sys.Z.push_back(std::move(Zj));
    sys.offset.push_back(sys.offset.back() + n);
  }
  sys.Z_full.resize(dofs, sys.N());
  sys.Z_full.setFromTriplets(all.begin(), all.end());
  return sys;
}

Field reconstruct(const GlobalROMSystem& sys, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != sys.N())
    throw ConfigError("reconstruct: coefficient vector has wrong length");
  return sys.Z_full * coeffs;
}

Eigen::VectorXd reduced_residual(const GlobalROMSystem& sys, const PDEModel& model,
                                 const ModelParams& params,
                                 const Eigen::VectorXd& coeffs) {
  const GlobalSpace& space = *sys.space;
  const Field u = reconstruct(sys, coeffs);
  Eigen::VectorXd R(sys.N());
  for (int j = 0; j < sys.num_components(); ++j) {
    const Field r = assemble_residual(space.disc, model, params, space.layout, u,
                                      &space.cover_elems[j]);
    R.segment(sys.offset[j], sys.block_size(j)) = sys.Z[j].transpose() * r;
  }
  return R;
}

SpMat reduced_jacobian(const GlobalROMSystem& sys, const PDEModel& model,
                       const ModelParams& params, const Eigen::VectorXd& coeffs) {
  const GlobalSpace& space = *sys.space;
  const Field u = reconstruct(sys, coeffs);
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < sys.num_components(); ++j) {
    const SpMat J = assemble_jacobian(space.disc, model, params, space.layout, u,
                                      &space.cover_elems[j]);
    const SpMat ZtJ = SpMat(sys.Z[j].transpose()) * J;
    for (int k : space.neighbors[j]) {
      const Eigen::MatrixXd block = Eigen::MatrixXd(ZtJ * sys.Z[k]);
      for (int b = 0; b < sys.block_size(k); ++b)
        for (int a = 0; a < sys.block_size(j); ++a)
          if (block(a, b) != 0.0)
            trip.emplace_back(sys.offset[j] + a, sys.offset[k] + b, block(a, b));
    }
  }
  SpMat J(sys.N(), sys.N());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

ReducedState solve_rom(const GlobalROMSystem& sys, const PDEModel& model,
                       const ModelParams& params, const NewtonSettings& settings,
                       const Eigen::VectorXd* init) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  ReducedState state;
  state.coeffs = init ? *init : Eigen::VectorXd::Zero(sys.N());
  if (state.coeffs.size() != sys.N())
    throw ConfigError("solve_rom: initial state has wrong length");

  Eigen::VectorXd r = reduced_residual(sys, model, params, state.coeffs);
  double norm = r.norm();
  const double stop = std::max(settings.abs_tol, settings.rel_tol * norm);
  state.report.residual_norms.push_back(norm);

  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
  for (int it = 0; it < settings.max_iter; ++it) {
    if (norm <= stop) {
      state.report.wall_time_s = elapsed();
      return state;
    }
    SpMat J = reduced_jacobian(sys, model, params, state.coeffs);
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw SingularJacobian("solve_rom: reduced Jacobian factorization failed");
    const Eigen::VectorXd step = lu.solve(-r);

    double t = 1.0;
    Eigen::VectorXd best_c = state.coeffs, best_r = r;
    double best_norm = norm;
    bool accepted = false;
    for (int h = 0; h <= settings.max_halvings; ++h, t *= 0.5) {
      const Eigen::VectorXd c_t = state.coeffs + t * step;
      const Eigen::VectorXd r_t = reduced_residual(sys, model, params, c_t);
      const double tn = r_t.norm();
      if (std::isfinite(tn) && tn < best_norm) {
        best_c = c_t;
        best_r = r_t;
        best_norm = tn;
      }
      if (std::isfinite(tn) && tn < norm * (1.0 - 1e-4 * t)) {
        accepted = true;
        break;
      }
    }
    if (!accepted && best_norm >= norm) {
      state.report.iterations = it + 1;
      throw NonConvergence("solve_rom: line search stalled",
                           state.report.residual_norms);
    }
    state.coeffs = std::move(best_c);
    r = std::move(best_r);
    norm = best_norm;
    state.report.residual_norms.push_back(norm);
    state.report.iterations = it + 1;
  }
  if (norm <= stop) {
    state.report.wall_time_s = elapsed();
    return state;
  }
  throw NonConvergence("solve_rom: no convergence in " +
                           std::to_string(settings.max_iter) + " iterations",
                       state.report.residual_norms);
}

Eigen::VectorXd project_to_rom(const GlobalROMSystem& sys, const SpMat& gram,
                               const Field& u) {
  const SpMat GZ = gram * sys.Z_full;
  const Eigen::MatrixXd M = Eigen::MatrixXd(SpMat(sys.Z_full.transpose()) * GZ);
  const Eigen::VectorXd rhs = GZ.transpose() * u;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success)
    throw IndefiniteGram("project_to_rom: reduced gram not positive definite");
  return ldlt.solve(rhs);
}

Field solve_global_hf(const GlobalSpace& space, const PDEModel& model,
                      const ModelParams& params, const NewtonSettings& settings,
                      const Field* init, NewtonReport* report) {
  DirichletBC bc;
  bc.dofs = space.dirichlet;
  bc.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bc.dofs.size()));
  return solve_nonlinear(space.disc, model, params, space.layout, bc, settings,
                         init, report);
}

void save_state(const std::string& path, const ReducedState& state) {
  write_matrix(path, state.coeffs);
}

ReducedState load_state(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix(path);
  if (m.cols() != 1) throw IoError("load_state: expected a column vector");
  ReducedState s;
  s.coeffs = m.col(0);
  return s;
}

}  // namespace pumrom
