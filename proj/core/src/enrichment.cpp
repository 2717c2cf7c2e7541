#include "pumrom/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "pumrom/errors.hpp"

namespace pumrom {

GlobalConfiguration sample_global_configuration(const std::vector<int>& n_dd_choices,
                                                const SamplerOptions& opt,
                                                double H, double delta, Rng& rng) {
  if (n_dd_choices.empty())
    throw ConfigError("sample_global_configuration: no n_dd choices");
  std::uniform_int_distribution<size_t> pick(0, n_dd_choices.size() - 1);
  const int n_dd = n_dd_choices[pick(rng)];
  const auto s = sample_local_parameters(n_dd * n_dd, opt, rng);
  return instantiate_configuration(n_dd, s.mu, s.i_star, H, delta);
}

namespace {
// Complement of the component's interior test space, with boundary data u_hat.
DirichletBC frozen_background(const GlobalSpace& space, int comp,
                              const Field& u_hat) {
  const int dofs = space.disc.num_dofs();
  std::vector<char> free(dofs, 0);
  for (int g : space.support_dofs[comp]) free[g] = 1;
  for (int g : space.dirichlet) free[g] = 0;
  DirichletBC bc;
  bc.dofs.reserve(dofs);
  for (int g = 0; g < dofs; ++g)
    if (!free[g]) bc.dofs.push_back(g);
  bc.values.resize(static_cast<Eigen::Index>(bc.dofs.size()));
  for (size_t k = 0; k < bc.dofs.size(); ++k)
    bc.values[static_cast<Eigen::Index>(k)] = u_hat[bc.dofs[k]];
  return bc;
}

// t restricted to the reference domain, divided nodally by the PoU weight.
Field unweighted_reference(const GlobalSpace& space, int comp, const Field& t) {
  const ArchetypeWorkspace& ws = space.workspace(comp);
  const std::vector<int>& nmap = space.node_map[comp];
  Field out(ws.domain.num_dofs());
  for (int d = 0; d < ws.domain.num_dofs(); ++d)
    out[d] = ws.pou[d] > 0.0 ? t[nmap[d]] / ws.pou[d] : 0.0;
  return out;
}
}  // namespace

Field local_correction(const GlobalSpace& space, int comp, const PDEModel& model,
                       const ModelParams& params, const Field& u_hat,
                       const NewtonSettings& settings) {
  const DirichletBC bc = frozen_background(space, comp, u_hat);
  Field u;
  try {
    u = solve_nonlinear(space.disc, model, params, space.layout, bc, settings,
                        &u_hat, nullptr, &space.cover_elems[comp]);
  } catch (const NonConvergence& e) {
    throw NonConvergence("local_correction(component " + std::to_string(comp) +
                             "): " + e.what(),
                         e.residual_history);
  }
  return unweighted_reference(space, comp, u - u_hat);
}

std::vector<int> mark_components(const std::vector<double>& residuals,
                                 double m_r) {
  if (!(m_r > 0.0) || m_r > 100.0)
    throw ConfigError("mark_components: m_r must lie in (0, 100]");
  if (residuals.empty()) return {};
  const int count = static_cast<int>(residuals.size());
  const int take = std::max(
      1, std::min(count, static_cast<int>(
                             std::floor(m_r * count / 100.0 + 1e-12))));
  std::vector<int> idx(residuals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (residuals[a] != residuals[b]) return residuals[a] > residuals[b];
    return a < b;
  });
  idx.resize(static_cast<size_t>(take));
  return idx;
}

namespace {
constexpr std::array<Archetype, 3> kTypes{Archetype::Corner, Archetype::Edge,
                                          Archetype::Internal};

std::array<int, 3> basis_sizes(const BasisSet& bases) {
  return {bases.corner.size(), bases.edge.size(), bases.internal.size()};
}
}  // namespace

std::pair<BasisSet, EnrichmentTrace> enrich(const ComponentLibrary& lib,
                                            const PDEModel& model, BasisSet bases,
                                            const EnrichmentConfig& cfg, Rng& rng,
                                            const IterationHook& hook) {
  if (cfg.n_glo < 1) throw ConfigError("enrich: n_glo must be >= 1");
  if (cfg.maxit < 1) throw ConfigError("enrich: maxit must be >= 1");
  if (cfg.n_train_glo < 1) throw ConfigError("enrich: n_train_glo must be >= 1");

  std::vector<GlobalConfiguration> train;
  train.reserve(cfg.n_train_glo);
  for (int t = 0; t < cfg.n_train_glo; ++t)
    train.push_back(sample_global_configuration(cfg.n_dd_choices, cfg.sampler,
                                                cfg.H, cfg.delta, rng));
  std::map<int, GlobalSpace> spaces;
  for (const auto& c : train)
    if (!spaces.count(c.n_dd)) spaces.emplace(c.n_dd, build_global_space(c, lib));

  std::array<std::vector<Field>, 3> data;
  std::vector<Eigen::VectorXd> warm(train.size());
  std::array<int, 3> warm_sizes{};

  EnrichmentTrace trace;
  for (int it = 1; it <= cfg.maxit; ++it) {
    EnrichmentIteration rec;
    rec.iteration = it;
    const std::array<int, 3> cur_sizes = basis_sizes(bases);

    for (size_t t = 0; t < train.size(); ++t) {
      const GlobalSpace& space = spaces.at(train[t].n_dd);
      const ModelParams params = train[t].model_params();
      const GlobalROMSystem sys = assemble_rom(space, bases);

      ReducedState state;
      bool solved = false;
      if (warm[t].size() > 0) {
        // Old modes keep their meaning after the POD append, so the previous
        // iterate embeds block-by-block.
        Eigen::VectorXd init = Eigen::VectorXd::Zero(sys.N());
        int old_off = 0;
        for (int j = 0; j < sys.num_components(); ++j) {
          const int tix = static_cast<int>(space.cfg.components[j].type);
          init.segment(sys.offset[j], warm_sizes[tix]) =
              warm[t].segment(old_off, warm_sizes[tix]);
          old_off += warm_sizes[tix];
        }
        try {
          state = solve_rom(sys, model, params, cfg.newton, &init);
          solved = true;
        } catch (const NonConvergence&) {
          solved = false;  // retry cold below
        }
      }
      if (!solved) {
        try {
          state = solve_rom(sys, model, params, cfg.newton);
        } catch (const NonConvergence& e) {
          throw NonConvergence("enrich(iteration " + std::to_string(it) +
                                   ", configuration " + std::to_string(t) +
                                   "): " + e.what(),
                               e.residual_history);
        }
      }
      warm[t] = state.coeffs;

      const Field u_hat = reconstruct(sys, state.coeffs);
      const ErrorReport rep = error_report(space, model, params, u_hat, cfg.brr);
      double delta = rep.delta;
      if (cfg.brr)
        delta = rep.brr->delta_p ? *rep.brr->delta_p
                                 : std::numeric_limits<double>::infinity();
      rec.max_delta = std::max(rec.max_delta, delta);

      for (Archetype type : kTypes) {
        std::vector<int> comps;
        std::vector<double> res;
        for (size_t j = 0; j < space.cfg.components.size(); ++j)
          if (space.cfg.components[j].type == type) {
            comps.push_back(static_cast<int>(j));
            res.push_back(rep.local_residuals[j]);
          }
        if (comps.empty()) continue;
        for (int m : mark_components(res, cfg.m_r)) {
          const int j = comps[m];
          try {
            data[static_cast<int>(type)].push_back(
                local_correction(space, j, model, params, u_hat, cfg.newton));
            ++rec.corrections;
          } catch (const NonConvergence&) {
            ++rec.skipped;
          }
        }
      }
    }
    warm_sizes = cur_sizes;

    for (Archetype type : kTypes) {
      const auto& dset = data[static_cast<int>(type)];
      if (dset.empty()) continue;
      const ArchetypeWorkspace& ws = lib.at(type);
      Eigen::MatrixXd& Z = bases.at(type).modes;
      std::vector<Field> deflated;
      deflated.reserve(dset.size());
      for (const Field& w : dset)
        deflated.push_back(w - project_onto(Z, ws.weighted_gram, w));
      const PodResult p = pod(deflated, ws.weighted_gram, cfg.n_glo);
      if (p.modes.cols() > 0)
        append_orthonormalized(Z, ws.weighted_gram, p.modes);
    }

    rec.basis_sizes = basis_sizes(bases);
    for (int k = 0; k < 3; ++k)
      rec.dataset_sizes[k] = static_cast<int>(data[k].size());
    trace.iterations.push_back(rec);
    if (hook) hook(it, bases);
    if (rec.max_delta < cfg.tol) break;
  }
  return {std::move(bases), std::move(trace)};
}

LinearEnrichmentTrace simplified_enrich_linear(const GlobalSpace& space,
                                               const LinearCoerciveModel& model,
                                               const ModelParams& params,
                                               BasisSet bases, int steps) {
  if (steps < 0) throw ConfigError("simplified_enrich_linear: negative steps");
  const Field u = solve_global_hf(space, model, params);
  const SpMat a_gram = assemble_energy_gram(space.disc, model, params);

  const int nc = static_cast<int>(space.cfg.components.size());
  std::vector<std::vector<int>> masks(nc);
  std::vector<Eigen::SimplicialLDLT<SpMat>> solvers(nc);
  {
    std::vector<char> fixed(space.disc.num_dofs(), 0);
    for (int g : space.dirichlet) fixed[g] = 1;
    for (int j = 0; j < nc; ++j) {
      for (int g : space.support_dofs[j])
        if (!fixed[g]) masks[j].push_back(g);
      solvers[j].compute(masked_block(a_gram, masks[j]));
      if (solvers[j].info() != Eigen::Success)
        throw IndefiniteGram("simplified_enrich_linear: local energy gram");
    }
  }

  LinearEnrichmentTrace trace;
  const PouConstants pc = pou_constants(space);
  trace.c_pu = std::sqrt(static_cast<double>(pc.overlap)) * pc.c_res;

  for (int l = 0; l <= steps; ++l) {
    const GlobalROMSystem sys = assemble_rom(space, bases);
    const ReducedState state = solve_rom(sys, model, params);
    const Field u_hat = reconstruct(sys, state.coeffs);
    trace.energy_errors.push_back(gram_norm(u - u_hat, a_gram));
    if (l == steps) break;

    const Field r =
        assemble_residual(space.disc, model, params, space.layout, u_hat);
    int k = -1;
    double best = -1.0;
    Eigen::VectorXd best_psi;
    for (int j = 0; j < nc; ++j) {
      const Eigen::VectorXd f = masked_vector(r, masks[j]);
      const Eigen::VectorXd psi = solvers[j].solve(f);
      const double rj = std::sqrt(std::max(0.0, f.dot(psi)));
      if (rj > best) {
        best = rj;
        k = j;
        best_psi = psi;
      }
    }
    trace.marked.push_back(k);
    trace.marked_residuals.push_back(best);

    // The coercive correction is the Riesz representative itself.
    Field t = Field::Zero(space.disc.num_dofs());
    for (size_t m = 0; m < masks[k].size(); ++m)
      t[masks[k][m]] = -best_psi[static_cast<Eigen::Index>(m)];
    const Field u_loc = unweighted_reference(space, k, t);
    append_orthonormalized(bases.at(space.cfg.components[k].type).modes,
                           space.workspace(k).weighted_gram, u_loc);
  }

  const double rate =
      1.0 - 1.0 / (static_cast<double>(nc) * trace.c_pu * trace.c_pu);
  trace.bound.resize(trace.energy_errors.size());
  for (size_t l = 0; l < trace.bound.size(); ++l)
    trace.bound[l] = std::pow(rate, 0.5 * static_cast<double>(l)) *
                     trace.energy_errors.front();
  return trace;
}

}  // namespace pumrom
