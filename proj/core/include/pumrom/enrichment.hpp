#pragma once

#include <array>
#include <functional>
#include <optional>

#include "pumrom/error_estimation.hpp"

namespace pumrom {

struct EnrichmentConfig {
  int n_train_glo = 50;  // training configurations, drawn once up front
  int n_glo = 10;        // modes added per archetype and iteration
  int maxit = 3;
  double tol = 0.0;   // stop when max Delta over the training set < tol
  double m_r = 30.0;  // marking percentage, per archetype
  std::vector<int> n_dd_choices{4};  // global sizes, sampled uniformly
  double H = 0.1;
  double delta = 0.01;
  SamplerOptions sampler;
  NewtonSettings newton;
  std::optional<BrrConstants> brr;  // when set, terminate on Delta_{mu,p}
};

struct EnrichmentIteration {
  int iteration = 0;     // 1-based
  double max_delta = 0;  // over the training set, before this update
  std::array<int, 3> basis_sizes{};    // after the update: corner, edge, internal
  std::array<int, 3> dataset_sizes{};  // cumulative snapshot counts
  int corrections = 0;                 // local solves collected this iteration
  int skipped = 0;                     // corrections that failed to converge
};

struct EnrichmentTrace {
  std::vector<EnrichmentIteration> iterations;
};

// Global parameter sample: n_dd uniform over the choices, (mu1, mu2) iid per
// subdomain, source location via p_src.
GlobalConfiguration sample_global_configuration(const std::vector<int>& n_dd_choices,
                                                const SamplerOptions& opt,
                                                double H, double delta, Rng& rng);

// Solves G_mu(u_hat + t, v) = 0 over the local test space of `comp` (Newton
// from t = 0) and returns t/phi on the reference domain, zero where phi = 0.
Field local_correction(const GlobalSpace& space, int comp, const PDEModel& model,
                       const ModelParams& params, const Field& u_hat,
                       const NewtonSettings& settings = {});

// Indices of the top max(1, floor(m_r% * count)) residuals, descending; ties
// keep the lower index first.
std::vector<int> mark_components(const std::vector<double>& residuals,
                                 double m_r);

using IterationHook = std::function<void(int iteration, const BasisSet& bases)>;

// Residual-driven dataset growth: per iteration, reduced solves over the
// training set, local corrections on marked components, then a per-archetype
// POD update Z <- Z + POD({w - P_Z w}, n_glo).
std::pair<BasisSet, EnrichmentTrace> enrich(const ComponentLibrary& lib,
                                            const PDEModel& model, BasisSet bases,
                                            const EnrichmentConfig& cfg, Rng& rng,
                                            const IterationHook& hook = {});

struct LinearEnrichmentTrace {
  std::vector<double> energy_errors;     // ||u - u_hat_l||_a, l = 0..steps
  std::vector<int> marked;               // argmax component per step
  std::vector<double> marked_residuals;  // its local dual residual (a-norm)
  double c_pu = 0.0;                     // sqrt(M) * max C_i^r
  std::vector<double> bound;             // (1 - 1/(N_dd c_pu^2))^{l/2} err_0
};

// One-configuration greedy enrichment for a symmetric coercive model: each
// step appends the exact local correction of the worst component to its
// archetype basis and records the energy error against the HF solution.
LinearEnrichmentTrace simplified_enrich_linear(const GlobalSpace& space,
                                               const LinearCoerciveModel& model,
                                               const ModelParams& params,
                                               BasisSet bases, int steps);

}  // namespace pumrom
