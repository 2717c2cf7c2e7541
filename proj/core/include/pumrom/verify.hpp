#pragma once

#include <string>
#include <vector>

#include "pumrom/studies.hpp"

namespace pumrom {

struct CheckResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // normalized distance to the failure boundary
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  nlohmann::json to_json() const;
};

// Scale knobs of the verification suite. The defaults finish in well under a
// minute with PumOptions::fast(); the release gate reruns selected checks at
// production scale.
struct VerifyOptions {
  PumOptions pum = PumOptions::fast();
  unsigned long long seed = 1;
  bool fault_halve_c_res = false;  // negative control, must fail the bound check
  int n_dd = 3;                    // grid exercising all archetypes
  int thm_fields = 5;
  int lemma_states = 10;
  int chi2_samples = 2000;
  int fd_states = 3;
  int greedy_steps = 8;
  int greedy_seeds = 1;
};

VerifyReport run_verification(const VerifyOptions& opt);
VerifyReport run_verification(const ExperimentConfig& cfg);

// Individual named checks, callable standalone by the release gate.
CheckResult verify_pou_exactness(const PumOptions& pum, int n_dd);
CheckResult verify_pum_interpolation(const PumOptions& pum, int n_dd,
                                     int n_fields, Rng& rng);
CheckResult verify_residual_bound(const PumOptions& pum, int n_dd, int n_states,
                                  bool halve_c_res, Rng& rng);
CheckResult verify_fourier_chi2(int n_fourier, const std::vector<double>& alphas,
                                int n_samples, double rel_tol, Rng& rng);
CheckResult verify_sampler_ranges(const PumOptions& pum, int n_draws, Rng& rng);
CheckResult verify_pod_optimality(const PumOptions& pum, Rng& rng);
CheckResult verify_reduced_jacobian_fd(const PumOptions& pum, int n_dd,
                                       int n_states, Rng& rng);
CheckResult verify_component_assembly(const PumOptions& pum, int n_dd, Rng& rng);
CheckResult verify_galerkin_optimality(const PumOptions& pum, int n_dd, Rng& rng);
CheckResult verify_greedy_convergence(const PumOptions& pum, int n_dd, int steps,
                                      int n_seeds, unsigned long long seed0);
CheckResult verify_riesz_scaling(const PumOptions& pum, int n_dd, Rng& rng);
CheckResult verify_seed_determinism(const PumOptions& pum);
CheckResult verify_io_roundtrip(const std::string& dir, Rng& rng);
CheckResult verify_te_pod_identity(int refine, int degree, Rng& rng);

}  // namespace pumrom
