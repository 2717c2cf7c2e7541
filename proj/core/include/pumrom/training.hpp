#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumrom/components.hpp"
#include "pumrom/newton.hpp"

namespace pumrom {

using Rng = std::mt19937_64;

struct SamplerOptions {
  int n_fourier = 20;
  double alpha = 1.0;
  double u_max = 0.5;
  double p_src = 0.5;    // probability that a patch subdomain hosts the source
  double squeeze = 0.7;  // arclength compression before wall clamping
  std::array<double, 2> mu1_range{0.1, 0.2};
  std::array<double, 2> mu2_range{30.0, 40.0};
  int max_retries = 5;  // flat draws are resampled this many times
};

struct LocalParameterSample {
  std::vector<std::array<double, 2>> mu;  // one pair per patch subdomain
  int i_star = 0;                         // 1-based patch subdomain, 0 = none
};
LocalParameterSample sample_local_parameters(int patch_count,
                                             const SamplerOptions& opt, Rng& rng);

// Random trigonometric field with mode weights 1/sqrt(1+(2 pi k)^(2 alpha)):
// the squared H^alpha(0,1) norm equals the squared coefficient norm, so it is
// chi-squared with 2 n_fourier degrees of freedom.
struct FourierField {
  Eigen::VectorXd c_re, c_im;
  double alpha = 1.0;

  double operator()(double s) const;  // Real[g](s)
  double sq_norm() const { return c_re.squaredNorm() + c_im.squaredNorm(); }
  static double mode_weight(int k, double alpha);
};
FourierField sample_fourier_field(int n_f, double alpha, Rng& rng);

enum class SamplerKind { Smooth, Gaussian };
std::string sampler_name(SamplerKind k);

struct BoundarySample {
  Eigen::VectorXd values;  // one per input DOF, in input_dofs order
  SamplerKind kind = SamplerKind::Smooth;
  double alpha = 1.0;
  int n_fourier = 0;
  double u_max = 1.0;
};

// Smooth sampler: rescaled trigonometric field; wall-bounded archetypes get
// the squeezed variant multiplied by s(1-s) with a uniformly drawn peak.
// Output range is [0, u_max]; wall-bounded samples vanish at both ends.
BoundarySample sample_bc(const ArchetypeWorkspace& ws, const SamplerOptions& opt,
                         Rng& rng);
// Nodal Gaussian sampler: clamp(N(u_max/2,(u_max/2)^2), 0, u_max) when
// clamp_to_range (saturation problems), plain N(0,1) otherwise.
BoundarySample sample_gaussian_bc(const ArchetypeWorkspace& ws,
                                  const SamplerOptions& opt, bool clamp_to_range,
                                  Rng& rng);

ModelParams patch_params(const ArchetypeWorkspace& ws,
                         const LocalParameterSample& s);

// Oversampling transfer solve: u = g on the input boundary, 0 on walls,
// solved on the patch and restricted to the component domain.
Field solve_transfer(const ArchetypeWorkspace& ws, const PDEModel& model,
                     const ModelParams& params, const BoundarySample& g,
                     const NewtonSettings& settings = {});

struct PodResult {
  Eigen::MatrixXd modes;        // (dofs x n), orthonormal under the gram
  Eigen::VectorXd eigenvalues;  // snapshot-gram spectrum, descending
  bool rank_limited = false;    // requested size exceeded numerical rank
};
// Method of snapshots under the given gram; numerical rank cut at 1e-12 of
// the leading eigenvalue.
PodResult pod(const std::vector<Field>& snapshots, const SpMat& gram, int n);

// Coefficients / projection under a gram-orthonormal basis.
Eigen::VectorXd basis_coefficients(const Eigen::MatrixXd& basis,
                                   const SpMat& gram, const Field& w);
Field project_onto(const Eigen::MatrixXd& basis, const SpMat& gram,
                   const Field& w);
// Orthonormalize `extra` columns against Z (and among themselves) in the gram
// inner product and append; returns the number of columns kept.
int append_orthonormalized(Eigen::MatrixXd& Z, const SpMat& gram,
                           const Eigen::MatrixXd& extra, double drop_tol = 1e-10);

struct ReducedBasis {
  Archetype type = Archetype::Internal;
  Eigen::MatrixXd modes;  // orthonormal under the weighted local norm

  int size() const { return static_cast<int>(modes.cols()); }
};

struct TrainingOptions {
  int n_train = 50;
  int n = 20;
  SamplerKind kind = SamplerKind::Smooth;
  SamplerOptions sampler;
  NewtonSettings newton;
};

// Randomized localized training: n_train iid (mu, g) transfer snapshots
// followed by POD in the weighted local norm. Aborts when more than 10% of
// the solves fail.
ReducedBasis localized_training(const ArchetypeWorkspace& ws,
                                const PDEModel& model, const TrainingOptions& opt,
                                Rng& rng,
                                std::vector<Field>* snapshots_out = nullptr);

// Average relative projection error over a test set (all norms from `gram`).
double projection_error_indicator(const Eigen::MatrixXd& basis, const SpMat& gram,
                                  const std::vector<Field>& test);
double max_relative_projection_error(const Eigen::MatrixXd& basis,
                                     const SpMat& gram,
                                     const std::vector<Field>& test);

// ---------------------------------------------------------------------------
// Linear advection-diffusion-reaction transfer study: the problem lives on
// U = (0,0.3)^2 with data on the whole boundary and solutions extracted on
// (0.1,0.2)^2. Default mesh has 60 boundary DOFs (cubic elements).

struct LinearStudySetup {
  Discretization patch;
  Discretization target;
  SubdomainGrid grid;  // single cell covering U
  SubdomainLayout layout;
  std::vector<int> boundary_dofs;  // ccw from the origin
  Eigen::VectorXd boundary_s;      // normalized arclength of each boundary DOF
  std::vector<int> extract_dofs;   // target DOF -> patch DOF
  SpMat target_h1;
  std::array<double, 4> mu_lo{0.2, -1.0, -1.0, 0.0};
  std::array<double, 4> mu_hi{1.0, 1.0, 1.0, 1.0};
};
LinearStudySetup make_linear_study(int refine = 1, int degree = 3);

std::array<double, 4> sample_adr_parameters(const LinearStudySetup& setup,
                                            Rng& rng);
// Smooth kind: raw trigonometric field at the boundary arclength; Gaussian
// kind: iid standard-normal nodal values.
Eigen::VectorXd sample_linear_boundary(const LinearStudySetup& setup,
                                       SamplerKind kind,
                                       const SamplerOptions& opt, Rng& rng);

// One factorization per parameter; each apply() is a single back-substitution.
class LinearTransferSolver {
 public:
  LinearTransferSolver(const LinearStudySetup& setup,
                       const std::array<double, 4>& mu);
  // g in boundary_dofs order; returns the restricted solution on `target`.
  Field apply(const Eigen::VectorXd& g) const;

 private:
  const LinearStudySetup* setup_;
  SpMat A_;
  std::vector<int> free_;
  Eigen::SparseLU<SpMat> lu_;
};

// Transfer-eigenproblem baseline: per parameter, the full boundary-to-target
// map is decomposed under the target norm; the per-parameter modes are
// combined, weighted by singular value, with a final POD.
PodResult te_pod_baseline(const LinearStudySetup& setup,
                          const std::vector<std::array<double, 4>>& mus,
                          int n_max);

// Basis persistence: PUMROM01 matrix plus a JSON sidecar with provenance.
void save_basis(const std::string& path, const ReducedBasis& basis,
                const nlohmann::json& meta);
ReducedBasis load_basis(const std::string& path);

}  // namespace pumrom
