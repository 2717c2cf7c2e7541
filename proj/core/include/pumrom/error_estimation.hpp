#pragma once

#include <optional>

#include <Eigen/SparseCholesky>

#include "pumrom/rom.hpp"

namespace pumrom {

// Constants of the localized residual bound for the grid cover.
struct PouConstants {
  double c_grad = 0.0;  // max_i ||grad phi_i||_inf, sqrt(2)/delta for ramps
  double c_res = 0.0;   // sqrt(max{c_grad + c_grad^2 + 1, 2})
  int overlap = 0;      // M, the maximum number of overlapping supports
};
double residual_constant(double c_grad);
// `halve_c_res` is a fault-injection hook for the verification negative
// control; it must stay false in production paths.
PouConstants pou_constants(const GlobalSpace& space, bool halve_c_res = false);

struct BrrConstants {
  double beta = 0.0;       // inf-sup lower bound of the linearized form
  double c_h = 0.0;        // discrete W^{1,p} vs H^1 quotient
  double lipschitz = 0.0;  // Lipschitz constant of the linearized form
  double p = 4.0;
};

struct BrrEstimate {
  BrrConstants constants;
  double tau = 0.0;
  std::optional<double> delta_p;  // absent when tau > 1 (proximity fails)
};

struct ErrorReport {
  std::vector<double> local_residuals;  // r^(i), one per component
  double delta = 0.0;                   // sqrt(sum_i r_i^2)
  double bound = 0.0;                   // sqrt(M) * c_res * delta
  PouConstants constants;
  std::optional<BrrEstimate> brr;
};

// Dual norm over the zero-mean-free local test space of component `comp`:
// the residual of `u` is gathered onto the reference domain and solved
// against the cached masked H1 gram of the archetype.
double local_riesz_residual(const GlobalSpace& space, int comp,
                            const PDEModel& model, const ModelParams& params,
                            const Field& u);
std::vector<double> local_riesz_residuals(const GlobalSpace& space,
                                          const PDEModel& model,
                                          const ModelParams& params,
                                          const Field& u);

double delta_indicator(const std::vector<double>& residuals);
double global_residual_bound(const std::vector<double>& residuals,
                             const PouConstants& c);

ErrorReport error_report(const GlobalSpace& space, const PDEModel& model,
                         const ModelParams& params, const Field& u,
                         const std::optional<BrrConstants>& brr = std::nullopt,
                         bool fault_halve_c_res = false);
nlohmann::json error_report_json(const ErrorReport& report);

// Cached Riesz machinery for ||.||_{-1,Omega} on the fixed global mesh; the
// gram defaults to the full H1 inner product on the zero-trace space.
class GlobalDualNorm {
 public:
  explicit GlobalDualNorm(const GlobalSpace& space, const SpMat* gram = nullptr);
  double operator()(const Eigen::VectorXd& residual) const;

 private:
  std::vector<int> free_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

double global_dual_residual(const GlobalSpace& space, const PDEModel& model,
                            const ModelParams& params, const Field& u);

// tau = (2 L c_h / beta^2) * bound; delta_p = (beta/(L c_h)) (1-sqrt(1-tau))
// when tau <= 1.
BrrEstimate brr_estimator(const ErrorReport& report, const BrrConstants& c);

// Hierarchical inf-sup estimate: smallest singular value of the linearized
// reduced operator mapping sys's space into the enriched one, orthonormalized
// under `seminorm_gram` on both sides.
double beta_app(const GlobalROMSystem& sys, const GlobalROMSystem& enriched,
                const PDEModel& model, const ModelParams& params,
                const Field& u_hat, const SpMat& seminorm_gram);

// Nonlinear power iteration for sup |v|_{W^{1,p}} / |v|_{H^1 seminorm} over
// the zero-trace discrete space.
double estimate_ch(const Discretization& disc, const std::vector<int>& dirichlet,
                   double p = 4.0, int iters = 30);

// Sampled difference quotients of the reduced linearized operator over random
// coefficient pairs in a ball of the given radius.
double estimate_lipschitz(const GlobalROMSystem& sys, const PDEModel& model,
                          const ModelParams& params, double radius, int n_pairs,
                          double p, Rng& rng);

// Energy inner product a(u,v) of a symmetric coercive model.
SpMat assemble_energy_gram(const Discretization& disc,
                           const LinearCoerciveModel& model,
                           const ModelParams& params);

}  // namespace pumrom
