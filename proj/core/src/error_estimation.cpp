#include "pumrom/error_estimation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "pumrom/errors.hpp"

namespace pumrom {

double residual_constant(double c_grad) {
  return std::sqrt(std::max(c_grad + c_grad * c_grad + 1.0, 2.0));
}

PouConstants pou_constants(const GlobalSpace& space, bool halve_c_res) {
  PouConstants c;
  c.c_grad = space.pou.gradient_bound;
  c.c_res = residual_constant(c.c_grad);
  if (halve_c_res) c.c_res *= 0.5;
  c.overlap = space.pou.overlap_count;
  return c;
}

double local_riesz_residual(const GlobalSpace& space, int comp,
                            const PDEModel& model, const ModelParams& params,
                            const Field& u) {
  const ArchetypeWorkspace& ws = space.workspace(comp);
  const Field r = assemble_residual(space.disc, model, params, space.layout, u,
                                    &space.cover_elems[comp]);
  Eigen::VectorXd f(static_cast<Eigen::Index>(ws.riesz_mask.size()));
  const std::vector<int>& nmap = space.node_map[comp];
  for (size_t k = 0; k < ws.riesz_mask.size(); ++k)
    f[static_cast<Eigen::Index>(k)] = r[nmap[ws.riesz_mask[k]]];
  const Eigen::VectorXd psi = ws.riesz_solver->solve(f);
  return std::sqrt(std::max(0.0, f.dot(psi)));
}

std::vector<double> local_riesz_residuals(const GlobalSpace& space,
                                          const PDEModel& model,
                                          const ModelParams& params,
                                          const Field& u) {
  std::vector<double> r(space.cfg.components.size());
  for (size_t i = 0; i < r.size(); ++i)
    r[i] = local_riesz_residual(space, static_cast<int>(i), model, params, u);
  return r;
}

double delta_indicator(const std::vector<double>& residuals) {
  double s = 0.0;
  for (double r : residuals) s += r * r;
  return std::sqrt(s);
}

double global_residual_bound(const std::vector<double>& residuals,
                             const PouConstants& c) {
  return std::sqrt(static_cast<double>(c.overlap)) * c.c_res *
         delta_indicator(residuals);
}

ErrorReport error_report(const GlobalSpace& space, const PDEModel& model,
                         const ModelParams& params, const Field& u,
                         const std::optional<BrrConstants>& brr,
                         bool fault_halve_c_res) {
  ErrorReport rep;
  rep.constants = pou_constants(space, fault_halve_c_res);
  rep.local_residuals = local_riesz_residuals(space, model, params, u);
  rep.delta = delta_indicator(rep.local_residuals);
  rep.bound = global_residual_bound(rep.local_residuals, rep.constants);
  if (brr) rep.brr = brr_estimator(rep, *brr);
  return rep;
}

nlohmann::json error_report_json(const ErrorReport& report) {
  nlohmann::json j{{"local_residuals", report.local_residuals},
                   {"delta", report.delta},
                   {"bound", report.bound},
                   {"c_grad", report.constants.c_grad},
                   {"c_res", report.constants.c_res},
                   {"overlap", report.constants.overlap}};
  if (report.brr) {
    j["brr"] = {{"beta", report.brr->constants.beta},
                {"c_h", report.brr->constants.c_h},
                {"lipschitz", report.brr->constants.lipschitz},
                {"p", report.brr->constants.p},
                {"tau", report.brr->tau}};
    if (report.brr->delta_p) j["brr"]["delta_p"] = *report.brr->delta_p;
  }
  return j;
}

GlobalDualNorm::GlobalDualNorm(const GlobalSpace& space, const SpMat* gram)
    : free_(free_dofs(space.disc.num_dofs(), space.dirichlet)) {
  const SpMat G = gram ? *gram : assemble_h1_gram(space.disc);
  solver_.compute(masked_block(G, free_));
  if (solver_.info() != Eigen::Success)
    throw IndefiniteGram("GlobalDualNorm: gram factorization failed");
}

double GlobalDualNorm::operator()(const Eigen::VectorXd& residual) const {
  const Eigen::VectorXd f = masked_vector(residual, free_);
  return std::sqrt(std::max(0.0, f.dot(solver_.solve(f))));
}

double global_dual_residual(const GlobalSpace& space, const PDEModel& model,
                            const ModelParams& params, const Field& u) {
  const GlobalDualNorm dual(space);
  return dual(assemble_residual(space.disc, model, params, space.layout, u));
}

BrrEstimate brr_estimator(const ErrorReport& report, const BrrConstants& c) {
  if (!(c.beta > 0.0) || !(c.c_h > 0.0) || !(c.lipschitz > 0.0))
    throw ConfigError("brr_estimator: constants must be positive");
  BrrEstimate est;
  est.constants = c;
  est.tau = (2.0 * c.lipschitz * c.c_h / (c.beta * c.beta)) * report.bound;
  if (est.tau <= 1.0)
    est.delta_p =
        (c.beta / (c.lipschitz * c.c_h)) * (1.0 - std::sqrt(1.0 - est.tau));
  return est;
}

namespace {
Eigen::MatrixXd reduced_gram(const SpMat& Z, const SpMat& gram) {
  return Eigen::MatrixXd(SpMat(Z.transpose()) * (gram * Z));
}
}  // namespace

double beta_app(const GlobalROMSystem& sys, const GlobalROMSystem& enriched,
                const PDEModel& model, const ModelParams& params,
                const Field& u_hat, const SpMat& seminorm_gram) {
  if (sys.space != enriched.space)
    throw ConfigError("beta_app: systems built over different spaces");
  if (enriched.N() < sys.N())
    throw ConfigError("beta_app: enriched space smaller than the base space");

  const SpMat J = assemble_jacobian(sys.space->disc, model, params,
                                    sys.space->layout, u_hat);
  const Eigen::MatrixXd A =
      Eigen::MatrixXd(SpMat(enriched.Z_full.transpose()) * (J * sys.Z_full));
  const Eigen::LLT<Eigen::MatrixXd> Lz(reduced_gram(sys.Z_full, seminorm_gram));
  const Eigen::LLT<Eigen::MatrixXd> Lt(
      reduced_gram(enriched.Z_full, seminorm_gram));
  if (Lz.info() != Eigen::Success || Lt.info() != Eigen::Success)
    throw IndefiniteGram("beta_app: rank-deficient reduced gram");

  // sigma_min(Lt^-1 A Lz^-T), computed on the transpose.
  const Eigen::MatrixXd M = Lt.matrixL().solve(A);
  const Eigen::MatrixXd Mt = Lz.matrixL().solve(M.transpose());
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Mt);
  return svd.singularValues().minCoeff();
}

namespace {
// q = |grad u|^{p-2} grad u, no reaction: assembling its residual against the
// hat basis yields the derivative of |u|_{W^{1,p}}^p / p.
class PGradientFunctional : public PDEModel {
 public:
  explicit PGradientFunctional(double p) : p_(p) {}
  FluxReaction eval(const PointState& s, const ModelParams&) const override {
    FluxReaction f;
    const double g2 = s.grad.squaredNorm();
    f.q = g2 > 0.0 ? Vec2(std::pow(g2, 0.5 * p_ - 1.0) * s.grad) : Vec2::Zero();
    return f;
  }
  bool is_linear() const override { return false; }

 private:
  double p_;
};

double seminorm_p(const Discretization& disc, const Field& u, double p) {
  const double mass = integrate_state(
      disc, u, [p](const Vec2&, double, const Vec2& g) {
        return std::pow(g.squaredNorm(), 0.5 * p);
      });
  return std::pow(std::max(0.0, mass), 1.0 / p);
}
}  // namespace

double estimate_ch(const Discretization& disc, const std::vector<int>& dirichlet,
                   double p, int iters) {
  if (!(p > 2.0)) throw ConfigError("estimate_ch: p must exceed 2");
  const std::vector<int> free = free_dofs(disc.num_dofs(), dirichlet);
  const SpMat G = assemble_gram(
      disc, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; });
  Eigen::SimplicialLDLT<SpMat> solver(masked_block(G, free));
  if (solver.info() != Eigen::Success)
    throw IndefiniteGram("estimate_ch: seminorm gram factorization failed");

  const PGradientFunctional functional(p);
  const ModelParams params;
  const SubdomainLayout layout{std::vector<int>(
      static_cast<size_t>(disc.ncells_x() * disc.ncells_y()), 0)};

  Field v = Field::Zero(disc.num_dofs());
  for (int d : free) {
    const Vec2 x = disc.node(d);
    v[d] = std::sin(3.0 * x[0] + 1.0) * std::cos(2.0 * x[1]);
  }
  double ratio = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double h1 = gram_norm(v, G);
    if (!(h1 > 0.0)) throw ConfigError("estimate_ch: degenerate iterate");
    v /= h1;
    const double next = seminorm_p(disc, v, p);
    const bool settled = it > 2 && std::abs(next - ratio) <= 1e-6 * next;
    ratio = next;
    if (settled) break;
    const Field f = assemble_residual(disc, functional, params, layout, v);
    const Eigen::VectorXd z = solver.solve(masked_vector(f, free));
    v.setZero();
    for (size_t k = 0; k < free.size(); ++k)
      v[free[k]] = z[static_cast<Eigen::Index>(k)];
  }
  return ratio;
}

double estimate_lipschitz(const GlobalROMSystem& sys, const PDEModel& model,
                          const ModelParams& params, double radius, int n_pairs,
                          double p, Rng& rng) {
  if (n_pairs < 1) throw ConfigError("estimate_lipschitz: need at least 1 pair");
  const Discretization& disc = sys.space->disc;
  const SpMat G = assemble_gram(
      disc, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; });
  const Eigen::MatrixXd B = reduced_gram(sys.Z_full, G);
  const Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success)
    throw IndefiniteGram("estimate_lipschitz: reduced seminorm gram singular");

  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_state = [&]() {
    Eigen::VectorXd c(sys.N());
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = normal(rng);
    const double nrm = std::sqrt(c.dot(B * c));
    std::uniform_real_distribution<double> u(0.0, radius);
    return Eigen::VectorXd((u(rng) / std::max(nrm, 1e-300)) * c);
  };

  double lip = 0.0;
  for (int s = 0; s < n_pairs; ++s) {
    const Eigen::VectorXd c1 = draw_state(), c2 = draw_state();
    const Eigen::MatrixXd dJ =
        Eigen::MatrixXd(reduced_jacobian(sys, model, params, c1) -
                        reduced_jacobian(sys, model, params, c2));
    Eigen::MatrixXd M = llt.matrixL().solve(dJ);
    M = llt.matrixL().solve(M.transpose());
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const double dist = seminorm_p(disc, reconstruct(sys, c1 - c2), p);
    if (dist > 1e-14)
      lip = std::max(lip, svd.singularValues().maxCoeff() / dist);
  }
  if (!(lip > 0.0))
    throw DegenerateSample("estimate_lipschitz: all sampled pairs coincide");
  return lip;
}

SpMat assemble_energy_gram(const Discretization& disc,
                           const LinearCoerciveModel& model,
                           const ModelParams& params) {
  return assemble_gram(
      disc, [&](const Vec2& x) { return model.diffusion_at(x, params); },
      [&](const Vec2&) { return model.reaction_coeff(params); });
}

}  // namespace pumrom
