#include "pumrom/models.hpp"

#include <cmath>

#include "pumrom/errors.hpp"

namespace pumrom {

int SubdomainGrid::locate(const Vec2& x) const {
  int i = static_cast<int>(std::floor((x[0] - x0) / H));
  int j = static_cast<int>(std::floor((x[1] - y0) / H));
  i = std::clamp(i, 0, nx - 1);
  j = std::clamp(j, 0, ny - 1);
  return j * nx + i;
}

double kappa(double u, double mu1, double mu2) {
  const double denom = u * u * u + (12.0 / mu2) * (1.0 - u) * (1.0 - u) * (1.0 - u);
  if (std::abs(denom) < 1e-14)
    throw DenominatorUnderflow("kappa: denominator underflow at u=" +
                               std::to_string(u));
  const double ratio = u * (1.0 - u) / denom;
  return (36.0 / mu2) * ratio * ratio + mu1;
}

double kappa_du(double u, double mu1, double mu2) {
  (void)mu1;
  const double denom = u * u * u + (12.0 / mu2) * (1.0 - u) * (1.0 - u) * (1.0 - u);
  if (std::abs(denom) < 1e-14)
    throw DenominatorUnderflow("kappa_du: denominator underflow at u=" +
                               std::to_string(u));
  const double num = u * (1.0 - u);
  const double dnum = 1.0 - 2.0 * u;
  const double ddenom = 3.0 * u * u - (36.0 / mu2) * (1.0 - u) * (1.0 - u);
  const double ratio = num / denom;
  const double dratio = (dnum * denom - num * ddenom) / (denom * denom);
  return (36.0 / mu2) * 2.0 * ratio * dratio;
}

double source_term(const Vec2& x, int i_star, const SubdomainGrid& grid,
                   double amp, double decay) {
  if (i_star <= 0) return 0.0;
  const int id = i_star - 1;
  if (!grid.contains(id, x)) return 0.0;
  const Vec2 d = x - grid.centroid(id);
  return amp * std::exp(-decay * d.squaredNorm());
}

double adr_integrand(const Vec2& grad_w, double w, const Vec2& grad_v, double v,
                     const Vec2& x, const std::array<double, 4>& mu) {
  const Vec2 b(mu[1], mu[2]);
  return mu[0] * adr_kappa(x) * grad_w.dot(grad_v) - b.dot(grad_w) * v +
         mu[3] * w * v;
}

FluxReaction NonlinearDiffusionModel::eval(const PointState& s,
                                           const ModelParams& p) const {
  const auto& mu = p.mu_sub.at(s.sub);
  const double k = kappa(s.u, mu[0], mu[1]);
  const double dk = kappa_du(s.u, mu[0], mu[1]);
  FluxReaction fr;
  fr.q = k * s.grad;
  fr.dq_du = dk * s.grad;
  fr.dq_dgrad = k * Eigen::Matrix2d::Identity();
  fr.r = -source_term(s.x, p.i_star, p.grid, amp_, decay_);
  return fr;
}

FluxReaction LinearADRModel::eval(const PointState& s,
                                  const ModelParams& p) const {
  const auto& mu = p.mu_adr;
  const Vec2 b(mu[1], mu[2]);
  const double k = mu[0] * adr_kappa(s.x);
  FluxReaction fr;
  fr.q = k * s.grad;
  fr.dq_dgrad = k * Eigen::Matrix2d::Identity();
  fr.r = -b.dot(s.grad) + mu[3] * s.u;
  fr.dr_du = mu[3];
  fr.dr_dgrad = -b;
  return fr;
}

double LinearCoerciveModel::diffusion_at(const Vec2& x,
                                         const ModelParams& p) const {
  return diffusion_ ? diffusion_(x) : p.mu_adr[0] * adr_kappa(x);
}

FluxReaction LinearCoerciveModel::eval(const PointState& s,
                                       const ModelParams& p) const {
  const double k = diffusion_at(s.x, p);
  FluxReaction fr;
  fr.q = k * s.grad;
  fr.dq_dgrad = k * Eigen::Matrix2d::Identity();
  fr.r = p.mu_adr[3] * s.u - (load_ ? load_(s.x, p) : 0.0);
  fr.dr_du = p.mu_adr[3];
  return fr;
}

}  // namespace pumrom
