#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pumrom/discretization.hpp"

namespace pumrom {

// Regular grid of square subdomains; id = j*nx + i, row-major from (x0,y0).
struct SubdomainGrid {
  double x0 = 0.0, y0 = 0.0;
  double H = 0.1;
  int nx = 1, ny = 1;

  int count() const { return nx * ny; }
  Vec2 centroid(int id) const {
    const int i = id % nx, j = id / nx;
    return {x0 + (i + 0.5) * H, y0 + (j + 0.5) * H};
  }
  std::array<double, 4> box(int id) const {
    const int i = id % nx, j = id / nx;
    return {x0 + i * H, y0 + j * H, x0 + (i + 1) * H, y0 + (j + 1) * H};
  }
  int locate(const Vec2& x) const;
  bool contains(int id, const Vec2& x) const {
    const auto b = box(id);
    return x[0] >= b[0] && x[0] <= b[2] && x[1] >= b[1] && x[1] <= b[3];
  }
};

// Parameters bound to one PDE instance. The nonlinear diffusion model reads
// mu_sub (one (mu1,mu2) pair per subdomain) and the source location i_star;
// the linear models read mu_adr = (mu1,mu2,mu3,mu4).
struct ModelParams {
  SubdomainGrid grid;
  std::vector<std::array<double, 2>> mu_sub;
  int i_star = 0;  // 1-based subdomain hosting the source; 0 = no source
  std::array<double, 4> mu_adr{1.0, 0.0, 0.0, 0.0};
};

struct PointState {
  Vec2 x;
  double u;
  Vec2 grad;
  int sub;  // 0-based subdomain of the current element
};

// Weak-form integrand contributions at one quadrature point:
//   G(u,v) += q . grad(v) + r * v
// together with the derivatives needed for the Jacobian.
struct FluxReaction {
  Vec2 q = Vec2::Zero();
  Vec2 dq_du = Vec2::Zero();
  Eigen::Matrix2d dq_dgrad = Eigen::Matrix2d::Zero();
  double r = 0.0;
  double dr_du = 0.0;
  Vec2 dr_dgrad = Vec2::Zero();
};

class PDEModel {
 public:
  virtual ~PDEModel() = default;
  virtual FluxReaction eval(const PointState& s, const ModelParams& p) const = 0;
  virtual bool is_linear() const = 0;
};

// kappa(u) = (36/mu2) * (u(1-u) / (u^3 + (12/mu2)(1-u)^3))^2 + mu1.
// Throws DenominatorUnderflow when |u^3 + (12/mu2)(1-u)^3| < 1e-14.
double kappa(double u, double mu1, double mu2);
double kappa_du(double u, double mu1, double mu2);

// f(x; i_star) = amp * exp(-decay * |x - centroid(i_star)|^2) restricted to
// the subdomain box; zero for i_star = 0 or x outside the box.
double source_term(const Vec2& x, int i_star, const SubdomainGrid& grid,
                   double amp = 100.0, double decay = 50.0);

// Spatial diffusivity of the advection-diffusion-reaction family.
inline double adr_kappa(const Vec2& x) { return 1.0 / (1.0 + x.squaredNorm()); }

// Weak integrand of the ADR operator at a point, advection in convective form:
//   mu1 kappa(x) grad(w).grad(v) - ([mu2,mu3].grad(w)) v + mu4 w v.
// The minus sign comes from expanding -div(b w) = -b.grad(w) for constant b
// and integrating only the diffusive term by parts.
double adr_integrand(const Vec2& grad_w, double w, const Vec2& grad_v, double v,
                     const Vec2& x, const std::array<double, 4>& mu);

// -div(kappa(u) grad u) = f with per-subdomain (mu1, mu2) and the localized
// Gaussian source.
class NonlinearDiffusionModel : public PDEModel {
 public:
  NonlinearDiffusionModel(double amp = 100.0, double decay = 50.0)
      : amp_(amp), decay_(decay) {}
  FluxReaction eval(const PointState& s, const ModelParams& p) const override;
  bool is_linear() const override { return false; }

 private:
  double amp_, decay_;
};

// -div(mu1 kappa(x) grad u + [mu2,mu3] u) + mu4 u = 0, boundary driven.
class LinearADRModel : public PDEModel {
 public:
  FluxReaction eval(const PointState& s, const ModelParams& p) const override;
  bool is_linear() const override { return true; }
};

// Symmetric coercive specialization (mu2 = mu3 = 0) with an optional load and
// overridable diffusion coefficient.
class LinearCoerciveModel : public PDEModel {
 public:
  using Coefficient = std::function<double(const Vec2&)>;
  using Load = std::function<double(const Vec2&, const ModelParams&)>;

  LinearCoerciveModel() = default;
  LinearCoerciveModel(Coefficient diffusion, Load load)
      : diffusion_(std::move(diffusion)), load_(std::move(load)) {}

  FluxReaction eval(const PointState& s, const ModelParams& p) const override;
  bool is_linear() const override { return true; }

  // a-norm coefficients for the energy inner product of this model.
  double diffusion_at(const Vec2& x, const ModelParams& p) const;
  double reaction_coeff(const ModelParams& p) const { return p.mu_adr[3]; }

 private:
  Coefficient diffusion_;  // defaults to mu1 * adr_kappa(x)
  Load load_;              // defaults to 0
};

}  // namespace pumrom
