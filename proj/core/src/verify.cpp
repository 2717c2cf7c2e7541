#include "pumrom/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"
#include "pumrom/rom.hpp"

namespace pumrom {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTiny = 1e-300;

std::string fmtd(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

GlobalConfiguration uniform_config(int n_dd, const PumOptions& pum) {
  std::vector<std::array<double, 2>> mu(
      static_cast<std::size_t>(n_dd) * n_dd, {0.15, 35.0});
  return instantiate_configuration(n_dd, std::move(mu), 0, pum.H, pum.delta);
}

// Random trigonometric field; `bubble` multiplies by a sine profile that
// vanishes on the rectangle boundary.
Field random_smooth(const Discretization& disc, Rng& rng, bool bubble,
                    double amp) {
  const auto r = disc.rect();
  const double lx = r[2] - r[0], ly = r[3] - r[1];
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> freq(0.5, 3.5);
  struct Term {
    double a, kx, ky, px, py;
  };
  std::array<Term, 4> terms;
  for (auto& t : terms) t = {nd(rng), freq(rng), freq(rng), phase(rng), phase(rng)};
  Field u = disc.interpolate([&](const Vec2& x) {
    const double sx = (x[0] - r[0]) / lx, sy = (x[1] - r[1]) / ly;
    double v = 0.0;
    for (const auto& t : terms)
      v += t.a * std::sin(t.kx * kPi * sx + t.px) * std::cos(t.ky * kPi * sy + t.py);
    if (bubble) v *= std::sin(kPi * sx) * std::sin(kPi * sy);
    return v;
  });
  const double m = u.cwiseAbs().maxCoeff();
  if (m > 0) u *= amp / m;
  return u;
}

// Gram-orthonormal random local space; wall rows are zeroed so the vectors
// conform to the archetype's Dirichlet walls like trained modes do.
Eigen::MatrixXd random_local_space(const ArchetypeWorkspace& ws, int n, Rng& rng,
                                   const SpMat& gram) {
  Eigen::MatrixXd extra(ws.domain.num_dofs(), n);
  for (int k = 0; k < n; ++k) {
    Field v = random_smooth(ws.domain, rng, false, 1.0);
    for (const int d : ws.wall_dofs) v[d] = 0.0;
    extra.col(k) = v;
  }
  Eigen::MatrixXd Z(ws.domain.num_dofs(), 0);
  append_orthonormalized(Z, gram, extra);
  return Z;
}

BasisSet random_bases(const ComponentLibrary& lib, int n, Rng& rng) {
  BasisSet b;
  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    b.at(t).type = t;
    b.at(t).modes = random_local_space(lib.at(t), n, rng, lib.at(t).weighted_gram);
  }
  return b;
}

// Reduced coefficients scaled so the reconstructed state stays in the smooth
// regime of the saturation diffusivity.
Eigen::VectorXd random_reduced_state(const GlobalROMSystem& sys, Rng& rng,
                                     double amp) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(sys.N());
  for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
  const double m = reconstruct(sys, c).cwiseAbs().maxCoeff();
  if (m > 0) c *= amp / m;
  return c;
}

double max_nodal_gradient(const GlobalSpace& space, int comp) {
  const Discretization& disc = space.disc;
  const Field& phi = space.pou.phi[comp];
  double best = 0.0;
  for (const int e : space.cover_elems[comp]) {
    const auto [ex, ey] = space.disc.element_xy(e);
    const auto cx = disc.cell_x(ex);
    const auto cy = disc.cell_y(ey);
    const Vec2 center{0.5 * (cx[0] + cx[1]), 0.5 * (cy[0] + cy[1])};
    for (const double x : {cx[0], cx[1]})
      for (const double y : {cy[0], cy[1]}) {
        // inset keeps the evaluation inside this cell's polynomial
        const Vec2 p = Vec2{x, y} + 1e-6 * (center - Vec2{x, y});
        best = std::max(best, disc.evaluate_gradient(phi, p).norm());
      }
  }
  return best;
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"margin", c.margin},
                   {"detail", c.detail}});
  return {{"all_passed", all_passed()}, {"checks", arr}};
}

CheckResult verify_pou_exactness(const PumOptions& pum, int n_dd) {
  const ComponentLibrary lib = make_library(pum);
  const GlobalSpace space = build_global_space(uniform_config(n_dd, pum), lib);

  Field sum = Field::Zero(space.disc.num_dofs());
  for (const auto& phi : space.pou.phi) sum += phi;
  const double sum_dev = (sum.array() - 1.0).abs().maxCoeff();

  double measured = 0.0;
  for (int i = 0; i < space.cfg.count(); ++i)
    measured = std::max(measured, max_nodal_gradient(space, i));
  const double target = std::sqrt(2.0) / pum.delta;
  const double grad_dev = std::abs(measured - target) / target;
  const bool overlap_ok = space.pou.overlap_count == 4;

  CheckResult r;
  r.name = "pou_exactness";
  const double m_sum = (1e-13 - sum_dev) / 1e-13;
  const double m_grad = (0.02 - grad_dev) / 0.02;
  r.margin = std::min({m_sum, m_grad, overlap_ok ? 1.0 : -1.0});
  r.passed = r.margin > 0;
  r.detail = fmtd("max|sum-1|=%.3e, overlap=%g, max|grad|/target-1=%.3e",
                  sum_dev, space.pou.overlap_count, measured / target - 1.0);
  return r;
}

CheckResult verify_pum_interpolation(const PumOptions& pum, int n_dd,
                                     int n_fields, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const GlobalSpace space = build_global_space(uniform_config(n_dd, pum), lib);
  const auto zero = [](const Vec2&) { return 0.0; };
  const auto one = [](const Vec2&) { return 1.0; };
  const SpMat mass_g = assemble_gram(space.disc, zero, one);
  const SpMat semi_g = assemble_gram(space.disc, one, zero);

  struct LocalData {
    Eigen::MatrixXd Z;
    SpMat mass, semi;
  };
  std::array<LocalData, 3> loc;
  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    const auto& ws = lib.at(t);
    auto& d = loc[static_cast<int>(t)];
    d.mass = assemble_gram(ws.domain, zero, one);
    d.semi = assemble_gram(ws.domain, one, zero);
    d.Z = random_local_space(ws, 6, rng, d.mass);
  }

  const double M = space.pou.overlap_count;
  const double C = space.pou.gradient_bound;
  double min_margin = std::numeric_limits<double>::infinity();
  double worst_l2 = 0, worst_h1 = 0;
  for (int f = 0; f < n_fields; ++f) {
    const Field u = random_smooth(space.disc, rng, true, 1.0);
    Field v = Field::Zero(space.disc.num_dofs());
    double rhs_l2_sq = 0, rhs_h1_sq = 0;
    for (int i = 0; i < space.cfg.count(); ++i) {
      const auto& d = loc[static_cast<int>(space.cfg.components[i].type)];
      const Field ui = space.restrict_to_component(i, u);
      const Field zi = project_onto(d.Z, d.mass, ui);
      const Field e = ui - zi;
      const double eps = gram_norm(e, d.mass);
      const double eps_g = gram_norm(e, d.semi);
      rhs_l2_sq += eps * eps;
      rhs_h1_sq += C * C * eps * eps + eps_g * eps_g;
      v += pum_basis_function(space, i, zi);
    }
    const double lhs_l2 = gram_norm(u - v, mass_g);
    const double rhs_l2 = std::sqrt(M * rhs_l2_sq);
    const double lhs_h1 = gram_norm(u - v, semi_g);
    const double rhs_h1 = std::sqrt(2.0 * M * rhs_h1_sq);
    min_margin = std::min({min_margin, (rhs_l2 - lhs_l2) / std::max(rhs_l2, kTiny),
                           (rhs_h1 - lhs_h1) / std::max(rhs_h1, kTiny)});
    worst_l2 = std::max(worst_l2, lhs_l2 / std::max(rhs_l2, kTiny));
    worst_h1 = std::max(worst_h1, lhs_h1 / std::max(rhs_h1, kTiny));
  }

  CheckResult r;
  r.name = "pum_interpolation_bounds";
  r.margin = min_margin;
  r.passed = r.margin > 0;
  r.detail = fmtd("max lhs/rhs: L2=%.3f, H1-semi=%.3f over %g fields", worst_l2,
                  worst_h1, n_fields);
  return r;
}

CheckResult verify_residual_bound(const PumOptions& pum, int n_dd, int n_states,
                                  bool halve_c_res, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const SamplerOptions sopt;
  const NonlinearDiffusionModel model;
  const GlobalSpace space = build_global_space(
      sample_global_configuration({n_dd}, sopt, pum.H, pum.delta, rng), lib);
  const GlobalDualNorm dual(space);

  double min_margin = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int s = 0; s < n_states; ++s) {
    const GlobalConfiguration c =
        sample_global_configuration({n_dd}, sopt, pum.H, pum.delta, rng);
    const ModelParams params = c.model_params();
    const Field u = random_smooth(space.disc, rng, true, 0.4);
    const ErrorReport rep =
        error_report(space, model, params, u, std::nullopt, halve_c_res);
    const double lhs = dual(
        assemble_residual(space.disc, model, params, space.layout, u));
    const double rhs = rep.bound * (1.0 + 1e-10) + 1e-10;
    min_margin = std::min(min_margin, (rhs - lhs) / std::max(rhs, kTiny));
    worst = std::max(worst, lhs / std::max(rep.bound, kTiny));
  }

  // The reported constant must match the formula evaluated on the measured
  // gradient bound; the fault-injection flag breaks exactly this identity.
  const PouConstants direct = pou_constants(space, halve_c_res);
  const double expected = residual_constant(space.pou.gradient_bound);
  const double c_dev = std::abs(direct.c_res - expected) / expected;
  const double m_formula = (1e-12 - c_dev) / 1e-12;

  CheckResult r;
  r.name = "local_residual_bound";
  r.margin = std::min(min_margin, m_formula);
  r.passed = r.margin > 0;
  r.detail = fmtd("max dual/bound=%.3e, c_res dev=%.3e over %g states", worst,
                  c_dev, n_states);
  return r;
}

CheckResult verify_fourier_chi2(int n_fourier, const std::vector<double>& alphas,
                                int n_samples, double rel_tol, Rng& rng) {
  double min_margin = std::numeric_limits<double>::infinity();
  std::string detail;
  for (const double alpha : alphas) {
    double mean = 0.0;
    for (int i = 0; i < n_samples; ++i)
      mean += sample_fourier_field(n_fourier, alpha, rng).sq_norm();
    mean /= n_samples;
    const double dev = std::abs(mean / (2.0 * n_fourier) - 1.0);
    min_margin = std::min(min_margin, (rel_tol - dev) / rel_tol);
    detail += fmtd("alpha=%g: mean/2Nf-1=%.3e; ", alpha, dev);
  }
  CheckResult r;
  r.name = "fourier_sampler_chi2";
  r.margin = min_margin;
  r.passed = r.margin > 0;
  r.detail = detail;
  return r;
}

CheckResult verify_sampler_ranges(const PumOptions& pum, int n_draws, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const SamplerOptions opt;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string detail;

  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    const auto& ws = lib.at(t);
    const bool wall = t != Archetype::Internal;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, ends = 0.0;
    double glo = lo, ghi = -lo;
    for (int i = 0; i < n_draws; ++i) {
      const BoundarySample s = sample_bc(ws, opt, rng);
      lo = std::min(lo, s.values.minCoeff());
      hi = std::max(hi, s.values.maxCoeff());
      if (wall)
        ends = std::max({ends, std::abs(s.values[0]),
                         std::abs(s.values[s.values.size() - 1])});
      const BoundarySample g = sample_gaussian_bc(ws, opt, true, rng);
      glo = std::min(glo, g.values.minCoeff());
      ghi = std::max(ghi, g.values.maxCoeff());
    }
    min_margin = std::min(min_margin, (lo + 1e-12) / opt.u_max);
    min_margin = std::min(min_margin, (opt.u_max * (1 + 1e-12) - hi) / opt.u_max);
    min_margin = std::min(min_margin, (hi - 0.4 * opt.u_max) / opt.u_max);
    if (wall) min_margin = std::min(min_margin, (1e-13 - ends) / 1e-13);
    min_margin = std::min(min_margin, glo / opt.u_max + 1e-12);
    min_margin = std::min(min_margin, (opt.u_max - ghi) / opt.u_max + 1e-12);
    detail += std::string(archetype_name(t)) + fmtd(":[%.2e,%.3f] ", lo, hi);
  }

  int none = 0, count = 2000;
  std::array<double, 2> mu1{1e30, -1e30}, mu2{1e30, -1e30};
  for (int i = 0; i < count; ++i) {
    const LocalParameterSample s = sample_local_parameters(9, opt, rng);
    if (s.i_star == 0) ++none;
    for (const auto& m : s.mu) {
      mu1 = {std::min(mu1[0], m[0]), std::max(mu1[1], m[0])};
      mu2 = {std::min(mu2[0], m[1]), std::max(mu2[1], m[1])};
    }
  }
  const double freq_dev =
      std::abs(static_cast<double>(none) / count - (1.0 - opt.p_src));
  min_margin = std::min(min_margin, (0.05 - freq_dev) / 0.05);
  const bool mu_ok = mu1[0] >= opt.mu1_range[0] && mu1[1] <= opt.mu1_range[1] &&
                     mu2[0] >= opt.mu2_range[0] && mu2[1] <= opt.mu2_range[1];
  if (!mu_ok) min_margin = std::min(min_margin, -1.0);
  detail += fmtd("src-off freq dev=%.3f", freq_dev);

  CheckResult r;
  r.name = "sampler_ranges";
  r.margin = min_margin;
  r.passed = r.margin > 0;
  r.detail = detail;
  return r;
}

CheckResult verify_pod_optimality(const PumOptions& pum, Rng& rng) {
  const ArchetypeWorkspace ws = make_archetype(Archetype::Internal, pum);
  const int m = 12, n = 4;
  std::vector<Field> snaps;
  for (int i = 0; i < m; ++i)
    snaps.push_back(random_smooth(ws.domain, rng, false, 1.0));
  const PodResult res = pod(snaps, ws.weighted_gram, n);

  const Eigen::MatrixXd G =
      res.modes.transpose() * (ws.weighted_gram * res.modes);
  const double ortho =
      (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();

  double err_sq = 0.0;
  for (const auto& s : snaps) {
    const Field d = s - project_onto(res.modes, ws.weighted_gram, s);
    err_sq += d.dot(ws.weighted_gram * d);
  }
  const double total = res.eigenvalues.sum();
  double tail = 0.0;
  for (int k = static_cast<int>(res.modes.cols());
       k < res.eigenvalues.size(); ++k)
    tail += res.eigenvalues[k];
  const double id_dev = std::abs(err_sq - tail) / std::max(total, kTiny);

  bool sorted = true;
  for (int k = 1; k < res.eigenvalues.size(); ++k)
    sorted = sorted && res.eigenvalues[k] <= res.eigenvalues[k - 1] * (1 + 1e-12);
  const bool nonneg = res.eigenvalues.minCoeff() > -1e-12 * total;

  CheckResult r;
  r.name = "pod_optimality";
  const double m_ortho = (1e-10 - ortho) / 1e-10;
  const double m_id = (1e-10 - id_dev) / 1e-10;
  r.margin = std::min({m_ortho, m_id, sorted ? 1.0 : -1.0, nonneg ? 1.0 : -1.0});
  r.passed = r.margin > 0;
  r.detail = fmtd("ortho dev=%.3e, tail-identity dev=%.3e", ortho, id_dev);
  return r;
}

CheckResult verify_reduced_jacobian_fd(const PumOptions& pum, int n_dd,
                                       int n_states, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const SamplerOptions sopt;
  const NonlinearDiffusionModel model;
  const GlobalConfiguration cfg =
      sample_global_configuration({n_dd}, sopt, pum.H, pum.delta, rng);
  const GlobalSpace space = build_global_space(cfg, lib);
  const GlobalROMSystem sys = assemble_rom(space, random_bases(lib, 3, rng));
  const ModelParams params = cfg.model_params();

  double worst = 0.0;
  for (int s = 0; s < n_states; ++s) {
    const Eigen::VectorXd c = random_reduced_state(sys, rng, 0.2);
    const Eigen::MatrixXd J(reduced_jacobian(sys, model, params, c));
    Eigen::MatrixXd fd(sys.N(), sys.N());
    const double h = 1e-6;
    for (int k = 0; k < sys.N(); ++k) {
      Eigen::VectorXd cp = c, cm = c;
      cp[k] += h;
      cm[k] -= h;
      fd.col(k) = (reduced_residual(sys, model, params, cp) -
                   reduced_residual(sys, model, params, cm)) /
                  (2 * h);
    }
    worst = std::max(worst, (J - fd).norm() / std::max(J.norm(), kTiny));
  }

  CheckResult r;
  r.name = "reduced_jacobian_fd";
  r.margin = (1e-6 - worst) / 1e-6;
  r.passed = r.margin > 0;
  r.detail = fmtd("max relative Frobenius deviation=%.3e over %g states", worst,
                  n_states);
  return r;
}

CheckResult verify_component_assembly(const PumOptions& pum, int n_dd, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const SamplerOptions sopt;
  const NonlinearDiffusionModel model;
  const GlobalConfiguration cfg =
      sample_global_configuration({n_dd}, sopt, pum.H, pum.delta, rng);
  const GlobalSpace space = build_global_space(cfg, lib);
  const GlobalROMSystem sys = assemble_rom(space, random_bases(lib, 3, rng));
  const ModelParams params = cfg.model_params();

  const Eigen::VectorXd c = random_reduced_state(sys, rng, 0.2);
  const Field u = reconstruct(sys, c);
  const Eigen::VectorXd r_blocks = reduced_residual(sys, model, params, c);
  const Eigen::VectorXd r_full =
      sys.Z_full.transpose() *
      assemble_residual(space.disc, model, params, space.layout, u);
  const double dr = (r_blocks - r_full).norm() / std::max(r_full.norm(), kTiny);

  const Eigen::MatrixXd j_blocks(reduced_jacobian(sys, model, params, c));
  const SpMat j_hf = assemble_jacobian(space.disc, model, params, space.layout, u);
  const Eigen::MatrixXd j_full(SpMat(sys.Z_full.transpose() * j_hf * sys.Z_full));
  const double dj = (j_blocks - j_full).norm() / std::max(j_full.norm(), kTiny);

  CheckResult r;
  r.name = "component_assembly_consistency";
  const double worst = std::max(dr, dj);
  r.margin = (1e-12 - worst) / 1e-12;
  r.passed = r.margin > 0;
  r.detail = fmtd("residual dev=%.3e, jacobian dev=%.3e", dr, dj);
  return r;
}

CheckResult verify_galerkin_optimality(const PumOptions& pum, int n_dd, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const LinearCoerciveModel model(
      {}, [](const Vec2& x, const ModelParams&) { return 1.0 + x[0] + 2.0 * x[1]; });
  const GlobalSpace space = build_global_space(uniform_config(n_dd, pum), lib);
  ModelParams params = space.cfg.model_params();
  params.mu_adr = {1.0, 0.0, 0.0, 0.5};

  const Field u = solve_global_hf(space, model, params);
  const SpMat a_gram = assemble_energy_gram(space.disc, model, params);
  const GlobalROMSystem sys = assemble_rom(space, random_bases(lib, 3, rng));

  const Field u_rom = reconstruct(sys, solve_rom(sys, model, params).coeffs);
  const Field u_best = reconstruct(sys, project_to_rom(sys, a_gram, u));
  const double e_rom = gram_norm(u - u_rom, a_gram);
  const double e_best = gram_norm(u - u_best, a_gram);
  const double opt_dev = std::abs(e_rom - e_best) / std::max(e_best, kTiny);

  const GlobalDualNorm dual(space, &a_gram);
  const double res_norm =
      dual(assemble_residual(space.disc, model, params, space.layout, u_rom));
  const double dual_dev = std::abs(res_norm - e_rom) / std::max(e_rom, kTiny);

  CheckResult r;
  r.name = "galerkin_optimality";
  const double worst = std::max(opt_dev, dual_dev);
  r.margin = (1e-8 - worst) / 1e-8;
  r.passed = r.margin > 0;
  r.detail = fmtd("best-approximation dev=%.3e, dual-residual dev=%.3e", opt_dev,
                  dual_dev);
  return r;
}

CheckResult verify_greedy_convergence(const PumOptions& pum, int n_dd, int steps,
                                      int n_seeds, unsigned long long seed0) {
  const ComponentLibrary lib = make_library(pum);
  const LinearCoerciveModel model(
      {}, [](const Vec2& x, const ModelParams&) {
        return 1.0 + std::sin(3.0 * x[0]) + x[1];
      });
  const GlobalSpace space = build_global_space(uniform_config(n_dd, pum), lib);
  const ModelParams params = space.cfg.model_params();

  double m_mono = std::numeric_limits<double>::infinity();
  double m_id = m_mono, m_bound = m_mono;
  double final_ratio = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    Rng rng(seed0 + 97 * static_cast<unsigned long long>(s));
    const LinearEnrichmentTrace trace = simplified_enrich_linear(
        space, model, params, random_bases(lib, 1, rng), steps);
    const auto& err = trace.energy_errors;
    const double e0 = err.front();
    if (e0 <= 0) {
      return {"greedy_linear_convergence", false, -1.0,
              "degenerate zero initial error"};
    }
    for (std::size_t l = 0; l + 1 < err.size(); ++l) {
      m_mono = std::min(m_mono, (err[l] * (1 + 1e-12) - err[l + 1]) / e0);
      const double viol = err[l + 1] * err[l + 1] -
                          (err[l] * err[l] - trace.marked_residuals[l] *
                                                 trace.marked_residuals[l]);
      m_id = std::min(m_id, (1e-8 * e0 * e0 - viol) / (1e-8 * e0 * e0));
      m_bound = std::min(m_bound, (trace.bound[l + 1] * (1 + 1e-10) - err[l + 1]) /
                                      std::max(trace.bound[l + 1], kTiny));
    }
    final_ratio = std::max(final_ratio, err.back() / e0);
  }

  CheckResult r;
  r.name = "greedy_linear_convergence";
  r.margin = std::min({m_mono, m_id, m_bound});
  r.passed = r.margin > 0;
  r.detail = fmtd("max final/initial energy error=%.3e over %g seeds, %g steps",
                  final_ratio, n_seeds, steps);
  return r;
}

CheckResult verify_riesz_scaling(const PumOptions& pum, int n_dd, Rng& rng) {
  const ComponentLibrary lib = make_library(pum);
  const LinearCoerciveModel model;  // zero load: residual is linear in u
  const GlobalSpace space = build_global_space(uniform_config(n_dd, pum), lib);
  const ModelParams params = space.cfg.model_params();

  const Field u = random_smooth(space.disc, rng, true, 1.0);
  const auto r1 = local_riesz_residuals(space, model, params, u);
  const auto r2 = local_riesz_residuals(space, model, params, Field(2.0 * u));

  double worst = 0.0;
  double base = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    worst = std::max(worst, std::abs(r2[i] - 2.0 * r1[i]));
    base = std::max(base, r1[i]);
    if (r1[i] < 0 || r2[i] < 0) worst = std::numeric_limits<double>::infinity();
  }
  const double dev = worst / std::max(base, kTiny);

  const double delta = delta_indicator(r1);
  const PouConstants c = pou_constants(space);
  const double bound_dev =
      std::abs(global_residual_bound(r1, c) -
               std::sqrt(static_cast<double>(c.overlap)) * c.c_res * delta) /
      std::max(global_residual_bound(r1, c), kTiny);

  CheckResult r;
  r.name = "riesz_residual_scaling";
  const double worst_dev = std::max(dev, bound_dev);
  r.margin = (1e-12 - worst_dev) / 1e-12;
  r.passed = r.margin > 0;
  r.detail = fmtd("homogeneity dev=%.3e, bound formula dev=%.3e", dev, bound_dev);
  return r;
}

CheckResult verify_seed_determinism(const PumOptions& pum) {
  const ArchetypeWorkspace ws = make_archetype(Archetype::Corner, pum);
  const NonlinearDiffusionModel model;
  TrainingOptions opt;
  opt.n_train = 6;
  opt.n = 3;

  Rng r1(7), r2(7), r3(8);
  const ReducedBasis b1 = localized_training(ws, model, opt, r1);
  const ReducedBasis b2 = localized_training(ws, model, opt, r2);
  const ReducedBasis b3 = localized_training(ws, model, opt, r3);
  const bool same = b1.modes.rows() == b2.modes.rows() &&
                    b1.modes.cols() == b2.modes.cols() &&
                    (b1.modes.array() == b2.modes.array()).all();
  const bool differs =
      b1.modes.cols() != b3.modes.cols() ||
      !(b1.modes.array() == b3.modes.array()).all();

  Rng c1(11), c2(11);
  const SamplerOptions sopt;
  const auto g1 = sample_global_configuration({2, 3}, sopt, pum.H, pum.delta, c1);
  const auto g2 = sample_global_configuration({2, 3}, sopt, pum.H, pum.delta, c2);
  const bool cfg_same = g1.to_json().dump() == g2.to_json().dump();

  CheckResult r;
  r.name = "seed_determinism";
  r.passed = same && differs && cfg_same;
  r.margin = r.passed ? 1.0 : -1.0;
  r.detail = fmtd("repeat identical=%g, reseed differs=%g, config repeat=%g",
                  same, differs, cfg_same);
  return r;
}

CheckResult verify_io_roundtrip(const std::string& dir, Rng& rng) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::normal_distribution<double> nd;
  bool ok = true;
  std::string detail;

  Eigen::MatrixXd m(4, 3);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  m(0, 0) = 0.0;
  m(1, 1) = -1.5;
  m(2, 2) = 1e-300;
  m(3, 0) = kPi;
  const std::string mp = (fs::path(dir) / "m.bin").string();
  write_matrix(mp, m);
  const Eigen::MatrixXd m2 = read_matrix(mp);
  if (m2.rows() != m.rows() || m2.cols() != m.cols() ||
      !(m2.array() == m.array()).all()) {
    ok = false;
    detail += "matrix mismatch; ";
  }

  const nlohmann::json j{{"a", 1}, {"b", {1.5, 2.5}}, {"s", "x"}};
  const std::string jp = (fs::path(dir) / "j.json").string();
  write_json(jp, j);
  if (read_json(jp) != j) {
    ok = false;
    detail += "json mismatch; ";
  }

  ReducedBasis rb;
  rb.type = Archetype::Edge;
  rb.modes = Eigen::MatrixXd(5, 2);
  for (int i = 0; i < rb.modes.size(); ++i) rb.modes.data()[i] = nd(rng);
  const std::string bp = (fs::path(dir) / "basis.bin").string();
  save_basis(bp, rb, {{"origin", "verify"}});
  const ReducedBasis rb2 = load_basis(bp);
  if (rb2.type != rb.type || !(rb2.modes.array() == rb.modes.array()).all()) {
    ok = false;
    detail += "basis mismatch; ";
  }

  ReducedState st;
  st.coeffs = Eigen::VectorXd(5);
  for (int i = 0; i < 5; ++i) st.coeffs[i] = nd(rng);
  const std::string sp = (fs::path(dir) / "state.bin").string();
  save_state(sp, st);
  if (!(load_state(sp).coeffs.array() == st.coeffs.array()).all()) {
    ok = false;
    detail += "state mismatch; ";
  }

  const Discretization d1 =
      Discretization::uniform({0.0, 0.0, 1.0, 1.0}, 2, 2, 2);
  Field u(d1.num_dofs());
  for (int i = 0; i < u.size(); ++i) u[i] = nd(rng);
  const std::string fp = (fs::path(dir) / "field.bin").string();
  write_field(fp, d1, u);
  if (!(read_field(fp, d1).array() == u.array()).all()) {
    ok = false;
    detail += "field mismatch; ";
  }
  const Discretization d2 =
      Discretization::uniform({0.0, 0.0, 1.0, 1.0}, 3, 2, 2);
  bool threw = false;
  try {
    read_field(fp, d2);
  } catch (const IoError&) {
    threw = true;
  }
  if (!threw) {
    ok = false;
    detail += "descriptor mismatch not detected; ";
  }

  CheckResult r;
  r.name = "io_roundtrip";
  r.passed = ok;
  r.margin = ok ? 1.0 : -1.0;
  r.detail = detail.empty() ? "binary, json, basis, state, field round trips"
                            : detail;
  return r;
}

CheckResult verify_te_pod_identity(int refine, int degree, Rng& rng) {
  const LinearStudySetup setup = make_linear_study(refine, degree);
  const SamplerOptions sopt;
  const auto mu = sample_adr_parameters(setup, rng);
  const PodResult full = te_pod_baseline(
      setup, {mu}, static_cast<int>(setup.boundary_dofs.size()));
  const LinearTransferSolver solver(setup, mu);

  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Field u = solver.apply(
        sample_linear_boundary(setup, SamplerKind::Gaussian, sopt, rng));
    const Field d = u - project_onto(full.modes, setup.target_h1, u);
    worst = std::max(worst,
                     gram_norm(d, setup.target_h1) / gram_norm(u, setup.target_h1));
  }

  CheckResult r;
  r.name = "te_pod_full_range";
  r.margin = (1e-4 - worst) / 1e-4;
  r.passed = r.margin > 0;
  r.detail = fmtd("max relative reconstruction error=%.3e at rank %g", worst,
                  static_cast<double>(full.modes.cols()));
  return r;
}

VerifyReport run_verification(const VerifyOptions& opt) {
  namespace fs = std::filesystem;
  VerifyReport rep;
  Rng rng(opt.seed);
  rep.checks.push_back(verify_pou_exactness(opt.pum, opt.n_dd));
  rep.checks.push_back(
      verify_pum_interpolation(opt.pum, opt.n_dd, opt.thm_fields, rng));
  rep.checks.push_back(verify_residual_bound(opt.pum, opt.n_dd, opt.lemma_states,
                                             opt.fault_halve_c_res, rng));
  rep.checks.push_back(
      verify_fourier_chi2(20, {1.0, 2.0}, opt.chi2_samples, 0.05, rng));
  rep.checks.push_back(verify_sampler_ranges(opt.pum, 200, rng));
  rep.checks.push_back(verify_pod_optimality(opt.pum, rng));
  rep.checks.push_back(verify_reduced_jacobian_fd(opt.pum, 2, opt.fd_states, rng));
  rep.checks.push_back(verify_component_assembly(opt.pum, 2, rng));
  rep.checks.push_back(verify_galerkin_optimality(opt.pum, 2, rng));
  rep.checks.push_back(verify_greedy_convergence(opt.pum, 2, opt.greedy_steps,
                                                 opt.greedy_seeds, opt.seed));
  rep.checks.push_back(verify_riesz_scaling(opt.pum, 2, rng));
  rep.checks.push_back(verify_seed_determinism(opt.pum));
  rep.checks.push_back(verify_io_roundtrip(
      (fs::temp_directory_path() / "pumrom_verify_io").string(), rng));
  rep.checks.push_back(verify_te_pod_identity(1, opt.pum.degree, rng));
  return rep;
}

VerifyReport run_verification(const ExperimentConfig& cfg) {
  VerifyOptions opt;
  opt.pum = cfg.pum;
  opt.seed = cfg.seed;
  opt.fault_halve_c_res = cfg.fault_halve_c_res;
  return run_verification(opt);
}

}  // namespace pumrom
