#include "pumrom/training.hpp"

#include <algorithm>
#include <cmath>

#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"

namespace pumrom {

LocalParameterSample sample_local_parameters(int patch_count,
                                             const SamplerOptions& opt, Rng& rng) {
  if (opt.p_src < 0.0 || opt.p_src > 1.0)
    throw ConfigError("sample_local_parameters: p_src must be in [0,1]");
  std::uniform_real_distribution<double> u1(opt.mu1_range[0], opt.mu1_range[1]);
  std::uniform_real_distribution<double> u2(opt.mu2_range[0], opt.mu2_range[1]);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  LocalParameterSample s;
  s.mu.resize(patch_count);
  for (int k = 0; k < patch_count; ++k) s.mu[k] = {u1(rng), u2(rng)};
  if (u01(rng) < opt.p_src) {
    const int t = std::min(patch_count - 1,
                           static_cast<int>(u01(rng) * patch_count));
    s.i_star = 1 + t;
  } else {
    s.i_star = 0;
  }
  return s;
}

double FourierField::mode_weight(int k, double alpha) {
  return 1.0 / std::sqrt(1.0 + std::pow(2.0 * M_PI * k, 2.0 * alpha));
}

double FourierField::operator()(double s) const {
  double v = 0.0;
  for (int k = 0; k < c_re.size(); ++k) {
    const double w = mode_weight(k, alpha);
    const double th = 2.0 * M_PI * k * s;
    v += w * (c_re[k] * std::cos(th) - c_im[k] * std::sin(th));
  }
  return v;
}

FourierField sample_fourier_field(int n_f, double alpha, Rng& rng) {
  if (n_f < 1) throw ConfigError("sample_fourier_field: n_fourier must be >= 1");
  if (alpha < 0.0) throw ConfigError("sample_fourier_field: alpha must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  FourierField f;
  f.alpha = alpha;
  f.c_re.resize(n_f);
  f.c_im.resize(n_f);
  for (int k = 0; k < n_f; ++k) {
    f.c_re[k] = normal(rng);
    f.c_im[k] = normal(rng);
  }
  return f;
}

std::string sampler_name(SamplerKind k) {
  return k == SamplerKind::Smooth ? "smooth" : "gaussian";
}

BoundarySample sample_bc(const ArchetypeWorkspace& ws, const SamplerOptions& opt,
                         Rng& rng) {
  if (!(opt.u_max > 0.0) || opt.u_max > 1.0)
    throw ConfigError("sample_bc: u_max must be in (0,1]");
  const bool wall = ws.type != Archetype::Internal;
  std::uniform_real_distribution<double> uni(0.0, opt.u_max);
  const Eigen::Index m = ws.input_s.size();

  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    const FourierField f = sample_fourier_field(opt.n_fourier, opt.alpha, rng);
    const double x1 = uni(rng), x2 = uni(rng);
    const double a = std::min(x1, x2), b = std::max(x1, x2);
    const double x3 = wall ? uni(rng) : 0.0;

    Eigen::VectorXd g1(m);
    for (Eigen::Index i = 0; i < m; ++i)
      g1[i] = f(wall ? opt.squeeze * ws.input_s[i] : ws.input_s[i]);
    const double lo = g1.minCoeff(), hi = g1.maxCoeff();
    if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) continue;  // flat draw

    Eigen::VectorXd vals = (g1.array() - lo) * ((b - a) / (hi - lo)) + a;
    if (wall) {
      for (Eigen::Index i = 0; i < m; ++i)
        vals[i] *= ws.input_s[i] * (1.0 - ws.input_s[i]);
      const double peak = vals.maxCoeff();
      if (!(peak > 0.0)) continue;
      vals *= x3 / peak;
    }
    return {std::move(vals), SamplerKind::Smooth, opt.alpha, opt.n_fourier,
            opt.u_max};
  }
  throw DegenerateSample("sample_bc: repeated flat draws");
}

BoundarySample sample_gaussian_bc(const ArchetypeWorkspace& ws,
                                  const SamplerOptions& opt, bool clamp_to_range,
                                  Rng& rng) {
  const Eigen::Index m = ws.input_s.size();
  Eigen::VectorXd vals(m);
  if (clamp_to_range) {
    std::normal_distribution<double> normal(0.5 * opt.u_max, 0.5 * opt.u_max);
    for (Eigen::Index i = 0; i < m; ++i)
      vals[i] = std::clamp(normal(rng), 0.0, opt.u_max);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < m; ++i) vals[i] = normal(rng);
  }
  return {std::move(vals), SamplerKind::Gaussian, 0.0, 0,
          clamp_to_range ? opt.u_max : 0.0};
}

ModelParams patch_params(const ArchetypeWorkspace& ws,
                         const LocalParameterSample& s) {
  if (static_cast<int>(s.mu.size()) != ws.patch_grid.count())
    throw ConfigError("patch_params: one mu pair per patch subdomain required");
  if (s.i_star < 0 || s.i_star > ws.patch_grid.count())
    throw ConfigError("patch_params: i_star out of range");
  ModelParams p;
  p.grid = ws.patch_grid;
  p.mu_sub = s.mu;
  p.i_star = s.i_star;
  return p;
}

Field solve_transfer(const ArchetypeWorkspace& ws, const PDEModel& model,
                     const ModelParams& params, const BoundarySample& g,
                     const NewtonSettings& settings) {
  if (g.values.size() != static_cast<Eigen::Index>(ws.input_dofs.size()))
    throw ConfigError("solve_transfer: boundary sample size mismatch");

  Eigen::VectorXd nodal = Eigen::VectorXd::Zero(ws.patch.num_dofs());
  for (size_t k = 0; k < ws.input_dofs.size(); ++k)
    nodal[ws.input_dofs[k]] = g.values[static_cast<Eigen::Index>(k)];
  // Wall data wins where the input path touches a wall.
  using Side = Discretization::Side;
  if (ws.type != Archetype::Internal)
    for (int d : ws.patch.side_dofs(Side::Left)) nodal[d] = 0.0;
  if (ws.type == Archetype::Corner)
    for (int d : ws.patch.side_dofs(Side::Bottom)) nodal[d] = 0.0;

  DirichletBC bc;
  bc.dofs = ws.patch_boundary;
  bc.values.resize(static_cast<Eigen::Index>(bc.dofs.size()));
  for (size_t k = 0; k < bc.dofs.size(); ++k)
    bc.values[static_cast<Eigen::Index>(k)] = nodal[bc.dofs[k]];

  const Field u =
      solve_nonlinear(ws.patch, model, params, ws.patch_layout, bc, settings);
  Field out(ws.domain.num_dofs());
  for (int d = 0; d < ws.domain.num_dofs(); ++d)
    out[d] = u[ws.domain_to_patch[d]];
  return out;
}

int append_orthonormalized(Eigen::MatrixXd& Z, const SpMat& gram,
                           const Eigen::MatrixXd& extra, double drop_tol) {
  if (Z.rows() == 0 && Z.cols() == 0 && extra.cols() > 0)
    Z.resize(extra.rows(), 0);
  if (extra.rows() != Z.rows())
    throw ConfigError("append_orthonormalized: row count mismatch");
  Eigen::MatrixXd Q = Z;
  Eigen::MatrixXd GQ(Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) GQ.col(j) = gram * Z.col(j);

  int kept = 0;
  for (Eigen::Index c = 0; c < extra.cols(); ++c) {
    Eigen::VectorXd v = extra.col(c);
    const double base = std::sqrt(std::max(0.0, v.dot(gram * v)));
    if (!(base > 0.0)) continue;
    for (int pass = 0; pass < 2 && Q.cols() > 0; ++pass)
      v -= Q * (GQ.transpose() * v).eval();
    const double nn = std::sqrt(std::max(0.0, v.dot(gram * v)));
    if (nn <= drop_tol * base) continue;
    v /= nn;
    Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
    GQ.conservativeResize(Q.rows(), Q.cols());
    Q.col(Q.cols() - 1) = v;
    GQ.col(GQ.cols() - 1) = gram * v;
    ++kept;
  }
  Z = std::move(Q);
  return kept;
}

PodResult pod(const std::vector<Field>& snapshots, const SpMat& gram, int n) {
  if (snapshots.empty()) throw ConfigError("pod: empty snapshot set");
  if (n < 0) throw ConfigError("pod: negative basis size");
  const int m = static_cast<int>(snapshots.size());
  const Eigen::Index dofs = snapshots[0].size();
  for (const auto& s : snapshots)
    if (s.size() != dofs) throw ConfigError("pod: snapshot size mismatch");

  std::vector<Eigen::VectorXd> gu(m);
  for (int j = 0; j < m; ++j) gu[j] = gram * snapshots[j];
  Eigen::MatrixXd K(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) K(i, j) = K(j, i) = snapshots[i].dot(gu[j]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  if (es.info() != Eigen::Success)
    throw IndefiniteGram("pod: snapshot gram eigensolve failed");

  PodResult out;
  out.eigenvalues.resize(m);
  for (int k = 0; k < m; ++k) out.eigenvalues[k] = es.eigenvalues()[m - 1 - k];
  const double lam1 = std::max(out.eigenvalues[0], 0.0);
  const double tol = 1e-12 * lam1;
  int rank = 0;
  while (rank < m && out.eigenvalues[rank] > tol) ++rank;

  const int n_eff = std::min(n, rank);
  out.rank_limited = n_eff < n;
  Eigen::MatrixXd raw(dofs, n_eff);
  for (int k = 0; k < n_eff; ++k) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dofs);
    for (int i = 0; i < m; ++i) z += es.eigenvectors()(i, m - 1 - k) * snapshots[i];
    raw.col(k) = z / std::sqrt(out.eigenvalues[k]);
  }
  out.modes.resize(dofs, 0);
  append_orthonormalized(out.modes, gram, raw, 1e-8);
  if (out.modes.cols() < n_eff) out.rank_limited = true;
  return out;
}

Eigen::VectorXd basis_coefficients(const Eigen::MatrixXd& basis,
                                   const SpMat& gram, const Field& w) {
  return basis.transpose() * (gram * w);
}

Field project_onto(const Eigen::MatrixXd& basis, const SpMat& gram,
                   const Field& w) {
  if (basis.cols() == 0) return Field::Zero(w.size());
  return basis * basis_coefficients(basis, gram, w);
}

ReducedBasis localized_training(const ArchetypeWorkspace& ws,
                                const PDEModel& model, const TrainingOptions& opt,
                                Rng& rng, std::vector<Field>* snapshots_out) {
  if (opt.n > opt.n_train)
    throw ConfigError("localized_training: n must not exceed n_train");
  std::vector<Field> snapshots;
  snapshots.reserve(opt.n_train);
  int failures = 0;
  for (int t = 0; t < opt.n_train; ++t) {
    const auto params = patch_params(
        ws, sample_local_parameters(ws.patch_grid.count(), opt.sampler, rng));
    const BoundarySample g =
        opt.kind == SamplerKind::Smooth
            ? sample_bc(ws, opt.sampler, rng)
            : sample_gaussian_bc(ws, opt.sampler, !model.is_linear(), rng);
    try {
      snapshots.push_back(solve_transfer(ws, model, params, g, opt.newton));
    } catch (const NonConvergence&) {
      ++failures;
    } catch (const SingularJacobian&) {
      ++failures;
    } catch (const DenominatorUnderflow&) {
      ++failures;
    }
  }
  if (failures * 10 > opt.n_train)
    throw TrainingFailure("localized_training: " + std::to_string(failures) +
                          " of " + std::to_string(opt.n_train) +
                          " transfer solves failed");
  const PodResult p = pod(snapshots, ws.weighted_gram, opt.n);
  if (snapshots_out) *snapshots_out = std::move(snapshots);
  return ReducedBasis{ws.type, p.modes};
}

namespace {
double relative_projection_error(const Eigen::MatrixXd& basis, const SpMat& gram,
                                 const Field& w) {
  const double nw = gram_norm(w, gram);
  if (!(nw > 0.0)) throw ZeroSnapshot("projection error: zero test snapshot");
  const Field d = w - project_onto(basis, gram, w);
  return gram_norm(d, gram) / nw;
}
}  // namespace

double projection_error_indicator(const Eigen::MatrixXd& basis, const SpMat& gram,
                                  const std::vector<Field>& test) {
  if (test.empty()) throw ConfigError("projection_error_indicator: empty test set");
  double acc = 0.0;
  for (const auto& w : test) acc += relative_projection_error(basis, gram, w);
  return acc / static_cast<double>(test.size());
}

double max_relative_projection_error(const Eigen::MatrixXd& basis,
                                     const SpMat& gram,
                                     const std::vector<Field>& test) {
  if (test.empty())
    throw ConfigError("max_relative_projection_error: empty test set");
  double mx = 0.0;
  for (const auto& w : test)
    mx = std::max(mx, relative_projection_error(basis, gram, w));
  return mx;
}

// ---------------------------------------------------------------------------

namespace {
Grid1D refined_breakpoints(const std::vector<double>& base, int refine) {
  Grid1D g;
  for (size_t k = 0; k + 1 < base.size(); ++k) {
    for (int r = 0; r < refine; ++r)
      g.breakpoints.push_back(base[k] + (base[k + 1] - base[k]) * r / refine);
  }
  g.breakpoints.push_back(base.back());
  return g;
}
}  // namespace

LinearStudySetup make_linear_study(int refine, int degree) {
  if (refine < 1) throw ConfigError("make_linear_study: refine must be >= 1");
  // 0.1 and 0.2 are breakpoints so the extraction is mesh-conforming; the
  // default (refine=1, cubic) has 60 boundary DOFs.
  const std::vector<double> base{0.0, 0.05, 0.1, 0.15, 0.2, 0.3};
  const std::vector<double> inner{0.1, 0.15, 0.2};
  Discretization patch(refined_breakpoints(base, refine),
                       refined_breakpoints(base, refine), degree);
  Discretization target(refined_breakpoints(inner, refine),
                        refined_breakpoints(inner, refine), degree);

  LinearStudySetup s{std::move(patch),
                     std::move(target),
                     SubdomainGrid{0.0, 0.0, 0.3, 1, 1},
                     SubdomainLayout{},
                     {},
                     {},
                     {},
                     SpMat{},
                     {0.2, -1.0, -1.0, 0.0},
                     {1.0, 1.0, 1.0, 1.0}};
  s.layout = make_layout(s.patch, s.grid);

  using Side = Discretization::Side;
  auto push = [&](std::vector<int> dofs, bool rev, bool skip_first,
                  bool skip_last) {
    if (rev) std::reverse(dofs.begin(), dofs.end());
    const size_t hi = dofs.size() - (skip_last ? 1 : 0);
    for (size_t k = skip_first ? 1 : 0; k < hi; ++k)
      s.boundary_dofs.push_back(dofs[k]);
  };
  push(s.patch.side_dofs(Side::Bottom), false, false, false);
  push(s.patch.side_dofs(Side::Right), false, true, false);
  push(s.patch.side_dofs(Side::Top), true, true, false);
  push(s.patch.side_dofs(Side::Left), true, true, true);

  const size_t nb = s.boundary_dofs.size();
  s.boundary_s.resize(static_cast<Eigen::Index>(nb));
  double arc = 0.0;
  const auto r = s.patch.rect();
  const double perimeter = 2.0 * ((r[2] - r[0]) + (r[3] - r[1]));
  s.boundary_s[0] = 0.0;
  for (size_t k = 1; k < nb; ++k) {
    arc += (s.patch.node(s.boundary_dofs[k]) - s.patch.node(s.boundary_dofs[k - 1]))
               .norm();
    s.boundary_s[static_cast<Eigen::Index>(k)] = arc / perimeter;
  }

  std::vector<double> xs(s.patch.nodes_x()), ys(s.patch.nodes_y());
  for (int i = 0; i < s.patch.nodes_x(); ++i) xs[i] = s.patch.node_x(i);
  for (int i = 0; i < s.patch.nodes_y(); ++i) ys[i] = s.patch.node_y(i);
  auto find_idx = [](const std::vector<double>& arr, double t) {
    auto it = std::lower_bound(arr.begin(), arr.end(), t - 1e-9);
    if (it == arr.end() || std::abs(*it - t) > 1e-9)
      throw MeshNotConforming("make_linear_study: extraction node not found");
    return static_cast<int>(it - arr.begin());
  };
  s.extract_dofs.resize(s.target.num_dofs());
  for (int d = 0; d < s.target.num_dofs(); ++d) {
    const Vec2 x = s.target.node(d);
    s.extract_dofs[d] = s.patch.dof(find_idx(xs, x[0]), find_idx(ys, x[1]));
  }
  s.target_h1 = assemble_h1_gram(s.target);
  return s;
}

std::array<double, 4> sample_adr_parameters(const LinearStudySetup& setup,
                                            Rng& rng) {
  std::array<double, 4> mu;
  for (int k = 0; k < 4; ++k) {
    std::uniform_real_distribution<double> u(setup.mu_lo[k], setup.mu_hi[k]);
    mu[k] = u(rng);
  }
  return mu;
}

Eigen::VectorXd sample_linear_boundary(const LinearStudySetup& setup,
                                       SamplerKind kind,
                                       const SamplerOptions& opt, Rng& rng) {
  const Eigen::Index m = setup.boundary_s.size();
  Eigen::VectorXd g(m);
  if (kind == SamplerKind::Smooth) {
    const FourierField f = sample_fourier_field(opt.n_fourier, opt.alpha, rng);
    for (Eigen::Index i = 0; i < m; ++i) g[i] = f(setup.boundary_s[i]);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < m; ++i) g[i] = normal(rng);
  }
  return g;
}

LinearTransferSolver::LinearTransferSolver(const LinearStudySetup& setup,
                                           const std::array<double, 4>& mu)
    : setup_(&setup) {
  ModelParams params;
  params.grid = setup.grid;
  params.mu_adr = mu;
  const LinearADRModel model;
  A_ = assemble_jacobian(setup.patch, model, params, setup.layout,
                         Field::Zero(setup.patch.num_dofs()));
  free_ = free_dofs(setup.patch.num_dofs(), setup.boundary_dofs);
  lu_.compute(masked_block(A_, free_));
  if (lu_.info() != Eigen::Success)
    throw SingularJacobian("LinearTransferSolver: factorization failed");
}

Field LinearTransferSolver::apply(const Eigen::VectorXd& g) const {
  const auto& setup = *setup_;
  if (g.size() != static_cast<Eigen::Index>(setup.boundary_dofs.size()))
    throw ConfigError("LinearTransferSolver: boundary data size mismatch");
  Field x = Field::Zero(setup.patch.num_dofs());
  for (size_t k = 0; k < setup.boundary_dofs.size(); ++k)
    x[setup.boundary_dofs[k]] = g[static_cast<Eigen::Index>(k)];
  const Eigen::VectorXd rhs = -masked_vector(A_ * x, free_);
  const Eigen::VectorXd uf = lu_.solve(rhs);
  for (size_t k = 0; k < free_.size(); ++k)
    x[free_[k]] = uf[static_cast<Eigen::Index>(k)];
  Field out(setup.target.num_dofs());
  for (int d = 0; d < setup.target.num_dofs(); ++d)
    out[d] = x[setup.extract_dofs[d]];
  return out;
}

PodResult te_pod_baseline(const LinearStudySetup& setup,
                          const std::vector<std::array<double, 4>>& mus,
                          int n_max) {
  if (mus.empty()) throw ConfigError("te_pod_baseline: empty parameter set");
  const int n_in = static_cast<int>(setup.boundary_dofs.size());
  std::vector<Field> pool;
  for (const auto& mu : mus) {
    const LinearTransferSolver solver(setup, mu);
    Eigen::MatrixXd T(setup.target.num_dofs(), n_in);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_in);
    for (int j = 0; j < n_in; ++j) {
      g[j] = 1.0;
      T.col(j) = solver.apply(g);
      g[j] = 0.0;
    }
    // Range decomposition under the target norm: eigenpairs of T^t G T give
    // left singular vectors T v / sigma; the sigma-weighted mode is T v.
    Eigen::MatrixXd M = T.transpose() * (setup.target_h1 * T);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double lam1 = std::max(es.eigenvalues().maxCoeff(), 0.0);
    for (int k = 0; k < n_in && static_cast<int>(pool.size()) <
                                    static_cast<int>(mus.size()) * n_max;
         ++k) {
      const double lam = es.eigenvalues()[n_in - 1 - k];
      if (lam <= 1e-12 * lam1) break;
      if (k >= n_max) break;
      pool.push_back(T * es.eigenvectors().col(n_in - 1 - k));
    }
  }
  return pod(pool, setup.target_h1, n_max);
}

void save_basis(const std::string& path, const ReducedBasis& basis,
                const nlohmann::json& meta) {
  write_matrix(path, basis.modes);
  nlohmann::json j{{"archetype", archetype_name(basis.type)},
                   {"size", basis.size()}};
  if (!meta.is_null() && !meta.empty()) j["meta"] = meta;
  write_json(path + ".json", j);
}

ReducedBasis load_basis(const std::string& path) {
  ReducedBasis b;
  b.modes = read_matrix(path);
  const auto j = read_json(path + ".json");
  b.type = archetype_from_name(j.at("archetype").get<std::string>());
  return b;
}

}  // namespace pumrom
