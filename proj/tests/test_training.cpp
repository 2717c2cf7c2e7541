#include <cmath>

#include "doctest.h"
#include "pumrom/errors.hpp"
#include "pumrom/training.hpp"

using namespace pumrom;

TEST_CASE("fourier mode weights decay and match the spectral formula") {
  CHECK(FourierField::mode_weight(0, 1.0) == doctest::Approx(1.0));
  // k=1 weight ratio between alpha=1 and alpha=2
  const double ratio =
      FourierField::mode_weight(1, 1.0) / FourierField::mode_weight(1, 2.0);
  CHECK(ratio == doctest::Approx(6.207078753360645).epsilon(1e-12));
  for (int k = 1; k < 6; ++k)
    CHECK(FourierField::mode_weight(k, 2.0) < FourierField::mode_weight(k, 1.0));
}

TEST_CASE("fourier squared norm matches its coefficient norm and chi2 law") {
  Rng rng(12);
  const int n_f = 20;
  double mean = 0.0;
  const int n_samples = 600;
  for (int s = 0; s < n_samples; ++s) {
    const FourierField g = sample_fourier_field(n_f, 1.0, rng);
    CHECK(g.c_re.size() == n_f);
    mean += g.sq_norm();
  }
  mean /= n_samples;
  CHECK(std::abs(mean / (2.0 * n_f) - 1.0) < 0.15);
}

TEST_CASE("smooth boundary samples respect range and wall constraints") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const SamplerOptions opt;
  Rng rng(3);
  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    const auto& ws = lib.at(t);
    for (int rep = 0; rep < 20; ++rep) {
      const BoundarySample s = sample_bc(ws, opt, rng);
      REQUIRE(s.values.size() == static_cast<int>(ws.input_dofs.size()));
      CHECK(s.values.minCoeff() >= -1e-12);
      CHECK(s.values.maxCoeff() <= opt.u_max + 1e-12);
      if (t != Archetype::Internal) {
        CHECK(std::abs(s.values[0]) < 1e-13);
        CHECK(std::abs(s.values[s.values.size() - 1]) < 1e-13);
      }
    }
  }
}

TEST_CASE("clamped gaussian samples stay within the saturation range") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const SamplerOptions opt;
  Rng rng(4);
  const auto& ws = lib.at(Archetype::Internal);
  for (int rep = 0; rep < 50; ++rep) {
    const BoundarySample s = sample_gaussian_bc(ws, opt, true, rng);
    CHECK(s.values.minCoeff() >= 0.0);
    CHECK(s.values.maxCoeff() <= opt.u_max);
  }
  // unclamped variant is standard normal: produces negatives eventually
  double lo = 0.0;
  for (int rep = 0; rep < 50; ++rep)
    lo = std::min(lo, sample_gaussian_bc(ws, opt, false, rng).values.minCoeff());
  CHECK(lo < -0.5);
}

TEST_CASE("local parameter samples respect ranges and source probability") {
  const SamplerOptions opt;
  Rng rng(9);
  int with_source = 0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const LocalParameterSample s = sample_local_parameters(9, opt, rng);
    REQUIRE(s.mu.size() == 9);
    CHECK(s.i_star >= 0);
    CHECK(s.i_star <= 9);
    if (s.i_star != 0) ++with_source;
    for (const auto& m : s.mu) {
      CHECK(m[0] >= opt.mu1_range[0]);
      CHECK(m[0] <= opt.mu1_range[1]);
      CHECK(m[1] >= opt.mu2_range[0]);
      CHECK(m[1] <= opt.mu2_range[1]);
    }
  }
  CHECK(std::abs(static_cast<double>(with_source) / draws - opt.p_src) < 0.04);
}

TEST_CASE("pod reproduces exactly low-rank snapshot sets") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const auto& ws = lib.at(Archetype::Internal);
  const SpMat& G = ws.weighted_gram;
  Rng rng(17);
  std::normal_distribution<double> nd;

  // three smooth generators, twelve random combinations
  std::vector<Field> gen;
  for (int k = 0; k < 3; ++k) {
    Field v = ws.domain.interpolate([&](const Vec2& x) {
      return std::sin((k + 1) * x[0] * 20.0) * std::cos((k + 2) * x[1] * 15.0);
    });
    gen.push_back(std::move(v));
  }
  std::vector<Field> snaps;
  for (int s = 0; s < 12; ++s) {
    Field v = Field::Zero(ws.domain.num_dofs());
    for (const auto& g : gen) v += nd(rng) * g;
    snaps.push_back(std::move(v));
  }

  const PodResult res = pod(snaps, G, 12);
  CHECK(res.modes.cols() <= 3);
  CHECK(res.rank_limited);
  CHECK(max_relative_projection_error(res.modes, G, snaps) < 1e-10);
  // requesting within the rank leaves nothing behind either
  const PodResult res3 = pod(snaps, G, 3);
  CHECK(res3.modes.cols() == 3);
  CHECK(max_relative_projection_error(res3.modes, G, snaps) < 1e-10);
}

TEST_CASE("pod eigenvalues sum to the total snapshot energy") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const auto& ws = lib.at(Archetype::Corner);
  const SpMat& G = ws.weighted_gram;
  Rng rng(21);
  std::normal_distribution<double> nd;
  std::vector<Field> snaps;
  for (int s = 0; s < 8; ++s) {
    Field v(ws.domain.num_dofs());
    for (int i = 0; i < v.size(); ++i) v[i] = nd(rng);
    snaps.push_back(std::move(v));
  }
  const PodResult res = pod(snaps, G, 4);
  double total = 0.0;
  for (const auto& s : snaps) total += s.dot(G * s);
  CHECK(res.eigenvalues.sum() == doctest::Approx(total).epsilon(1e-10));
  const double slack = 1e-12 * std::abs(res.eigenvalues[0]);
  for (int k = 1; k < res.eigenvalues.size(); ++k)
    CHECK(res.eigenvalues[k] <= res.eigenvalues[k - 1] + slack);
}

TEST_CASE("orthonormalization appends only new directions") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const auto& ws = lib.at(Archetype::Internal);
  const SpMat& G = ws.weighted_gram;
  Rng rng(31);
  std::normal_distribution<double> nd;

  Eigen::MatrixXd Z(ws.domain.num_dofs(), 0);
  Eigen::MatrixXd first(ws.domain.num_dofs(), 2);
  for (int i = 0; i < first.size(); ++i) first.data()[i] = nd(rng);
  CHECK(append_orthonormalized(Z, G, first) == 2);
  CHECK(Z.cols() == 2);

  // a combination of existing columns is dropped
  Eigen::MatrixXd dup = Z.col(0) * 0.3 - Z.col(1) * 1.7;
  CHECK(append_orthonormalized(Z, G, dup) == 0);
  CHECK(Z.cols() == 2);

  Eigen::MatrixXd fresh(ws.domain.num_dofs(), 1);
  for (int i = 0; i < fresh.size(); ++i) fresh.data()[i] = nd(rng);
  CHECK(append_orthonormalized(Z, G, fresh) == 1);
  const Eigen::MatrixXd gram = Z.transpose() * (G * Z);
  CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("basis coefficients and projection invert each other in-span") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const auto& ws = lib.at(Archetype::Edge);
  const SpMat& G = ws.weighted_gram;
  Rng rng(41);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd Z(ws.domain.num_dofs(), 0);
  Eigen::MatrixXd cols(ws.domain.num_dofs(), 3);
  for (int i = 0; i < cols.size(); ++i) cols.data()[i] = nd(rng);
  append_orthonormalized(Z, G, cols);

  Eigen::VectorXd c(Z.cols());
  for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
  const Field w = Z * c;
  CHECK((basis_coefficients(Z, G, w) - c).norm() < 1e-11 * c.norm());
  CHECK(gram_norm(project_onto(Z, G, w) - w, G) < 1e-11 * gram_norm(w, G));
}

TEST_CASE("transfer solves are deterministic under a fixed seed") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const NonlinearDiffusionModel model;
  TrainingOptions opt;
  opt.n_train = 5;
  opt.n = 3;

  Rng a(7), b(7), c(8);
  const ReducedBasis ra = localized_training(lib.at(Archetype::Corner), model, opt, a);
  const ReducedBasis rb = localized_training(lib.at(Archetype::Corner), model, opt, b);
  const ReducedBasis rc = localized_training(lib.at(Archetype::Corner), model, opt, c);
  REQUIRE(ra.modes.cols() == rb.modes.cols());
  CHECK((ra.modes.array() == rb.modes.array()).all());
  CHECK(!(ra.modes.isApprox(rc.modes, 1e-12)));
  CHECK(ra.type == Archetype::Corner);
  CHECK(ra.size() <= opt.n);
}

TEST_CASE("transfer snapshots vanish on archetype walls") {
  const ComponentLibrary lib = make_library(PumOptions::fast());
  const NonlinearDiffusionModel model;
  const auto& ws = lib.at(Archetype::Edge);
  TrainingOptions opt;
  opt.n_train = 4;
  opt.n = 4;
  Rng rng(13);
  std::vector<Field> snaps;
  localized_training(ws, model, opt, rng, &snaps);
  REQUIRE(!snaps.empty());
  for (const auto& s : snaps)
    for (const int d : ws.wall_dofs) CHECK(std::abs(s[d]) < 1e-14);
}

TEST_CASE("linear transfer study exposes the documented geometry") {
  const LinearStudySetup setup = make_linear_study(1, 3);
  CHECK(setup.boundary_dofs.size() == 60);
  const auto rp = setup.patch.rect();
  CHECK(rp == std::array<double, 4>{0.0, 0.0, 0.3, 0.3});
  const auto rt = setup.target.rect();
  CHECK(rt[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(rt[2] == doctest::Approx(0.2).epsilon(1e-15));

  // extraction indices carry patch fields onto the target exactly
  const Field up = setup.patch.interpolate(
      [](const Vec2& x) { return x[0] * x[0] + 3.0 * x[1]; });
  Field ut(setup.target.num_dofs());
  for (int k = 0; k < ut.size(); ++k) ut[k] = up[setup.extract_dofs[k]];
  const Field direct = setup.target.interpolate(
      [](const Vec2& x) { return x[0] * x[0] + 3.0 * x[1]; });
  CHECK((ut - direct).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("transfer eigenvalue baseline yields decreasing spectra") {
  const LinearStudySetup setup = make_linear_study(1, 3);
  Rng rng(2);
  std::vector<std::array<double, 4>> mus;
  for (int i = 0; i < 3; ++i) mus.push_back(sample_adr_parameters(setup, rng));
  const PodResult res = te_pod_baseline(setup, mus, 10);
  REQUIRE(res.eigenvalues.size() >= 2);
  const double slack = 1e-12 * std::abs(res.eigenvalues[0]);
  for (int k = 1; k < res.eigenvalues.size(); ++k)
    CHECK(res.eigenvalues[k] <= res.eigenvalues[k - 1] + slack);
  CHECK(res.modes.cols() <= 10);
  // modes are target-h1 orthonormal
  const Eigen::MatrixXd g =
      res.modes.transpose() * (setup.target_h1 * res.modes);
  CHECK((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <
        1e-9);
}

TEST_CASE("linear transfer solver is linear in the boundary data") {
  const LinearStudySetup setup = make_linear_study(1, 2);
  Rng rng(6);
  const auto mu = sample_adr_parameters(setup, rng);
  const LinearTransferSolver solver(setup, mu);
  const SamplerOptions opt;
  const Eigen::VectorXd g1 = sample_linear_boundary(setup, SamplerKind::Gaussian, opt, rng);
  const Eigen::VectorXd g2 = sample_linear_boundary(setup, SamplerKind::Smooth, opt, rng);
  const Field lhs = solver.apply(g1 + 2.0 * g2);
  const Field rhs = solver.apply(g1) + 2.0 * solver.apply(g2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <
        1e-11 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}
