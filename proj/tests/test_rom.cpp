#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "pumrom/assembly.hpp"
#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"
#include "pumrom/rom.hpp"

using namespace pumrom;

namespace {

struct RomFixture {
  ComponentLibrary lib;
  GlobalConfiguration cfg;
  GlobalSpace space;
  BasisSet bases;
  GlobalROMSystem sys;

  RomFixture(int n_dd, int n, unsigned seed)
      : lib(make_library(PumOptions::fast())),
        cfg(instantiate_configuration(
            n_dd, std::vector<std::array<double, 2>>(n_dd * n_dd, {0.15, 35.0}),
            1)),
        space(build_global_space(cfg, lib)) {
    Rng rng(seed);
    std::normal_distribution<double> nd;
    for (const Archetype t :
         {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
      const auto& ws = lib.at(t);
      Eigen::MatrixXd raw(ws.domain.num_dofs(), n);
      for (int c = 0; c < n; ++c) {
        Field v = ws.domain.interpolate([&](const Vec2& x) {
          return std::sin((c + 1) * 5.0 * x[0] + nd(rng)) *
                 std::cos((c + 2) * 4.0 * x[1] + nd(rng));
        });
        for (const int d : ws.wall_dofs) v[d] = 0.0;
        raw.col(c) = v;
      }
      Eigen::MatrixXd Z(ws.domain.num_dofs(), 0);
      append_orthonormalized(Z, ws.weighted_gram, raw);
      bases.at(t).type = t;
      bases.at(t).modes = std::move(Z);
    }
    sys = assemble_rom(space, bases);
  }
};

}  // namespace

TEST_CASE("rom system exposes component-major blocks") {
  RomFixture f(2, 3, 11);
  CHECK(f.sys.num_components() == 4);
  CHECK(f.sys.N() == 4 * 3);
  CHECK(f.sys.uniform_size() == 3);
  for (int j = 0; j < 4; ++j) {
    CHECK(f.sys.block_size(j) == 3);
    CHECK(f.sys.offset[j] == 3 * j);
  }
  CHECK(f.sys.Z_full.cols() == f.sys.N());
  CHECK(f.sys.Z_full.rows() == f.space.disc.num_dofs());

  // on a 2x2 grid every component overlaps every other
  for (int j = 0; j < 4; ++j) CHECK(f.space.neighbors[j].size() == 4);
}

TEST_CASE("rom blocks follow per-archetype basis sizes") {
  RomFixture f(3, 2, 13);
  f.bases.corner.modes = f.bases.corner.modes.leftCols(1).eval();
  const GlobalROMSystem sys = assemble_rom(f.space, f.bases);
  CHECK(sys.uniform_size() == -1);
  const auto counts = archetype_counts(3);
  CHECK(sys.N() == 1 * counts[0] + 2 * counts[1] + 2 * counts[2]);
  for (int j = 0; j < sys.num_components(); ++j) {
    const int expect = f.space.cfg.components[j].type == Archetype::Corner ? 1 : 2;
    CHECK(sys.block_size(j) == expect);
  }
}

TEST_CASE("rom columns vanish on the outer boundary") {
  RomFixture f(2, 2, 17);
  for (const int d : f.space.dirichlet)
    for (int c = 0; c < f.sys.N(); ++c)
      CHECK(f.sys.Z_full.coeff(d, c) == 0.0);
}

TEST_CASE("reconstruction is linear in the coefficients") {
  RomFixture f(2, 3, 19);
  Rng rng(5);
  std::normal_distribution<double> nd;
  Eigen::VectorXd a(f.sys.N()), b(f.sys.N());
  for (int i = 0; i < a.size(); ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng);
  }
  const Field lhs = reconstruct(f.sys, a + 0.5 * b);
  const Field rhs = reconstruct(f.sys, a) + 0.5 * reconstruct(f.sys, b);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("projection recovers members of the reduced space") {
  RomFixture f(2, 3, 23);
  Rng rng(7);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(f.sys.N());
  for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
  const Field u = reconstruct(f.sys, c);
  const SpMat gram = assemble_h1_gram(f.space.disc);
  const Eigen::VectorXd back = project_to_rom(f.sys, gram, u);
  const Field u2 = reconstruct(f.sys, back);
  CHECK(gram_norm(u2 - u, gram) < 1e-10 * gram_norm(u, gram));
}

TEST_CASE("reduced residual restricts the full residual") {
  RomFixture f(2, 3, 29);
  const NonlinearDiffusionModel model;
  const ModelParams params = f.cfg.model_params();
  Rng rng(9);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(f.sys.N());
  for (int i = 0; i < c.size(); ++i) c[i] = 0.05 * nd(rng);

  const Eigen::VectorXd red = reduced_residual(f.sys, model, params, c);
  const Field u = reconstruct(f.sys, c);
  const Eigen::VectorXd full =
      assemble_residual(f.space.disc, model, params, f.space.layout, u);
  const Eigen::VectorXd expect = f.sys.Z_full.transpose() * full;
  CHECK((red - expect).cwiseAbs().maxCoeff() <
        1e-12 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
}

TEST_CASE("reduced jacobian matches finite differences") {
  RomFixture f(2, 2, 31);
  const NonlinearDiffusionModel model;
  const ModelParams params = f.cfg.model_params();
  Rng rng(3);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(f.sys.N());
  for (int i = 0; i < c.size(); ++i) c[i] = 0.05 * nd(rng);

  const Eigen::MatrixXd J = Eigen::MatrixXd(reduced_jacobian(f.sys, model, params, c));
  const double h = 1e-6;
  Eigen::MatrixXd fd(f.sys.N(), f.sys.N());
  for (int k = 0; k < f.sys.N(); ++k) {
    Eigen::VectorXd cp = c, cm = c;
    cp[k] += h;
    cm[k] -= h;
    fd.col(k) = (reduced_residual(f.sys, model, params, cp) -
                 reduced_residual(f.sys, model, params, cm)) /
                (2.0 * h);
  }
  CHECK((J - fd).norm() < 1e-6 * fd.norm());
}

TEST_CASE("rom newton reaches the galerkin solution of a linear problem") {
  RomFixture f(2, 3, 37);
  const LinearCoerciveModel model(
      nullptr, [](const Vec2& x, const ModelParams&) { return 1.0 + x[0] + x[1]; });
  ModelParams params = f.cfg.model_params();
  params.mu_adr = {1.0, 0.0, 0.0, 0.3};

  const ReducedState st = solve_rom(f.sys, model, params);
  CHECK(st.report.iterations <= 3);

  // direct solve of the reduced linear system from a zero expansion
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(f.sys.N());
  const Eigen::MatrixXd A =
      Eigen::MatrixXd(reduced_jacobian(f.sys, model, params, zero));
  const Eigen::VectorXd r = reduced_residual(f.sys, model, params, zero);
  const Eigen::VectorXd direct = -A.fullPivLu().solve(r);
  CHECK((st.coeffs - direct).norm() < 1e-9 * std::max(1.0, direct.norm()));
}

TEST_CASE("truncate shrinks every archetype block") {
  RomFixture f(2, 3, 41);
  const BasisSet small = truncate(f.bases, 2);
  CHECK(small.corner.size() == 2);
  CHECK(small.edge.size() == 2);
  CHECK(small.internal.size() == 2);
  CHECK((small.corner.modes - f.bases.corner.modes.leftCols(2)).norm() == 0.0);
  CHECK_THROWS_AS((void)truncate(f.bases, 10), ConfigError);
}

TEST_CASE("reduced states round-trip through disk") {
  RomFixture f(2, 2, 43);
  ReducedState st;
  st.coeffs = Eigen::VectorXd::LinSpaced(8, -1.0, 2.5);
  st.report.iterations = 4;
  st.report.residual_norms = {1.0, 0.1, 1e-5, 1e-12};
  st.report.wall_time_s = 0.25;

  const auto dir = std::filesystem::temp_directory_path() / "pumrom_rom_state";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "state.bin").string();
  save_state(path, st);
  const ReducedState back = load_state(path);
  CHECK(back.coeffs.size() == st.coeffs.size());
  CHECK((back.coeffs.array() == st.coeffs.array()).all());
  CHECK(back.report.iterations == 4);
  REQUIRE(back.report.residual_norms.size() == 4);
  CHECK(back.report.residual_norms[3] == 1e-12);
  std::filesystem::remove_all(dir);
}

TEST_CASE("global hf solve agrees with the assembled residual") {
  RomFixture f(2, 2, 47);
  const NonlinearDiffusionModel model;
  const ModelParams params = f.cfg.model_params();
  NewtonReport report;
  const Field u = solve_global_hf(f.space, model, params, {}, nullptr, &report);
  CHECK(report.iterations >= 1);

  Eigen::VectorXd r =
      assemble_residual(f.space.disc, model, params, f.space.layout, u);
  for (const int d : f.space.dirichlet) r[d] = 0.0;
  CHECK(r.cwiseAbs().maxCoeff() < 1e-8);
  for (const int d : f.space.dirichlet) CHECK(u[d] == 0.0);
}
