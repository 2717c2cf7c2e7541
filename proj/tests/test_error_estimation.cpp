#include <cmath>

#include "doctest.h"
#include "pumrom/assembly.hpp"
#include "pumrom/error_estimation.hpp"
#include "pumrom/errors.hpp"

using namespace pumrom;

namespace {

struct EstimatorFixture {
  ComponentLibrary lib;
  GlobalConfiguration cfg;
  GlobalSpace space;
  BasisSet bases;
  GlobalROMSystem sys;

  explicit EstimatorFixture(int n = 3, unsigned seed = 51)
      : lib(make_library(PumOptions::fast())),
        cfg(instantiate_configuration(
            2, std::vector<std::array<double, 2>>(4, {0.15, 35.0}), 1)),
        space(build_global_space(cfg, lib)) {
    Rng rng(seed);
    std::normal_distribution<double> nd;
    for (const Archetype t :
         {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
      const auto& ws = lib.at(t);
      Eigen::MatrixXd raw(ws.domain.num_dofs(), n);
      for (int c = 0; c < n; ++c) {
        Field v = ws.domain.interpolate([&](const Vec2& x) {
          return std::sin((c + 1) * 6.0 * x[0] + nd(rng)) +
                 std::cos((c + 1) * 5.0 * x[1] + nd(rng));
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

TEST_CASE("residual constant freezes the ramp partition value") {
  const double c_grad = std::sqrt(2.0) / 0.01;
  CHECK(residual_constant(c_grad) ==
        doctest::Approx(141.92399852117086).epsilon(1e-13));
  // small gradients saturate at sqrt(2)
  CHECK(residual_constant(0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(residual_constant(0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(residual_constant(10.0) > residual_constant(5.0));
}

TEST_CASE("delta indicator is the euclidean combination") {
  CHECK(delta_indicator({3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(delta_indicator({2.0}) == doctest::Approx(2.0).epsilon(1e-15));
  PouConstants c;
  c.c_res = 2.0;
  c.overlap = 4;
  CHECK(global_residual_bound({3.0, 4.0}, c) == doctest::Approx(20.0).epsilon(1e-15));
}

TEST_CASE("pou constants expose the ramp gradient and react to the fault hook") {
  EstimatorFixture f;
  const PouConstants c = pou_constants(f.space);
  CHECK(c.c_grad == doctest::Approx(std::sqrt(2.0) / f.cfg.delta).epsilon(1e-13));
  CHECK(c.c_res == doctest::Approx(residual_constant(c.c_grad)).epsilon(1e-15));
  CHECK(c.overlap == 4);
  const PouConstants faulted = pou_constants(f.space, true);
  CHECK(faulted.c_res == doctest::Approx(0.5 * c.c_res).epsilon(1e-15));
  CHECK(faulted.c_grad == c.c_grad);
}

TEST_CASE("proximity estimator follows the quadratic branch rule") {
  BrrConstants c;
  c.beta = 2.0;
  c.c_h = 4.0;
  c.lipschitz = 0.5;
  ErrorReport report;

  report.bound = 0.5;  // tau = (2 L c_h / beta^2) bound = bound here
  BrrEstimate est = brr_estimator(report, c);
  CHECK(est.tau == doctest::Approx(0.5).epsilon(1e-14));
  REQUIRE(est.delta_p.has_value());
  CHECK(*est.delta_p ==
        doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-14));

  report.bound = 1.0;  // tau exactly one: delta_p = beta / (L c_h)
  est = brr_estimator(report, c);
  CHECK(est.tau == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(est.delta_p.has_value());
  CHECK(*est.delta_p == doctest::Approx(1.0).epsilon(1e-14));

  report.bound = 1.5;  // proximity fails
  est = brr_estimator(report, c);
  CHECK(est.tau > 1.0);
  CHECK(!est.delta_p.has_value());

  c.beta = 0.0;
  CHECK_THROWS_AS((void)brr_estimator(report, c), ConfigError);
}

TEST_CASE("global dual norm inverts the gram on the zero-trace space") {
  EstimatorFixture f;
  const SpMat G = assemble_h1_gram(f.space.disc);
  const GlobalDualNorm dual(f.space);

  Rng rng(3);
  std::normal_distribution<double> nd;
  Field v = Field::Zero(f.space.disc.num_dofs());
  for (int i = 0; i < v.size(); ++i) v[i] = nd(rng);
  for (const int d : f.space.dirichlet) v[d] = 0.0;

  const Eigen::VectorXd fvec = G * v;
  CHECK(dual(fvec) == doctest::Approx(gram_norm(v, G)).epsilon(1e-10));
  CHECK(dual(2.0 * fvec) == doctest::Approx(2.0 * dual(fvec)).epsilon(1e-12));
}

TEST_CASE("local riesz residuals vanish at the full-order solution") {
  EstimatorFixture f;
  const NonlinearDiffusionModel model;
  const ModelParams params = f.cfg.model_params();
  const Field u = solve_global_hf(f.space, model, params);

  const std::vector<double> res = local_riesz_residuals(f.space, model, params, u);
  REQUIRE(res.size() == static_cast<size_t>(f.cfg.count()));
  for (size_t i = 0; i < res.size(); ++i) {
    CHECK(res[i] >= 0.0);
    CHECK(res[i] < 1e-6);
    CHECK(res[i] ==
          doctest::Approx(local_riesz_residual(f.space, static_cast<int>(i), model,
                                               params, u))
              .epsilon(1e-12));
  }
  CHECK(global_dual_residual(f.space, model, params, u) < 1e-6);
}

TEST_CASE("error report ties the bound to its constants") {
  EstimatorFixture f;
  const NonlinearDiffusionModel model;
  const ModelParams params = f.cfg.model_params();
  Rng rng(29);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(f.sys.N());
  for (int i = 0; i < c.size(); ++i) c[i] = 0.02 * nd(rng);
  const Field u = reconstruct(f.sys, c);

  const ErrorReport rep = error_report(f.space, model, params, u);
  REQUIRE(rep.local_residuals.size() == static_cast<size_t>(f.cfg.count()));
  CHECK(rep.delta ==
        doctest::Approx(delta_indicator(rep.local_residuals)).epsilon(1e-14));
  CHECK(rep.bound == doctest::Approx(std::sqrt(double(rep.constants.overlap)) *
                                     rep.constants.c_res * rep.delta)
                         .epsilon(1e-14));
  CHECK(!rep.brr.has_value());

  const ErrorReport faulted = error_report(f.space, model, params, u, {}, true);
  CHECK(faulted.bound == doctest::Approx(0.5 * rep.bound).epsilon(1e-12));

  BrrConstants bc;
  bc.beta = 1.0;
  bc.c_h = 2.0;
  bc.lipschitz = 1.0;
  const ErrorReport with_brr = error_report(f.space, model, params, u, bc);
  REQUIRE(with_brr.brr.has_value());
  CHECK(with_brr.brr->tau ==
        doctest::Approx(4.0 * with_brr.bound).epsilon(1e-12));

  const nlohmann::json j = error_report_json(with_brr);
  CHECK(j.contains("local_residuals"));
  CHECK(j.contains("bound"));
  CHECK(j["brr"].contains("tau"));
}

TEST_CASE("dual residual bounds hold for rom states on a linear model") {
  EstimatorFixture f;
  const LinearCoerciveModel model(nullptr, [](const Vec2& x, const ModelParams&) {
    return 1.0 + std::sin(2.0 * x[0]) + x[1];
  });
  ModelParams params = f.cfg.model_params();
  params.mu_adr = {1.0, 0.0, 0.0, 0.5};

  const ReducedState st = solve_rom(f.sys, model, params);
  const Field u = reconstruct(f.sys, st.coeffs);
  const double dual = global_dual_residual(f.space, model, params, u);
  const ErrorReport rep = error_report(f.space, model, params, u);
  CHECK(dual <= rep.bound * (1.0 + 1e-10) + 1e-12);
}

TEST_CASE("w1p quotient estimate is positive and repeatable") {
  const Discretization disc({{0.0, 0.5, 1.0}}, {{0.0, 0.5, 1.0}}, 3);
  const std::vector<int> bnd = disc.boundary_dofs();
  const double a = estimate_ch(disc, bnd, 4.0, 25);
  const double b = estimate_ch(disc, bnd, 4.0, 25);
  CHECK(a > 0.0);
  CHECK(std::isfinite(a));
  CHECK(a == b);
  CHECK_THROWS_AS((void)estimate_ch(disc, bnd, 2.0, 5), ConfigError);
}

TEST_CASE("inf-sup and lipschitz estimates behave on a coercive model") {
  EstimatorFixture f;
  const LinearCoerciveModel model(
      nullptr, [](const Vec2&, const ModelParams&) { return 1.0; });
  ModelParams params = f.cfg.model_params();
  params.mu_adr = {1.0, 0.0, 0.0, 0.2};

  const BasisSet small = truncate(f.bases, 2);
  const GlobalROMSystem sys_small = assemble_rom(f.space, small);
  const SpMat semi = assemble_gram(
      f.space.disc, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; });

  const Field zero = Field::Zero(f.space.disc.num_dofs());
  const double beta = beta_app(sys_small, f.sys, model, params, zero, semi);
  CHECK(beta > 0.0);
  CHECK(std::isfinite(beta));

  Rng rng(11);
  const double lip =
      estimate_lipschitz(f.sys, model, params, 0.2, 6, 4.0, rng);
  CHECK(lip > 0.0);
  CHECK(std::isfinite(lip));
  CHECK(beta <= lip * (1.0 + 1e-6) + 1e-9);
}

TEST_CASE("energy gram of the unit-diffusion reaction model is the h1 gram") {
  const Discretization disc({{0.0, 1.0}}, {{0.0, 0.5, 1.0}}, 2);
  const LinearCoerciveModel model([](const Vec2&) { return 1.0; }, nullptr);
  ModelParams params;
  params.mu_adr = {1.0, 0.0, 0.0, 1.0};
  const SpMat E = assemble_energy_gram(disc, model, params);
  const SpMat G = assemble_h1_gram(disc);
  CHECK((Eigen::MatrixXd(E) - Eigen::MatrixXd(G)).cwiseAbs().maxCoeff() < 1e-12);
}
