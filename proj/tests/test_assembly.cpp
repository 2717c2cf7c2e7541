#include <cmath>
#include <random>

#include "doctest.h"
#include "pumrom/assembly.hpp"
#include "pumrom/newton.hpp"

using namespace pumrom;

namespace {

const SubdomainGrid kUnitGrid{0.0, 0.0, 1.0, 1, 1};

Field zero_boundary_values(const Discretization& d) {
  return Field::Zero(static_cast<int>(d.boundary_dofs().size()));
}

double poisson_l2_error(int cells) {
  const Discretization d = Discretization::uniform({0, 0, 1, 1}, cells, cells, 3);
  const SubdomainLayout layout = make_layout(d, kUnitGrid);
  const LinearCoerciveModel model(
      [](const Vec2&) { return 1.0; },
      [](const Vec2& x, const ModelParams&) {
        return 2.0 * M_PI * M_PI * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
      });
  ModelParams params;
  params.grid = kUnitGrid;
  const DirichletBC bc{d.boundary_dofs(), zero_boundary_values(d)};
  const Field u = solve_nonlinear(d, model, params, layout, bc);
  const double err_sq = integrate_state(
      d, u, [](const Vec2& x, double v, const Vec2&) {
        const double e = v - std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
        return e * e;
      });
  return std::sqrt(err_sq);
}

}  // namespace

TEST_CASE("manufactured poisson solution converges at spectral rate") {
  const double e3 = poisson_l2_error(3);
  const double e6 = poisson_l2_error(6);
  CHECK(e6 < 1e-4);
  CHECK(e3 / e6 > 10.0);
}

TEST_CASE("gram matrices integrate known functions exactly") {
  const Discretization d = Discretization::uniform({0, 0, 1, 1}, 4, 4, 3);
  const auto one = [](const Vec2&) { return 1.0; };
  const auto zero = [](const Vec2&) { return 0.0; };
  const SpMat mass = assemble_gram(d, zero, one);
  const SpMat stiff = assemble_gram(d, one, zero);
  const SpMat h1 = assemble_h1_gram(d);

  const Field c = d.interpolate(one);
  CHECK(gram_norm(c, mass) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(gram_norm(c, stiff) < 1e-12);

  // |x + 2y|_{H1-semi}^2 = 5, ||.||_{L2}^2 = integral (x+2y)^2 = 1/3+1+4/3
  const Field lin = d.interpolate([](const Vec2& x) { return x[0] + 2 * x[1]; });
  CHECK(lin.dot(stiff * lin) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(lin.dot(mass * lin) == doctest::Approx(1.0 / 3 + 1 + 4.0 / 3).epsilon(1e-12));
  CHECK(lin.dot(h1 * lin) ==
        doctest::Approx(5.0 + 1.0 / 3 + 1 + 4.0 / 3).epsilon(1e-12));
}

TEST_CASE("weighted gram reduces to plain h1 without a weight") {
  const Discretization d = Discretization::uniform({0, 0, 1, 1}, 2, 2, 2);
  const SpMat a = assemble_weighted_h1_gram(d, nullptr);
  const SpMat b = assemble_h1_gram(d);
  CHECK((Eigen::MatrixXd(a) - Eigen::MatrixXd(b)).cwiseAbs().maxCoeff() < 1e-14);

  // weight w: gram of v -> I_h(w v), so constant w scales by w^2
  const Field w = Field::Constant(d.num_dofs(), 3.0);
  const SpMat c = assemble_weighted_h1_gram(d, &w);
  CHECK((Eigen::MatrixXd(c) - 9.0 * Eigen::MatrixXd(b)).cwiseAbs().maxCoeff() <
        1e-11);
}

TEST_CASE("dual norm inverts the riesz map") {
  const Discretization d = Discretization::uniform({0, 0, 1, 1}, 3, 3, 2);
  const SpMat h1 = assemble_h1_gram(d);
  std::vector<int> mask;
  for (int i = 0; i < d.num_dofs(); ++i)
    if (!d.on_boundary(i)) mask.push_back(i);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Field v = Field::Zero(d.num_dofs());
  for (const int i : mask) v[i] = nd(rng);

  // functional f = G v has dual norm ||v||_G on the masked space
  const Eigen::VectorXd f = h1 * v;
  const SpMat block = masked_block(h1, mask);
  const Eigen::VectorXd vm = masked_vector(v, mask);
  CHECK(dual_norm(f, h1, mask) ==
        doctest::Approx(std::sqrt(vm.dot(block * vm))).epsilon(1e-11));
}

TEST_CASE("reduced residual agrees with the dense projection") {
  const Discretization d = Discretization::uniform({0, 0, 1, 1}, 3, 3, 2);
  const SubdomainLayout layout = make_layout(d, kUnitGrid);
  const LinearCoerciveModel model(
      [](const Vec2& x) { return 1.0 + x[0]; },
      [](const Vec2&, const ModelParams&) { return 1.0; });
  ModelParams params;
  params.grid = kUnitGrid;
  params.mu_adr = {1.0, 0.0, 0.0, 2.0};

  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Field u(d.num_dofs());
  for (int i = 0; i < u.size(); ++i) u[i] = 0.1 * nd(rng);
  Eigen::MatrixXd B(d.num_dofs(), 4);
  for (int i = 0; i < B.size(); ++i) B.data()[i] = nd(rng);

  const Eigen::VectorXd direct =
      B.transpose() * assemble_residual(d, model, params, layout, u);
  const Eigen::VectorXd reduced =
      assemble_reduced_residual(d, model, params, layout, u, B);
  CHECK((direct - reduced).norm() < 1e-11 * std::max(1.0, direct.norm()));
}

TEST_CASE("element-subset assembly matches the global one on interior data") {
  const Discretization d = Discretization::uniform({0, 0, 1, 1}, 4, 4, 2);
  const SubdomainLayout layout = make_layout(d, kUnitGrid);
  const LinearCoerciveModel model;
  ModelParams params;
  params.grid = kUnitGrid;
  params.mu_adr = {1.0, 0.0, 0.0, 0.0};

  // u supported strictly inside the lower-left 2x2 block of elements
  Field u = Field::Zero(d.num_dofs());
  const int mid = d.dof(d.nodes_x() / 4, d.nodes_y() / 4);
  u[mid] = 1.0;
  std::vector<int> elems;
  for (int ey = 0; ey < 2; ++ey)
    for (int ex = 0; ex < 2; ++ex) elems.push_back(d.element_id(ex, ey));

  const Field full = assemble_residual(d, model, params, layout, u);
  const Field part = assemble_residual(d, model, params, layout, u, &elems);
  // rows whose support lies in the subset agree; in particular the peak row
  CHECK(part[mid] == doctest::Approx(full[mid]).epsilon(1e-13));
}

TEST_CASE("integrate computes polynomial areas exactly") {
  const Discretization d = Discretization::uniform({0, 0, 2, 1}, 3, 2, 3);
  CHECK(integrate(d, [](const Vec2&) { return 1.0; }) ==
        doctest::Approx(2.0).epsilon(1e-14));
  CHECK(integrate(d, [](const Vec2& x) { return x[0] * x[0] * x[1]; }) ==
        doctest::Approx(8.0 / 3.0 / 2.0).epsilon(1e-13));
}
