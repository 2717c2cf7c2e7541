#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "pumrom/assembly.hpp"
#include "pumrom/error_estimation.hpp"
#include "pumrom/rom.hpp"
#include "pumrom/training.hpp"

using namespace pumrom;

namespace {

// Shared fixtures built once; benchmarks measure the hot kernels only.
struct GlobalFixture {
  ComponentLibrary lib;
  GlobalSpace space;
  GlobalROMSystem sys;
  ModelParams params;
  NonlinearDiffusionModel model;
  Field u;
  Eigen::VectorXd coeffs;

  static const GlobalFixture& get() {
    static GlobalFixture f;
    return f;
  }

 private:
  GlobalFixture()
      : lib(make_library(PumOptions{})),
        space(build_global_space(demo_config(), lib)),
        sys(assemble_rom(space, demo_bases())),
        params(space.cfg.model_params()) {
    coeffs = Eigen::VectorXd::Zero(sys.N());
    for (int i = 0; i < sys.N(); ++i) coeffs[i] = 0.05 * std::sin(1.0 + i);
    u = reconstruct(sys, coeffs);
  }

  static GlobalConfiguration demo_config() {
    const int n_dd = 3;
    std::vector<std::array<double, 2>> mu(
        static_cast<std::size_t>(n_dd) * n_dd, {0.15, 35.0});
    return instantiate_configuration(n_dd, std::move(mu), 1);
  }

  BasisSet demo_bases() const {
    BasisSet b;
    Rng rng(3);
    const NonlinearDiffusionModel m;
    TrainingOptions opt;
    opt.n_train = 8;
    opt.n = 6;
    for (const Archetype t :
         {Archetype::Corner, Archetype::Edge, Archetype::Internal})
      b.at(t) = localized_training(lib.at(t), m, opt, rng);
    return b;
  }
};

void bm_assemble_residual(benchmark::State& state) {
  const auto& f = GlobalFixture::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_residual(f.space.disc, f.model, f.params,
                                               f.space.layout, f.u));
}
BENCHMARK(bm_assemble_residual)->Unit(benchmark::kMillisecond);

void bm_assemble_jacobian(benchmark::State& state) {
  const auto& f = GlobalFixture::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_jacobian(f.space.disc, f.model, f.params,
                                               f.space.layout, f.u));
}
BENCHMARK(bm_assemble_jacobian)->Unit(benchmark::kMillisecond);

void bm_reduced_residual(benchmark::State& state) {
  const auto& f = GlobalFixture::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(reduced_residual(f.sys, f.model, f.params, f.coeffs));
}
BENCHMARK(bm_reduced_residual)->Unit(benchmark::kMillisecond);

void bm_reduced_jacobian(benchmark::State& state) {
  const auto& f = GlobalFixture::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(reduced_jacobian(f.sys, f.model, f.params, f.coeffs));
}
BENCHMARK(bm_reduced_jacobian)->Unit(benchmark::kMillisecond);

void bm_local_riesz_residuals(benchmark::State& state) {
  const auto& f = GlobalFixture::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        local_riesz_residuals(f.space, f.model, f.params, f.u));
}
BENCHMARK(bm_local_riesz_residuals)->Unit(benchmark::kMillisecond);

void bm_pod(benchmark::State& state) {
  const auto& f = GlobalFixture::get();
  const auto& ws = f.lib.at(Archetype::Internal);
  std::vector<Field> snaps;
  Rng rng(11);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 30; ++s) {
    Field v(ws.domain.num_dofs());
    for (int i = 0; i < v.size(); ++i) v[i] = nd(rng);
    snaps.push_back(std::move(v));
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(pod(snaps, ws.weighted_gram, 10));
}
BENCHMARK(bm_pod)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
