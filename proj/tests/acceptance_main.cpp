// Release gate: one numbered criterion per production claim, each with a
// hard wall-clock budget. Run with no arguments for the full gate or with a
// single index (1-11) as used by the ctest registration.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pumrom/enrichment.hpp"
#include "pumrom/studies.hpp"
#include "pumrom/verify.hpp"

using namespace pumrom;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
  int id;
  std::string label;
  double budget_s;
  std::function<bool(std::string&)> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string out_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / ("pumrom_gate_" + leaf);
  fs::create_directories(dir);
  return dir.string();
}

bool from_check(const CheckResult& c, std::string& detail) {
  detail = c.detail + " (margin " + fmt(c.margin) + ")";
  return c.passed;
}

// --- criteria over the verification checks, at production mesh scale -------

bool c1_pou(std::string& d) {
  return from_check(verify_pou_exactness(PumOptions{}, 3), d);
}

bool c2_interpolation(std::string& d) {
  Rng rng(1);
  return from_check(verify_pum_interpolation(PumOptions{}, 3, 20, rng), d);
}

bool c3_residual_bound(std::string& d) {
  Rng rng(2);
  return from_check(verify_residual_bound(PumOptions{}, 3, 50, false, rng), d);
}

bool c4_chi2(std::string& d) {
  Rng rng(3);
  return from_check(verify_fourier_chi2(20, {1.0, 2.0}, 2000, 0.05, rng), d);
}

bool c5_jacobian(std::string& d) {
  Rng rng(4);
  return from_check(verify_reduced_jacobian_fd(PumOptions{}, 2, 3, rng), d);
}

bool c6_galerkin(std::string& d) {
  Rng rng(5);
  return from_check(verify_galerkin_optimality(PumOptions{}, 2, rng), d);
}

bool c7_greedy(std::string& d) {
  return from_check(verify_greedy_convergence(PumOptions{}, 2, 30, 5, 1), d);
}

// --- criteria over the study drivers ---------------------------------------

bool c8_nonlinear_study(std::string& d) {
  ExperimentConfig cfg;
  cfg.study = "nonlinear";
  cfg.seed = 1;
  cfg.out_dir = out_dir("nonlinear");
  cfg.alphas = {1.0};
  // defaults: n_dd = 4, n_train = 50, n_max = 25, n_test = 5
  const nlohmann::json s = study_nonlinear(cfg);
  const double decay = s.at("internal_decay_ratio").get<double>();
  const double ratio = s.at("max_galerkin_over_projection_h1").get<double>();
  d = "decay " + fmt(decay) + " (need >= 100), galerkin/projection " +
      fmt(ratio) + " (need <= 3)";
  return decay >= 100.0 && ratio <= 3.0;
}

bool c9_sampler_comparison(std::string& d) {
  const ComponentLibrary lib = make_library(PumOptions{});
  const NonlinearDiffusionModel model;
  const SamplerOptions sopt;
  Rng rng(6);

  // out-of-sample local datasets from full-order global solutions
  std::vector<std::vector<Field>> test_ds(3);
  for (int t = 0; t < 5; ++t) {
    const GlobalConfiguration cfg =
        sample_global_configuration({4}, sopt, 0.1, 0.01, rng);
    const GlobalSpace space = build_global_space(cfg, lib);
    const Field u = solve_global_hf(space, model, cfg.model_params());
    for (int j = 0; j < cfg.count(); ++j) {
      const Archetype ty = cfg.components[j].type;
      if (ty == Archetype::Internal) continue;
      test_ds[static_cast<int>(ty)].push_back(space.restrict_to_component(j, u));
    }
  }

  const std::vector<int> ns{5, 10, 15, 20, 25};
  bool pass = true;
  for (const Archetype ty : {Archetype::Corner, Archetype::Edge}) {
    const auto& ws = lib.at(ty);
    const auto& ds = test_ds[static_cast<int>(ty)];
    std::vector<std::vector<double>> e_smooth(ns.size()), e_gauss(ns.size());
    for (int s = 0; s < 5; ++s) {
      for (const SamplerKind kind : {SamplerKind::Smooth, SamplerKind::Gaussian}) {
        TrainingOptions opt;
        opt.n_train = 50;
        opt.n = 25;
        opt.kind = kind;
        opt.sampler = sopt;
        Rng trng(100 + 10 * s + (kind == SamplerKind::Gaussian ? 1 : 0));
        const ReducedBasis rb = localized_training(ws, model, opt, trng);
        for (std::size_t i = 0; i < ns.size(); ++i) {
          const int n = std::min(ns[i], rb.size());
          const double e = projection_error_indicator(
              rb.modes.leftCols(n), ws.weighted_gram, ds);
          (kind == SamplerKind::Smooth ? e_smooth : e_gauss)[i].push_back(e);
        }
      }
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i)
      log_sum += std::log(median(e_smooth[i]) /
                          std::max(median(e_gauss[i]), 1e-300));
    const double gmean = std::exp(log_sum / static_cast<double>(ns.size()));
    d += std::string(archetype_name(ty)) + " smooth/gaussian " + fmt(gmean) + " ";
    pass = pass && gmean < 1.0;
  }
  d += "(need < 1 for both)";
  return pass;
}

bool c10_enrichment_study(std::string& d) {
  ExperimentConfig cfg;
  cfg.study = "enrichment";
  cfg.seed = 1;
  cfg.out_dir = out_dir("enrichment");
  // defaults: n_train_glo = 10, n_glo = 5, maxit = 3, n_dd_choices = {4},
  // initial bases n_train_loc = 30 / n_loc = 20, n_test_glo = 10
  const nlohmann::json s = study_enrichment(cfg);
  const double r_smooth = s.at("median_ratio").at("smooth").get<double>();
  const double r_gauss = s.at("median_ratio").at("gaussian").get<double>();
  const double rho = s.at("spearman_delta_vs_h1_rel").get<double>();
  d = "median ratios smooth " + fmt(r_smooth) + ", gaussian " + fmt(r_gauss) +
      " (need <= 0.5); spearman " + fmt(rho) + " (need >= 0.8)";
  return r_smooth <= 0.5 && r_gauss <= 0.5 && rho >= 0.8;
}

bool c11_indicator_stability(std::string& d) {
  ExperimentConfig cfg;
  cfg.study = "linear";
  cfg.seed = 1;
  cfg.out_dir = out_dir("linear");
  // stability block at full scale, error-curve block trimmed
  cfg.sizes.n_repeat = 2;
  cfg.sizes.n_test = 2;
  cfg.sizes.n_te_mu = 2;
  cfg.sizes.n_max = 10;
  const nlohmann::json s = study_linear(cfg);
  const int in_band = s.at("stability_in_band").get<int>();
  const int reps = s.at("stability_repeats").get<int>();
  d = "ratio in [0.5, 1.5] for " + std::to_string(in_band) + "/" +
      std::to_string(reps) + " repetitions (need >= 90/100)";
  return reps == 100 && in_band >= 90;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "pou_partition_and_gradient", 5.0, c1_pou},
      {2, "interpolation_error_bounds", 60.0, c2_interpolation},
      {3, "localized_residual_bound", 120.0, c3_residual_bound},
      {4, "sampler_norm_chi2", 30.0, c4_chi2},
      {5, "reduced_jacobian_consistency", 60.0, c5_jacobian},
      {6, "galerkin_optimality_and_dual", 60.0, c6_galerkin},
      {7, "greedy_geometric_convergence", 300.0, c7_greedy},
      {8, "nonlinear_error_decay", 1200.0, c8_nonlinear_study},
      {9, "sampler_comparison_wins", 1800.0, c9_sampler_comparison},
      {10, "enrichment_halves_error", 1800.0, c10_enrichment_study},
      {11, "indicator_stability_band", 600.0, c11_indicator_stability},
  };

  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(all.size())) {
      std::fprintf(stderr, "usage: %s [criterion 1-%zu]\n", argv[0], all.size());
      return 2;
    }
  }

  int failures = 0;
  for (const Criterion& c : all) {
    if (only != 0 && c.id != only) continue;
    std::string detail;
    bool ok = false;
    const auto t0 = Clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_budget = dt <= c.budget_s;
    const bool passed = ok && in_budget;
    if (!passed) ++failures;
    std::printf("criterion %2d %-32s %s  %7.1fs / %.0fs  %s%s\n", c.id,
                c.label.c_str(), passed ? "PASS" : "FAIL", dt, c.budget_s,
                detail.c_str(), !ok ? "" : (in_budget ? "" : " [over budget]"));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
