#pragma once

#include <string>
#include <vector>

#include "pumrom/enrichment.hpp"

namespace pumrom {

// Sample counts and basis sizes shared by the study drivers; fields not used
// by a given study are ignored there.
struct StudySizes {
  int n_dd = 4;          // global grid of the nonlinear/enrichment studies
  int n_train = 50;      // localized training snapshots
  int n_max = 25;        // largest basis size on error curves
  int n_test = 5;        // test samples / configurations
  int n_repeat = 10;     // independent training repetitions (spread)
  int refine = 1;        // target-mesh refinement of the transfer study
  int n_te_mu = 10;      // parameter draws of the transfer-eigenvalue baseline
  int eff_repeats = 100; // indicator-stability repetitions
  int eff_small = 10;    // nested small test-set size
  int eff_large = 100;   // full test-set size
  int eff_n = 10;        // basis size used by the stability experiment
  int n_test_glo = 10;   // out-of-sample configurations (enrichment study)
  int n_train_loc = 30;  // initial localized training (enrichment study)
  int n_loc = 20;        // initial basis size (enrichment study)
};

// One experiment description. JSON round trip is strict: unknown keys raise
// ConfigError so typos cannot silently fall back to defaults.
struct ExperimentConfig {
  std::string study = "linear";  // linear | nonlinear | enrichment | verify
  unsigned long long seed = 1;
  std::string out_dir = "out";
  bool fast = false;

  PumOptions pum;
  SamplerOptions sampler;
  SamplerKind sampler_kind = SamplerKind::Smooth;  // used by `train`
  NewtonSettings newton;
  StudySizes sizes;
  std::vector<double> alphas{0.5, 1.0, 2.0};
  EnrichmentConfig enrichment = default_enrichment();
  bool fault_halve_c_res = false;  // verification negative control

  std::string bases_dir;         // train output / enrich+solve input
  nlohmann::json configuration;  // explicit global configuration (solve)
  bool compare_hf = false;       // solve also runs the HF reference

  static EnrichmentConfig default_enrichment();
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Shrinks element orders and sample counts to smoke-run scale.
void apply_fast_mode(ExperimentConfig& cfg);

// Each driver writes plot-ready CSV tables plus summary.json into cfg.out_dir
// and returns the summary. CSV payloads are deterministic for a fixed config
// and seed; wall times live only in the summary.
nlohmann::json study_linear(const ExperimentConfig& cfg);
nlohmann::json study_nonlinear(const ExperimentConfig& cfg);
nlohmann::json study_enrichment(const ExperimentConfig& cfg);

// Rank correlation with average ranks on ties; 0 when either input is
// degenerate (constant or shorter than two entries).
double spearman(std::vector<double> a, std::vector<double> b);
double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

}  // namespace pumrom
