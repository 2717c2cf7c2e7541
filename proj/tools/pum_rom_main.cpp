#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "pumrom/enrichment.hpp"
#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"
#include "pumrom/rom.hpp"
#include "pumrom/studies.hpp"
#include "pumrom/verify.hpp"

namespace fs = std::filesystem;
using namespace pumrom;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;
constexpr int kSolverFailure = 3;

std::string basis_path(const std::string& dir, Archetype t) {
  return (fs::path(dir) / (archetype_name(t) + ".basis")).string();
}

BasisSet load_bases(const std::string& dir) {
  if (dir.empty())
    throw ConfigError("this command needs 'bases_dir' (or a previous train run)");
  BasisSet bases;
  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    bases.at(t) = load_basis(basis_path(dir, t));
    if (bases.at(t).type != t)
      throw ConfigError("basis file for '" + archetype_name(t) +
                        "' holds a different archetype");
  }
  return bases;
}

void save_bases(const std::string& dir, const BasisSet& bases,
                const nlohmann::json& meta) {
  fs::create_directories(dir);
  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal})
    save_basis(basis_path(dir, t), bases.at(t), meta);
}

int cmd_train(const ExperimentConfig& cfg) {
  const ComponentLibrary lib = make_library(cfg.pum);
  const NonlinearDiffusionModel model;
  Rng rng(cfg.seed);

  TrainingOptions opt;
  opt.n_train = cfg.sizes.n_train_loc;
  opt.n = cfg.sizes.n_loc;
  opt.kind = cfg.sampler_kind;
  opt.sampler = cfg.sampler;
  opt.newton = cfg.newton;

  BasisSet bases;
  nlohmann::json sizes = nlohmann::json::object();
  for (const Archetype t :
       {Archetype::Corner, Archetype::Edge, Archetype::Internal}) {
    bases.at(t) = localized_training(lib.at(t), model, opt, rng);
    sizes[archetype_name(t)] = bases.at(t).size();
  }
  save_bases(cfg.out_dir, bases,
             {{"n_train", opt.n_train},
              {"n", opt.n},
              {"sampler", sampler_name(opt.kind)},
              {"seed", cfg.seed}});
  write_json((fs::path(cfg.out_dir) / "train_manifest.json").string(),
             {{"command", "train"}, {"sizes", sizes}, {"config", cfg.to_json()}});
  std::printf("trained %s bases (corner=%d, edge=%d, internal=%d) -> %s\n",
              sampler_name(opt.kind).c_str(), bases.corner.size(),
              bases.edge.size(), bases.internal.size(), cfg.out_dir.c_str());
  return kOk;
}

int cmd_enrich(const ExperimentConfig& cfg) {
  const ComponentLibrary lib = make_library(cfg.pum);
  const NonlinearDiffusionModel model;
  Rng rng(cfg.seed);

  BasisSet bases = load_bases(cfg.bases_dir);
  auto [enriched, trace] = enrich(lib, model, std::move(bases), cfg.enrichment, rng);

  nlohmann::json iters = nlohmann::json::array();
  for (const auto& it : trace.iterations)
    iters.push_back({{"iteration", it.iteration},
                     {"max_delta", it.max_delta},
                     {"basis_sizes", it.basis_sizes},
                     {"dataset_sizes", it.dataset_sizes},
                     {"corrections", it.corrections},
                     {"skipped", it.skipped}});
  save_bases(cfg.out_dir, enriched,
             {{"enriched_from", cfg.bases_dir}, {"seed", cfg.seed}});
  write_json((fs::path(cfg.out_dir) / "enrich_trace.json").string(),
             {{"command", "enrich"},
              {"iterations", iters},
              {"config", cfg.to_json()}});
  std::printf("enrichment ran %zu iterations -> %s\n", trace.iterations.size(),
              cfg.out_dir.c_str());
  return kOk;
}

int cmd_solve(const ExperimentConfig& cfg) {
  if (cfg.configuration.is_null())
    throw ConfigError("solve needs a 'configuration' block in the config file");
  const GlobalConfiguration gc = GlobalConfiguration::from_json(cfg.configuration);
  if (gc.H != cfg.pum.H || gc.delta != cfg.pum.delta)
    throw ConfigError("configuration H/delta differ from the pum block");

  const ComponentLibrary lib = make_library(cfg.pum);
  const NonlinearDiffusionModel model;
  const GlobalSpace space = build_global_space(gc, lib);
  const GlobalROMSystem sys = assemble_rom(space, load_bases(cfg.bases_dir));
  const ModelParams params = gc.model_params();

  const ReducedState state = solve_rom(sys, model, params, cfg.newton);
  const Field u = reconstruct(sys, state.coeffs);
  const ErrorReport er = error_report(space, model, params, u);

  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  save_state((out / "state.bin").string(), state);
  write_field((out / "field.bin").string(), space.disc, u,
              {{"kind", "rom_solution"}});
  nlohmann::json report{{"command", "solve"},
                        {"reduced_dofs", sys.N()},
                        {"newton",
                         {{"iterations", state.report.iterations},
                          {"residual_norms", state.report.residual_norms},
                          {"wall_time_s", state.report.wall_time_s}}},
                        {"error_indicator", error_report_json(er)},
                        {"config", cfg.to_json()}};
  if (cfg.compare_hf) {
    const Field u_hf = solve_global_hf(space, model, params);
    const SpMat h1 = assemble_h1_gram(space.disc);
    const double rel =
        gram_norm(u - u_hf, h1) / std::max(gram_norm(u_hf, h1), 1e-300);
    report["hf_comparison"] = {{"h1_rel_error", rel},
                               {"hf_dofs", space.disc.num_dofs()}};
  }
  write_json((out / "solve_report.json").string(), report);
  std::printf("solved %d-component configuration: N=%d, %d Newton steps, "
              "indicator=%.3e -> %s\n",
              gc.count(), sys.N(), state.report.iterations, er.delta,
              cfg.out_dir.c_str());
  return kOk;
}

int cmd_study(const ExperimentConfig& cfg) {
  nlohmann::json summary;
  if (cfg.study == "linear")
    summary = study_linear(cfg);
  else if (cfg.study == "nonlinear")
    summary = study_nonlinear(cfg);
  else
    summary = study_enrichment(cfg);
  std::printf("study %s finished in %.1f s -> %s\n", cfg.study.c_str(),
              summary.value("wall_time_s", 0.0), cfg.out_dir.c_str());
  return kOk;
}

int cmd_verify(const ExperimentConfig& cfg) {
  const VerifyReport report = run_verification(cfg);
  fs::create_directories(cfg.out_dir);
  write_json((fs::path(cfg.out_dir) / "verify_report.json").string(),
             report.to_json());
  int passed = 0;
  for (const auto& c : report.checks) {
    std::printf("%-32s %s  margin=%+.3e  %s\n", c.name.c_str(),
                c.passed ? "PASS" : "FAIL", c.margin, c.detail.c_str());
    passed += c.passed ? 1 : 0;
  }
  std::printf("%d/%zu checks passed\n", passed, report.checks.size());
  return report.all_passed() ? kOk : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Component-based model reduction for parametric PDEs"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned long long seed = 0;
  std::string out_dir;
  bool fast = false;
  const std::pair<const char*, const char*> commands[] = {
      {"train", "Train localized reduced bases for all archetypes"},
      {"enrich", "Enrich existing bases with residual-driven corrections"},
      {"solve", "Solve one global configuration with stored bases"},
      {"study-linear", "Transfer-operator sampling study (linear ADR)"},
      {"study-nonlinear", "Localized training study (nonlinear diffusion)"},
      {"study-enrichment", "Out-of-sample enrichment study"},
      {"verify", "Run the invariant suite and report per-check margins"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON experiment configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured RNG seed");
    sub->add_option("--out", out_dir, "Override the configured output directory");
    sub->add_flag("--fast", fast, "Shrink sizes to smoke-run scale");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  CLI::App* sub = app.get_subcommands().front();

  try {
    ExperimentConfig cfg;
    try {
      cfg = ExperimentConfig::from_json(read_json(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse '" + config_path + "': " + e.what());
    }
    if (sub->count("--seed") > 0) cfg.seed = seed;
    if (sub->count("--out") > 0) cfg.out_dir = out_dir;
    if (fast && !cfg.fast) apply_fast_mode(cfg);

    const std::string name = sub->get_name();
    if (name == "train") return cmd_train(cfg);
    if (name == "enrich") return cmd_enrich(cfg);
    if (name == "solve") return cmd_solve(cfg);
    if (name == "verify") {
      cfg.study = "verify";
      return cmd_verify(cfg);
    }
    cfg.study = name.substr(std::string("study-").size());
    return cmd_study(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const MeshNotConforming& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolverFailure;
  }
}
