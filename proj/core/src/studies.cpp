#include "pumrom/studies.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"

namespace pumrom {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

std::string num(int x) { return std::to_string(x); }

// One CSV table with a fixed header; numeric cells are pre-formatted so the
// byte layout depends only on the data.
class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw IoError("cannot open " + path.string());
    out_ << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

fs::path ensure_out(const ExperimentConfig& cfg) {
  fs::path out(cfg.out_dir);
  fs::create_directories(out);
  return out;
}

nlohmann::json finish_summary(const fs::path& out, const ExperimentConfig& cfg,
                              nlohmann::json summary, Clock::time_point t0) {
  summary["config"] = cfg.to_json();
  summary["wall_time_s"] = elapsed(t0);
  write_json((out / "summary.json").string(), summary);
  return summary;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  int i = 0;
  while (i < n) {
    int k = i;
    while (k + 1 < n && v[idx[k + 1]] == v[idx[i]]) ++k;
    const double avg = 0.5 * (i + k) + 1.0;
    for (int t = i; t <= k; ++t) r[idx[t]] = avg;
    i = k + 1;
  }
  return r;
}

// Strict member access: every key must be consumed, so typos fail loudly.
class StrictParser {
 public:
  StrictParser(const nlohmann::json& j, std::string where)
      : j_(&j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = j_->find(key);
    if (it == j_->end()) return;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* sub(const char* key) {
    seen_.push_back(key);
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_->items())
      if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end())
        throw ConfigError(where_ + ": unknown key \"" + item.key() + "\"");
  }

 private:
  const nlohmann::json* j_;
  std::string where_;
  std::vector<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate(const ExperimentConfig& cfg) {
  static const std::set<std::string> studies{"linear", "nonlinear", "enrichment",
                                             "verify"};
  require(studies.count(cfg.study) > 0,
          "config.study: unknown study \"" + cfg.study + "\"");
  require(cfg.pum.H > 0 && cfg.pum.delta > 0 && 2 * cfg.pum.delta < cfg.pum.H,
          "config.pum: require 0 < 2*delta < H");
  require(cfg.pum.degree >= 1 && cfg.pum.interior_cells >= 1,
          "config.pum: degree and interior_cells must be >= 1");
  const auto& sa = cfg.sampler;
  require(sa.n_fourier >= 1 && sa.u_max > 0 && sa.max_retries >= 1 &&
              sa.alpha > 0 && sa.squeeze > 0 && sa.squeeze <= 1,
          "config.sampler: positive n_fourier/u_max/alpha, squeeze in (0,1]");
  require(sa.p_src >= 0 && sa.p_src <= 1, "config.sampler.p_src: must be in [0,1]");
  require(sa.mu1_range[0] <= sa.mu1_range[1] && sa.mu2_range[0] <= sa.mu2_range[1],
          "config.sampler: parameter ranges must be ordered");
  require(cfg.newton.max_iter >= 1 && cfg.newton.rel_tol > 0 &&
              cfg.newton.abs_tol > 0 && cfg.newton.max_halvings >= 0,
          "config.newton: positive tolerances and iteration counts");
  const auto& sz = cfg.sizes;
  const int positive[] = {sz.n_dd,        sz.n_train,    sz.n_max,    sz.n_test,
                          sz.n_repeat,    sz.refine,     sz.n_te_mu,  sz.eff_repeats,
                          sz.eff_small,   sz.eff_large,  sz.eff_n,    sz.n_test_glo,
                          sz.n_train_loc, sz.n_loc};
  for (const int v : positive)
    require(v >= 1, "config.sizes: all counts must be >= 1");
  require(sz.n_dd >= 2, "config.sizes.n_dd: must be >= 2");
  require(sz.n_max <= sz.n_train, "config.sizes: n_max must not exceed n_train");
  require(sz.n_loc <= sz.n_train_loc,
          "config.sizes: n_loc must not exceed n_train_loc");
  require(sz.eff_small <= sz.eff_large,
          "config.sizes: eff_small must not exceed eff_large");
  require(!cfg.alphas.empty(), "config.alphas: must be non-empty");
  for (const double a : cfg.alphas)
    require(a > 0, "config.alphas: entries must be positive");
  const auto& en = cfg.enrichment;
  require(en.n_train_glo >= 1 && en.n_glo >= 1 && en.maxit >= 1 && en.tol >= 0,
          "config.enrichment: positive counts, non-negative tol");
  require(en.m_r > 0 && en.m_r <= 100,
          "config.enrichment.m_r: must be in (0,100]");
  require(!en.n_dd_choices.empty(), "config.enrichment.n_dd_choices: non-empty");
  for (const int n : en.n_dd_choices)
    require(n >= 2, "config.enrichment.n_dd_choices: entries must be >= 2");
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

double spearman(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const int n = static_cast<int>(a.size());
  double ma = 0, mb = 0;
  for (int i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cab = 0, va = 0, vb = 0;
  for (int i = 0; i < n; ++i) {
    cab += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va <= 0 || vb <= 0) return 0.0;
  return cab / std::sqrt(va * vb);
}

EnrichmentConfig ExperimentConfig::default_enrichment() {
  EnrichmentConfig ec;
  ec.n_train_glo = 10;
  ec.n_glo = 5;
  ec.maxit = 3;
  ec.m_r = 30.0;
  ec.n_dd_choices = {4};
  return ec;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  StrictParser root(j, "config");
  root.get("study", cfg.study);
  root.get("seed", cfg.seed);
  root.get("out_dir", cfg.out_dir);
  root.get("fast", cfg.fast);
  root.get("fault_halve_c_res", cfg.fault_halve_c_res);
  root.get("bases_dir", cfg.bases_dir);
  root.get("compare_hf", cfg.compare_hf);
  root.get("alphas", cfg.alphas);
  if (const auto* sj = root.sub("configuration")) cfg.configuration = *sj;
  if (const auto* sj = root.sub("pum")) {
    StrictParser p(*sj, "config.pum");
    p.get("H", cfg.pum.H);
    p.get("delta", cfg.pum.delta);
    p.get("degree", cfg.pum.degree);
    p.get("interior_cells", cfg.pum.interior_cells);
    p.finish();
  }
  if (const auto* sj = root.sub("sampler")) {
    StrictParser p(*sj, "config.sampler");
    std::string kind = sampler_name(cfg.sampler_kind);
    p.get("kind", kind);
    if (kind == sampler_name(SamplerKind::Smooth))
      cfg.sampler_kind = SamplerKind::Smooth;
    else if (kind == sampler_name(SamplerKind::Gaussian))
      cfg.sampler_kind = SamplerKind::Gaussian;
    else
      throw ConfigError("config.sampler.kind: unknown sampler '" + kind + "'");
    p.get("n_fourier", cfg.sampler.n_fourier);
    p.get("alpha", cfg.sampler.alpha);
    p.get("u_max", cfg.sampler.u_max);
    p.get("p_src", cfg.sampler.p_src);
    p.get("squeeze", cfg.sampler.squeeze);
    p.get("mu1_range", cfg.sampler.mu1_range);
    p.get("mu2_range", cfg.sampler.mu2_range);
    p.get("max_retries", cfg.sampler.max_retries);
    p.finish();
  }
  if (const auto* sj = root.sub("newton")) {
    StrictParser p(*sj, "config.newton");
    p.get("rel_tol", cfg.newton.rel_tol);
    p.get("abs_tol", cfg.newton.abs_tol);
    p.get("max_iter", cfg.newton.max_iter);
    p.get("max_halvings", cfg.newton.max_halvings);
    p.finish();
  }
  if (const auto* sj = root.sub("sizes")) {
    StrictParser p(*sj, "config.sizes");
    p.get("n_dd", cfg.sizes.n_dd);
    p.get("n_train", cfg.sizes.n_train);
    p.get("n_max", cfg.sizes.n_max);
    p.get("n_test", cfg.sizes.n_test);
    p.get("n_repeat", cfg.sizes.n_repeat);
    p.get("refine", cfg.sizes.refine);
    p.get("n_te_mu", cfg.sizes.n_te_mu);
    p.get("eff_repeats", cfg.sizes.eff_repeats);
    p.get("eff_small", cfg.sizes.eff_small);
    p.get("eff_large", cfg.sizes.eff_large);
    p.get("eff_n", cfg.sizes.eff_n);
    p.get("n_test_glo", cfg.sizes.n_test_glo);
    p.get("n_train_loc", cfg.sizes.n_train_loc);
    p.get("n_loc", cfg.sizes.n_loc);
    p.finish();
  }
  if (const auto* sj = root.sub("enrichment")) {
    StrictParser p(*sj, "config.enrichment");
    p.get("n_train_glo", cfg.enrichment.n_train_glo);
    p.get("n_glo", cfg.enrichment.n_glo);
    p.get("maxit", cfg.enrichment.maxit);
    p.get("tol", cfg.enrichment.tol);
    p.get("m_r", cfg.enrichment.m_r);
    p.get("n_dd_choices", cfg.enrichment.n_dd_choices);
    p.finish();
  }
  root.finish();
  if (cfg.fast) apply_fast_mode(cfg);
  cfg.enrichment.H = cfg.pum.H;
  cfg.enrichment.delta = cfg.pum.delta;
  cfg.enrichment.sampler = cfg.sampler;
  cfg.enrichment.newton = cfg.newton;
  validate(cfg);
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{
      {"study", study},
      {"seed", seed},
      {"out_dir", out_dir},
      {"fast", fast},
      {"fault_halve_c_res", fault_halve_c_res},
      {"bases_dir", bases_dir},
      {"compare_hf", compare_hf},
      {"alphas", alphas},
      {"pum",
       {{"H", pum.H},
        {"delta", pum.delta},
        {"degree", pum.degree},
        {"interior_cells", pum.interior_cells}}},
      {"sampler",
       {{"kind", sampler_name(sampler_kind)},
        {"n_fourier", sampler.n_fourier},
        {"alpha", sampler.alpha},
        {"u_max", sampler.u_max},
        {"p_src", sampler.p_src},
        {"squeeze", sampler.squeeze},
        {"mu1_range", sampler.mu1_range},
        {"mu2_range", sampler.mu2_range},
        {"max_retries", sampler.max_retries}}},
      {"newton",
       {{"rel_tol", newton.rel_tol},
        {"abs_tol", newton.abs_tol},
        {"max_iter", newton.max_iter},
        {"max_halvings", newton.max_halvings}}},
      {"sizes",
       {{"n_dd", sizes.n_dd},
        {"n_train", sizes.n_train},
        {"n_max", sizes.n_max},
        {"n_test", sizes.n_test},
        {"n_repeat", sizes.n_repeat},
        {"refine", sizes.refine},
        {"n_te_mu", sizes.n_te_mu},
        {"eff_repeats", sizes.eff_repeats},
        {"eff_small", sizes.eff_small},
        {"eff_large", sizes.eff_large},
        {"eff_n", sizes.eff_n},
        {"n_test_glo", sizes.n_test_glo},
        {"n_train_loc", sizes.n_train_loc},
        {"n_loc", sizes.n_loc}}},
      {"enrichment",
       {{"n_train_glo", enrichment.n_train_glo},
        {"n_glo", enrichment.n_glo},
        {"maxit", enrichment.maxit},
        {"tol", enrichment.tol},
        {"m_r", enrichment.m_r},
        {"n_dd_choices", enrichment.n_dd_choices}}}};
  if (!configuration.is_null()) j["configuration"] = configuration;
  return j;
}

void apply_fast_mode(ExperimentConfig& cfg) {
  cfg.fast = true;
  const PumOptions fast = PumOptions::fast();
  cfg.pum.degree = fast.degree;
  cfg.pum.interior_cells = fast.interior_cells;
  auto cap = [](int& v, int limit) { v = std::min(v, limit); };
  cap(cfg.sizes.n_dd, 3);
  cap(cfg.sizes.n_train, 15);
  cap(cfg.sizes.n_max, 6);
  cap(cfg.sizes.n_test, 2);
  cap(cfg.sizes.n_repeat, 3);
  cap(cfg.sizes.n_te_mu, 3);
  cap(cfg.sizes.eff_repeats, 20);
  cap(cfg.sizes.eff_small, 5);
  cap(cfg.sizes.eff_large, 20);
  cap(cfg.sizes.eff_n, 4);
  cap(cfg.sizes.n_test_glo, 3);
  cap(cfg.sizes.n_train_loc, 8);
  cap(cfg.sizes.n_loc, 4);
  cap(cfg.enrichment.n_train_glo, 3);
  cap(cfg.enrichment.n_glo, 2);
  cap(cfg.enrichment.maxit, 2);
  for (int& n : cfg.enrichment.n_dd_choices) n = std::min(n, 3);
}

nlohmann::json study_linear(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const fs::path out = ensure_out(cfg);
  Rng rng(cfg.seed);

  const LinearStudySetup setup = make_linear_study(cfg.sizes.refine, cfg.pum.degree);
  const int n_in = static_cast<int>(setup.boundary_dofs.size());
  const int n_max =
      std::min({cfg.sizes.n_max, cfg.sizes.n_train, setup.target.num_dofs()});
  const std::array<SamplerKind, 2> kinds{SamplerKind::Smooth, SamplerKind::Gaussian};

  const auto draw = [&](SamplerKind kind) {
    const auto mu = sample_adr_parameters(setup, rng);
    const Eigen::VectorXd g = sample_linear_boundary(setup, kind, cfg.sampler, rng);
    return LinearTransferSolver(setup, mu).apply(g);
  };

  std::map<std::string, std::vector<Field>> tests;
  for (const SamplerKind kind : kinds) {
    auto& us = tests[sampler_name(kind)];
    for (int i = 0; i < cfg.sizes.n_test; ++i) us.push_back(draw(kind));
  }

  nlohmann::json summary;
  Csv curve(out / "transfer_error.csv",
            "train_sampler,test_sampler,n,rep,max_rel_error");
  std::map<std::string, std::vector<std::vector<double>>> cells;
  std::map<std::string, std::vector<double>> insample;

  for (int rep = 0; rep < cfg.sizes.n_repeat; ++rep) {
    for (const SamplerKind kind : kinds) {
      std::vector<Field> snaps;
      snaps.reserve(cfg.sizes.n_train);
      for (int i = 0; i < cfg.sizes.n_train; ++i) snaps.push_back(draw(kind));
      const PodResult basis = pod(snaps, setup.target_h1, n_max);
      const int cols = static_cast<int>(basis.modes.cols());
      const PodResult full =
          pod(snaps, setup.target_h1, static_cast<int>(snaps.size()));
      insample[sampler_name(kind)].push_back(
          max_relative_projection_error(full.modes, setup.target_h1, snaps));
      for (const SamplerKind test_kind : kinds) {
        const std::string key =
            sampler_name(kind) + "->" + sampler_name(test_kind);
        auto& cell = cells[key];
        if (cell.empty()) cell.resize(n_max + 1);
        const auto& us = tests.at(sampler_name(test_kind));
        for (int n = 0; n <= n_max; ++n) {
          const int nn = std::min(n, cols);
          const double e = max_relative_projection_error(
              basis.modes.leftCols(nn), setup.target_h1, us);
          curve.row({sampler_name(kind), sampler_name(test_kind), num(n),
                     num(rep), fmt(e)});
          cell[n].push_back(e);
        }
      }
    }
  }

  Csv stats(out / "transfer_error_stats.csv",
            "train_sampler,test_sampler,n,median,q25,q75,min,max");
  bool decreasing = true;
  for (const auto& [key, cell] : cells) {
    const auto sep = key.find("->");
    const std::string train = key.substr(0, sep), test = key.substr(sep + 2);
    std::vector<double> med(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
      med[n] = median(cell[n]);
      stats.row({train, test, num(n), fmt(med[n]), fmt(quantile(cell[n], 0.25)),
                 fmt(quantile(cell[n], 0.75)),
                 fmt(*std::min_element(cell[n].begin(), cell[n].end())),
                 fmt(*std::max_element(cell[n].begin(), cell[n].end()))});
      if (n > 0 && med[n] > med[n - 1] + 1e-15) decreasing = false;
    }
    summary["medians"][key] = med;
  }
  summary["decreasing_medians"] = decreasing;
  for (const auto& [key, v] : insample) summary["in_sample_error"][key] = median(v);

  std::vector<std::array<double, 4>> mus;
  for (int i = 0; i < cfg.sizes.n_te_mu; ++i)
    mus.push_back(sample_adr_parameters(setup, rng));
  const PodResult te = te_pod_baseline(setup, mus, n_max);
  Csv tec(out / "te_pod_error.csv", "test_sampler,n,max_rel_error");
  for (const SamplerKind test_kind : kinds) {
    std::vector<double> te_curve(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
      const int nn = std::min<int>(n, static_cast<int>(te.modes.cols()));
      te_curve[n] = max_relative_projection_error(
          te.modes.leftCols(nn), setup.target_h1, tests.at(sampler_name(test_kind)));
      tec.row({sampler_name(test_kind), num(n), fmt(te_curve[n])});
    }
    summary["te_pod"][sampler_name(test_kind)] = te_curve;
  }

  // Full-rank transfer decomposition at a fixed parameter reproduces fresh
  // solutions of the same parameter up to the spectral truncation floor.
  {
    const auto mu_id = sample_adr_parameters(setup, rng);
    const PodResult full_range = te_pod_baseline(setup, {mu_id}, n_in);
    const LinearTransferSolver solver(setup, mu_id);
    double id_err = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Field u = solver.apply(
          sample_linear_boundary(setup, SamplerKind::Gaussian, cfg.sampler, rng));
      const Field d = u - project_onto(full_range.modes, setup.target_h1, u);
      id_err = std::max(id_err,
                        gram_norm(d, setup.target_h1) / gram_norm(u, setup.target_h1));
    }
    summary["te_pod_identity_error"] = id_err;
    summary["te_pod_identity_rank"] = static_cast<int>(full_range.modes.cols());
  }

  // Indicator stability: one trained basis, repeated nested test draws.
  {
    std::vector<Field> snaps;
    for (int i = 0; i < cfg.sizes.n_train; ++i) snaps.push_back(draw(SamplerKind::Smooth));
    const PodResult basis = pod(snaps, setup.target_h1, cfg.sizes.eff_n);
    Csv eff(out / "indicator_stability.csv", "rep,e_small,e_large,ratio");
    int in_band = 0;
    std::vector<double> ratios;
    for (int rep = 0; rep < cfg.sizes.eff_repeats; ++rep) {
      std::vector<Field> big;
      big.reserve(cfg.sizes.eff_large);
      for (int i = 0; i < cfg.sizes.eff_large; ++i) big.push_back(draw(SamplerKind::Smooth));
      const std::vector<Field> small(big.begin(), big.begin() + cfg.sizes.eff_small);
      const double e_small =
          max_relative_projection_error(basis.modes, setup.target_h1, small);
      const double e_large =
          max_relative_projection_error(basis.modes, setup.target_h1, big);
      const double ratio = e_small / e_large;
      ratios.push_back(ratio);
      if (ratio >= 0.5 && ratio <= 1.5) ++in_band;
      eff.row({num(rep), fmt(e_small), fmt(e_large), fmt(ratio)});
    }
    summary["stability_in_band"] = in_band;
    summary["stability_repeats"] = cfg.sizes.eff_repeats;
    summary["stability_fraction"] =
        static_cast<double>(in_band) / cfg.sizes.eff_repeats;
    summary["stability_ratio_median"] = median(ratios);
  }

  summary["n_in"] = n_in;
  summary["target_dofs"] = setup.target.num_dofs();
  return finish_summary(out, cfg, std::move(summary), t0);
}

nlohmann::json study_nonlinear(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const fs::path out = ensure_out(cfg);
  Rng rng(cfg.seed);

  const ComponentLibrary lib = make_library(cfg.pum);
  const NonlinearDiffusionModel model;
  const int n_max = std::min(cfg.sizes.n_max, cfg.sizes.n_train);
  const std::array<Archetype, 3> types{Archetype::Corner, Archetype::Edge,
                                       Archetype::Internal};

  // Out-of-sample datasets: restrict full-order solutions of random global
  // configurations onto every instantiated component.
  std::vector<GlobalConfiguration> test_cfgs;
  for (int t = 0; t < cfg.sizes.n_test; ++t)
    test_cfgs.push_back(sample_global_configuration(
        {cfg.sizes.n_dd}, cfg.sampler, cfg.pum.H, cfg.pum.delta, rng));
  const GlobalSpace space = build_global_space(test_cfgs.front(), lib);
  std::vector<Field> u_hf(cfg.sizes.n_test);
  std::array<std::vector<Field>, 3> data;
  for (int t = 0; t < cfg.sizes.n_test; ++t) {
    try {
      u_hf[t] = solve_global_hf(space, model, test_cfgs[t].model_params(), cfg.newton);
    } catch (const Error& e) {
      throw NonConvergence(
          "study_nonlinear: reference solve of test configuration " +
              std::to_string(t) + " failed: " + e.what(),
          {});
    }
    for (int j = 0; j < space.cfg.count(); ++j)
      data[static_cast<int>(space.cfg.components[j].type)].push_back(
          space.restrict_to_component(j, u_hf[t]));
  }

  nlohmann::json summary;
  for (const Archetype t : types)
    summary["dataset_sizes"][archetype_name(t)] =
        static_cast<int>(data[static_cast<int>(t)].size());

  Csv local(out / "local_error.csv", "sampler,alpha,archetype,n,mean_rel_error");
  const auto record_curve = [&](const std::string& label, double alpha,
                                Archetype t, const Eigen::MatrixXd& modes) {
    const auto& ws = lib.at(t);
    std::vector<double> c(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
      const int nn = std::min<int>(n, static_cast<int>(modes.cols()));
      c[n] = projection_error_indicator(modes.leftCols(nn), ws.weighted_gram,
                                        data[static_cast<int>(t)]);
      local.row({label, fmt(alpha), archetype_name(t), num(n), fmt(c[n])});
    }
    summary["local_curves"][label + ":" + fmt(alpha) + ":" + archetype_name(t)] =
        c;
    return c;
  };

  // Index of the smooth run whose bases also drive the global curves.
  std::size_t i_glob = 0;
  for (std::size_t i = 1; i < cfg.alphas.size(); ++i)
    if (std::abs(cfg.alphas[i] - 1.0) < std::abs(cfg.alphas[i_glob] - 1.0))
      i_glob = i;

  BasisSet bases_glob;
  std::vector<double> internal_curve;
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    SamplerOptions so = cfg.sampler;
    so.alpha = cfg.alphas[i];
    const TrainingOptions topt{cfg.sizes.n_train, n_max, SamplerKind::Smooth, so,
                               cfg.newton};
    for (const Archetype t : types) {
      ReducedBasis rb = localized_training(lib.at(t), model, topt, rng);
      const auto c = record_curve("smooth", cfg.alphas[i], t, rb.modes);
      if (i == i_glob) {
        if (t == Archetype::Internal) internal_curve = c;
        bases_glob.at(t) = std::move(rb);
      }
    }
  }
  {
    const TrainingOptions topt{cfg.sizes.n_train, n_max, SamplerKind::Gaussian,
                               cfg.sampler, cfg.newton};
    for (const Archetype t : types) {
      const ReducedBasis rb = localized_training(lib.at(t), model, topt, rng);
      record_curve("gaussian", 0.0, t, rb.modes);
    }
  }
  for (const Archetype t : types) {
    const auto& ws = lib.at(t);
    const auto& ds = data[static_cast<int>(t)];
    const PodResult opt_basis = pod(ds, ws.weighted_gram, n_max);
    record_curve("opt", 0.0, t, opt_basis.modes);
    const PodResult full = pod(ds, ws.weighted_gram, static_cast<int>(ds.size()));
    summary["opt_in_sample"][archetype_name(t)] =
        projection_error_indicator(full.modes, ws.weighted_gram, ds);
  }

  const double tail = std::max(internal_curve[n_max], 1e-300);
  summary["internal_decay_ratio"] = internal_curve[1] / tail;
  summary["alpha_glob"] = cfg.alphas[i_glob];

  // Global reduced solves versus best approximation, identical bases.
  const SpMat h1 = assemble_h1_gram(space.disc);
  const SpMat mass = assemble_gram(
      space.disc, [](const Vec2&) { return 0.0; }, [](const Vec2&) { return 1.0; });
  const int n_top = std::min({n_max, bases_glob.corner.size(),
                              bases_glob.edge.size(), bases_glob.internal.size()});
  Csv glob(out / "global_error.csv",
           "n,galerkin_h1,projection_h1,galerkin_l2,projection_l2,ratio_h1");
  double max_ratio = 0.0;
  int warm_retries = 0;
  for (int n = 1; n <= n_top; ++n) {
    const GlobalROMSystem sys = assemble_rom(space, truncate(bases_glob, n));
    double gh1 = 0, ph1 = 0, gl2 = 0, pl2 = 0;
    for (int t = 0; t < cfg.sizes.n_test; ++t) {
      const ModelParams params = test_cfgs[t].model_params();
      Eigen::VectorXd c;
      try {
        c = solve_rom(sys, model, params, cfg.newton).coeffs;
      } catch (const NonConvergence&) {
        const Eigen::VectorXd warm = project_to_rom(sys, h1, u_hf[t]);
        c = solve_rom(sys, model, params, cfg.newton, &warm).coeffs;
        ++warm_retries;
      }
      const Field ur = reconstruct(sys, c);
      const Field up = reconstruct(sys, project_to_rom(sys, h1, u_hf[t]));
      const Field ul = reconstruct(sys, project_to_rom(sys, mass, u_hf[t]));
      const double nh1 = gram_norm(u_hf[t], h1);
      const double nl2 = gram_norm(u_hf[t], mass);
      gh1 += gram_norm(u_hf[t] - ur, h1) / nh1;
      ph1 += gram_norm(u_hf[t] - up, h1) / nh1;
      gl2 += gram_norm(u_hf[t] - ur, mass) / nl2;
      pl2 += gram_norm(u_hf[t] - ul, mass) / nl2;
    }
    gh1 /= cfg.sizes.n_test;
    ph1 /= cfg.sizes.n_test;
    gl2 /= cfg.sizes.n_test;
    pl2 /= cfg.sizes.n_test;
    const double ratio = gh1 / std::max(ph1, 1e-300);
    max_ratio = std::max(max_ratio, ratio);
    glob.row({num(n), fmt(gh1), fmt(ph1), fmt(gl2), fmt(pl2), fmt(ratio)});
  }
  summary["max_galerkin_over_projection_h1"] = max_ratio;
  summary["warm_retries"] = warm_retries;
  summary["n_top"] = n_top;
  return finish_summary(out, cfg, std::move(summary), t0);
}

nlohmann::json study_enrichment(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const fs::path out = ensure_out(cfg);
  Rng rng(cfg.seed);

  const ComponentLibrary lib = make_library(cfg.pum);
  const NonlinearDiffusionModel model;
  EnrichmentConfig ec = cfg.enrichment;
  ec.H = cfg.pum.H;
  ec.delta = cfg.pum.delta;
  ec.sampler = cfg.sampler;
  ec.newton = cfg.newton;
  const std::array<Archetype, 3> types{Archetype::Corner, Archetype::Edge,
                                       Archetype::Internal};
  const std::array<SamplerKind, 2> kinds{SamplerKind::Smooth, SamplerKind::Gaussian};

  // Out-of-sample test configurations with full-order references; one space
  // and H1 gram per distinct grid size.
  std::vector<GlobalConfiguration> tcfg;
  for (int t = 0; t < cfg.sizes.n_test_glo; ++t)
    tcfg.push_back(sample_global_configuration(ec.n_dd_choices, cfg.sampler, ec.H,
                                               ec.delta, rng));
  std::map<int, GlobalSpace> spaces;
  std::map<int, SpMat> h1s;
  std::vector<Field> u_ref(tcfg.size());
  std::vector<double> ref_norm(tcfg.size());
  for (std::size_t t = 0; t < tcfg.size(); ++t) {
    const int n = tcfg[t].n_dd;
    if (!spaces.count(n)) {
      spaces.emplace(n, build_global_space(tcfg[t], lib));
      h1s.emplace(n, assemble_h1_gram(spaces.at(n).disc));
    }
    try {
      u_ref[t] = solve_global_hf(spaces.at(n), model, tcfg[t].model_params(),
                                 cfg.newton);
    } catch (const Error& e) {
      throw NonConvergence(
          "study_enrichment: reference solve of test configuration " +
              std::to_string(t) + " failed: " + e.what(),
          {});
    }
    ref_norm[t] = gram_norm(u_ref[t], h1s.at(n));
  }

  nlohmann::json summary;
  Csv scatter(out / "enrichment_error.csv",
              "sampler,iteration,config,n_dd,h1_abs_error,h1_rel_error,delta,"
              "bound,effectivity");
  Csv trace_csv(out / "enrichment_trace.csv",
                "sampler,iteration,max_delta,corner_size,edge_size,internal_size,"
                "corner_data,edge_data,internal_data,corrections,skipped");

  std::vector<double> pool_delta, pool_rel, pool_abs;
  for (const SamplerKind kind : kinds) {
    const std::string name = sampler_name(kind);
    BasisSet bases;
    for (const Archetype t : types) {
      const TrainingOptions topt{cfg.sizes.n_train_loc, cfg.sizes.n_loc, kind,
                                 cfg.sampler, cfg.newton};
      bases.at(t) = localized_training(lib.at(t), model, topt, rng);
    }

    std::vector<double> med_per_it;
    const auto evaluate = [&](int iteration, const BasisSet& b) {
      std::vector<double> errs;
      for (std::size_t t = 0; t < tcfg.size(); ++t) {
        const int n = tcfg[t].n_dd;
        const GlobalSpace& sp = spaces.at(n);
        const GlobalROMSystem sys = assemble_rom(sp, b);
        const ModelParams params = tcfg[t].model_params();
        Eigen::VectorXd c;
        try {
          c = solve_rom(sys, model, params, cfg.newton).coeffs;
        } catch (const NonConvergence&) {
          const Eigen::VectorXd warm = project_to_rom(sys, h1s.at(n), u_ref[t]);
          c = solve_rom(sys, model, params, cfg.newton, &warm).coeffs;
        }
        const Field ur = reconstruct(sys, c);
        const ErrorReport rep = error_report(sp, model, params, ur);
        const double abs_err = gram_norm(u_ref[t] - ur, h1s.at(n));
        const double rel_err = abs_err / ref_norm[t];
        scatter.row({name, num(iteration), num(static_cast<int>(t)), num(n),
                     fmt(abs_err), fmt(rel_err), fmt(rep.delta), fmt(rep.bound),
                     fmt(rep.delta / std::max(abs_err, 1e-300))});
        errs.push_back(rel_err);
        pool_delta.push_back(rep.delta);
        pool_rel.push_back(rel_err);
        pool_abs.push_back(abs_err);
      }
      med_per_it.push_back(median(errs));
    };

    evaluate(0, bases);
    const auto [enriched, trace] = enrich(lib, model, std::move(bases), ec, rng,
                                          evaluate);
    for (const auto& it : trace.iterations)
      trace_csv.row({name, num(it.iteration), fmt(it.max_delta),
                     num(it.basis_sizes[0]), num(it.basis_sizes[1]),
                     num(it.basis_sizes[2]), num(it.dataset_sizes[0]),
                     num(it.dataset_sizes[1]), num(it.dataset_sizes[2]),
                     num(it.corrections), num(it.skipped)});

    summary["medians"][name] = med_per_it;
    summary["median_ratio"][name] =
        med_per_it.back() / std::max(med_per_it.front(), 1e-300);
    summary["final_sizes"][name] = {enriched.corner.size(), enriched.edge.size(),
                                    enriched.internal.size()};
  }
  summary["spearman_delta_vs_h1_rel"] = spearman(pool_delta, pool_rel);
  summary["spearman_delta_vs_h1_abs"] = spearman(pool_delta, pool_abs);
  return finish_summary(out, cfg, std::move(summary), t0);
}

}  // namespace pumrom
