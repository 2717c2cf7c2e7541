#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "pumrom/errors.hpp"
#include "pumrom/io.hpp"
#include "pumrom/studies.hpp"

using namespace pumrom;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / ("pumrom_" + leaf);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("binary matrices round-trip bit for bit") {
  const fs::path dir = scratch_dir("io_matrix");
  Eigen::MatrixXd m(3, 2);
  m << 0.0, -1.5, 1e-300, 3.141592653589793, -0.0, 1e308;
  const std::string path = (dir / "m.bin").string();
  write_matrix(path, m);
  const Eigen::MatrixXd back = read_matrix(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  for (int i = 0; i < m.size(); ++i) {
    const double a = m.data()[i], b = back.data()[i];
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  }
  // empty matrices are legal
  write_matrix((dir / "e.bin").string(), Eigen::MatrixXd(0, 0));
  CHECK(read_matrix((dir / "e.bin").string()).size() == 0);
  fs::remove_all(dir);
}

TEST_CASE("matrix reader rejects malformed containers") {
  const fs::path dir = scratch_dir("io_bad");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 2, 7.0);
  const std::string path = (dir / "m.bin").string();
  write_matrix(path, m);

  // corrupt the magic
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXXXXXX", 8);
  }
  CHECK_THROWS_AS((void)read_matrix(path), IoError);

  // truncate the payload
  write_matrix(path, m);
  fs::resize_file(path, fs::file_size(path) - 9);
  CHECK_THROWS_AS((void)read_matrix(path), IoError);

  CHECK_THROWS_AS((void)read_matrix((dir / "missing.bin").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("discretization descriptors round-trip graded meshes") {
  const Discretization disc({{0.0, 0.1, 0.35, 1.0}}, {{0.0, 0.5, 1.0}}, 3);
  const nlohmann::json j = discretization_descriptor(disc);
  const Discretization back = discretization_from_descriptor(j);
  CHECK(back.num_dofs() == disc.num_dofs());
  CHECK(back.rect() == disc.rect());
  for (int d = 0; d < disc.num_dofs(); ++d) {
    CHECK(back.node(d)[0] == disc.node(d)[0]);
    CHECK(back.node(d)[1] == disc.node(d)[1]);
  }
}

TEST_CASE("fields check their discretization on load") {
  const fs::path dir = scratch_dir("io_field");
  const Discretization disc({{0.0, 0.5, 1.0}}, {{0.0, 1.0}}, 2);
  const Field u = disc.interpolate(
      [](const Vec2& x) { return std::sin(x[0]) + 2.0 * x[1]; });
  const std::string path = (dir / "u.bin").string();
  write_field(path, disc, u, {{"note", "test"}});

  const Field back = read_field(path, disc);
  CHECK((back.array() == u.array()).all());
  const nlohmann::json sidecar = read_json(path + ".json");
  CHECK(sidecar["meta"]["note"] == "test");

  const Discretization other({{0.0, 1.0}}, {{0.0, 1.0}}, 2);
  CHECK_THROWS_AS((void)read_field(path, other), IoError);
  fs::remove_all(dir);
}

TEST_CASE("json files round-trip through the helpers") {
  const fs::path dir = scratch_dir("io_json");
  const nlohmann::json j{{"a", 1}, {"b", {1, 2, 3}}, {"c", {{"d", true}}}};
  const std::string path = (dir / "x.json").string();
  write_json(path, j);
  CHECK(read_json(path) == j);
  CHECK_THROWS_AS((void)read_json((dir / "missing.json").string()), IoError);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS(read_json((dir / "broken.json").string()));
  fs::remove_all(dir);
}

TEST_CASE("experiment config is a json fixpoint") {
  ExperimentConfig cfg;
  cfg.study = "nonlinear";
  cfg.seed = 42;
  cfg.alphas = {1.0, 2.0};
  cfg.sizes.n_dd = 3;
  cfg.sampler_kind = SamplerKind::Gaussian;
  cfg.compare_hf = true;
  cfg.bases_dir = "out/bases";

  const nlohmann::json j = cfg.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.study == "nonlinear");
  CHECK(back.seed == 42);
  CHECK(back.sampler_kind == SamplerKind::Gaussian);
  CHECK(back.sizes.n_dd == 3);
  CHECK(back.compare_hf);
}

TEST_CASE("unknown config keys are rejected with their path") {
  const nlohmann::json good{{"study", "linear"}};
  CHECK_NOTHROW((void)ExperimentConfig::from_json(good));

  auto message_of = [](const nlohmann::json& j) {
    try {
      (void)ExperimentConfig::from_json(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  CHECK(message_of({{"studyy", "linear"}}).find("studyy") != std::string::npos);
  CHECK(message_of({{"pum", {{"HH", 0.1}}}}).find("config.pum") !=
        std::string::npos);
  CHECK(message_of({{"sampler", {{"alpha", 1.0}, {"beta", 2.0}}}}).find("beta") !=
        std::string::npos);
  CHECK(message_of({{"sizes", {{"n_dd", 4}, {"typo", 1}}}}).find("config.sizes") !=
        std::string::npos);
  CHECK(message_of({{"newton", {{"tol", 1e-8}}}}).find("config.newton") !=
        std::string::npos);
  CHECK(message_of({{"enrichment", {{"em_r", 1}}}}).find("config.enrichment") !=
        std::string::npos);
}

TEST_CASE("invalid config values are rejected") {
  CHECK_THROWS_AS((void)ExperimentConfig::from_json({{"study", "cubic"}}),
                  ConfigError);
  CHECK_THROWS_AS((void)ExperimentConfig::from_json(
                      {{"pum", {{"H", 0.1}, {"delta", 0.05}}}}),
                  ConfigError);
  CHECK_THROWS_AS(
      (void)ExperimentConfig::from_json({{"sampler", {{"kind", "lumpy"}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      (void)ExperimentConfig::from_json({{"sizes", {{"n_train", 0}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      (void)ExperimentConfig::from_json({{"sizes", {{"n_dd", 1}}}}),
      ConfigError);
  CHECK_THROWS_AS((void)ExperimentConfig::from_json(
                      {{"sizes", {{"n_max", 30}, {"n_train", 20}}}}),
                  ConfigError);
  CHECK_THROWS_AS(
      (void)ExperimentConfig::from_json({{"alphas", nlohmann::json::array()}}),
      ConfigError);
  CHECK_THROWS_AS(
      (void)ExperimentConfig::from_json({{"enrichment", {{"m_r", 0.0}}}}),
      ConfigError);
  CHECK_THROWS_AS((void)ExperimentConfig::from_json(
                      {{"enrichment", {{"n_dd_choices", {1}}}}}),
                  ConfigError);
}

TEST_CASE("fast mode caps sizes and is idempotent") {
  ExperimentConfig cfg;
  cfg.sizes.n_train = 500;
  cfg.sizes.n_dd = 6;
  cfg.enrichment.maxit = 9;
  const ExperimentConfig orig = cfg;
  apply_fast_mode(cfg);
  CHECK(cfg.fast);
  CHECK(cfg.sizes.n_train <= orig.sizes.n_train);
  CHECK(cfg.sizes.n_dd <= 3);
  CHECK(cfg.enrichment.maxit <= 2);
  CHECK(cfg.pum.degree <= orig.pum.degree);

  ExperimentConfig again = cfg;
  apply_fast_mode(again);
  CHECK(again.to_json() == cfg.to_json());

  // the json loader applies fast mode exactly once
  nlohmann::json j = orig.to_json();
  j["fast"] = true;
  const ExperimentConfig fromj = ExperimentConfig::from_json(j);
  CHECK(fromj.sizes.n_train == cfg.sizes.n_train);
}

TEST_CASE("enrichment defaults differ between library and study drivers") {
  const EnrichmentConfig lib_default;
  CHECK(lib_default.n_train_glo == 50);
  CHECK(lib_default.n_glo == 10);
  CHECK(lib_default.maxit == 3);

  const EnrichmentConfig study_default = ExperimentConfig::default_enrichment();
  CHECK(study_default.n_train_glo == 10);
  CHECK(study_default.n_glo == 5);
  CHECK(study_default.maxit == 3);
  CHECK(study_default.n_dd_choices == std::vector<int>{4});
}

TEST_CASE("statistics helpers follow their conventions") {
  CHECK(median({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.0) == doctest::Approx(1.0));
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 1.0) == doctest::Approx(4.0));

  // perfect monotone association
  CHECK(spearman({1.0, 2.0, 3.0, 4.0}, {10.0, 20.0, 30.0, 40.0}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(spearman({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
  CHECK(spearman({1.0}, {2.0}) == doctest::Approx(0.0));
}
