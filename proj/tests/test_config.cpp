#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mhmap/config.hpp"
#include "mhmap/errors.hpp"

using namespace mhmap;

namespace {

ScenarioConfig unusual() {
  ScenarioConfig c;
  c.diffusivity = 1.0 / 3.0;
  c.noise_variance = 0.1;
  c.seed = 18446744073709551557ull;
  c.sensor_layout = "fixed";
  c.threshold_mode = "constant";
  c.threshold_value = 12.5;
  c.dirichlet_edge = "left";
  c.sweep_noise_values = {1e-5, 0.3, 7.0};
  c.sweep_sensor_values = {1, 2, 3, 50};
  c.output_dir = "results/run a";
  c.truth_mesh_file = "meshes/fine.txt";
  return c;
}

}  // namespace

TEST(Config, DefaultsAreCaseStudyConstants) {
  const ScenarioConfig c;
  EXPECT_EQ(c.diffusivity, 0.01);
  EXPECT_EQ(c.dt, 1.0);
  EXPECT_EQ(c.dirichlet_value, 30.0);
  EXPECT_EQ(c.horizon, 5);
  EXPECT_EQ(c.arrival_weight, 1e3);
  EXPECT_EQ(c.process_weight, 1e2);
  EXPECT_EQ(c.prior_mean, 5.0);
  EXPECT_EQ(c.truth_initial, 0.0);
  EXPECT_EQ(c.duration, 1200.0);
  EXPECT_EQ(c.runs, 100);
  EXPECT_EQ(c.threshold_low, 0.05);
  EXPECT_EQ(c.threshold_high, 29.95);
  EXPECT_EQ(c.threshold_mode, "uniform");
  EXPECT_EQ(c.sample_ratio, 10);
  EXPECT_NEAR(c.domain_width * c.domain_height, 7.44, 1e-12);
  EXPECT_EQ(c.estimator_steps(), 120);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream in(
      "# scenario\n"
      "runs = 7\n"
      "  noise_variance=0.5   # trailing comment\n"
      "sensor_layout = fixed\n"
      "sweep_sensor_values = 5, 10\n"
      "\n");
  const ScenarioConfig c = parse_config(in);
  EXPECT_EQ(c.runs, 7);
  EXPECT_EQ(c.noise_variance, 0.5);
  EXPECT_EQ(c.sensor_layout, "fixed");
  EXPECT_EQ(c.sweep_sensor_values, (std::vector<int>{5, 10}));
}

TEST(Config, UnknownKeysAreAllListed) {
  std::istringstream in("runs = 3\nnoise_varience = 1\nhorizn = 2\n");
  try {
    parse_config(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("noise_varience"), std::string::npos);
    EXPECT_NE(msg.find("horizn"), std::string::npos);
  }
}

TEST(Config, RejectsBadValues) {
  ScenarioConfig c;
  EXPECT_THROW(set_config_value(c, "runs", "many"), ConfigError);
  EXPECT_THROW(set_config_value(c, "runs", "3.5"), ConfigError);
  EXPECT_THROW(set_config_value(c, "diffusivity", "0.01x"), ConfigError);
  EXPECT_THROW(set_config_value(c, "no_such_key", "1"), ConfigError);
  for (auto [key, value] : {std::pair{"diffusivity", "0"}, std::pair{"dt", "-1"},
                           std::pair{"sample_ratio", "0"}, std::pair{"horizon", "-1"},
                           std::pair{"noise_variance", "-0.1"}, std::pair{"runs", "0"},
                           std::pair{"threshold_mode", "gaussian"},
                           std::pair{"sensor_layout", "grid"},
                           std::pair{"dirichlet_edge", "diagonal"},
                           std::pair{"truth_nx", "0"}}) {
    ScenarioConfig bad;
    set_config_value(bad, key, value);
    EXPECT_THROW(bad.validate(), ConfigError) << key << "=" << value;
  }
  std::istringstream no_eq("runs 3\n");
  EXPECT_THROW(parse_config(no_eq), ConfigError);
}

TEST(Config, TextRoundTrip) {
  const ScenarioConfig c = unusual();
  std::stringstream ss;
  write_config(ss, c);
  EXPECT_EQ(parse_config(ss), c);
}

TEST(Config, ManifestRoundTrip) {
  const ScenarioConfig c = unusual();
  const std::string m = make_manifest(c, "run");
  EXPECT_EQ(config_from_manifest(m), c);
  EXPECT_NE(m.find("\"seeds\""), std::string::npos);
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  EXPECT_EQ(config_from_manifest(make_manifest(ScenarioConfig{}, "sweep-noise")), ScenarioConfig{});
  EXPECT_THROW(config_from_manifest("{\"command\": \"run\"}"), ConfigError);
  EXPECT_THROW(config_from_json("{\"runs\": \"ten\"}"), ConfigError);
  EXPECT_THROW(config_from_json("{\"bogus\": 1}"), ConfigError);
  EXPECT_THROW(config_from_json("not json"), ConfigError);
}

TEST(Config, EveryKeyIsSettable) {
  const auto keys = config_keys();
  EXPECT_EQ(keys.size(), 38u);
  const ScenarioConfig c = unusual();
  std::stringstream ss;
  write_config(ss, c);
  int lines = 0;
  for (std::string line; std::getline(ss, line);) lines += line.find('=') != std::string::npos;
  EXPECT_EQ(lines, static_cast<int>(keys.size()));
}

TEST(Config, BuildsExperimentScenario) {
  const sim::Scenario sc = build_scenario(ScenarioConfig{});
  EXPECT_EQ(sc.truth.mesh.num_vertices(), 35 * 26);
  EXPECT_EQ(sc.truth.mesh.num_elements(), 2 * 34 * 25);
  EXPECT_EQ(sc.estimator.mesh.num_vertices(), 99);
  EXPECT_EQ(sc.estimator.mesh.num_free(), 88);
  EXPECT_EQ(sc.steps, 120);
  EXPECT_EQ(sc.sample_ratio, 10);
  EXPECT_DOUBLE_EQ(sc.sample_period(), 10.0);
  EXPECT_DOUBLE_EQ(sc.estimator.system.prior_mean()[0], 5.0);
  EXPECT_DOUBLE_EQ(sc.estimator.system.process_weight().scale(), 1e2);
  EXPECT_DOUBLE_EQ(sc.estimator_options.arrival_weight.scale(), 1e3);
  EXPECT_EQ(sc.estimator_options.horizon, 5);
}

TEST(Config, LoadsTextAndManifestFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "mhmap_config_test";
  std::filesystem::create_directories(dir);
  const ScenarioConfig c = unusual();
  {
    std::ofstream(dir / "scenario.cfg") << "runs = 9\n";
    std::ofstream(dir / "manifest.json") << make_manifest(c, "run");
    std::ofstream(dir / "config.json") << config_to_json(c);
  }
  EXPECT_EQ(load_config(dir / "scenario.cfg").runs, 9);
  EXPECT_EQ(load_config(dir / "manifest.json"), c);
  EXPECT_EQ(load_config(dir / "config.json"), c);
  EXPECT_THROW(load_config(dir / "missing.cfg"), IoError);
  std::filesystem::remove_all(dir);
}
