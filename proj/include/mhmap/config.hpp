#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mhmap/simlab.hpp"

namespace mhmap {

/// Every experiment constant. Defaults reproduce the diffusion case study:
/// 7.44 m^2 domain with the Dirichlet edge at the bottom, ~900-vertex truth
/// grid at dt = 1 s, ~100-node estimator grid at 10 s.
struct ScenarioConfig {
  // Geometry and meshes.
  double domain_width = 3.1;
  double domain_height = 2.4;
  std::string dirichlet_edge = "bottom";
  int truth_nx = 34;
  int truth_ny = 25;
  int estimator_nx = 10;
  int estimator_ny = 8;
  std::string truth_mesh_file;
  std::string estimator_mesh_file;

  // Physics.
  double diffusivity = 0.01;
  double dirichlet_value = 30.0;
  double dt = 1.0;
  int sample_ratio = 10;
  double duration = 1200.0;
  double truth_initial = 0.0;
  double truth_process_variance = 0.0;

  // Estimator.
  int horizon = 5;
  double arrival_weight = 1e3;
  double process_weight = 1e2;
  double prior_weight = 1e3;
  double prior_mean = 5.0;
  double solver_tolerance = 1e-7;
  int solver_max_iterations = 500;

  // Sensors.
  int sensors = 5;
  double noise_variance = 0.25;
  std::string threshold_mode = "uniform";
  double threshold_low = 0.05;
  double threshold_high = 29.95;
  double threshold_value = 15.0;
  std::string sensor_layout = "random";

  // Evaluation.
  int probe_nx = 19;
  int probe_ny = 16;
  int runs = 100;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string output_dir = "out";
  std::vector<double> sweep_noise_values{1e-4, 1e-2, 0.25, 1.0, 4.0, 16.0};
  std::vector<int> sweep_sensor_values{5, 20, 100};

  bool operator==(const ScenarioConfig&) const = default;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
  long estimator_steps() const;
};

/// Sets one key from its text form; throws ConfigError for unknown keys or
/// unparsable values.
void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view value);
std::vector<std::string> config_keys();

/// `key = value` lines, `#` comments. All unknown keys are reported together.
ScenarioConfig parse_config(std::istream& in, ScenarioConfig base = {});
/// Text format, or JSON (a manifest or a config object) for *.json paths.
ScenarioConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ScenarioConfig& cfg);

/// JSON object with one member per key.
std::string config_to_json(const ScenarioConfig& cfg, int indent = 2);
ScenarioConfig config_from_json(std::string_view json);

/// Run manifest: {"command": ..., "config": {...}, "seeds": {...}}.
std::string make_manifest(const ScenarioConfig& cfg, std::string_view command);
ScenarioConfig config_from_manifest(std::string_view manifest);

sim::Scenario build_scenario(const ScenarioConfig& cfg);

}  // namespace mhmap
