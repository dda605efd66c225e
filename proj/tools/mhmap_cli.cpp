// mhmap: moving-horizon MAP estimation from binary sensors on a diffusion field.
//
//   mhmap mesh           write truth/estimator meshes and estimator matrices
//   mhmap run            Monte-Carlo RMSE over time       -> rmse_time.csv
//   mhmap sweep-noise    mean RMSE per noise variance     -> sweep_noise.csv
//   mhmap sweep-sensors  mean RMSE per sensor count       -> sweep_sensors.csv
//   mhmap validate       built-in property checks

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mhmap/config.hpp"
#include "mhmap/errors.hpp"
#include "mhmap/fem.hpp"
#include "mhmap/selfcheck.hpp"
#include "mhmap/simlab.hpp"

namespace fs = std::filesystem;
using namespace mhmap;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> runs;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Scenario config file (key = value)");
  cmd->add_option("--seed", c.seed, "Base RNG seed");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--runs", c.runs, "Monte-Carlo runs");
  cmd->add_option("--set", c.overrides, "Override a config key, KEY=VALUE (repeatable)");
  cmd->add_flag("--quiet", c.quiet, "Suppress progress output");
}

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg = c.config_path.empty() ? ScenarioConfig{} : load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output_dir = *c.out;
  if (c.runs) cfg.runs = *c.runs;
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const ScenarioConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

void write_manifest(const fs::path& dir, const ScenarioConfig& cfg, const char* command) {
  auto f = open_out(dir / "manifest.json");
  f << make_manifest(cfg, command);
}

int report_failures(const std::vector<const sim::RunReport*>& reports, bool quiet) {
  int failed = 0, total = 0;
  for (const auto* r : reports) {
    failed += r->failed_runs();
    total += static_cast<int>(r->runs.size());
  }
  if (failed > 0) {
    std::cerr << "mhmap: " << failed << " of " << total
              << " runs had windows that hit the solver iteration cap or stalled\n";
    return 3;
  }
  if (!quiet) std::cerr << "mhmap: " << total << " runs completed without solver failures\n";
  return 0;
}

int cmd_mesh(const ScenarioConfig& cfg, bool quiet) {
  const fs::path dir = prepare_out(cfg);
  const sim::Scenario sc = build_scenario(cfg);
  fem::save_mesh(dir / "truth_mesh.txt", sc.truth.mesh);
  fem::save_mesh(dir / "estimator_mesh.txt", sc.estimator.mesh);
  const fem::FemMatrices fm = fem::assemble(
      sc.estimator.mesh, {cfg.dirichlet_value, cfg.diffusivity, cfg.dt * cfg.sample_ratio});
  fem::save_coo(dir / "estimator_M.coo", fm.M);
  fem::save_coo(dir / "estimator_S.coo", fm.S);
  fem::save_coo(dir / "estimator_SD.coo", fm.S_D);
  write_manifest(dir, cfg, "mesh");
  if (!quiet)
    std::cerr << "truth mesh: " << sc.truth.mesh.num_vertices() << " vertices ("
              << sc.truth.mesh.num_free() << " free), " << sc.truth.mesh.num_elements()
              << " elements\nestimator mesh: " << sc.estimator.mesh.num_vertices()
              << " vertices (" << sc.estimator.mesh.num_free() << " free), "
              << sc.estimator.mesh.num_elements() << " elements\n";
  return 0;
}

int cmd_run(const ScenarioConfig& cfg, bool quiet) {
  const fs::path dir = prepare_out(cfg);
  const sim::Scenario sc = build_scenario(cfg);
  const sim::RunReport rep = sim::run_experiment(sc);
  {
    auto f = open_out(dir / "rmse_time.csv");
    sim::write_rmse_csv(f, rep);
  }
  write_manifest(dir, cfg, "run");
  if (!quiet)
    std::cerr << "rmse_time.csv: " << rep.rmse.size() << " rows, mean RMSE "
              << sim::format_number(rep.mean_rmse) << '\n';
  return report_failures({&rep}, quiet);
}

template <class Values, class Sweep>
int cmd_sweep(const ScenarioConfig& cfg, bool quiet, const Values& values, Sweep sweep,
              const char* file, const char* coordinate, const char* command) {
  const fs::path dir = prepare_out(cfg);
  const sim::Scenario sc = build_scenario(cfg);
  const auto points = sweep(sc, values);
  {
    auto f = open_out(dir / file);
    sim::write_sweep_csv(f, coordinate, points);
  }
  write_manifest(dir, cfg, command);
  std::vector<const sim::RunReport*> reps;
  for (const auto& p : points) {
    reps.push_back(&p.report);
    if (!quiet)
      std::cerr << coordinate << " = " << sim::format_number(p.value) << ": mean RMSE "
                << sim::format_number(p.report.mean_rmse) << " (std "
                << sim::format_number(p.report.std_rmse) << ")\n";
  }
  return report_failures(reps, quiet);
}

int cmd_validate(const ScenarioConfig& cfg, bool quiet) {
  const auto checks = selfcheck::run_all(cfg);
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    if (!quiet || !c.passed)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-horizon MAP state estimation with binary sensors"};
  app.require_subcommand(1);
  Common common;
  auto* mesh = app.add_subcommand("mesh", "Write truth and estimator meshes");
  auto* run = app.add_subcommand("run", "Monte-Carlo RMSE over time");
  auto* sn = app.add_subcommand("sweep-noise", "Mean RMSE per measurement noise variance");
  auto* ss = app.add_subcommand("sweep-sensors", "Mean RMSE per number of sensors");
  auto* val = app.add_subcommand("validate", "Run built-in property checks");
  for (auto* c : {mesh, run, sn, ss, val}) add_common(c, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const ScenarioConfig cfg = resolve(common);
    if (mesh->parsed()) return cmd_mesh(cfg, common.quiet);
    if (run->parsed()) return cmd_run(cfg, common.quiet);
    if (sn->parsed())
      return cmd_sweep(cfg, common.quiet, cfg.sweep_noise_values,
                       [](const sim::Scenario& s, const std::vector<double>& v) {
                         return sim::sweep_noise(s, v);
                       },
                       "sweep_noise.csv", "r", "sweep-noise");
    if (ss->parsed())
      return cmd_sweep(cfg, common.quiet, cfg.sweep_sensor_values,
                       [](const sim::Scenario& s, const std::vector<int>& v) {
                         return sim::sweep_sensors(s, v);
                       },
                       "sweep_sensors.csv", "l", "sweep-sensors");
    if (val->parsed()) return cmd_validate(cfg, common.quiet);
  } catch (const ConfigError& e) {
    std::cerr << "mhmap: config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "mhmap: I/O error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "mhmap: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
