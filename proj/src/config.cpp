#include "mhmap/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <variant>

#include "json.hpp"
#include "mhmap/errors.hpp"

namespace mhmap {

namespace {

using Json = nlohmann::ordered_json;

using Member = std::variant<double ScenarioConfig::*, int ScenarioConfig::*,
                            std::uint64_t ScenarioConfig::*, std::string ScenarioConfig::*,
                            std::vector<double> ScenarioConfig::*,
                            std::vector<int> ScenarioConfig::*>;

struct Field {
  const char* key;
  Member member;
};

using C = ScenarioConfig;
const std::array kFields{
    Field{"domain_width", &C::domain_width},
    Field{"domain_height", &C::domain_height},
    Field{"dirichlet_edge", &C::dirichlet_edge},
    Field{"truth_nx", &C::truth_nx},
    Field{"truth_ny", &C::truth_ny},
    Field{"estimator_nx", &C::estimator_nx},
    Field{"estimator_ny", &C::estimator_ny},
    Field{"truth_mesh_file", &C::truth_mesh_file},
    Field{"estimator_mesh_file", &C::estimator_mesh_file},
    Field{"diffusivity", &C::diffusivity},
    Field{"dirichlet_value", &C::dirichlet_value},
    Field{"dt", &C::dt},
    Field{"sample_ratio", &C::sample_ratio},
    Field{"duration", &C::duration},
    Field{"truth_initial", &C::truth_initial},
    Field{"truth_process_variance", &C::truth_process_variance},
    Field{"horizon", &C::horizon},
    Field{"arrival_weight", &C::arrival_weight},
    Field{"process_weight", &C::process_weight},
    Field{"prior_weight", &C::prior_weight},
    Field{"prior_mean", &C::prior_mean},
    Field{"solver_tolerance", &C::solver_tolerance},
    Field{"solver_max_iterations", &C::solver_max_iterations},
    Field{"sensors", &C::sensors},
    Field{"noise_variance", &C::noise_variance},
    Field{"threshold_mode", &C::threshold_mode},
    Field{"threshold_low", &C::threshold_low},
    Field{"threshold_high", &C::threshold_high},
    Field{"threshold_value", &C::threshold_value},
    Field{"sensor_layout", &C::sensor_layout},
    Field{"probe_nx", &C::probe_nx},
    Field{"probe_ny", &C::probe_ny},
    Field{"runs", &C::runs},
    Field{"seed", &C::seed},
    Field{"threads", &C::threads},
    Field{"output_dir", &C::output_dir},
    Field{"sweep_noise_values", &C::sweep_noise_values},
    Field{"sweep_sensor_values", &C::sweep_sensor_values},
};

const Field* find_field(std::string_view key) {
  for (const auto& f : kFields)
    if (key == f.key) return &f;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                    std::string(value) + "' as " + expected);
}

template <class T>
T parse_number(std::string_view key, std::string_view text, const char* expected) {
  text = trim(text);
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) bad_value(key, text, expected);
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) bad_value(key, text, expected);
  return v;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view text, const char* expected) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_number<T>(key, text.substr(start, comma - start), expected));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string double_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest text that reads back exactly.
  for (int prec = 1; prec < 17; ++prec) {
    char b2[40];
    std::snprintf(b2, sizeof b2, "%.*g", prec, v);
    if (std::strtod(b2, nullptr) == v) return b2;
  }
  return buf;
}

template <class T>
std::string list_text(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += double_text(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : kFields) keys.emplace_back(f.key);
  return keys;
}

void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key: " + std::string(key));
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, double>)
          cfg.*member = parse_number<double>(key, value, "a real number");
        else if constexpr (std::is_same_v<T, int>)
          cfg.*member = parse_number<int>(key, value, "an integer");
        else if constexpr (std::is_same_v<T, std::uint64_t>)
          cfg.*member = parse_number<std::uint64_t>(key, value, "a non-negative integer");
        else if constexpr (std::is_same_v<T, std::string>)
          cfg.*member = std::string(trim(value));
        else if constexpr (std::is_same_v<T, std::vector<double>>)
          cfg.*member = parse_list<double>(key, value, "a comma-separated list of reals");
        else
          cfg.*member = parse_list<int>(key, value, "a comma-separated list of integers");
      },
      f->member);
}

ScenarioConfig parse_config(std::istream& in, ScenarioConfig base) {
  std::vector<std::string> unknown;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string_view key = trim(s.substr(0, eq));
    if (!find_field(key)) {
      unknown.emplace_back(key);
      continue;
    }
    set_config_value(base, key, s.substr(eq + 1));
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  base.validate();
  return base;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  if (path.extension() == ".json") {
    std::ostringstream text;
    text << in.rdbuf();
    const std::string s = text.str();
    // A run manifest or a bare config object.
    return s.find("\"config\"") != std::string::npos ? config_from_manifest(s)
                                                      : config_from_json(s);
  }
  return parse_config(in);
}

void write_config(std::ostream& out, const ScenarioConfig& cfg) {
  for (const auto& f : kFields) {
    out << f.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, double>)
            out << double_text(cfg.*member);
          else if constexpr (std::is_same_v<T, std::string>)
            out << cfg.*member;
          else if constexpr (std::is_same_v<T, std::vector<double>> ||
                             std::is_same_v<T, std::vector<int>>)
            out << list_text(cfg.*member);
          else
            out << cfg.*member;
        },
        f.member);
    out << '\n';
  }
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(domain_width > 0 && domain_height > 0, "domain dimensions must be > 0");
  fem::parse_edge(dirichlet_edge);
  require(truth_nx >= 1 && truth_ny >= 1 && estimator_nx >= 1 && estimator_ny >= 1,
          "grid resolutions must be >= 1");
  require(diffusivity > 0, "diffusivity must be > 0");
  require(dt > 0, "dt must be > 0");
  require(sample_ratio >= 1, "sample_ratio must be >= 1");
  require(duration > 0, "duration must be > 0");
  require(truth_process_variance >= 0, "truth_process_variance must be >= 0");
  require(horizon >= 0, "horizon must be >= 0");
  require(arrival_weight >= 0 && process_weight >= 0 && prior_weight >= 0,
          "weights must be >= 0");
  require(solver_tolerance > 0, "solver_tolerance must be > 0");
  require(solver_max_iterations >= 1, "solver_max_iterations must be >= 1");
  require(sensors >= 0, "sensors must be >= 0");
  require(noise_variance >= 0, "noise_variance must be >= 0");
  require(threshold_mode == "uniform" || threshold_mode == "constant",
          "threshold_mode must be 'uniform' or 'constant'");
  require(threshold_mode != "uniform" || threshold_low < threshold_high,
          "threshold_low must be < threshold_high");
  require(sensor_layout == "random" || sensor_layout == "fixed",
          "sensor_layout must be 'random' or 'fixed'");
  require(probe_nx >= 1 && probe_ny >= 1, "probe grid must be >= 1x1");
  require(runs >= 1, "runs must be >= 1");
  require(threads >= 0, "threads must be >= 0");
  for (double r : sweep_noise_values) require(r >= 0, "sweep noise values must be >= 0");
  for (int l : sweep_sensor_values) require(l >= 0, "sweep sensor counts must be >= 0");
  require(estimator_steps() >= 1, "duration shorter than one estimator sample");
}

long ScenarioConfig::estimator_steps() const {
  return std::lround(duration / (dt * sample_ratio));
}

std::string config_to_json(const ScenarioConfig& cfg, int indent) {
  Json j = Json::object();
  for (const auto& f : kFields) std::visit([&](auto m) { j[f.key] = cfg.*m; }, f.member);
  return j.dump(indent);
}

namespace {

ScenarioConfig config_from_object(const Json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  ScenarioConfig cfg;
  std::vector<std::string> unknown;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const Field* f = find_field(it.key());
    if (!f) {
      unknown.push_back(it.key());
      continue;
    }
    try {
      std::visit(
          [&](auto m) {
            using T = std::remove_cvref_t<decltype(cfg.*m)>;
            cfg.*m = it.value().template get<T>();
          },
          f->member);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config JSON key '" + it.key() + "': " + e.what());
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

ScenarioConfig config_from_json(std::string_view text) {
  try {
    return config_from_object(Json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
}

std::string make_manifest(const ScenarioConfig& cfg, std::string_view command) {
  Json m = Json::object();
  m["command"] = std::string(command);
  m["config"] = Json::parse(config_to_json(cfg, -1));
  Json seeds = Json::object();
  seeds["base_seed"] = cfg.seed;
  seeds["derivation"] = "seed_seq(base_seed, run_index, stream)";
  seeds["runs"] = cfg.runs;
  m["seeds"] = seeds;
  return m.dump(2) + "\n";
}

ScenarioConfig config_from_manifest(std::string_view manifest) {
  try {
    const Json m = Json::parse(manifest);
    if (!m.contains("config")) throw ConfigError("manifest has no 'config' member");
    return config_from_object(m.at("config"));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("manifest JSON: ") + e.what());
  }
}

sim::Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const fem::Edge edge = fem::parse_edge(cfg.dirichlet_edge);
  auto make_mesh = [&](const std::string& file, int nx, int ny) {
    return file.empty()
               ? fem::generate_structured_mesh(cfg.domain_width, cfg.domain_height, nx, ny, edge)
               : fem::load_mesh(file);
  };
  fem::Mesh truth_mesh = make_mesh(cfg.truth_mesh_file, cfg.truth_nx, cfg.truth_ny);
  fem::Mesh est_mesh = make_mesh(cfg.estimator_mesh_file, cfg.estimator_nx, cfg.estimator_ny);

  fem::BoundarySpec truth_spec{cfg.dirichlet_value, cfg.diffusivity, cfg.dt};
  fem::BoundarySpec est_spec{cfg.dirichlet_value, cfg.diffusivity, cfg.dt * cfg.sample_ratio};

  const int n_truth = truth_mesh.num_free();
  const int n_est = est_mesh.num_free();
  sim::FieldModel truth = sim::build_field_model(std::move(truth_mesh), truth_spec,
                                                 VectorXd::Constant(n_truth, cfg.truth_initial),
                                                 Weight::identity(0.0), Weight::identity(0.0));
  sim::FieldModel est = sim::build_field_model(
      std::move(est_mesh), est_spec, VectorXd::Constant(n_est, cfg.prior_mean),
      Weight::identity(cfg.prior_weight), Weight::identity(cfg.process_weight));

  sim::Scenario sc(std::move(truth), std::move(est));
  sc.sample_ratio = cfg.sample_ratio;
  sc.steps = cfg.estimator_steps();
  sc.num_sensors = cfg.sensors;
  sc.noise_variance = cfg.noise_variance;
  sc.threshold_mode =
      cfg.threshold_mode == "uniform" ? sim::ThresholdMode::uniform : sim::ThresholdMode::constant;
  sc.threshold_low = cfg.threshold_low;
  sc.threshold_high = cfg.threshold_high;
  sc.threshold_value = cfg.threshold_value;
  sc.layout = cfg.sensor_layout == "fixed" ? sim::SensorLayout::fixed : sim::SensorLayout::random;
  sc.truth_initial = cfg.truth_initial;
  sc.truth_process_variance = cfg.truth_process_variance;
  sc.estimator_options.horizon = cfg.horizon;
  sc.estimator_options.arrival_weight = Weight::identity(cfg.arrival_weight);
  sc.estimator_options.solver.tolerance = cfg.solver_tolerance;
  sc.estimator_options.solver.max_iterations = cfg.solver_max_iterations;
  sc.runs = cfg.runs;
  sc.seed = cfg.seed;
  sc.threads = static_cast<unsigned>(cfg.threads);
  sc.probes = sim::grid_probes(sc.truth.mesh, sc.estimator.mesh, cfg.probe_nx, cfg.probe_ny);
  sc.validate();
  return sc;
}

}  // namespace mhmap
