#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mhmap/estimator.hpp"
#include "mhmap/fem.hpp"
#include "mhmap/linear_system.hpp"
#include "mhmap/mesh.hpp"

namespace mhmap::sim {

using Rng = std::mt19937_64;

/// Independent generator for (seed, run, stream).
Rng make_rng(std::uint64_t seed, std::uint64_t run, std::uint64_t stream);

/// A mesh with its discretized diffusion model.
struct FieldModel {
  fem::Mesh mesh;
  LinearSystem system;
  double dirichlet_value = 0.0;
  double dt = 1.0;
};

FieldModel build_field_model(fem::Mesh mesh, const fem::BoundarySpec& spec,
                             const VectorXd& prior_mean, const Weight& prior_weight,
                             const Weight& process_weight);

/// x_{t+1} = A x_t + B u + w_t, w_t ~ N(0, variance * I).
class TruthSimulator {
 public:
  TruthSimulator(const LinearSystem& sys, VectorXd x0, double process_noise_variance,
                 Rng rng);
  const VectorXd& state() const noexcept { return x_; }
  const VectorXd& step();

 private:
  const LinearSystem* sys_;
  VectorXd x_;
  double noise_sd_;
  Rng rng_;
  std::normal_distribution<double> normal_;
};

/// States x_0..x_T (T + 1 entries). Deterministic given the seed.
std::vector<VectorXd> simulate_truth(const LinearSystem& sys, const VectorXd& x0, long T,
                                     double process_noise_variance, std::uint64_t seed);

struct SensorSite {
  fem::Point position;
  double threshold = 0.0;
  double variance = 0.0;
};

/// y_i = 1 iff c_i + sqrt(r_i) * eps_i >= tau_i, eps_i ~ N(0, 1). One normal
/// draw per sensor regardless of r_i, so different variances share noise
/// paths under a common seed. r_i = 0 thresholds the exact value.
mhe::Reading measure_binary(std::span<const double> concentration,
                            std::span<const SensorSite> sensors, Rng& rng);

/// RMSE(t) = sqrt(sum_j e_{t,j}^2 / alpha) over errors[run][t].
std::vector<double> rmse(const std::vector<std::vector<double>>& errors);

/// Sqrt of the mean squared difference over probe points.
double probe_error(std::span<const double> truth, std::span<const double> estimate);

enum class ThresholdMode { uniform, constant };
enum class SensorLayout { random, fixed };

struct Scenario {
  Scenario(FieldModel truth_model, FieldModel estimator_model)
      : truth(std::move(truth_model)), estimator(std::move(estimator_model)) {}

  FieldModel truth;
  FieldModel estimator;
  int sample_ratio = 10;  // truth steps per estimator step
  long steps = 120;       // estimator steps
  int num_sensors = 5;
  double noise_variance = 0.25;
  ThresholdMode threshold_mode = ThresholdMode::uniform;
  double threshold_low = 0.05;
  double threshold_high = 29.95;
  double threshold_value = 15.0;
  SensorLayout layout = SensorLayout::random;
  double truth_initial = 0.0;
  double truth_process_variance = 0.0;
  mhe::EstimatorOptions estimator_options;
  int runs = 100;
  std::uint64_t seed = 1;
  std::vector<fem::Point> probes;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
  double sample_period() const { return truth.dt * sample_ratio; }
};

/// Cell-centred nx-by-ny grid over the bounding box of `a`, keeping points
/// inside both meshes.
std::vector<fem::Point> grid_probes(const fem::Mesh& a, const fem::Mesh& b, int nx, int ny);

/// Sensors for run `run`: the fixed constellation (seeded by scenario seed
/// only) or a fresh random draw.
std::vector<SensorSite> draw_sensors(const Scenario& sc, std::uint64_t run);

struct RunRecord {
  std::vector<double> errors;  // ||e_{t,j}|| per estimator step
  int solver_failures = 0;
  long newton_iterations = 0;
};

struct RunReport {
  std::vector<double> t_seconds;
  std::vector<double> rmse;
  std::vector<RunRecord> runs;
  double mean_rmse = 0.0;  // time average of RMSE(t)
  double std_rmse = 0.0;   // spread across runs of the time-averaged error
  double coordinate = 0.0; // sweep value (r or l) when part of a sweep

  double standard_error() const;
  int failed_runs() const;
};

RunRecord run_single(const Scenario& sc, std::uint64_t run);
RunReport run_experiment(const Scenario& sc);

struct SweepPoint {
  double value = 0.0;
  RunReport report;
};

std::vector<SweepPoint> sweep_noise(const Scenario& sc, std::span<const double> r_values);
std::vector<SweepPoint> sweep_sensors(const Scenario& sc, std::span<const int> l_values);

void write_rmse_csv(std::ostream& out, const RunReport& report);
void write_sweep_csv(std::ostream& out, const std::string& coordinate,
                     std::span<const SweepPoint> points);

/// "%.10g" without locale dependence.
std::string format_number(double v);

}  // namespace mhmap::sim
