#include "mhmap/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include "mhmap/errors.hpp"

namespace mhmap::sim {

namespace {

enum Stream : std::uint64_t {
  kPlacement = 1,
  kThreshold = 2,
  kMeasurement = 3,
  kProcess = 4,
  kConstellation = 0xC0457E11A710ULL,
};

std::vector<fem::PointStencil> locate_all(const fem::Mesh& mesh,
                                          std::span<const fem::Point> points) {
  std::vector<fem::PointStencil> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(fem::locate(mesh, p));
  return out;
}

void evaluate_all(const FieldModel& m, std::span<const fem::PointStencil> st, const VectorXd& x,
                  std::vector<double>& out) {
  out.resize(st.size());
  for (std::size_t i = 0; i < st.size(); ++i)
    out[i] = fem::evaluate(m.mesh, st[i], x, m.dirichlet_value);
}

std::vector<SensorSite> draw_sites(const Scenario& sc, Rng& placement, Rng& thresholds) {
  auto [lo, hi] = sc.truth.mesh.bounds();
  std::uniform_real_distribution<double> ux(lo.xi, hi.xi), uy(lo.eta, hi.eta);
  std::uniform_real_distribution<double> ut(sc.threshold_low, sc.threshold_high);
  std::vector<SensorSite> sites;
  sites.reserve(sc.num_sensors);
  for (int i = 0; i < sc.num_sensors; ++i) {
    SensorSite s;
    for (int attempt = 0;; ++attempt) {
      s.position = {ux(placement), uy(placement)};
      if (fem::contains(sc.truth.mesh, s.position) && fem::contains(sc.estimator.mesh, s.position))
        break;
      if (attempt > 10000) throw PlacementError("cannot place sensor inside both meshes");
    }
    s.threshold = sc.threshold_mode == ThresholdMode::uniform ? ut(thresholds) : sc.threshold_value;
    s.variance = sc.noise_variance;
    sites.push_back(s);
  }
  return sites;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t run, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

FieldModel build_field_model(fem::Mesh mesh, const fem::BoundarySpec& spec,
                             const VectorXd& prior_mean, const Weight& prior_weight,
                             const Weight& process_weight) {
  const fem::FemMatrices fm = fem::assemble(mesh, spec);
  LinearSystem sys = fem::discretize(fm, spec, prior_mean, prior_weight, process_weight);
  return FieldModel{std::move(mesh), std::move(sys), spec.dirichlet_value, spec.dt};
}

TruthSimulator::TruthSimulator(const LinearSystem& sys, VectorXd x0,
                               double process_noise_variance, Rng rng)
    : sys_(&sys), x_(std::move(x0)), noise_sd_(0.0), rng_(std::move(rng)) {
  if (x_.size() != sys.dim()) throw ShapeError("truth simulator: initial state size mismatch");
  if (!(process_noise_variance >= 0.0))
    throw ConfigError("truth simulator: process noise variance must be >= 0");
  noise_sd_ = std::sqrt(process_noise_variance);
}

const VectorXd& TruthSimulator::step() {
  x_ = sys_->step(x_);
  if (noise_sd_ > 0.0)
    for (Index i = 0; i < x_.size(); ++i) x_[i] += noise_sd_ * normal_(rng_);
  return x_;
}

std::vector<VectorXd> simulate_truth(const LinearSystem& sys, const VectorXd& x0, long T,
                                     double process_noise_variance, std::uint64_t seed) {
  if (T < 1) throw ConfigError("simulate_truth: T must be >= 1");
  TruthSimulator sim(sys, x0, process_noise_variance, make_rng(seed, 0, kProcess));
  std::vector<VectorXd> traj;
  traj.reserve(T + 1);
  traj.push_back(x0);
  for (long t = 0; t < T; ++t) traj.push_back(sim.step());
  return traj;
}

mhe::Reading measure_binary(std::span<const double> concentration,
                            std::span<const SensorSite> sensors, Rng& rng) {
  if (concentration.size() != sensors.size())
    throw ShapeError("measure_binary: one concentration per sensor required");
  std::normal_distribution<double> normal;
  mhe::Reading y(sensors.size());
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const double eps = normal(rng);
    const double z = concentration[i] + std::sqrt(sensors[i].variance) * eps;
    y[i] = z >= sensors[i].threshold ? 1 : 0;
  }
  return y;
}

std::vector<double> rmse(const std::vector<std::vector<double>>& errors) {
  if (errors.empty() || errors.front().empty())
    throw MetricError("rmse: no error samples");
  const std::size_t T = errors.front().size();
  std::vector<double> out(T, 0.0);
  for (const auto& run : errors) {
    if (run.size() != T) throw MetricError("rmse: runs have different lengths");
    for (std::size_t t = 0; t < T; ++t) out[t] += run[t] * run[t];
  }
  for (double& v : out) v = std::sqrt(v / static_cast<double>(errors.size()));
  return out;
}

double probe_error(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size() || truth.empty())
    throw MetricError("probe_error: probe sets differ or are empty");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - estimate[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

void Scenario::validate() const {
  if (sample_ratio < 1) throw ConfigError("scenario: sample_ratio must be >= 1");
  if (steps < 1) throw ConfigError("scenario: duration must cover at least one sample");
  if (num_sensors < 0) throw ConfigError("scenario: sensor count must be >= 0");
  if (!(noise_variance >= 0.0)) throw ConfigError("scenario: noise variance must be >= 0");
  if (runs < 1) throw ConfigError("scenario: runs must be >= 1");
  if (threshold_mode == ThresholdMode::uniform && !(threshold_low < threshold_high))
    throw ConfigError("scenario: threshold interval is empty");
  if (probes.empty()) throw ConfigError("scenario: no probe points");
  for (const auto& p : probes)
    if (!fem::contains(truth.mesh, p) || !fem::contains(estimator.mesh, p))
      throw ConfigError("scenario: probe point outside a mesh");
}

std::vector<fem::Point> grid_probes(const fem::Mesh& a, const fem::Mesh& b, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ConfigError("probe grid: nx and ny must be >= 1");
  auto [lo, hi] = a.bounds();
  std::vector<fem::Point> pts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const fem::Point p{lo.xi + (hi.xi - lo.xi) * (i + 0.5) / nx,
                         lo.eta + (hi.eta - lo.eta) * (j + 0.5) / ny};
      if (fem::contains(a, p) && fem::contains(b, p)) pts.push_back(p);
    }
  return pts;
}

std::vector<SensorSite> draw_sensors(const Scenario& sc, std::uint64_t run) {
  if (sc.layout == SensorLayout::fixed) {
    Rng rng = make_rng(sc.seed, 0, kConstellation);
    return draw_sites(sc, rng, rng);
  }
  Rng placement = make_rng(sc.seed, run, kPlacement);
  Rng thresholds = make_rng(sc.seed, run, kThreshold);
  return draw_sites(sc, placement, thresholds);
}

RunRecord run_single(const Scenario& sc, std::uint64_t run) {
  const auto sites = draw_sensors(sc, run);

  std::vector<fem::Point> positions;
  std::vector<mhe::BinarySensor> sensors;
  for (const auto& s : sites) {
    positions.push_back(s.position);
    const fem::ObservationRow row = fem::observation_row(sc.estimator.mesh, s.position);
    // The estimator needs r > 0; a noiseless simulator is modelled as nearly so.
    sensors.push_back({row.row, row.offset(sc.estimator.dirichlet_value), s.threshold,
                       std::max(s.variance, 1e-12)});
  }
  const auto sensor_stencils = locate_all(sc.truth.mesh, positions);
  const auto truth_probes = locate_all(sc.truth.mesh, sc.probes);
  const auto est_probes = locate_all(sc.estimator.mesh, sc.probes);

  TruthSimulator truth(sc.truth.system,
                       VectorXd::Constant(sc.truth.mesh.num_free(), sc.truth_initial),
                       sc.truth_process_variance, make_rng(sc.seed, run, kProcess));
  Rng noise = make_rng(sc.seed, run, kMeasurement);
  mhe::MovingHorizonEstimator mhe(sc.estimator.system, std::move(sensors), sc.estimator_options);

  RunRecord rec;
  rec.errors.reserve(sc.steps);
  std::vector<std::vector<double>> truth_at_probes;
  std::vector<double> c_sensors, c_est;
  for (long k = 0; k < sc.steps; ++k) {
    if (k > 0)
      for (int s = 0; s < sc.sample_ratio; ++s) truth.step();
    evaluate_all(sc.truth, sensor_stencils, truth.state(), c_sensors);
    const mhe::Reading y = measure_binary(c_sensors, sites, noise);
    truth_at_probes.emplace_back();
    evaluate_all(sc.truth, truth_probes, truth.state(), truth_at_probes.back());

    const auto upd = mhe.update(y);
    if (upd.failed) ++rec.solver_failures;
    rec.newton_iterations += upd.diagnostics.iterations;
    evaluate_all(sc.estimator, est_probes, upd.estimate, c_est);
    rec.errors.push_back(probe_error(truth_at_probes[upd.estimate_index], c_est));
  }
  return rec;
}

double RunReport::standard_error() const {
  return runs.empty() ? 0.0 : std_rmse / std::sqrt(static_cast<double>(runs.size()));
}

int RunReport::failed_runs() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(),
                                        [](const RunRecord& r) { return r.solver_failures > 0; }));
}

RunReport run_experiment(const Scenario& sc) {
  sc.validate();
  RunReport rep;
  rep.runs.resize(sc.runs);
  parallel_for(static_cast<std::size_t>(sc.runs), sc.threads,
               [&](std::size_t j) { rep.runs[j] = run_single(sc, j); });

  std::vector<std::vector<double>> errors;
  errors.reserve(rep.runs.size());
  for (const auto& r : rep.runs) errors.push_back(r.errors);
  rep.rmse = rmse(errors);
  for (long k = 0; k < sc.steps; ++k) rep.t_seconds.push_back(k * sc.sample_period());
  rep.mean_rmse = std::accumulate(rep.rmse.begin(), rep.rmse.end(), 0.0) / rep.rmse.size();

  std::vector<double> per_run;
  for (const auto& e : errors) per_run.push_back(std::accumulate(e.begin(), e.end(), 0.0) / e.size());
  const double mean = std::accumulate(per_run.begin(), per_run.end(), 0.0) / per_run.size();
  double var = 0.0;
  for (double v : per_run) var += (v - mean) * (v - mean);
  rep.std_rmse = per_run.size() > 1 ? std::sqrt(var / (per_run.size() - 1)) : 0.0;
  return rep;
}

std::vector<SweepPoint> sweep_noise(const Scenario& sc, std::span<const double> r_values) {
  std::vector<SweepPoint> out;
  for (double r : r_values) {
    Scenario s = sc;
    s.noise_variance = r;
    SweepPoint p{r, run_experiment(s)};
    p.report.coordinate = r;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SweepPoint> sweep_sensors(const Scenario& sc, std::span<const int> l_values) {
  std::vector<SweepPoint> out;
  for (int l : l_values) {
    Scenario s = sc;
    s.num_sensors = l;
    SweepPoint p{static_cast<double>(l), run_experiment(s)};
    p.report.coordinate = l;
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_rmse_csv(std::ostream& out, const RunReport& report) {
  out << "t_seconds,rmse\n";
  for (std::size_t t = 0; t < report.rmse.size(); ++t)
    out << format_number(report.t_seconds[t]) << ',' << format_number(report.rmse[t]) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::string& coordinate,
                     std::span<const SweepPoint> points) {
  out << coordinate << ",mean_rmse,std_rmse\n";
  for (const auto& p : points)
    out << format_number(p.value) << ',' << format_number(p.report.mean_rmse) << ','
        << format_number(p.report.std_rmse) << '\n';
}

}  // namespace mhmap::sim
