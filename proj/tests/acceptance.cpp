// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "instances.hpp"
#include "mhmap/config.hpp"
#include "mhmap/fem.hpp"
#include "mhmap/gauss_tail.hpp"
#include "mhmap/simlab.hpp"
#include "oracles.hpp"

using namespace mhmap;
using namespace testing_instances;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome log_concavity() {
  double worst = -INFINITY;
  for (double r : {1e-4, 0.25, 1.0, 16.0}) {
    const double s = std::sqrt(r);
    for (int i = 0; i < 10000; ++i) {
      const double x = -12.0 + 24.0 * i / 9999.0;
      const gauss::TailArg a(x * s, r);
      // Per unit of standardized argument, so the bound does not scale with r.
      worst = std::max({worst, gauss::d2log_q_tail(a) * r, gauss::d2log_cdf(a) * r});
    }
  }
  return {worst <= 1e-10, "max second derivative " + fmt("%.3e", worst)};
}

Outcome gradient_fd() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Instance p = random_instance(rng, 3, 2, 4);
    const VectorXd X = randn(p.sys.dim() * p.win.length(), rng);
    const VectorXd g = mh_cost_gradient(p.sys, p.sensors, p.est, p.win, X);
    const VectorXd fd = oracle::fd_gradient(
        [&](const VectorXd& v) { return oracle_cost(p, v); }, X, 1e-6);
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
  }
  return {worst < 1e-5, "max relative error " + fmt("%.3e", worst)};
}

Outcome convexity() {
  std::mt19937_64 rng(3);
  double min_eig = INFINITY, spread = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Instance p = random_instance(rng, 3, 2, 4);
    const VectorXd X = randn(p.sys.dim() * p.win.length(), rng, 2.0);
    const MatrixXd H = oracle::fd_hessian(
        [&](const VectorXd& v) { return mh_cost_gradient(p.sys, p.sensors, p.est, p.win, v); },
        X, 1e-5);
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<MatrixXd>(H).eigenvalues().minCoeff());
    VectorXd from_anchor = p.est.anchor.replicate(p.win.length(), 1);
    const auto a = solve_window(p.sys, p.sensors, p.est, p.win, from_anchor);
    const auto b = solve_window(p.sys, p.sensors, p.est, p.win, randn(X.size(), rng, 5.0));
    spread = std::max(spread, (a.trajectory - b.trajectory).cwiseAbs().maxCoeff());
  }
  return {min_eig >= -1e-8 && spread <= 1e-5,
          "min eigenvalue " + fmt("%.3e", min_eig) + ", iterate gap " + fmt("%.3e", spread)};
}

Outcome full_information() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  Instance p = random_instance(rng, 3, 2, 4);
  p.win.t = 2;
  p.est = {0, p.sys.prior_mean(), p.sys.prior_weight(), {}};
  for (int i = 0; i < 10; ++i) {
    const VectorXd X = randn(p.sys.dim() * p.win.length(), rng, 1.5);
    worst = std::max(worst, std::abs(mh_cost(p.sys, p.sensors, p.est, p.win, X) - oracle_cost(p, X)));
  }
  return {worst <= 1e-10, "max abs difference " + fmt("%.3e", worst)};
}

Outcome fem_oracles() {
  Eigen::Matrix3d ref;
  ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  double mass_err = 0.0;
  for (double area : {0.5, 1e-3, 7.0})
    mass_err = std::max(mass_err, (fem::element_mass(area) - (area / 12.0) * ref).cwiseAbs().maxCoeff() / area);
  const sim::Scenario sc = build_scenario(ScenarioConfig{});
  double row_err = 0.0, fixed_err = 0.0;
  for (const sim::FieldModel* fm : {&sc.truth, &sc.estimator}) {
    const fem::FemMatrices m = fem::assemble(fm->mesh, {fm->dirichlet_value, 0.01, fm->dt});
    const VectorXd rows =
        m.S * VectorXd::Ones(m.S.cols()) + m.S_D * VectorXd::Ones(m.S_D.cols());
    row_err = std::max(row_err, rows.cwiseAbs().maxCoeff());
    const VectorXd xs = VectorXd::Constant(fm->system.dim(), fm->dirichlet_value);
    fixed_err = std::max(fixed_err, (fm->system.step(xs) - xs).cwiseAbs().maxCoeff());
  }
  return {mass_err <= 1e-15 && row_err <= 1e-12 && fixed_err < 1e-9,
          "mass " + fmt("%.1e", mass_err) + ", row sums " + fmt("%.1e", row_err) +
              ", fixed point " + fmt("%.1e", fixed_err)};
}

Outcome quadratic_limit() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (Index N : {0, 2, 5}) {
    const Instance p = random_instance(rng, 4, N, 0);
    const Index n = p.sys.dim();
    std::vector<VectorXd> drift;
    for (const auto& u : p.win.inputs) drift.push_back(p.sys.input_matrix() * u);
    const VectorXd ref = oracle::quadratic_window_ls(p.sys.transition_matrix(), drift, p.est.anchor,
                                                     p.est.arrival_weight.dense(n),
                                                     p.sys.process_weight().dense(n));
    const auto res = solve_window(p.sys, p.sensors, p.est, p.win, VectorXd::Zero(ref.size()));
    worst = std::max(worst, (res.trajectory - ref).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, "max deviation " + fmt("%.3e", worst)};
}

ScenarioConfig desk_config() {
  ScenarioConfig c;
  c.runs = 20;
  return c;
}

double pooled_se(const sim::RunReport& a, const sim::RunReport& b) {
  return std::sqrt((a.std_rmse * a.std_rmse + b.std_rmse * b.std_rmse) /
                   static_cast<double>(a.runs.size()));
}

std::string failures_note(const std::vector<sim::SweepPoint>& pts) {
  int f = 0;
  for (const auto& p : pts) f += p.report.failed_runs();
  return f ? ", runs with solver failures: " + std::to_string(f) : "";
}

Outcome fig3() {
  const sim::Scenario sc = build_scenario(desk_config());
  const sim::RunReport rep = run_experiment(sc);
  double tail = 0.0;
  for (size_t i = rep.rmse.size() - 20; i < rep.rmse.size(); ++i) tail += rep.rmse[i];
  tail /= 20.0;
  const double first = rep.rmse.front();
  std::string d = "first " + fmt("%.4f", first) + ", final-20 mean " + fmt("%.4f", tail) +
                  ", vertices " + std::to_string(sc.truth.mesh.num_vertices()) + "/" +
                  std::to_string(sc.estimator.mesh.num_vertices());
  if (rep.failed_runs()) d += ", runs with solver failures: " + std::to_string(rep.failed_runs());
  return {tail <= 0.5 * first, d};
}

Outcome fig4() {
  ScenarioConfig c = desk_config();
  c.sensors = 20;
  c.sensor_layout = "fixed";
  const sim::Scenario sc = build_scenario(c);
  const auto pts = sweep_noise(sc, c.sweep_noise_values);
  const auto& base = pts.front().report;
  std::string d = "mean RMSE:";
  bool found = false;
  for (size_t i = 0; i < pts.size(); ++i) {
    d += " r=" + fmt("%g", pts[i].value) + ":" + fmt("%.4f", pts[i].report.mean_rmse) + "+-" +
         fmt("%.4f", pts[i].report.standard_error());
    if (i > 0 && i + 1 < pts.size() &&
        pts[i].report.mean_rmse < base.mean_rmse - pooled_se(base, pts[i].report))
      found = true;
  }
  return {found, d + failures_note(pts)};
}

Outcome fig5() {
  ScenarioConfig c = desk_config();
  const sim::Scenario sc = build_scenario(c);
  const auto pts = sweep_sensors(sc, c.sweep_sensor_values);
  std::string d = "mean RMSE:";
  bool ok = true;
  for (size_t i = 0; i < pts.size(); ++i) {
    d += " l=" + std::to_string(static_cast<int>(pts[i].value)) + ":" +
         fmt("%.4f", pts[i].report.mean_rmse);
    if (i > 0 && pts[i].report.mean_rmse >
                     pts[i - 1].report.mean_rmse + pooled_se(pts[i - 1].report, pts[i].report))
      ok = false;
  }
  return {ok, d + failures_note(pts)};
}

Outcome determinism() {
  ScenarioConfig c = desk_config();
  c.runs = 8;
  auto csv = [](const sim::Scenario& sc) {
    std::ostringstream out;
    write_rmse_csv(out, run_experiment(sc));
    return out.str();
  };
  sim::Scenario sc = build_scenario(c);
  const std::string a = csv(sc), b = csv(sc);
  sc.threads = 1;
  const std::string s = csv(sc);
  return {a == b && a == s && !a.empty(),
          std::to_string(a.size()) + " bytes, repeat " + (a == b ? "equal" : "differs") +
              ", single-threaded " + (a == s ? "equal" : "differs")};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds; 0 means none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "log-concavity grid", 1.0, log_concavity},
      {2, "gradient vs finite differences", 5.0, gradient_fd},
      {3, "convexity and init independence", 30.0, convexity},
      {4, "full-information equivalence", 0.0, full_information},
      {5, "FEM oracles", 0.0, fem_oracles},
      {6, "quadratic-limit least squares", 0.0, quadratic_limit},
      {7, "RMSE decay over time", 600.0, fig3},
      {8, "noise-aided estimation", 0.0, fig4},
      {9, "RMSE vs number of sensors", 0.0, fig5},
      {10, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.pass = false;
      o.detail += ", over time limit " + fmt("%g", c.time_limit) + " s";
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed ? 1 : 0;
}
