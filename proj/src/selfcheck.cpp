#include "mhmap/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "mhmap/estimator.hpp"
#include "mhmap/fem.hpp"
#include "mhmap/gauss_tail.hpp"

namespace mhmap::selfcheck {

namespace {

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Check log_concavity() {
  double worst = -std::numeric_limits<double>::infinity();
  constexpr int kPoints = 10000;
  for (int i = 0; i < kPoints; ++i) {
    const gauss::TailArg a(-12.0 + 24.0 * i / (kPoints - 1), 1.0);
    worst = std::max({worst, gauss::d2log_q_tail(a), gauss::d2log_cdf(a)});
  }
  return {"log-concavity (d2 ln F, d2 ln Phi <= 1e-10 on [-12, 12])", worst <= 1e-10,
          fmt("max second derivative %.3e", worst)};
}

Check complement() {
  double worst = 0.0;
  for (int i = 0; i <= 1600; ++i) {
    const gauss::TailArg a(-8.0 + 0.01 * i, 1.0);
    worst = std::max(worst, std::abs(gauss::q_tail(a) + gauss::cdf(a) - 1.0));
  }
  return {"complement identity (F + Phi = 1 within 1e-15)", worst <= 1e-15,
          fmt("max deviation %.3e", worst)};
}

Check gradient_fd() {
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  const Index n = 3, N = 2, l = 4;
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    MatrixXd A = MatrixXd::NullaryExpr(n, n, [&] { return 0.4 * normal(rng); });
    MatrixXd B = MatrixXd::Identity(n, n);
    VectorXd u = VectorXd::NullaryExpr(n, [&] { return normal(rng); });
    LinearSystem sys(A, B, u, Weight::identity(unif(rng)), VectorXd::Zero(n),
                     Weight::identity(unif(rng)));
    std::vector<mhe::BinarySensor> sensors;
    for (Index i = 0; i < l; ++i)
      sensors.push_back({VectorXd::NullaryExpr(n, [&] { return normal(rng); }), 0.1 * normal(rng),
                         normal(rng), unif(rng)});
    mhe::MeasurementWindow win;
    win.t = N;
    for (Index k = 0; k <= N; ++k) {
      mhe::Reading y(l);
      for (auto& b : y) b = rng() % 2;
      win.y.push_back(y);
      if (k < N) win.inputs.push_back(u);
    }
    mhe::EstimatorState est{0, VectorXd::NullaryExpr(n, [&] { return normal(rng); }),
                            Weight::identity(unif(rng)), VectorXd()};
    const VectorXd X = VectorXd::NullaryExpr((N + 1) * n, [&] { return normal(rng); });
    const VectorXd g = mhe::mh_cost_gradient(sys, sensors, est, win, X);
    VectorXd fd(X.size());
    const double h = 1e-6;
    for (Index i = 0; i < X.size(); ++i) {
      VectorXd xp = X, xm = X;
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (mhe::mh_cost(sys, sensors, est, win, xp) - mhe::mh_cost(sys, sensors, est, win, xm)) /
              (2 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
  }
  return {"gradient vs central differences (relative error < 1e-5)", worst < 1e-5,
          fmt("max relative error %.3e", worst)};
}

Check fem_row_sums(const fem::FemMatrices& fm) {
  const VectorXd ones_free = VectorXd::Ones(fm.S.cols());
  const VectorXd ones_d = VectorXd::Ones(fm.S_D.cols());
  const double worst = (fm.S * ones_free + fm.S_D * ones_d).cwiseAbs().maxCoeff();
  return {"stiffness row sums of [S | S_D] vanish (1e-12)", worst <= 1e-12,
          fmt("max |row sum| %.3e", worst)};
}

Check steady_state(const ScenarioConfig& cfg) {
  const fem::Mesh mesh =
      cfg.estimator_mesh_file.empty()
          ? fem::generate_structured_mesh(cfg.domain_width, cfg.domain_height, cfg.estimator_nx,
                                          cfg.estimator_ny, fem::parse_edge(cfg.dirichlet_edge))
          : fem::load_mesh(cfg.estimator_mesh_file);
  const fem::BoundarySpec spec{cfg.dirichlet_value, cfg.diffusivity, cfg.dt * cfg.sample_ratio};
  const fem::FemMatrices fm = fem::assemble(mesh, spec);
  const int n = mesh.num_free();
  const LinearSystem sys = fem::discretize(fm, spec, VectorXd::Zero(n), Weight::identity(1.0),
                                           Weight::identity(1.0));
  const VectorXd xs = VectorXd::Constant(n, cfg.dirichlet_value);
  const double res = (sys.step(xs) - xs).cwiseAbs().maxCoeff();
  return {"constant Dirichlet field is a fixed point (residual < 1e-9)", res < 1e-9,
          fmt("max residual %.3e", res)};
}

}  // namespace

std::vector<Check> run_all(const ScenarioConfig& cfg) {
  std::vector<Check> out;
  out.push_back(log_concavity());
  out.push_back(complement());
  out.push_back(gradient_fd());
  const fem::Mesh mesh = fem::generate_structured_mesh(cfg.domain_width, cfg.domain_height,
                                                       cfg.estimator_nx, cfg.estimator_ny,
                                                       fem::parse_edge(cfg.dirichlet_edge));
  out.push_back(fem_row_sums(
      fem::assemble(mesh, {cfg.dirichlet_value, cfg.diffusivity, cfg.dt})));
  out.push_back(steady_state(cfg));
  return out;
}

}  // namespace mhmap::selfcheck
