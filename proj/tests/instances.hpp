#pragma once

// Random small estimation problems and an independent cost evaluation,
// shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "mhmap/estimator.hpp"

namespace testing_instances {

using namespace mhmap;
using namespace mhmap::mhe;

inline MatrixXd random_spd(Index n, std::mt19937_64& rng, double floor) {
  std::normal_distribution<double> nd;
  const MatrixXd G = MatrixXd::NullaryExpr(n, n, [&] { return nd(rng); });
  return G * G.transpose() + floor * MatrixXd::Identity(n, n);
}

inline VectorXd randn(Index n, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  return VectorXd::NullaryExpr(n, [&] { return nd(rng); });
}

struct Instance {
  LinearSystem sys;
  std::vector<BinarySensor> sensors;
  EstimatorState est;
  MeasurementWindow win;
};

// Window of N+1 blocks starting at t - N with random stable dynamics.
inline Instance random_instance(std::mt19937_64& rng, Index n = 3, Index N = 2, int l = 4) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  MatrixXd A = MatrixXd::Identity(n, n) * 0.8 + 0.1 * MatrixXd::NullaryExpr(n, n, [&] {
                 return u01(rng) - 0.5;
               });
  const MatrixXd B = MatrixXd::Identity(n, n);
  const VectorXd u = randn(n, rng, 0.3);
  const Weight Q(random_spd(n, rng, 0.5));
  const Weight P(random_spd(n, rng, 0.5));
  LinearSystem sys(A, B, u, Q, randn(n, rng), P);
  std::vector<BinarySensor> sensors;
  for (int i = 0; i < l; ++i)
    sensors.push_back({randn(n, rng), 0.3 * (u01(rng) - 0.5), u01(rng) - 0.5, 0.2 + u01(rng)});
  MeasurementWindow win;
  win.t = 7;
  for (Index k = 0; k <= N; ++k) {
    Reading y(l);
    for (auto& b : y) b = u01(rng) < 0.5;
    win.y.push_back(y);
    if (k < N) win.inputs.push_back(u);
  }
  EstimatorState est{win.first(), randn(n, rng), Weight(random_spd(n, rng, 0.5)), {}};
  return {sys, sensors, est, win};
}

// Independent evaluation of the window cost with dense algebra and erfc.
inline double oracle_cost(const Instance& p, const VectorXd& X) {
  const Index n = p.sys.dim(), L = p.win.length();
  const MatrixXd& A = p.sys.transition_matrix();
  const MatrixXd& B = p.sys.input_matrix();
  const MatrixXd Psi = p.est.arrival_weight.dense(n);
  const MatrixXd Q = p.sys.process_weight().dense(n);
  auto blk = [&](Index k) { return VectorXd(X.segment(k * n, n)); };
  const VectorXd e0 = blk(0) - p.est.anchor;
  double c = e0.dot(Psi * e0);
  for (Index k = 0; k + 1 < L; ++k) {
    const VectorXd w = blk(k + 1) - A * blk(k) - B * p.win.inputs[k];
    c += w.dot(Q * w);
  }
  for (Index k = 0; k < L; ++k)
    for (size_t i = 0; i < p.sensors.size(); ++i) {
      const auto& s = p.sensors[i];
      const double z = (s.threshold - s.row.dot(blk(k)) - s.offset) / std::sqrt(s.variance);
      const double q = 0.5 * std::erfc(z / std::sqrt(2.0));
      const double f = 0.5 * std::erfc(-z / std::sqrt(2.0));
      c -= p.win.y[k][i] ? std::log(q) : std::log(f);
    }
  return c;
}

}  // namespace testing_instances
