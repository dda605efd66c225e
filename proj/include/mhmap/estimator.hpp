#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mhmap/linear_system.hpp"

namespace mhmap::mhe {

/// Threshold sensor y = 1 iff row . x + offset + v >= threshold, v ~ N(0, variance).
struct BinarySensor {
  VectorXd row;
  double offset = 0.0;
  double threshold = 0.0;
  double variance = 1.0;

  void validate(Index n) const;
};

using Reading = std::vector<std::uint8_t>;

/// Binary readings y_{first..t} and inputs u_{first..t-1}, oldest first.
struct MeasurementWindow {
  long t = 0;
  std::vector<Reading> y;
  std::vector<VectorXd> inputs;

  Index length() const noexcept { return static_cast<Index>(y.size()); }
  long first() const noexcept { return t - static_cast<long>(y.size()) + 1; }
  void validate(Index num_sensors, Index input_dim) const;
};

/// Arrival-cost anchor and weight plus the stacked trajectory estimate
/// x_{first}, ..., x_{first + blocks - 1}.
struct EstimatorState {
  long first = 0;
  VectorXd anchor;
  Weight arrival_weight;
  VectorXd trajectory;
};

/// ||x_first - anchor||^2_Psi + sum_k ||x_{k+1} - A x_k - B u_k||^2_Q
///   - sum_k sum_i [y ln F + (1 - y) ln Phi](tau_i - C_i x_k - offset_i)
double mh_cost(const LinearSystem& sys, std::span<const BinarySensor> sensors,
               const EstimatorState& est, const MeasurementWindow& win, const VectorXd& X);

VectorXd mh_cost_gradient(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                          const EstimatorState& est, const MeasurementWindow& win,
                          const VectorXd& X);

/// Dense Hessian of mh_cost; intended for small problems and diagnostics.
MatrixXd mh_cost_hessian(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                         const EstimatorState& est, const MeasurementWindow& win,
                         const VectorXd& X);

struct SolverOptions {
  double tolerance = 1e-7;  // ||grad|| <= tolerance * (1 + |cost|)
  int max_iterations = 500;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  bool record_history = false;
};

struct SolveResult {
  VectorXd trajectory;
  double cost = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int gradient_steps = 0;  // iterations that fell back to steepest descent
  bool converged = false;
  // Accepted costs, when recorded. Non-increasing up to 1e-11 * (1 + |cost|),
  // the band in which Newton steps are judged by gradient norm instead.
  std::vector<double> cost_history;
};

/// Raised when the iteration cap is hit or the line search stalls;
/// carries the best iterate found.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, SolveResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const SolveResult& best() const noexcept { return best_; }

 private:
  SolveResult best_;
};

/// Damped Newton with Armijo backtracking on the window cost.
SolveResult solve_window(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                         const EstimatorState& est, const MeasurementWindow& win,
                         const VectorXd& init, const SolverOptions& options = {});

/// State for the next window given the solution of the current one and the
/// input applied over the coming interval. While the window is shorter than
/// max_blocks it grows and keeps its anchor; once full it slides by one and the
/// anchor becomes the solution's second block (or the one-step prediction
/// when max_blocks == 1). The trajectory is the warm start for the next solve.
EstimatorState advance(const EstimatorState& est, const VectorXd& solved,
                       const LinearSystem& sys, const VectorXd& next_input, Index max_blocks,
                       const Weight& arrival_weight);

struct EstimatorOptions {
  Index horizon = 5;  // N; windows hold N + 1 states
  Weight arrival_weight = Weight::identity(1e3);
  SolverOptions solver;
};

/// Runs the window recursion from t = 0. Until the window is full the
/// problem is the full-information one (anchor x0, weight P).
class MovingHorizonEstimator {
 public:
  struct Update {
    long t = 0;
    long estimate_index = 0;  // first index of the window, max(0, t - N)
    VectorXd estimate;        // x_{estimate_index | t}
    SolveResult diagnostics;
    bool failed = false;
  };

  MovingHorizonEstimator(LinearSystem sys, std::vector<BinarySensor> sensors,
                         EstimatorOptions options);

  /// Feeds y_t; for t > 0 the nominal system input is assumed over (t-1, t].
  Update update(const Reading& y);
  Update update(const Reading& y, const VectorXd& u_prev);

  const EstimatorState& state() const noexcept { return state_; }
  const MeasurementWindow& window() const noexcept { return window_; }
  const LinearSystem& system() const noexcept { return sys_; }
  long steps() const noexcept { return steps_; }
  const VectorXd& last_solution() const noexcept { return last_solution_; }

 private:
  LinearSystem sys_;
  std::vector<BinarySensor> sensors_;
  EstimatorOptions options_;
  EstimatorState state_;
  MeasurementWindow window_;
  VectorXd last_solution_;
  long steps_ = 0;
};

}  // namespace mhmap::mhe
