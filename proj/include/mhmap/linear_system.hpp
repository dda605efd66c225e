#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <memory>

namespace mhmap {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric positive semidefinite weight W in ||v||^2_W = v' W v.
/// Either a scaled identity or a full matrix.
class Weight {
 public:
  Weight() = default;
  static Weight identity(double scale);
  explicit Weight(MatrixXd full);

  bool is_scaled_identity() const noexcept { return full_.size() == 0; }
  double scale() const noexcept { return scale_; }

  double quadratic(const VectorXd& v) const;
  VectorXd apply(const VectorXd& v) const;
  MatrixXd dense(Index n) const;
  Weight scaled(double factor) const;
  /// Throws ShapeError for a full matrix of the wrong size.
  void check_dim(Index n, const char* what) const;

 private:
  double scale_ = 0.0;
  MatrixXd full_;
};

/// x_{t+1} = A x_t + B u_t + w_t with w ~ N(0, Qw^-1) and prior
/// x_0 ~ N(prior_mean, P^-1). All weights are inverse covariances.
///
/// Two backings: explicit dense (A, B), or the implicit-Euler FEM form
/// (M + dt S) x_{t+1} = M x_t + dt u, where A = (M + dt S)^-1 M and
/// B = (M + dt S)^-1 dt are materialized only when asked for.
/// Instances are immutable and may be shared across threads.
class LinearSystem {
 public:
  LinearSystem(MatrixXd A, MatrixXd B, VectorXd u, Weight process_weight,
               VectorXd prior_mean, Weight prior_weight);

  static LinearSystem implicit_euler(const SparseMatrix& M, const SparseMatrix& S, double dt,
                                     VectorXd u, Weight process_weight, VectorXd prior_mean,
                                     Weight prior_weight);

  Index dim() const noexcept;
  Index input_dim() const noexcept;
  bool is_implicit() const noexcept;

  /// A x
  VectorXd transition(const VectorXd& x) const;
  /// B u
  VectorXd input_map(const VectorXd& u) const;
  /// A x + B u with the nominal input.
  VectorXd step(const VectorXd& x) const;
  VectorXd step(const VectorXd& x, const VectorXd& u) const;

  /// Dense A and B; computed once on first use (thread-safe) for the
  /// implicit backing.
  const MatrixXd& transition_matrix() const;
  const MatrixXd& input_matrix() const;

  const VectorXd& input() const noexcept { return u_; }
  const Weight& process_weight() const noexcept { return process_weight_; }
  const VectorXd& prior_mean() const noexcept { return prior_mean_; }
  const Weight& prior_weight() const noexcept { return prior_weight_; }

  LinearSystem with_weights(Weight process_weight, VectorXd prior_mean,
                            Weight prior_weight) const;
  LinearSystem with_input(VectorXd u) const;

  /// Relative residuals of (I + dt M^-1 S) A = I and (I + dt M^-1 S) B = dt M^-1,
  /// evaluated in the multiplied-through form (M + dt S) A - M and
  /// (M + dt S) B - dt I. Zero for the dense backing.
  double definition_residual() const;

 private:
  struct Impl;
  explicit LinearSystem(std::shared_ptr<const Impl> impl, VectorXd u, Weight qw, VectorXd x0,
                        Weight p);

  std::shared_ptr<const Impl> impl_;
  VectorXd u_;
  Weight process_weight_;
  VectorXd prior_mean_;
  Weight prior_weight_;
};

}  // namespace mhmap
