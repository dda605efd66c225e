#include "mhmap/linear_system.hpp"

#include <Eigen/SparseCholesky>
#include <mutex>
#include <string>

#include "mhmap/errors.hpp"

namespace mhmap {

Weight Weight::identity(double scale) {
  if (!(scale >= 0.0)) throw ConfigError("weight scale must be >= 0");
  Weight w;
  w.scale_ = scale;
  return w;
}

Weight::Weight(MatrixXd full) : scale_(1.0), full_(std::move(full)) {
  if (full_.rows() != full_.cols() || full_.size() == 0)
    throw ShapeError("weight matrix must be square and non-empty");
  if (!full_.isApprox(full_.transpose(), 1e-12))
    throw ShapeError("weight matrix must be symmetric");
}

double Weight::quadratic(const VectorXd& v) const {
  if (is_scaled_identity()) return scale_ * v.squaredNorm();
  return v.dot(full_ * v);
}

VectorXd Weight::apply(const VectorXd& v) const {
  if (is_scaled_identity()) return scale_ * v;
  return full_ * v;
}

MatrixXd Weight::dense(Index n) const {
  if (is_scaled_identity()) return scale_ * MatrixXd::Identity(n, n);
  check_dim(n, "weight");
  return full_;
}

Weight Weight::scaled(double factor) const {
  Weight w = *this;
  if (is_scaled_identity())
    w.scale_ *= factor;
  else
    w.full_ *= factor;
  return w;
}

void Weight::check_dim(Index n, const char* what) const {
  if (!is_scaled_identity() && full_.rows() != n)
    throw ShapeError(std::string(what) + ": weight matrix is " +
                     std::to_string(full_.rows()) + "x" + std::to_string(full_.cols()) +
                     ", expected " + std::to_string(n));
}

struct LinearSystem::Impl {
  Index n = 0;
  Index m = 0;
  // Dense backing.
  MatrixXd A;
  MatrixXd B;
  // Implicit backing.
  bool implicit = false;
  SparseMatrix M;
  SparseMatrix S;
  double dt = 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> factor;

  mutable std::once_flag dense_once;
  mutable MatrixXd dense_A;
  mutable MatrixXd dense_B;

  void materialize() const {
    std::call_once(dense_once, [this] {
      if (!implicit) return;
      dense_A = factor.solve(MatrixXd(M));
      dense_B = factor.solve(MatrixXd::Identity(n, n)) * dt;
    });
  }
};

LinearSystem::LinearSystem(std::shared_ptr<const Impl> impl, VectorXd u, Weight qw, VectorXd x0,
                           Weight p)
    : impl_(std::move(impl)),
      u_(std::move(u)),
      process_weight_(std::move(qw)),
      prior_mean_(std::move(x0)),
      prior_weight_(std::move(p)) {
  const Index n = impl_->n;
  if (u_.size() != impl_->m) throw ShapeError("linear system: input size mismatch");
  if (prior_mean_.size() != n) throw ShapeError("linear system: prior mean size mismatch");
  process_weight_.check_dim(n, "process weight");
  prior_weight_.check_dim(n, "prior weight");
}

LinearSystem::LinearSystem(MatrixXd A, MatrixXd B, VectorXd u, Weight process_weight,
                           VectorXd prior_mean, Weight prior_weight)
    : LinearSystem(
          [&] {
            if (A.rows() != A.cols()) throw ShapeError("linear system: A must be square");
            if (B.rows() != A.rows()) throw ShapeError("linear system: B row count mismatch");
            auto impl = std::make_shared<Impl>();
            impl->n = A.rows();
            impl->m = B.cols();
            impl->A = std::move(A);
            impl->B = std::move(B);
            return std::shared_ptr<const Impl>(std::move(impl));
          }(),
          std::move(u), std::move(process_weight), std::move(prior_mean),
          std::move(prior_weight)) {}

LinearSystem LinearSystem::implicit_euler(const SparseMatrix& M, const SparseMatrix& S,
                                          double dt, VectorXd u, Weight process_weight,
                                          VectorXd prior_mean, Weight prior_weight) {
  if (M.rows() != M.cols() || S.rows() != S.cols() || M.rows() != S.rows())
    throw ShapeError("implicit Euler: M and S must be square and equal in size");
  if (!(dt > 0.0)) throw ConfigError("implicit Euler: dt must be > 0");
  auto impl = std::make_shared<Impl>();
  impl->n = M.rows();
  impl->m = M.rows();
  impl->implicit = true;
  impl->M = M;
  impl->S = S;
  impl->dt = dt;
  SparseMatrix K = M + dt * S;
  impl->factor.compute(K);
  if (impl->factor.info() != Eigen::Success)
    throw NumericError("implicit Euler: M + dt S is not positive definite");
  return LinearSystem(std::move(impl), std::move(u), std::move(process_weight),
                      std::move(prior_mean), std::move(prior_weight));
}

Index LinearSystem::dim() const noexcept { return impl_->n; }
Index LinearSystem::input_dim() const noexcept { return impl_->m; }
bool LinearSystem::is_implicit() const noexcept { return impl_->implicit; }

VectorXd LinearSystem::transition(const VectorXd& x) const {
  if (x.size() != dim()) throw ShapeError("linear system: state size mismatch");
  if (impl_->implicit) return impl_->factor.solve(impl_->M * x);
  return impl_->A * x;
}

VectorXd LinearSystem::input_map(const VectorXd& u) const {
  if (u.size() != input_dim()) throw ShapeError("linear system: input size mismatch");
  if (impl_->implicit) return impl_->factor.solve(impl_->dt * u);
  return impl_->B * u;
}

VectorXd LinearSystem::step(const VectorXd& x) const { return step(x, u_); }

VectorXd LinearSystem::step(const VectorXd& x, const VectorXd& u) const {
  if (x.size() != dim()) throw ShapeError("linear system: state size mismatch");
  if (u.size() != input_dim()) throw ShapeError("linear system: input size mismatch");
  if (impl_->implicit) return impl_->factor.solve(impl_->M * x + impl_->dt * u);
  return impl_->A * x + impl_->B * u;
}

const MatrixXd& LinearSystem::transition_matrix() const {
  if (!impl_->implicit) return impl_->A;
  impl_->materialize();
  return impl_->dense_A;
}

const MatrixXd& LinearSystem::input_matrix() const {
  if (!impl_->implicit) return impl_->B;
  impl_->materialize();
  return impl_->dense_B;
}

LinearSystem LinearSystem::with_weights(Weight process_weight, VectorXd prior_mean,
                                        Weight prior_weight) const {
  return LinearSystem(impl_, u_, std::move(process_weight), std::move(prior_mean),
                      std::move(prior_weight));
}

LinearSystem LinearSystem::with_input(VectorXd u) const {
  return LinearSystem(impl_, std::move(u), process_weight_, prior_mean_, prior_weight_);
}

double LinearSystem::definition_residual() const {
  if (!impl_->implicit) return 0.0;
  const Impl& s = *impl_;
  s.materialize();
  const MatrixXd K = MatrixXd(s.M) + s.dt * MatrixXd(s.S);
  const MatrixXd Md = MatrixXd(s.M);
  const double ra = (K * s.dense_A - Md).norm() / Md.norm();
  const double rb =
      (K * s.dense_B - s.dt * MatrixXd::Identity(s.n, s.n)).norm() / (s.dt * std::sqrt(double(s.n)));
  return std::max(ra, rb);
}

}  // namespace mhmap
