#include "mhmap/estimator.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <string>

#include "mhmap/errors.hpp"
#include "mhmap/gauss_tail.hpp"

namespace mhmap::mhe {

void BinarySensor::validate(Index n) const {
  if (row.size() != n)
    throw ShapeError("binary sensor: observation row has length " + std::to_string(row.size()) +
                     ", expected " + std::to_string(n));
  if (!row.allFinite() || !std::isfinite(offset) || !std::isfinite(threshold))
    throw DomainError("binary sensor: non-finite row, offset or threshold");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw DomainError("binary sensor: noise variance must be > 0");
}

void MeasurementWindow::validate(Index num_sensors, Index input_dim) const {
  if (y.empty()) throw ShapeError("measurement window is empty");
  if (static_cast<Index>(inputs.size()) != length() - 1)
    throw ShapeError("measurement window: expected " + std::to_string(length() - 1) +
                     " inputs, got " + std::to_string(inputs.size()));
  for (const auto& r : y) {
    if (static_cast<Index>(r.size()) != num_sensors)
      throw ShapeError("measurement window: reading size does not match sensor count");
    for (auto b : r)
      if (b > 1) throw ShapeError("measurement window: readings must be 0 or 1");
  }
  for (const auto& u : inputs)
    if (u.size() != input_dim) throw ShapeError("measurement window: input size mismatch");
}

namespace {

struct SparseRow {
  std::vector<Index> idx;
  std::vector<double> val;
};

// The window cost with everything that does not depend on X precomputed.
class WindowProblem {
 public:
  WindowProblem(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                const EstimatorState& est, const MeasurementWindow& win)
      : sys_(sys), sensors_(sensors), est_(est), win_(win), n_(sys.dim()), L_(win.length()) {
    win.validate(static_cast<Index>(sensors.size()), sys.input_dim());
    if (est.first != win.first())
      throw ShapeError("estimator state and window disagree on the first index");
    if (est.anchor.size() != n_) throw ShapeError("arrival anchor has wrong size");
    est.arrival_weight.check_dim(n_, "arrival weight");
    sys.process_weight().check_dim(n_, "process weight");
    rows_.reserve(sensors.size());
    for (const auto& s : sensors) {
      s.validate(n_);
      SparseRow r;
      for (Index j = 0; j < n_; ++j)
        if (s.row[j] != 0.0) {
          r.idx.push_back(j);
          r.val.push_back(s.row[j]);
        }
      rows_.push_back(std::move(r));
    }
    drift_.reserve(win.inputs.size());
    for (const auto& u : win.inputs) drift_.push_back(sys.input_map(u));
    if (L_ > 1) A_ = &sys.transition_matrix();
  }

  Index size() const noexcept { return n_ * L_; }
  Index blocks() const noexcept { return L_; }

  void check(const VectorXd& X) const {
    if (X.size() != size())
      throw ShapeError("trajectory has length " + std::to_string(X.size()) + ", expected " +
                       std::to_string(size()) + " (" + std::to_string(L_) + " blocks of " +
                       std::to_string(n_) + ")");
  }

  auto block(const VectorXd& X, Index k) const { return X.segment(k * n_, n_); }

  double gap(Index i, const VectorXd& X, Index k) const {
    const SparseRow& r = rows_[i];
    double cx = 0.0;
    for (std::size_t q = 0; q < r.idx.size(); ++q) cx += r.val[q] * X[k * n_ + r.idx[q]];
    return sensors_[i].threshold - cx - sensors_[i].offset;
  }

  VectorXd residual(const VectorXd& X, Index k) const {
    return block(X, k + 1) - (*A_) * block(X, k) - drift_[k];
  }

  double cost(const VectorXd& X) const {
    check(X);
    double c = est_.arrival_weight.quadratic(block(X, 0) - est_.anchor);
    const Weight& Q = sys_.process_weight();
    for (Index k = 0; k + 1 < L_; ++k) c += Q.quadratic(residual(X, k));
    for (Index k = 0; k < L_; ++k) {
      for (std::size_t i = 0; i < sensors_.size(); ++i) {
        const gauss::TailArg a(gap(i, X, k), sensors_[i].variance);
        c -= win_.y[k][i] ? gauss::log_q_tail(a) : gauss::log_cdf(a);
      }
    }
    return c;
  }

  VectorXd gradient(const VectorXd& X) const {
    check(X);
    VectorXd g = VectorXd::Zero(size());
    g.segment(0, n_) += 2.0 * est_.arrival_weight.apply(block(X, 0) - est_.anchor);
    const Weight& Q = sys_.process_weight();
    for (Index k = 0; k + 1 < L_; ++k) {
      const VectorXd qr = 2.0 * Q.apply(residual(X, k));
      g.segment((k + 1) * n_, n_) += qr;
      g.segment(k * n_, n_).noalias() -= A_->transpose() * qr;
    }
    for (Index k = 0; k < L_; ++k) {
      for (std::size_t i = 0; i < sensors_.size(); ++i) {
        const gauss::TailArg a(gap(i, X, k), sensors_[i].variance);
        // d/dx of -ln F(tau - C x) is dlnF * C; same shape for Phi.
        const double s = win_.y[k][i] ? gauss::dlog_q_tail(a) : gauss::dlog_cdf(a);
        const SparseRow& r = rows_[i];
        for (std::size_t q = 0; q < r.idx.size(); ++q) g[k * n_ + r.idx[q]] += s * r.val[q];
      }
    }
    return g;
  }

  // Block-tridiagonal Hessian: diag[k] and lower[k] = H(k+1, k).
  void hessian(const VectorXd& X, std::vector<MatrixXd>& diag,
               std::vector<MatrixXd>& lower) const {
    ensure_constant_part();
    diag = const_diag_;
    lower = const_lower_;
    for (Index k = 0; k < L_; ++k) {
      for (std::size_t i = 0; i < sensors_.size(); ++i) {
        const gauss::TailArg a(gap(i, X, k), sensors_[i].variance);
        const double w = -(win_.y[k][i] ? gauss::d2log_q_tail(a) : gauss::d2log_cdf(a));
        const SparseRow& r = rows_[i];
        for (std::size_t p = 0; p < r.idx.size(); ++p)
          for (std::size_t q = 0; q < r.idx.size(); ++q)
            diag[k](r.idx[p], r.idx[q]) += w * r.val[p] * r.val[q];
      }
    }
  }

  MatrixXd dense_hessian(const VectorXd& X) const {
    check(X);
    std::vector<MatrixXd> diag, lower;
    hessian(X, diag, lower);
    MatrixXd H = MatrixXd::Zero(size(), size());
    for (Index k = 0; k < L_; ++k) H.block(k * n_, k * n_, n_, n_) = diag[k];
    for (Index k = 0; k + 1 < L_; ++k) {
      H.block((k + 1) * n_, k * n_, n_, n_) = lower[k];
      H.block(k * n_, (k + 1) * n_, n_, n_) = lower[k].transpose();
    }
    return H;
  }

 private:
  void ensure_constant_part() const {
    if (!const_diag_.empty()) return;
    const_diag_.assign(L_, MatrixXd::Zero(n_, n_));
    const_lower_.assign(L_ > 0 ? L_ - 1 : 0, MatrixXd());
    const_diag_[0] += 2.0 * est_.arrival_weight.dense(n_);
    if (L_ > 1) {
      const MatrixXd Q = sys_.process_weight().dense(n_);
      const MatrixXd QA = Q * (*A_);
      const MatrixXd AtQA = A_->transpose() * QA;
      for (Index k = 0; k + 1 < L_; ++k) {
        const_diag_[k] += 2.0 * AtQA;
        const_diag_[k + 1] += 2.0 * Q;
        const_lower_[k] = -2.0 * QA;
      }
    }
  }

  const LinearSystem& sys_;
  std::span<const BinarySensor> sensors_;
  const EstimatorState& est_;
  const MeasurementWindow& win_;
  Index n_;
  Index L_;
  const MatrixXd* A_ = nullptr;
  std::vector<SparseRow> rows_;
  std::vector<VectorXd> drift_;
  mutable std::vector<MatrixXd> const_diag_;
  mutable std::vector<MatrixXd> const_lower_;
};

// Cholesky of a symmetric block-tridiagonal matrix, H = L L' with L block
// lower-bidiagonal (diagonal factors L_k, subdiagonal F_k).
class BlockTridiagonalCholesky {
 public:
  bool compute(std::vector<MatrixXd> diag, const std::vector<MatrixXd>& lower, double shift) {
    const std::size_t L = diag.size();
    llt_.resize(L);
    f_.assign(L > 0 ? L - 1 : 0, MatrixXd());
    for (std::size_t k = 0; k < L; ++k) {
      if (shift != 0.0) diag[k].diagonal().array() += shift;
      if (k > 0) diag[k].noalias() -= f_[k - 1] * f_[k - 1].transpose();
      llt_[k].compute(diag[k]);
      if (llt_[k].info() != Eigen::Success) return false;
      if (k + 1 < L) {
        // F_k' = L_k^-1 E_k'
        MatrixXd ft = lower[k].transpose();
        llt_[k].matrixL().solveInPlace(ft);
        f_[k] = ft.transpose();
      }
    }
    return true;
  }

  VectorXd solve(const VectorXd& b, Index n) const {
    const std::size_t L = llt_.size();
    VectorXd z(b.size());
    for (std::size_t k = 0; k < L; ++k) {
      VectorXd rhs = b.segment(k * n, n);
      if (k > 0) rhs.noalias() -= f_[k - 1] * z.segment((k - 1) * n, n);
      llt_[k].matrixL().solveInPlace(rhs);
      z.segment(k * n, n) = rhs;
    }
    VectorXd d(b.size());
    for (std::size_t kk = L; kk-- > 0;) {
      VectorXd rhs = z.segment(kk * n, n);
      if (kk + 1 < L) rhs.noalias() -= f_[kk].transpose() * d.segment((kk + 1) * n, n);
      llt_[kk].matrixU().solveInPlace(rhs);
      d.segment(kk * n, n) = rhs;
    }
    return d;
  }

 private:
  std::vector<Eigen::LLT<MatrixXd>> llt_;
  std::vector<MatrixXd> f_;
};

}  // namespace

double mh_cost(const LinearSystem& sys, std::span<const BinarySensor> sensors,
               const EstimatorState& est, const MeasurementWindow& win, const VectorXd& X) {
  return WindowProblem(sys, sensors, est, win).cost(X);
}

VectorXd mh_cost_gradient(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                          const EstimatorState& est, const MeasurementWindow& win,
                          const VectorXd& X) {
  return WindowProblem(sys, sensors, est, win).gradient(X);
}

MatrixXd mh_cost_hessian(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                         const EstimatorState& est, const MeasurementWindow& win,
                         const VectorXd& X) {
  return WindowProblem(sys, sensors, est, win).dense_hessian(X);
}

namespace {
constexpr double kCostNoise = 1e-11;
}  // namespace

SolveResult solve_window(const LinearSystem& sys, std::span<const BinarySensor> sensors,
                         const EstimatorState& est, const MeasurementWindow& win,
                         const VectorXd& init, const SolverOptions& options) {
  const WindowProblem prob(sys, sensors, est, win);
  prob.check(init);
  const Index n = sys.dim();

  SolveResult res;
  res.trajectory = init;
  res.cost = prob.cost(init);
  if (!std::isfinite(res.cost)) throw NumericError("solve_window: initial cost is not finite");
  if (options.record_history) res.cost_history.push_back(res.cost);

  std::vector<MatrixXd> diag, lower;
  BlockTridiagonalCholesky chol;

  for (;;) {
    const VectorXd g = prob.gradient(res.trajectory);
    res.gradient_norm = g.norm();
    if (res.gradient_norm <= options.tolerance * (1.0 + std::abs(res.cost))) {
      res.converged = true;
      return res;
    }
    if (res.iterations >= options.max_iterations)
      throw ConvergenceError("solve_window: iteration cap of " +
                                 std::to_string(options.max_iterations) + " reached",
                             res);

    // Newton direction, with diagonal shifts if the factorization fails.
    prob.hessian(res.trajectory, diag, lower);
    VectorXd dir;
    double scale = 0.0;
    for (const auto& d : diag) scale = std::max(scale, d.diagonal().cwiseAbs().maxCoeff());
    double shift = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      if (chol.compute(diag, lower, shift)) {
        dir = -chol.solve(g, n);
        break;
      }
      shift = shift == 0.0 ? 1e-10 * (1.0 + scale) : shift * 100.0;
    }

    auto line_search = [&](const VectorXd& d, double step) -> bool {
      const double slope = g.dot(d);
      if (!(slope < 0.0) || !d.allFinite()) return false;
      for (int b = 0; b <= options.max_backtracks; ++b, step *= options.backtrack) {
        VectorXd trial = res.trajectory + step * d;
        const double c = prob.cost(trial);
        if (std::isfinite(c) && c <= res.cost + options.armijo_slope * step * slope) {
          res.trajectory = std::move(trial);
          res.cost = c;
          return true;
        }
      }
      return false;
    };

    // Near the optimum the predicted decrease can drop below the rounding
    // error of the cost; fall back to the gradient norm as the merit there.
    auto accept_in_noise = [&](const VectorXd& d) -> bool {
      const double band = kCostNoise * (1.0 + std::abs(res.cost));
      if (!(-g.dot(d) <= band) || !d.allFinite()) return false;
      VectorXd trial = res.trajectory + d;
      const double c = prob.cost(trial);
      if (!(c <= res.cost + band) || !(prob.gradient(trial).norm() < res.gradient_norm))
        return false;
      res.trajectory = std::move(trial);
      res.cost = c;
      return true;
    };

    bool accepted = dir.size() > 0 && (accept_in_noise(dir) || line_search(dir, 1.0));
    if (!accepted) {
      ++res.gradient_steps;
      accepted = line_search(-g, 1.0 / std::max(1.0, res.gradient_norm));
    }
    ++res.iterations;
    if (!accepted)
      throw ConvergenceError("solve_window: line search stalled at gradient norm " +
                                 std::to_string(res.gradient_norm),
                             res);
    if (options.record_history) res.cost_history.push_back(res.cost);
  }
}

EstimatorState advance(const EstimatorState& est, const VectorXd& solved,
                       const LinearSystem& sys, const VectorXd& next_input, Index max_blocks,
                       const Weight& arrival_weight) {
  const Index n = sys.dim();
  if (n == 0 || solved.size() % n != 0 || solved.size() == 0)
    throw ShapeError("advance: solved trajectory is not a whole number of blocks");
  if (max_blocks < 1) throw ShapeError("advance: window must hold at least one block");
  const Index L = solved.size() / n;
  const VectorXd prediction = sys.step(solved.segment((L - 1) * n, n), next_input);

  EstimatorState next;
  if (L < max_blocks) {
    next.first = est.first;
    next.anchor = est.anchor;
    next.arrival_weight = est.arrival_weight;
    next.trajectory.resize((L + 1) * n);
    next.trajectory << solved, prediction;
    return next;
  }
  next.first = est.first + 1;
  next.anchor = L >= 2 ? VectorXd(solved.segment(n, n)) : prediction;
  next.arrival_weight = arrival_weight;
  next.trajectory.resize(L * n);
  next.trajectory << solved.tail((L - 1) * n), prediction;
  return next;
}

MovingHorizonEstimator::MovingHorizonEstimator(LinearSystem sys,
                                               std::vector<BinarySensor> sensors,
                                               EstimatorOptions options)
    : sys_(std::move(sys)), sensors_(std::move(sensors)), options_(std::move(options)) {
  if (options_.horizon < 0) throw ConfigError("estimator: horizon N must be >= 0");
  options_.arrival_weight.check_dim(sys_.dim(), "arrival weight");
  for (const auto& s : sensors_) s.validate(sys_.dim());
}

MovingHorizonEstimator::Update MovingHorizonEstimator::update(const Reading& y) {
  return update(y, sys_.input());
}

MovingHorizonEstimator::Update MovingHorizonEstimator::update(const Reading& y,
                                                              const VectorXd& u_prev) {
  const Index max_blocks = options_.horizon + 1;
  if (steps_ == 0) {
    window_ = MeasurementWindow{0, {y}, {}};
    state_.first = 0;
    state_.anchor = sys_.prior_mean();
    state_.arrival_weight = sys_.prior_weight();
    state_.trajectory = sys_.prior_mean();
  } else {
    state_ = advance(state_, last_solution_, sys_, u_prev, max_blocks, options_.arrival_weight);
    window_.t += 1;
    window_.y.push_back(y);
    window_.inputs.push_back(u_prev);
    if (window_.length() > max_blocks) {
      window_.y.erase(window_.y.begin());
      window_.inputs.erase(window_.inputs.begin());
    }
  }

  Update out;
  out.t = window_.t;
  out.estimate_index = window_.first();
  try {
    out.diagnostics = solve_window(sys_, sensors_, state_, window_, state_.trajectory,
                                   options_.solver);
  } catch (const ConvergenceError& e) {
    out.diagnostics = e.best();
    out.failed = true;
  }
  last_solution_ = out.diagnostics.trajectory;
  out.estimate = last_solution_.head(sys_.dim());
  ++steps_;
  return out;
}

}  // namespace mhmap::mhe
