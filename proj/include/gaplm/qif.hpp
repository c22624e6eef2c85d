#pragma once

#include <map>
#include <vector>

#include "gaplm/family.hpp"
#include "gaplm/splines.hpp"
#include "gaplm/types.hpp"
#include "gaplm/working_correlation.hpp"

namespace gaplm {

struct FitTrace {
  std::vector<double> q_values;  // Q_n per accepted iterate, non-increasing
  int iterations = 0;
  bool converged = false;
};

struct UnpenalizedFit {
  Theta theta;
  double q_n = 0.0;
  FitTrace trace;
};

/// Per-cluster designs, extended scores, QIF moments and derivatives, and
/// the unpenalized Gauss-Newton solver. Immutable after construction; a
/// single engine can serve concurrent read-only evaluations.
class QifEngine {
 public:
  QifEngine(const ClusterDataset& ds, const SplineSystem& splines, const FitConfig& cfg);

  int param_dim() const { return d_n_; }  // d_z + d_x * J_n
  int score_dim() const { return k_ * d_n_; }
  int basis_count() const { return k_; }
  const Matrix& design(int i) const { return designs_[i]; }
  const SplineSystem& splines() const { return *splines_; }
  const ClusterDataset& dataset() const { return *ds_; }
  const FitConfig& config() const { return cfg_; }

  /// Stacked g_i(theta) = (D_i' Delta_i A_i^{-1/2} M_k A_i^{-1/2} (Y_i - mu_i))_k.
  Vector extended_score(const Vector& theta, int i) const;

  /// Sample mean G_n and second-moment matrix C_n of the extended scores.
  void moments(const Vector& theta, Vector& g_n, Matrix& c_n) const;

  /// G_n alone, for callers that supply their own weight matrix.
  Vector score_mean(const Vector& theta) const;

  /// G_n, C_n and the analytic Jacobian Gdot = dG_n/dtheta in one sweep.
  void score_and_jacobian(const Vector& theta, Vector& g_n, Matrix& c_n, Matrix& g_dot) const;

  /// Q_n = n G_n' (C_n + delta I)^{-1} G_n.
  double objective(const Vector& theta) const;

  /// Q_n with a caller-supplied weight matrix instead of C_n(theta).
  /// Holding the weight fixed keeps objective differences comparable
  /// across parameter values (self-normalization otherwise compresses
  /// them), which the penalized solver and EBIC rely on.
  double objective_with(const Vector& theta, const Matrix& c_fixed) const;
  void derivatives_with(const Vector& theta, const Matrix& c_fixed, Vector& gradient,
                        Matrix& hessian) const;

  /// Analytic gradient 2n Gdot' C^{-1} G and Gauss-Newton Hessian
  /// 2n Gdot' C^{-1} Gdot, with C_n treated as fixed at theta.
  void derivatives(const Vector& theta, Vector& gradient, Matrix& hessian) const;
  Vector gradient(const Vector& theta) const;
  Matrix hessian(const Vector& theta) const;

  /// Gauss-Newton with step halving from theta0 (or a family-specific
  /// initializer when absent). trace.converged is false when the iteration
  /// limit is reached before the step norm drops below tol.
  UnpenalizedFit fit(const Vector* theta0 = nullptr) const;

  /// Working-independence initializer: least squares for the identity
  /// link, a few IRLS sweeps for the logit link.
  Vector initial_theta() const;

  /// Sandwich covariance of beta-hat (diagnostic; observed residuals stand
  /// in for Sigma_i^{1/2}).
  Matrix beta_covariance(const Vector& theta_hat) const;

  /// -2 log L under working independence; Gaussian uses the plug-in
  /// variance estimate, floored at 1e-12.
  double neg2_loglik(const Vector& theta) const;

  /// Ridge actually applied to C_n (resolves the automatic default).
  double resolve_ridge(const Matrix& c_n) const;

 private:
  struct ClusterState;  // mu, residual, link weights at a given theta
  ClusterState evaluate_cluster(const Vector& theta, int i) const;
  Vector solve_c(const Matrix& c_n, const Vector& rhs) const;
  Matrix solve_c(const Matrix& c_n, const Matrix& rhs) const;

  const ClusterDataset* ds_;
  const SplineSystem* splines_;
  FitConfig cfg_;
  Family family_;
  int d_n_ = 0;
  int k_ = 0;
  std::vector<Matrix> designs_;                    // D_i, T_i x d_n
  std::map<int, std::vector<Matrix>> basis_by_t_;  // M_1..M_K per cluster size
};

}  // namespace gaplm
