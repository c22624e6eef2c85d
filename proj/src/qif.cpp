#include "gaplm/qif.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaplm {

namespace {
constexpr double kEigCutoff = 1e-10;  // relative cutoff for the pseudo-inverse
constexpr int kMaxHalvings = 30;
}  // namespace

struct QifEngine::ClusterState {
  Vector eta, mu, resid;
  Vector p, s;        // Delta A^{-1/2} and A^{-1/2} diagonals
  Vector p_dot, s_dot, mu_dot;
};

QifEngine::QifEngine(const ClusterDataset& ds, const SplineSystem& splines, const FitConfig& cfg)
    : ds_(&ds), splines_(&splines), cfg_(cfg), family_(cfg.family) {
  const int j_n = splines.basis_dim();
  d_n_ = ds.d_z + ds.d_x * j_n;

  int max_t = 1;
  for (const Cluster& c : ds.clusters) max_t = std::max<int>(max_t, static_cast<int>(c.size()));
  k_ = gaplm::basis_count(cfg.structure, max_t);

  designs_.reserve(ds.clusters.size());
  for (const Cluster& c : ds.clusters) {
    const int t = static_cast<int>(c.size());
    Matrix d(t, d_n_);
    d.leftCols(ds.d_z) = c.z;
    for (int l = 0; l < ds.d_x; ++l)
      for (int row = 0; row < t; ++row)
        d.block(row, ds.d_z + l * j_n, 1, j_n) = splines.basis_row(l, c.x(row, l)).transpose();
    designs_.push_back(std::move(d));

    if (!basis_by_t_.count(t)) {
      auto ms = basis_matrices(cfg.structure, t);
      while (static_cast<int>(ms.size()) < k_) ms.push_back(Matrix::Zero(t, t));
      basis_by_t_[t] = std::move(ms);
    }
  }
}

QifEngine::ClusterState QifEngine::evaluate_cluster(const Vector& theta, int i) const {
  const Matrix& d = designs_[i];
  const int t = static_cast<int>(d.rows());
  ClusterState st;
  st.eta = d * theta;
  st.mu.resize(t);
  st.resid.resize(t);
  st.p.resize(t);
  st.s.resize(t);
  st.p_dot.resize(t);
  st.s_dot.resize(t);
  st.mu_dot.resize(t);
  for (int r = 0; r < t; ++r) {
    const double mu = family_.mu(st.eta[r]);
    const double md = family_.mu_dot(st.eta[r]);
    const double v = family_.variance(mu);
    const double dv = family_.variance_dmu(mu) * md;  // dV/deta
    const double sv = std::sqrt(v);
    st.mu[r] = mu;
    st.mu_dot[r] = md;
    st.resid[r] = ds_->clusters[i].y[r] - mu;
    st.p[r] = md / sv;
    st.s[r] = 1.0 / sv;
    st.p_dot[r] = family_.mu_ddot(st.eta[r]) / sv - 0.5 * md * dv / (v * sv);
    st.s_dot[r] = -0.5 * dv / (v * sv);
  }
  return st;
}

Vector QifEngine::extended_score(const Vector& theta, int i) const {
  const Matrix& d = designs_[i];
  const auto st = evaluate_cluster(theta, i);
  const auto& ms = basis_by_t_.at(static_cast<int>(d.rows()));
  const Vector sr = st.s.cwiseProduct(st.resid);
  Vector g(score_dim());
  for (int k = 0; k < k_; ++k)
    g.segment(k * d_n_, d_n_) = d.transpose() * st.p.cwiseProduct(ms[k] * sr);
  return g;
}

void QifEngine::moments(const Vector& theta, Vector& g_n, Matrix& c_n) const {
  const int n = ds_->n_clusters();
  g_n = Vector::Zero(score_dim());
  c_n = Matrix::Zero(score_dim(), score_dim());
  for (int i = 0; i < n; ++i) {
    const Vector g = extended_score(theta, i);
    g_n += g;
    c_n.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  g_n /= n;
  c_n = Matrix(c_n.selfadjointView<Eigen::Lower>()) / n;
}

Vector QifEngine::score_mean(const Vector& theta) const {
  const int n = ds_->n_clusters();
  Vector g_n = Vector::Zero(score_dim());
  for (int i = 0; i < n; ++i) g_n += extended_score(theta, i);
  return g_n / n;
}

void QifEngine::score_and_jacobian(const Vector& theta, Vector& g_n, Matrix& c_n,
                                   Matrix& g_dot) const {
  const int n = ds_->n_clusters();
  g_n = Vector::Zero(score_dim());
  c_n = Matrix::Zero(score_dim(), score_dim());
  g_dot = Matrix::Zero(score_dim(), d_n_);
  Vector g(score_dim());
  for (int i = 0; i < n; ++i) {
    const Matrix& d = designs_[i];
    const auto st = evaluate_cluster(theta, i);
    const auto& ms = basis_by_t_.at(static_cast<int>(d.rows()));
    const Vector sr = st.s.cwiseProduct(st.resid);
    // d(s*r)/deta, diagonal
    const Vector sr_dot = st.s_dot.cwiseProduct(st.resid) - st.s.cwiseProduct(st.mu_dot);
    for (int k = 0; k < k_; ++k) {
      const Vector msr = ms[k] * sr;
      g.segment(k * d_n_, d_n_) = d.transpose() * st.p.cwiseProduct(msr);
      // F = diag(p_dot .* (M s r)) + diag(p) M diag(d(s r)/deta)
      Matrix f = st.p.asDiagonal() * ms[k] * sr_dot.asDiagonal();
      f.diagonal() += st.p_dot.cwiseProduct(msr);
      g_dot.middleRows(k * d_n_, d_n_).noalias() += d.transpose() * f * d;
    }
    g_n += g;
    c_n.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  g_n /= n;
  c_n = Matrix(c_n.selfadjointView<Eigen::Lower>()) / n;
  g_dot /= n;
}

double QifEngine::resolve_ridge(const Matrix& c_n) const {
  if (cfg_.ridge_delta >= 0.0) return cfg_.ridge_delta;
  return 1e-8 * c_n.trace() / static_cast<double>(c_n.rows());
}

Matrix QifEngine::solve_c(const Matrix& c_n, const Matrix& rhs) const {
  const double delta = resolve_ridge(c_n);
  if (delta > 0.0) {
    Matrix reg = c_n;
    reg.diagonal().array() += delta;
    return reg.ldlt().solve(rhs);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(c_n);
  const Vector& ev = es.eigenvalues();
  const double cutoff = kEigCutoff * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > cutoff && ev[i] > 0.0) inv[i] = 1.0 / ev[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * rhs;
}

Vector QifEngine::solve_c(const Matrix& c_n, const Vector& rhs) const {
  return Vector(solve_c(c_n, Matrix(rhs)));
}

double QifEngine::objective(const Vector& theta) const {
  Vector g_n;
  Matrix c_n;
  moments(theta, g_n, c_n);
  if (c_n.isZero(0.0)) {
    if (g_n.isZero(0.0)) return 0.0;
    throw std::runtime_error("qif_objective: C_n is zero with nonzero G_n");
  }
  const double q = ds_->n_clusters() * g_n.dot(solve_c(c_n, g_n));
  return std::max(q, 0.0);
}

double QifEngine::objective_with(const Vector& theta, const Matrix& c_fixed) const {
  Vector g_n;
  Matrix c_n;
  moments(theta, g_n, c_n);
  const double q = ds_->n_clusters() * g_n.dot(solve_c(c_fixed, g_n));
  return std::max(q, 0.0);
}

void QifEngine::derivatives_with(const Vector& theta, const Matrix& c_fixed, Vector& gradient,
                                 Matrix& hessian) const {
  Vector g_n;
  Matrix c_n, g_dot;
  score_and_jacobian(theta, g_n, c_n, g_dot);
  const double n = ds_->n_clusters();
  const Matrix cinv_gdot = solve_c(c_fixed, g_dot);
  gradient = 2.0 * n * cinv_gdot.transpose() * g_n;
  hessian = 2.0 * n * g_dot.transpose() * cinv_gdot;
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
}

void QifEngine::derivatives(const Vector& theta, Vector& gradient, Matrix& hessian) const {
  Vector g_n;
  Matrix c_n, g_dot;
  score_and_jacobian(theta, g_n, c_n, g_dot);
  const double n = ds_->n_clusters();
  const Matrix cinv_gdot = solve_c(c_n, g_dot);
  gradient = 2.0 * n * cinv_gdot.transpose() * g_n;
  hessian = 2.0 * n * g_dot.transpose() * cinv_gdot;
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
}

Vector QifEngine::gradient(const Vector& theta) const {
  Vector g;
  Matrix h;
  derivatives(theta, g, h);
  return g;
}

Matrix QifEngine::hessian(const Vector& theta) const {
  Vector g;
  Matrix h;
  derivatives(theta, g, h);
  return h;
}

Vector QifEngine::initial_theta() const {
  const long n_obs = ds_->n_obs();
  if (family_.kind() == FamilyKind::GaussianIdentity) {
    Matrix xtx = Matrix::Zero(d_n_, d_n_);
    Vector xty = Vector::Zero(d_n_);
    for (size_t i = 0; i < designs_.size(); ++i) {
      xtx.noalias() += designs_[i].transpose() * designs_[i];
      xty.noalias() += designs_[i].transpose() * ds_->clusters[i].y;
    }
    xtx.diagonal().array() += 1e-10 * xtx.trace() / d_n_;
    return xtx.ldlt().solve(xty);
  }
  // logit: a few working-independence IRLS sweeps
  Vector theta = Vector::Zero(d_n_);
  for (int sweep = 0; sweep < 5; ++sweep) {
    Matrix xtwx = Matrix::Zero(d_n_, d_n_);
    Vector xtwz = Vector::Zero(d_n_);
    for (size_t i = 0; i < designs_.size(); ++i) {
      const Matrix& d = designs_[i];
      const Vector eta = d * theta;
      for (Eigen::Index r = 0; r < eta.size(); ++r) {
        const double mu = family_.mu(eta[r]);
        const double w = family_.variance(mu);
        const double z = eta[r] + (ds_->clusters[i].y[r] - mu) / std::max(w, 1e-10);
        xtwx.noalias() += w * d.row(r).transpose() * d.row(r);
        xtwz.noalias() += w * z * d.row(r).transpose();
      }
    }
    xtwx.diagonal().array() += 1e-8 * std::max(xtwx.trace(), 1.0) / d_n_;
    theta = xtwx.ldlt().solve(xtwz);
  }
  (void)n_obs;
  return theta;
}

UnpenalizedFit QifEngine::fit(const Vector* theta0) const {
  Vector theta = theta0 ? *theta0 : initial_theta();
  UnpenalizedFit result;

  Vector g_n;
  Matrix c_n, g_dot;
  Matrix frozen_c;
  const bool freeze = !cfg_.recompute_cn;
  if (freeze) {
    Vector g0;
    moments(theta, g0, frozen_c);
  }
  const double n = ds_->n_clusters();
  auto q_at = [&](const Vector& th) {
    if (!freeze) return objective(th);
    Vector g;
    Matrix c;
    moments(th, g, c);
    return std::max(n * g.dot(solve_c(frozen_c, g)), 0.0);
  };

  double q = q_at(theta);
  result.trace.q_values.push_back(q);
  for (int iter = 0; iter < cfg_.max_iterations; ++iter) {
    score_and_jacobian(theta, g_n, c_n, g_dot);
    const Matrix& c_use = freeze ? frozen_c : c_n;
    const Matrix cinv_gdot = solve_c(c_use, g_dot);
    const Vector grad = 2.0 * n * cinv_gdot.transpose() * g_n;
    Matrix hess = 2.0 * n * g_dot.transpose() * cinv_gdot;
    const double delta = resolve_ridge(c_use);
    hess.diagonal().array() += std::max(2.0 * delta, 1e-12 * std::abs(hess.trace()) / d_n_);
    const Vector direction = -hess.ldlt().solve(grad);

    double step = 1.0;
    Vector candidate;
    double q_new = q;
    bool improved = false;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      candidate = theta + step * direction;
      q_new = q_at(candidate);
      if (q_new < q) {
        improved = true;
        break;
      }
    }
    result.trace.iterations = iter + 1;
    if (!improved) {
      result.trace.converged = true;  // no descent direction left
      break;
    }
    const double move = (candidate - theta).norm();
    theta = candidate;
    q = q_new;
    result.trace.q_values.push_back(q);
    if (move <= cfg_.tol) {
      result.trace.converged = true;
      break;
    }
  }
  result.theta = Theta::unpack(theta, ds_->d_z, ds_->d_x, splines_->basis_dim());
  result.q_n = q;
  return result;
}

double QifEngine::neg2_loglik(const Vector& theta) const {
  const long n_obs = ds_->n_obs();
  if (family_.kind() == FamilyKind::GaussianIdentity) {
    double ssr = 0.0;
    for (size_t i = 0; i < designs_.size(); ++i)
      ssr += (ds_->clusters[i].y - designs_[i] * theta).squaredNorm();
    const double sigma2 = std::max(ssr / n_obs, 1e-12);
    return n_obs * (std::log(2.0 * M_PI * sigma2) + 1.0);
  }
  double ll = 0.0;
  for (size_t i = 0; i < designs_.size(); ++i) {
    const Vector eta = designs_[i] * theta;
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      const double mu = std::min(std::max(family_.mu(eta[r]), Family::kClamp), 1.0 - Family::kClamp);
      const double y = ds_->clusters[i].y[r];
      ll += y * std::log(mu) + (1.0 - y) * std::log(1.0 - mu);
    }
  }
  return -2.0 * ll;
}

Matrix QifEngine::beta_covariance(const Vector& theta_hat) const {
  const int n = ds_->n_clusters();
  const int d_z = ds_->d_z;
  const long n_obs = ds_->n_obs();
  const int n_spline = d_n_ - d_z;

  // Z-hat: residual of an ordinary least-squares projection of the Z
  // columns onto the centered spline column space
  Matrix proj = Matrix::Zero(n_spline, d_z);
  if (n_spline > 0) {
    Matrix btb = Matrix::Zero(n_spline, n_spline);
    Matrix btz = Matrix::Zero(n_spline, d_z);
    for (const Matrix& d : designs_) {
      const auto b = d.rightCols(n_spline);
      btb.noalias() += b.transpose() * b;
      btz.noalias() += b.transpose() * d.leftCols(d_z);
    }
    btb.diagonal().array() += 1e-10 * std::max(btb.trace(), 1.0) / std::max(n_spline, 1);
    proj = btb.ldlt().solve(btz);
  }
  (void)n_obs;

  Vector g_n;
  Matrix c_n;
  moments(theta_hat, g_n, c_n);

  Matrix j_dz = Matrix::Zero(score_dim(), d_z);
  for (int i = 0; i < n; ++i) {
    const Matrix& d = designs_[i];
    const auto st = evaluate_cluster(theta_hat, i);
    const auto& ms = basis_by_t_.at(static_cast<int>(d.rows()));
    const Matrix z_hat = d.leftCols(d_z) - d.rightCols(n_spline) * proj;
    for (int k = 0; k < k_; ++k) {
      // Gamma^(k) = diag(mu_dot/sqrt(V)) M_k diag(mu_dot/sqrt(V))
      const Matrix gamma = st.p.asDiagonal() * ms[k] * st.p.asDiagonal();
      j_dz.middleRows(k * d_n_, d_n_).noalias() += d.transpose() * gamma * z_hat;
    }
  }
  j_dz /= n;

  const Matrix cinv_j = solve_c(c_n, j_dz);
  const Matrix psi = j_dz.transpose() * cinv_j;
  Eigen::FullPivLU<Matrix> psi_lu(psi);
  if (!psi_lu.isInvertible()) throw std::runtime_error("beta_covariance: singular Psi-hat");

  // with residuals standing in for Sigma^{1/2}, W_i reduces to g_i(theta-hat)
  Matrix omega = Matrix::Zero(d_z, d_z);
  for (int i = 0; i < n; ++i) {
    const Vector w = cinv_j.transpose() * extended_score(theta_hat, i);
    omega.noalias() += w * w.transpose();
  }
  omega /= n;

  const Matrix psi_inv = psi_lu.inverse();
  Matrix sigma = psi_inv * omega * psi_inv.transpose() / n;
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace gaplm
