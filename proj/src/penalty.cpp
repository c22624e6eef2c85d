#include "gaplm/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gaplm {

double scad_penalty(double t, double lambda, double a) {
  if (t < 0.0) throw std::domain_error("scad_penalty: negative argument");
  if (t <= lambda) return lambda * t;
  if (t >= a * lambda) return (a + 1.0) * lambda * lambda / 2.0;
  return -(t * t - 2.0 * a * lambda * t + lambda * lambda) / (2.0 * (a - 1.0));
}

double scad_derivative(double t, double lambda, double a) {
  if (t < 0.0) throw std::domain_error("scad_derivative: negative argument");
  if (lambda == 0.0) return 0.0;
  if (t <= lambda) return lambda;
  return std::max(a * lambda - t, 0.0) / (a - 1.0);
}

double lasso_penalty(double t, double lambda) { return lambda * std::abs(t); }

double lasso_derivative(double t, double lambda) {
  (void)t;  // subgradient cap at t = 0
  return lambda;
}

double penalty_value(PenaltyKind kind, double t, double lambda, double a) {
  switch (kind) {
    case PenaltyKind::Scad: return scad_penalty(t, lambda, a);
    case PenaltyKind::Lasso: return lasso_penalty(t, lambda);
    case PenaltyKind::None: return 0.0;
  }
  return 0.0;
}

double penalty_derivative(PenaltyKind kind, double t, double lambda, double a) {
  switch (kind) {
    case PenaltyKind::Scad: return scad_derivative(t, lambda, a);
    case PenaltyKind::Lasso: return lasso_derivative(t, lambda);
    case PenaltyKind::None: return 0.0;
  }
  return 0.0;
}

int ActiveSet::count() const {
  auto nz = [](const std::vector<char>& v) {
    return static_cast<int>(std::count(v.begin(), v.end(), char(1)));
  };
  return nz(beta) + nz(gamma);
}

Matrix lqa_matrix(const Theta& theta, const ActiveSet& active, const SplineSystem& splines,
                  const PenaltySpec& penalty, double eps) {
  const int d_z = theta.d_z();
  const int d_x = theta.d_x();
  const int j_n = theta.basis_dim();
  Matrix lam = Matrix::Zero(theta.packed_dim(), theta.packed_dim());
  for (int l = 1; l < d_z; ++l) {  // intercept block stays zero
    if (!active.beta[l]) continue;
    const double t = std::abs(theta.beta[l]);
    if (t <= eps) throw std::logic_error("lqa_matrix: active beta at threshold, should be zeroed");
    lam(l, l) = penalty_derivative(penalty.kind, t, penalty.lambda_linear, penalty.a) / t;
  }
  for (int l = 0; l < d_x; ++l) {
    if (!active.gamma[l]) continue;
    const double t = splines.group_norm(l, theta.gamma[l]);
    if (t <= eps) throw std::logic_error("lqa_matrix: active gamma group at threshold");
    const double w = penalty_derivative(penalty.kind, t, penalty.lambda_group, penalty.a) / t;
    lam.block(d_z + l * j_n, d_z + l * j_n, j_n, j_n) = w * splines.gram(l);
  }
  return lam;
}

namespace {

std::vector<int> active_indices(const ActiveSet& active, int d_z, int d_x, int j_n) {
  std::vector<int> idx;
  for (int l = 0; l < d_z; ++l)
    if (active.beta[l]) idx.push_back(l);
  for (int l = 0; l < d_x; ++l)
    if (active.gamma[l])
      for (int j = 0; j < j_n; ++j) idx.push_back(d_z + l * j_n + j);
  return idx;
}

double penalty_sum(const Theta& theta, const ActiveSet& active, const SplineSystem& splines,
                   const PenaltySpec& penalty) {
  double total = 0.0;
  for (int l = 1; l < theta.d_z(); ++l)
    if (active.beta[l])
      total += penalty_value(penalty.kind, std::abs(theta.beta[l]), penalty.lambda_linear, penalty.a);
  for (int l = 0; l < theta.d_x(); ++l)
    if (active.gamma[l])
      total += penalty_value(penalty.kind, splines.group_norm(l, theta.gamma[l]),
                             penalty.lambda_group, penalty.a);
  return total;
}

FitReport report_from(const QifEngine& engine, const Theta& theta, double lambda, double q_n,
                      double penalized, FitTrace trace) {
  FitReport report;
  report.theta = theta;
  report.lambda = lambda;
  report.q_n = q_n;
  report.penalized_objective = penalized;
  report.trace = std::move(trace);
  for (int l = 0; l < theta.d_z(); ++l)
    if (theta.beta[l] != 0.0) report.active_linear.push_back(l);
  for (int l = 0; l < theta.d_x(); ++l)
    if (!theta.gamma[l].isZero(0.0)) report.active_nonparametric.push_back(l);
  (void)engine;
  return report;
}

}  // namespace

FitReport fit_penalized(const QifEngine& engine, const PenaltySpec& penalty,
                        const Vector* theta0) {
  const ClusterDataset& ds = engine.dataset();
  const SplineSystem& splines = engine.splines();
  const FitConfig& cfg = engine.config();
  const int d_z = ds.d_z;
  const int d_x = ds.d_x;
  const int j_n = splines.basis_dim();
  const double n = ds.n_clusters();
  const double eps = cfg.threshold_eps;

  if (penalty.kind == PenaltyKind::None ||
      (penalty.lambda_group == 0.0 && penalty.lambda_linear == 0.0)) {
    UnpenalizedFit fit = engine.fit(theta0);
    return report_from(engine, fit.theta, 0.0, fit.q_n, fit.q_n, std::move(fit.trace));
  }

  Vector packed = theta0 ? *theta0 : engine.fit().theta.pack();
  Theta theta = Theta::unpack(packed, d_z, d_x, j_n);
  ActiveSet active{std::vector<char>(d_z, 1), std::vector<char>(d_x, 1)};

  // weight matrix frozen at the starting value: objective differences then
  // stay on the Wald scale as coordinates are shrunk away
  Vector g0;
  Matrix c0;
  engine.moments(packed, g0, c0);
  c0.diagonal().array() += cfg.selection_ridge * c0.trace() / c0.rows();
  c0.diagonal().array() += engine.resolve_ridge(c0);
  const Eigen::LDLT<Matrix> c0_ldlt(c0);

  auto q_at = [&](const Vector& th) {
    const Vector g = engine.score_mean(th);
    return std::max(n * g.dot(c0_ldlt.solve(g)), 0.0);
  };
  auto penalized_at = [&](const Vector& th) {
    return q_at(th) + n * penalty_sum(Theta::unpack(th, d_z, d_x, j_n), active, splines, penalty);
  };

  FitTrace trace;
  double current = penalized_at(packed);
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // threshold first; removed coordinates never re-enter
    for (int l = 1; l < d_z; ++l)
      if (active.beta[l] && std::abs(theta.beta[l]) <= eps) {
        theta.beta[l] = 0.0;
        active.beta[l] = 0;
      }
    for (int l = 0; l < d_x; ++l)
      if (active.gamma[l] && splines.group_norm(l, theta.gamma[l]) <= eps) {
        theta.gamma[l].setZero();
        active.gamma[l] = 0;
      }
    packed = theta.pack();
    current = penalized_at(packed);

    const std::vector<int> idx = active_indices(active, d_z, d_x, j_n);
    Vector g_n;
    Matrix c_unused, g_dot;
    engine.score_and_jacobian(packed, g_n, c_unused, g_dot);
    const Matrix cinv_gdot = c0_ldlt.solve(g_dot);
    const Vector grad = 2.0 * n * cinv_gdot.transpose() * g_n;
    Matrix hess = 2.0 * n * g_dot.transpose() * cinv_gdot;
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Matrix lam = lqa_matrix(theta, active, splines, penalty, eps);

    const int na = static_cast<int>(idx.size());
    Matrix h_a(na, na);
    Vector rhs(na);
    const Vector lam_theta = lam * packed;
    for (int r = 0; r < na; ++r) {
      rhs[r] = grad[idx[r]] + n * lam_theta[idx[r]];
      for (int c = 0; c < na; ++c) h_a(r, c) = hess(idx[r], idx[c]) + n * lam(idx[r], idx[c]);
    }
    h_a.diagonal().array() += 1e-10 * std::max(std::abs(h_a.trace()), 1.0) / std::max(na, 1);
    const Vector direction = -h_a.ldlt().solve(rhs);
    if (!direction.allFinite())
      throw std::runtime_error("fit_penalized: singular LQA system");

    double step = 1.0;
    bool improved = false;
    Vector candidate = packed;
    double value = current;
    for (int h = 0; h <= 30; ++h, step *= 0.5) {
      candidate = packed;
      for (int r = 0; r < na; ++r) candidate[idx[r]] += step * direction[r];
      value = penalized_at(candidate);
      if (value < current) {
        improved = true;
        break;
      }
    }
    trace.iterations = iter + 1;
    trace.q_values.push_back(current);
    if (!improved) {
      trace.converged = true;
      break;
    }
    const double move = (candidate - packed).norm();
    const double improvement = current - value;
    packed = candidate;
    theta = Theta::unpack(packed, d_z, d_x, j_n);
    current = value;
    if (move <= cfg.tol || improvement <= 1e-9 * (std::abs(current) + 1.0)) {
      trace.converged = true;
      break;
    }
  }
  if (trace.iterations >= cfg.max_iterations && !trace.converged) trace.converged = false;

  // final pass so reported zeros are exact
  for (int l = 1; l < d_z; ++l)
    if (std::abs(theta.beta[l]) <= eps) theta.beta[l] = 0.0;
  for (int l = 0; l < d_x; ++l)
    if (splines.group_norm(l, theta.gamma[l]) <= eps) theta.gamma[l].setZero();

  const double q_n = engine.objective(theta.pack());
  const double penalized = q_at(theta.pack()) + n * penalty_sum(theta, active, splines, penalty);
  FitReport report = report_from(engine, theta, penalty.lambda_group, q_n, penalized, trace);
  return report;
}

FitReport fit_penalized(const QifEngine& engine, double lambda, const Vector* theta0) {
  return fit_penalized(engine,
                       PenaltySpec::uniform(engine.config().penalty, lambda, engine.config().scad_a),
                       theta0);
}

SelectionOutcome classify_selection(const std::vector<int>& selected_linear,
                                    const std::vector<int>& selected_nonparametric,
                                    const std::vector<int>& true_linear,
                                    const std::vector<int>& true_nonparametric) {
  auto contains = [](const std::vector<int>& sup, const std::vector<int>& sub) {
    return std::all_of(sub.begin(), sub.end(), [&](int v) {
      return std::find(sup.begin(), sup.end(), v) != sup.end();
    });
  };
  const bool covers = contains(selected_linear, true_linear) &&
                      contains(selected_nonparametric, true_nonparametric);
  if (!covers) return SelectionOutcome::Under;
  const bool exact = selected_linear.size() == true_linear.size() &&
                     selected_nonparametric.size() == true_nonparametric.size();
  return exact ? SelectionOutcome::Correct : SelectionOutcome::Over;
}

}  // namespace gaplm
