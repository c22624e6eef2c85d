#pragma once

#include <limits>
#include <vector>

#include "gaplm/qif.hpp"

namespace gaplm {

/// SCAD penalty value and derivative (a > 2, lambda >= 0, t >= 0).
double scad_penalty(double t, double lambda, double a);
double scad_derivative(double t, double lambda, double a);

/// L1 penalty; the derivative at t = 0 is capped at lambda by convention.
double lasso_penalty(double t, double lambda);
double lasso_derivative(double t, double lambda);

double penalty_value(PenaltyKind kind, double t, double lambda, double a);
double penalty_derivative(PenaltyKind kind, double t, double lambda, double a);

/// Group (nonparametric) and linear tuning parameters; equal by default.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::Scad;
  double lambda_group = 0.0;
  double lambda_linear = 0.0;
  double a = 3.7;

  static PenaltySpec uniform(PenaltyKind kind, double lambda, double a = 3.7) {
    return {kind, lambda, lambda, a};
  }
};

struct ActiveSet {
  std::vector<char> beta;   // d_z flags; index 0 (intercept) is always active
  std::vector<char> gamma;  // d_x flags
  int count() const;
};

struct FitReport {
  Theta theta;  // zeros filled in at inactive coordinates
  std::vector<int> active_linear;         // indices with beta != 0 (incl. intercept)
  std::vector<int> active_nonparametric;  // covariates with gamma_l != 0
  double lambda = 0.0;
  double q_n = 0.0;                  // unpenalized objective at the estimate
  double penalized_objective = 0.0;  // Q_n + n * penalty
  double ebic = std::numeric_limits<double>::quiet_NaN();
  FitTrace trace;
};

/// Block-diagonal local quadratic approximation matrix Lambda(theta^k)
/// over the active coordinates (full d_n x d_n, inactive rows/cols zero).
/// The intercept block is zero. Active penalized coordinates must exceed
/// the threshold eps.
Matrix lqa_matrix(const Theta& theta, const ActiveSet& active, const SplineSystem& splines,
                  const PenaltySpec& penalty, double eps);

/// Thresholded active-set LQA-Newton solve of the penalized QIF. theta0
/// defaults to the unpenalized QIF estimate when null.
FitReport fit_penalized(const QifEngine& engine, const PenaltySpec& penalty,
                        const Vector* theta0 = nullptr);
FitReport fit_penalized(const QifEngine& engine, double lambda, const Vector* theta0 = nullptr);

enum class SelectionOutcome { Correct, Over, Under };

SelectionOutcome classify_selection(const std::vector<int>& selected_linear,
                                    const std::vector<int>& selected_nonparametric,
                                    const std::vector<int>& true_linear,
                                    const std::vector<int>& true_nonparametric);

}  // namespace gaplm
