#pragma once

#include <vector>

#include "gaplm/penalty.hpp"

namespace gaplm {

struct EbicRecord {
  double lambda = 0.0;
  double fit_term = 0.0;  // Q_n or -2 log L at the penalized estimate
  int d_hat_z = 0;
  int d_hat_x = 0;
  double log_nu_z = 0.0;  // log C(d_z, d_hat_z)
  double log_nu_x = 0.0;  // log C(d_x, d_hat_x)
  int n_knots = 0;        // N_n
  double ebic = 0.0;
  bool converged = true;
};

/// log C(n, k), computed in log space.
double log_binom(int n, int k);

enum class EbicVariant { Qif, Likelihood, Auto };

EbicRecord ebic_record(const QifEngine& engine, const FitReport& fit,
                       EbicVariant variant = EbicVariant::Auto);

struct SelectionResult {
  double lambda_star = 0.0;
  FitReport best;
  std::vector<EbicRecord> records;
};

/// Smallest lambda that zeroes every penalized component, by bisection
/// from the unpenalized estimate.
double lambda_max(const QifEngine& engine, const Vector& theta0);

/// Default grid: 30 log-spaced values from lambda_max down to
/// lambda_max/1000.
std::vector<double> default_lambda_grid(const QifEngine& engine, const Vector& theta0);

/// Unpenalized refit restricted to the support of `fit`, expanded back to
/// the full parameter layout. The refit removes the shrinkage bias of the
/// penalized estimate, so supports can be compared on even footing.
/// c_fixed (when given) replaces C_n(theta) in the reported objective so
/// fit terms are comparable across supports.
FitReport refit_on_support(const QifEngine& engine, const FitReport& fit,
                           const Matrix* c_fixed = nullptr);

/// Fits every lambda in decreasing order and returns the EBIC argmin over
/// the support-refitted candidates; ties break toward the larger
/// (sparser) lambda. Each lambda starts from the unpenalized estimate by
/// default; warm_start carries the previous solution forward instead.
SelectionResult select_lambda(const QifEngine& engine, std::vector<double> grid,
                              EbicVariant variant = EbicVariant::Auto, bool warm_start = false,
                              const Vector* start = nullptr);

}  // namespace gaplm
