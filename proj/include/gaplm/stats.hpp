#pragma once

namespace gaplm {

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal quantile (Acklam's rational approximation with one
/// Halley refinement step; absolute error well below 1e-12).
double norm_quantile(double p);

/// Bivariate standard normal CDF P(X <= h, Y <= k) with correlation rho,
/// by Gauss-Legendre quadrature of the conditional decomposition.
double binorm_cdf(double h, double k, double rho);

}  // namespace gaplm
