#include "gaplm/stats.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace gaplm {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw std::domain_error("norm_quantile: p outside (0,1)");
  // Acklam's approximation
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley refinement
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

namespace {

// 64-point Gauss-Legendre nodes/weights on [-1, 1], generated once by
// Newton iteration on the Legendre polynomial.
struct GaussLegendre64 {
  std::array<double, 64> node{}, weight{};
  GaussLegendre64() {
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        pp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      node[i] = x;
      weight[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
  }
};

const GaussLegendre64& gl64() {
  static const GaussLegendre64 table;
  return table;
}

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

double binorm_cdf(double h, double k, double rho) {
  if (std::abs(rho) >= 1.0 - 1e-12) {
    if (rho > 0.0) return norm_cdf(std::min(h, k));
    return std::max(norm_cdf(h) + norm_cdf(k) - 1.0, 0.0);
  }
  // P(X<=h, Y<=k) = int_{-inf}^{h} phi(z) Phi((k - rho z)/sqrt(1-rho^2)) dz
  const double lo = -8.5;
  const double hi = std::min(h, 8.5);
  if (hi <= lo) return 0.0;
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const double denom = std::sqrt(1.0 - rho * rho);
  const auto& q = gl64();
  double total = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double z = mid + half * q.node[i];
    total += q.weight[i] * norm_pdf(z) * norm_cdf((k - rho * z) / denom);
  }
  return half * total;
}

}  // namespace gaplm
