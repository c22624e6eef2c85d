#include "gaplm/working_correlation.hpp"

#include <stdexcept>

namespace gaplm {

int basis_count(WorkingStructure s, int t) {
  if (t < 1) throw std::domain_error("basis_count: cluster size must be >= 1");
  if (t == 1 || s == WorkingStructure::Independence) return 1;
  return 2;
}

std::vector<Matrix> basis_matrices(WorkingStructure s, int t) {
  if (t < 1) throw std::domain_error("basis_matrices: cluster size must be >= 1");
  std::vector<Matrix> out;
  out.push_back(Matrix::Identity(t, t));
  if (t == 1 || s == WorkingStructure::Independence) return out;
  Matrix m2 = Matrix::Zero(t, t);
  if (s == WorkingStructure::Exchangeable) {
    m2.setOnes();
    m2.diagonal().setZero();
  } else {  // AR-1: first off-diagonal indicator
    for (int i = 0; i + 1 < t; ++i) {
      m2(i, i + 1) = 1.0;
      m2(i + 1, i) = 1.0;
    }
  }
  out.push_back(std::move(m2));
  return out;
}

std::pair<double, double> ec_inverse_coeffs(double rho, int t) {
  if (t < 1) throw std::domain_error("ec_inverse_coeffs: cluster size must be >= 1");
  if (rho <= -1.0 / std::max(t - 1, 1) || rho >= 1.0)
    throw std::domain_error("ec_inverse_coeffs: rho outside invertibility range");
  if (t == 1) return {1.0, 0.0};
  Matrix r = Matrix::Constant(t, t, rho);
  r.diagonal().setOnes();
  Matrix inv = r.inverse();
  // the inverse of an exchangeable matrix is exchangeable again
  return {inv(0, 0), inv(0, 1)};
}

}  // namespace gaplm
