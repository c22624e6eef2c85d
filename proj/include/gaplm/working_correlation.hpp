#pragma once

#include <utility>
#include <vector>

#include "gaplm/types.hpp"

namespace gaplm {

/// Number of basis matrices K for a structure at cluster size t.
int basis_count(WorkingStructure s, int t);

/// Basis matrices M_1..M_K approximating R^{-1}. M_1 is always the
/// identity; the remaining matrices are symmetric 0/1 indicators:
///   EC  -> 0 diagonal, 1 off-diagonal
///   AR1 -> 1 on the first sub/super-diagonals
/// For t == 1 every structure collapses to {[1]}.
std::vector<Matrix> basis_matrices(WorkingStructure s, int t);

/// Coefficients (a1, a2) with a1*I + a2*M2 equal to the exact inverse of
/// the exchangeable correlation matrix with parameter rho. Derived by
/// numerical inversion rather than a closed-form expression.
std::pair<double, double> ec_inverse_coeffs(double rho, int t);

}  // namespace gaplm
