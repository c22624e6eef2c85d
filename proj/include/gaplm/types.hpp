#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gaplm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One cluster of longitudinal observations. All matrices share T rows.
struct Cluster {
  Vector y;  // responses, length T
  Matrix x;  // nonparametric covariates, T x d_x, values in [0,1]
  Matrix z;  // parametric covariates, T x d_z, first column all ones

  Eigen::Index size() const { return y.size(); }
};

struct ClusterDataset {
  std::vector<Cluster> clusters;
  int d_x = 0;
  int d_z = 0;

  int n_clusters() const { return static_cast<int>(clusters.size()); }
  long n_obs() const {
    long n = 0;
    for (const auto& c : clusters) n += c.size();
    return n;
  }
};

enum class WorkingStructure { Independence, Exchangeable, Ar1 };
enum class FamilyKind { GaussianIdentity, BinomialLogit };
enum class PenaltyKind { Scad, Lasso, None };

struct FitConfig {
  int spline_degree = 1;  // p; spline order is p+1
  WorkingStructure structure = WorkingStructure::Exchangeable;
  FamilyKind family = FamilyKind::GaussianIdentity;
  std::vector<double> lambda_grid;  // empty -> default log-spaced grid
  PenaltyKind penalty = PenaltyKind::Scad;
  double scad_a = 3.7;
  double threshold_eps = 1e-6;
  double tol = 1e-6;
  int max_iterations = 200;
  // Ridge added to C_n before inversion. Negative selects the automatic
  // value 1e-8 * trace(C_n)/dim; exactly zero uses a pseudo-inverse with
  // relative eigenvalue cutoff 1e-10.
  double ridge_delta = -1.0;
  // Recompute C_n at every Newton iterate of the unpenalized solver
  // (true) or freeze it at the initial value of each solve (false). The
  // penalized solver always freezes C_n at its starting value.
  bool recompute_cn = true;
  // Relative ridge (times trace/dim) added to the frozen weight matrix in
  // the penalized solver and the EBIC fit term. The sample second-moment
  // matrix of the extended scores overfits when the score dimension is
  // comparable to the cluster count, which inflates objective differences
  // between supports; shrinking it toward a scaled identity restores the
  // chi-square scale that the EBIC constants assume.
  double selection_ridge = 0.03;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Report-style structural checks: dimensions, X range, intercept column.
ValidationReport validate_dataset(const ClusterDataset& ds);

/// Dataset restricted to the given X and Z column indices (in order).
ClusterDataset subset_columns(const ClusterDataset& ds, const std::vector<int>& x_cols,
                              const std::vector<int>& z_cols);

/// Packed parameter vector theta = (beta', gamma_1', ..., gamma_dx')'.
struct Theta {
  Vector beta;                // d_z
  std::vector<Vector> gamma;  // d_x blocks, each of length J_n

  int d_z() const { return static_cast<int>(beta.size()); }
  int d_x() const { return static_cast<int>(gamma.size()); }
  int basis_dim() const { return gamma.empty() ? 0 : static_cast<int>(gamma[0].size()); }
  int packed_dim() const { return d_z() + d_x() * basis_dim(); }

  Vector pack() const;
  static Theta unpack(const Vector& v, int d_z, int d_x, int j_n);
};

}  // namespace gaplm
