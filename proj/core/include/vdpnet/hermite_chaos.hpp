#pragma once

// Hermite polynomial chaos: the coarse description of a network state by the
// coefficients of x(mu) and y(mu) in physicists' Hermite polynomials H_j(mu).

#include <Eigen/Core>
#include <Eigen/QR>

#include "vdpnet/network.hpp"

namespace vdpnet {

/// Physicists' Hermite polynomial H_j(z): H_0 = 1, H_1 = 2z,
/// H_{j+1} = 2z H_j - 2j H_{j-1}.
double hermite(int j, double z);

/// Coarse state Z = (a_0..a_q, b_0..b_q).
struct ChaosCoeffs {
  Eigen::VectorXd a;
  Eigen::VectorXd b;

  ChaosCoeffs() = default;
  ChaosCoeffs(Eigen::VectorXd a_, Eigen::VectorXd b_);
  static ChaosCoeffs zero(int q);
  /// Inverse of stacked(); v must have even length.
  static ChaosCoeffs from_stacked(const Eigen::VectorXd& v);

  int order() const { return static_cast<int>(a.size()) - 1; }
  int dimension() const { return static_cast<int>(a.size() + b.size()); }
  Eigen::VectorXd stacked() const;
  bool all_finite() const { return a.allFinite() && b.allFinite(); }
};

/// N x (q+1) matrix with entries H_j(mu_i). Throws IllPosedRestriction when mu
/// has fewer than q+1 distinct values.
Eigen::MatrixXd design_matrix(const Eigen::VectorXd& mu, int q);

struct FitResidual {
  double x = 0.0;
  double y = 0.0;
};

/// Lifting and restriction for one realization of mu and one order q. The
/// orthogonal factorization of the design matrix is computed once.
class ChaosBasis {
 public:
  ChaosBasis(const Heterogeneity& het, int q);

  int order() const { return q_; }
  int size() const { return static_cast<int>(design_.rows()); }
  const Eigen::MatrixXd& design() const { return design_; }
  const Heterogeneity& heterogeneity() const { return het_; }

  /// Least-squares coefficients of x and y on the Hermite columns.
  ChaosCoeffs restrict_state(const NetworkState& state) const;
  Eigen::VectorXd restrict_values(const Eigen::VectorXd& values) const;

  /// x_i = sum_j a_j H_j(mu_i), y_i likewise; time set to t.
  NetworkState lift(const ChaosCoeffs& z, double t = 0.0) const;

  /// RMS least-squares residual of each variable divided by its standard
  /// deviation; 0 for data with zero variance.
  FitResidual fit_residual(const NetworkState& state) const;

 private:
  Heterogeneity het_;
  int q_;
  Eigen::MatrixXd design_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

ChaosCoeffs restrict_state(const NetworkState& state, const Heterogeneity& het, int q);
NetworkState lift(const ChaosCoeffs& z, const Heterogeneity& het, double t = 0.0);
FitResidual fit_residual(const NetworkState& state, const Heterogeneity& het, int q);

}  // namespace vdpnet
