#pragma once

// The coarse stroboscopic map h (lift, integrate one forcing period,
// restrict), its average over r realizations of mu, finite-difference
// Jacobians, and Newton's method for coarse fixed points.

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "vdpnet/hermite_chaos.hpp"
#include "vdpnet/network.hpp"

namespace vdpnet {

struct CoarseMapConfig {
  int q = 1;
  int r = 20;
  // Seeds of the r realizations. Empty means derive_seed(base_seed, j), j < r.
  std::vector<std::uint64_t> realization_seeds;
  std::uint64_t base_seed = 1;
  double fd_step = 1e-5;
  double newton_tol = 1e-8;
  int newton_max_iter = 25;
  IntegratorOptions integrator;

  std::vector<std::uint64_t> seeds() const;
  void validate() const;  // throws DomainError
};

/// h(z) for one realization.
ChaosCoeffs coarse_map(const ChaosCoeffs& z, const ModelParams& params, const Heterogeneity& het,
                       const IntegratorOptions& options = {});

/// A coarse map on stacked coordinates, parameterized by the model
/// parameters. Continuation and the Jacobian routines accept any such map, so
/// synthetic maps can stand in for the network.
using CoarseMapFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const ModelParams&)>;

/// The realization-averaged map: every member starts from the same z, and the
/// realizations are fixed at construction (common random numbers).
class AveragedMap {
 public:
  AveragedMap(int n_osc, CoarseMapConfig config);

  int dimension() const { return 2 * (config_.q + 1); }
  int n_osc() const { return n_osc_; }
  const CoarseMapConfig& config() const { return config_; }
  const std::vector<ChaosBasis>& realizations() const { return *bases_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& z, const ModelParams& params) const;
  /// Individual member outputs, in seed order.
  std::vector<Eigen::VectorXd> members(const Eigen::VectorXd& z, const ModelParams& params) const;

  CoarseMapFn as_function() const;

 private:
  int n_osc_;
  CoarseMapConfig config_;
  std::shared_ptr<const std::vector<ChaosBasis>> bases_;
};

ChaosCoeffs averaged_map(const ChaosCoeffs& z, const ModelParams& params, const CoarseMapConfig& config);

/// Central-difference Jacobian; column k = [m(z + d e_k) - m(z - d e_k)] / (2d).
Eigen::MatrixXd finite_difference_jacobian(const CoarseMapFn& map, const Eigen::VectorXd& z,
                                           const ModelParams& params, double step);

Eigen::MatrixXd coarse_jacobian(const ChaosCoeffs& z, const ModelParams& params, const CoarseMapConfig& config);

/// Eigenvalues sorted by decreasing modulus.
std::vector<std::complex<double>> spectrum(const Eigen::MatrixXd& m);
bool all_inside_unit_circle(const std::vector<std::complex<double>>& eigenvalues);

struct NewtonOptions {
  double fd_step = 1e-5;
  double tol = 1e-8;
  int max_iter = 25;
};

struct CoarseFixedPoint {
  ChaosCoeffs z;
  double residual = 0.0;  // ||h(z) - z||_inf
  std::vector<std::complex<double>> eigenvalues;
  bool stable = false;
  int iterations = 0;
  std::vector<double> residual_history;
  Eigen::MatrixXd jacobian;
};

/// Newton's method on F(z) = map(z) - z with a finite-difference Jacobian.
/// Throws ConvergenceError after max_iter iterations and SingularJacobian when
/// J - I cannot be factored reliably (near a fold).
CoarseFixedPoint newton_fixed_point(const CoarseMapFn& map, const Eigen::VectorXd& z0,
                                    const ModelParams& params, const NewtonOptions& options = {});
CoarseFixedPoint newton_fixed_point(const ChaosCoeffs& z0, const ModelParams& params,
                                    const CoarseMapConfig& config);
CoarseFixedPoint newton_fixed_point(const AveragedMap& map, const ChaosCoeffs& z0, const ModelParams& params);

/// Initial guess by relaxation: lift `rough` with the first realization,
/// integrate `periods` forcing periods and restrict.
ChaosCoeffs relaxed_guess(const ChaosCoeffs& rough, const ModelParams& params, const CoarseMapConfig& config,
                          int periods = 30);

}  // namespace vdpnet
