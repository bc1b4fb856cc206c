#pragma once

// Synchrony classification by winding counts, phase-walkthrough periods from
// strobed coarse series, and chaos-fit snapshots of a developing network.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "vdpnet/continuation.hpp"
#include "vdpnet/hermite_chaos.hpp"
#include "vdpnet/network.hpp"

namespace vdpnet {

struct SyncOptions {
  int settle_periods = 50;
  int mean_periods = 10;  // window used to estimate each oscillator's mean and swing
  // Locking ratio: `oscillations` upward crossings per `periods` forcing periods.
  int oscillations = 1;
  int periods = 1;
  double quiescent_amplitude = 1e-3;  // peak-to-peak swing below this counts as quiescent
  double hysteresis = 0.05;           // crossing band as a fraction of the swing
  bool record_raster = false;
  std::optional<NetworkState> initial;  // default: every oscillator at (1, 0)
  IntegratorOptions integrator;
};

struct SyncReport {
  int n_osc = 0;
  int observe_periods = 0;
  int n_locked_cluster = 0;
  std::vector<int> desync_indices;
  std::vector<int> quiescent_indices;
  double desync_fraction = 0.0;
  bool cluster_locked_to_forcing = false;
  int modal_count = 0;
  std::vector<int> tied_counts;  // other counts as frequent as the modal one
  std::vector<int> per_oscillator_rotation;
  Eigen::MatrixXd raster;  // oscillator x strobe, x at each forcing period (when recorded)
};

/// Integrates past the settle window and counts upward crossings of each
/// oscillator's mean-removed x over `observe_periods` forcing periods. The
/// cluster is the set of oscillators sharing the modal count; it is locked to
/// the forcing when that count matches the locking ratio. Oscillators without
/// crossings or swing are quiescent, reported apart from the desynchronized.
SyncReport classify_synchrony(const ModelParams& params, const Heterogeneity& het, int observe_periods,
                              const SyncOptions& options = {});

/// Mean desynchronized fraction over the given realizations, suitable for the
/// continuation termination policy.
DesyncProbe make_desync_probe(std::vector<Heterogeneity> realizations, int observe_periods = 40,
                              SyncOptions options = {});

struct WalkthroughOptions {
  int settle_periods = 50;
  int budget_periods = 20000;  // strobes observed per frequency
  double band_mads = 3.0;
  int rearm_strobes = 3;  // in-band strobes needed before another slip can count
  int q = 1;              // chaos order of the strobed restriction (0 for a single oscillator)
  std::optional<NetworkState> initial;
  IntegratorOptions integrator;
};

struct WalkthroughEstimate {
  double omega = 0.0;
  double distance = 0.0;  // |omega - omega_star|
  bool resolved = false;  // false: fewer than two slips, period exceeds the budget
  int slips = 0;
  double period = 0.0;  // mean time between slips; NaN when unresolved
  double period_spread = 0.0;  // standard deviation of the slip intervals
};

/// Slow-modulation period of the strobed a_0 near a tongue boundary. A slip
/// is a strobe leaving the band median +- band_mads * MAD after it has stayed
/// inside for rearm_strobes strobes.
std::vector<WalkthroughEstimate> walkthrough_period(const ModelParams& params, const Heterogeneity& het,
                                                    double omega_star, const std::vector<double>& omega_values,
                                                    const WalkthroughOptions& options = {});

/// Slip times (in strobes) of a strobed series, exposed for testing.
std::vector<long> detect_slips(const std::vector<double>& strobed, double band_mads, int rearm_strobes);

struct CorrelationOptions {
  int q = 1;
  std::uint64_t seed = 1;  // initial x, y drawn uniformly from [-spread, spread]
  double spread = 2.0;
  IntegratorOptions integrator;
};

struct CorrelationSnapshot {
  double t = 0.0;
  Eigen::VectorXd mu;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  ChaosCoeffs fit;
  FitResidual residual;
};

/// Integrates from a random initial condition and records the state and its
/// chaos fit at each requested time (ascending, >= 0).
std::vector<CorrelationSnapshot> correlation_snapshot(const ModelParams& params, const Heterogeneity& het,
                                                      const std::vector<double>& times,
                                                      const CorrelationOptions& options = {});

}  // namespace vdpnet
