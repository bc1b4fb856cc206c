#pragma once

// Coarse projective integration: short bursts of full RK4 integration,
// restriction at every burst step, polynomial extrapolation of the chaos
// coefficients over a longer horizon, and lifting to restart.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "vdpnet/hermite_chaos.hpp"
#include "vdpnet/network.hpp"

namespace vdpnet {

struct ProjectionSchedule {
  double dt = 0.005;
  int n_inner = 3;    // burst length in steps
  int n_project = 1;  // projection horizon in steps
  int fit_order = 3;  // extrapolation polynomial degree

  void validate() const;  // throws DomainError
};

/// Supplies the mu realization used at each lift.
class RealizationSource {
 public:
  /// The same realization for every lift.
  static RealizationSource fixed(Heterogeneity het);
  /// A fresh standard-normal draw per lift; the k-th draw is a pure function
  /// of (seed, k).
  static RealizationSource fresh(int n_osc, std::uint64_t seed);

  const Heterogeneity& next();
  bool is_fresh() const { return fresh_; }
  int lifts() const { return lifts_; }

 private:
  RealizationSource() = default;
  bool fresh_ = false;
  int n_osc_ = 0;
  std::uint64_t seed_ = 0;
  int lifts_ = 0;
  Heterogeneity current_;
};

enum class SampleKind { initial, burst, projected };

struct CoarseSample {
  double t = 0.0;
  ChaosCoeffs z;
  SampleKind kind = SampleKind::burst;
};

/// Value at t_eval of the degree-`order` polynomial fitted to (times, values).
/// With exactly order+1 samples this is interpolation by Newton divided
/// differences; with more it is a least-squares fit.
double extrapolate(std::span<const double> times, std::span<const double> values, int order,
                   double t_eval);

/// Runs cycles of lift / burst / restrict / extrapolate until `duration` is
/// covered and returns every coarse state computed, in time order. With
/// n_project = 0 no extrapolation or re-lifting happens, so the series equals
/// the restriction of one uninterrupted full integration.
std::vector<CoarseSample> projective_integrate(const ChaosCoeffs& initial, const ModelParams& params,
                                               const ProjectionSchedule& schedule,
                                               RealizationSource& realizations, double duration);

/// Restriction of a plain full integration from lift(initial) sampled every dt.
std::vector<CoarseSample> direct_coarse_trajectory(const ChaosCoeffs& initial, const ModelParams& params,
                                                   const Heterogeneity& het, double dt, double duration);

struct SpeedupReport {
  int n_project = 0;
  double direct_seconds = 0.0;
  double projective_seconds = 0.0;
  double ratio = 0.0;  // direct / projective
};

/// Wall-clock ratio of a direct integration (no restrictions) to a projective
/// integration over the same duration. The projective timing includes every
/// lift, restriction, fit and realization draw. Each timing is the median of
/// `repeats` runs.
SpeedupReport measure_speedup(const ModelParams& params, const ProjectionSchedule& schedule,
                              double duration, int q, std::uint64_t seed, int repeats = 5);

/// Smallest entry of the ascending list `n_project_values` from which every
/// larger value also has speedup > 1, if any.
std::optional<int> speedup_crossover(const std::vector<SpeedupReport>& reports);

}  // namespace vdpnet
