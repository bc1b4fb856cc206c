#pragma once

// Pseudo-arclength continuation of coarse fixed points and two-parameter
// tracking of their saddle-node (fold) and Neimark-Sacker (Hopf) curves.
//
// Every routine works on a CoarseMapFn so that the realization-averaged
// network map and small synthetic maps go through the same code.

#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vdpnet/coarse_map.hpp"
#include "vdpnet/network.hpp"

namespace vdpnet {

struct ParamBound {
  Param param;
  double lo;
  double hi;
};

struct ContinuationConfig {
  double initial_step = 0.02;
  double min_step = 1e-6;
  double max_step = 0.1;
  double corrector_tol = 1e-8;
  int corrector_max_iter = 25;
  int max_points = 400;
  int direction = +1;     // sign of the first step in the leading free parameter
  double fd_step = 1e-5;  // Jacobians of the continuation residual
  double direction_step = 1e-4;  // directional derivatives J v inside fold/Hopf residuals
  double step_growth = 1.3;
  int fast_iterations = 3;  // grow the step when the corrector needs at most this many
  // Steps whose secant turns by more than this (radians) from the previous
  // direction are rejected; guards against jumping between nearby sheets.
  double max_turn_angle = 0.35;
  double fold_tol = 1e-9;   // |det(J - I)| at a refined fold
  double hopf_tol = 1e-9;   // |lambda lambda* - 1| at a refined Hopf point
  double endpoint_tol = 1e-9;  // |kappa -+ 1| at refined Hopf-curve ends
  bool stop_on_closed_loop = true;
  std::vector<ParamBound> bounds;  // parameters absent here are unbounded

  void validate() const;  // throws DomainError
  std::optional<ParamBound> bound_for(Param p) const;
};

enum class Termination {
  max_points,
  domain_boundary,
  closed_loop,
  curve_endpoint,
  min_step_underflow,
  numerical_failure,
  physics_breakdown,
};

std::string_view to_string(Termination t);

struct BranchPoint {
  ModelParams params;
  std::vector<Param> active;  // free parameters of the run
  ChaosCoeffs z;
  std::vector<std::complex<double>> eigenvalues;  // decreasing modulus
  bool stable = false;
  double fold_test = 0.0;  // det(J - I)
  // |lambda|^2 - 1 of the complex pair closest to the unit circle; NaN when
  // the spectrum has no complex pair.
  double hopf_test = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();  // arg of that pair, in [0, pi]
  double arclength = 0.0;
  Eigen::VectorXd unknowns;  // full continuation vector (z, [v | w, kappa], params)

  double param(Param p) const { return get(params, p); }
  int unstable_count() const;
};

struct Branch {
  std::vector<BranchPoint> points;
  Termination reason = Termination::max_points;
  std::string message;
  double desync_fraction = std::numeric_limits<double>::quiet_NaN();  // set by physics-breakdown checks
};

/// Returns the desynchronized fraction of the network at the given parameters.
using DesyncProbe = std::function<double(const ModelParams&)>;

/// Physics-breakdown rule: after `failure_limit` consecutive corrector failures
/// the probe is consulted; a fraction >= threshold ends the run with
/// Termination::physics_breakdown, otherwise step halving continues.
struct TerminationPolicy {
  DesyncProbe desync_probe;
  double desync_threshold = 0.01;
  int failure_limit = 3;
  bool probe_every_point = false;  // also probe each accepted point
};

/// One-parameter continuation of map fixed points in `free_param`.
/// Throws DomainError for A = 0 with free_param = omega (the locked family is
/// not isolated without forcing) and CannotStart when the first step fails.
Branch continue_branch(const CoarseMapFn& map, const CoarseFixedPoint& start, const ModelParams& params,
                       Param free_param, const ContinuationConfig& config);

/// Both directions from `start`, joined into one ordered branch. A closed
/// curve is reported once.
Branch continue_branch_both(const CoarseMapFn& map, const CoarseFixedPoint& start, const ModelParams& params,
                            Param free_param, const ContinuationConfig& config);

/// Indices k with a sign change of the fold test between points k and k+1.
std::vector<std::size_t> fold_brackets(const Branch& branch);
std::vector<std::size_t> hopf_brackets(const Branch& branch);

/// Refines the fold between branch.points[k] and [k+1] by secant steps along
/// the branch. Throws NotAFold without a sign change.
BranchPoint detect_fold(const CoarseMapFn& map, const Branch& branch, std::size_t k,
                        const ContinuationConfig& config);

/// Refines a Neimark-Sacker point between branch.points[k] and [k+1]. Throws
/// NotAHopf without a sign change of the Hopf test and ResonanceAmbiguity if
/// the critical pair turns real during refinement.
BranchPoint detect_hopf(const CoarseMapFn& map, const Branch& branch, std::size_t k,
                        const ContinuationConfig& config);

/// Continues a refined fold in two parameters (the first leads the initial
/// direction) on the system {h(z) - z = 0, (J - I) v = 0, |v| = 1}.
Branch continue_fold_curve(const CoarseMapFn& map, const BranchPoint& fold,
                           std::pair<Param, Param> free_params, const ContinuationConfig& config,
                           const TerminationPolicy& policy = {});

struct HopfCurve {
  Branch curve;  // ordered by arclength; every point carries theta
  bool theta_monotone = false;
  Termination reason_backward = Termination::max_points;
  Termination reason_forward = Termination::max_points;
};

/// Continues a Neimark-Sacker point in two parameters, in both directions,
/// until the critical pair reaches +1 (theta = 0) or -1 (theta = pi). Uses the
/// real form {h(z) - z = 0, (J^2 - 2 kappa J + I) w = 0, |w| = 1, l.w = 0}
/// with kappa = cos(theta), which stays regular at both curve ends.
HopfCurve continue_hopf_curve(const CoarseMapFn& map, const BranchPoint& hopf,
                              std::pair<Param, Param> free_params, const ContinuationConfig& config,
                              const TerminationPolicy& policy = {});

/// Spectrum-derived test values of a Jacobian of the map.
struct TestFunctions {
  double fold = 0.0;
  double hopf = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
};
TestFunctions test_functions(const Eigen::MatrixXd& jacobian,
                             const std::vector<std::complex<double>>& eigenvalues);

}  // namespace vdpnet
