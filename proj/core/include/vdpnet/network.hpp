#pragma once

// Periodically forced, all-to-all coupled network of modified van der Pol
// oscillators:
//
//   dx_i/dt = y_i - x_i (x_i^2/3 - (phi + beta mu_i)) + x_i^2/2 - eps (x_i - mean(x))
//   dy_i/dt = -x_i + A sin(omega t)

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vdpnet {

struct ModelParams {
  double phi = 1.0;
  double beta = 0.0;
  double epsilon = 1.0;
  double amplitude = 0.5;
  double omega = 0.85;  // radians per unit time
  int n_osc = 500;

  double forcing_period() const;  // 2 pi / omega; requires omega > 0
  void validate() const;          // throws DomainError
};

/// Model parameters that continuation and sweeps may vary.
enum class Param { omega, amplitude, beta, phi, epsilon };

double get(const ModelParams& p, Param which);
void set(ModelParams& p, Param which, double value);
std::string_view to_string(Param which);
Param parse_param(std::string_view name);  // throws DomainError on unknown names

/// Deterministic child seed (splitmix64 of base and index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// The per-oscillator random parameters mu_i and the seed they were drawn from.
struct Heterogeneity {
  Eigen::VectorXd mu;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(mu.size()); }

  /// mu_i i.i.d. standard normal.
  static Heterogeneity gaussian(int n, std::uint64_t seed);
  static Heterogeneity from_values(Eigen::VectorXd mu, std::uint64_t seed = 0);
};

struct NetworkState {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double t = 0.0;

  NetworkState() = default;
  NetworkState(Eigen::VectorXd x_, Eigen::VectorXd y_, double t_ = 0.0)
      : x(std::move(x_)), y(std::move(y_)), t(t_) {}

  /// Every oscillator at (x0, y0).
  static NetworkState uniform(int n, double x0, double y0, double t = 0.0);

  int size() const { return static_cast<int>(x.size()); }
  bool all_finite() const;
};

struct Derivative {
  Eigen::VectorXd dx;
  Eigen::VectorXd dy;
};

/// Time derivative at state.t. Coupling is evaluated through the network mean.
Derivative rhs(const NetworkState& state, const ModelParams& params, const Heterogeneity& het);

struct IntegratorOptions {
  double dt = 0.005;
  double blowup_guard = 1e6;
};

/// Fixed-step classical RK4 for one network. Holds the stage buffers so that
/// repeated stepping does not allocate.
class NetworkIntegrator {
 public:
  NetworkIntegrator(const ModelParams& params, const Heterogeneity& het, IntegratorOptions options = {});

  const ModelParams& params() const { return params_; }
  const IntegratorOptions& options() const { return options_; }

  /// One RK4 step of size h. Does not check the blow-up guard.
  void step(NetworkState& state, double h);

  /// Advances by `duration`: floor(duration/dt) full steps, then one shortened
  /// step landing exactly on t0 + duration. `observer(state)` is called after
  /// every step.
  template <class Observer>
  void advance(NetworkState& state, double duration, Observer&& observer);
  void advance(NetworkState& state, double duration) {
    advance(state, duration, [](const NetworkState&) {});
  }

  /// Step count and the length of the final partial step used by advance().
  std::pair<long, double> step_plan(double duration) const;

 private:
  void check_guard(const NetworkState& state) const;
  void eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t, Eigen::VectorXd& dx,
            Eigen::VectorXd& dy) const;

  ModelParams params_;
  IntegratorOptions options_;
  Eigen::ArrayXd excitability_;  // phi + beta mu_i
  Eigen::VectorXd k1x_, k1y_, k2x_, k2y_, k3x_, k3y_, k4x_, k4y_, tx_, ty_;
};

NetworkState integrate(NetworkState state, const ModelParams& params, const Heterogeneity& het,
                       double duration, const IntegratorOptions& options = {});

/// The full stroboscopic map g: integrate over exactly one forcing period.
NetworkState strobe_full(NetworkState state, const ModelParams& params, const Heterogeneity& het,
                         const IntegratorOptions& options = {});

struct FrequencyEstimate {
  bool quiescent = false;
  double angular_frequency = 0.0;
  int crossings = 0;
  double amplitude = 0.0;  // peak-to-peak of x_1 over the measurement window
};

struct FrequencyOptions {
  double settle_time = 400.0;
  double measure_time = 200.0;
  double x0 = 1.0;
  double y0 = 0.0;
  // Peak-to-peak amplitude below which the signal counts as a decaying transient.
  double quiescent_amplitude = 1e-6;
  IntegratorOptions integrator;
};

/// Angular frequency of x_1 from interpolated upward zero-crossings of the
/// mean-removed signal. Requires A = 0.
FrequencyEstimate measure_angular_frequency(const ModelParams& params, const Heterogeneity& het,
                                            const FrequencyOptions& options = {});

// ---------------------------------------------------------------------------

template <class Observer>
void NetworkIntegrator::advance(NetworkState& state, double duration, Observer&& observer) {
  const auto [full_steps, last] = step_plan(duration);
  const double t0 = state.t;
  for (long k = 0; k < full_steps; ++k) {
    step(state, options_.dt);
    state.t = t0 + static_cast<double>(k + 1) * options_.dt;
    check_guard(state);
    observer(state);
  }
  if (last > 0.0) {
    step(state, last);
    check_guard(state);
  }
  if (full_steps > 0 || last > 0.0) {
    state.t = t0 + duration;
    if (last > 0.0) observer(state);
  }
}

}  // namespace vdpnet
