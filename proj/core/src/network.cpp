#include "vdpnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vdpnet/errors.hpp"

namespace vdpnet {

double ModelParams::forcing_period() const {
  if (!(omega > 0.0)) throw DomainError("forcing period requires omega > 0");
  return 2.0 * std::numbers::pi / omega;
}

void ModelParams::validate() const {
  if (n_osc < 1) throw DomainError("n_osc must be >= 1");
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  if (!(amplitude >= 0.0)) throw DomainError("amplitude must be >= 0");
  for (double v : {phi, beta, epsilon, amplitude, omega}) {
    if (!std::isfinite(v)) throw DomainError("model parameters must be finite");
  }
}

double get(const ModelParams& p, Param which) {
  switch (which) {
    case Param::omega: return p.omega;
    case Param::amplitude: return p.amplitude;
    case Param::beta: return p.beta;
    case Param::phi: return p.phi;
    case Param::epsilon: return p.epsilon;
  }
  return 0.0;
}

void set(ModelParams& p, Param which, double value) {
  switch (which) {
    case Param::omega: p.omega = value; break;
    case Param::amplitude: p.amplitude = value; break;
    case Param::beta: p.beta = value; break;
    case Param::phi: p.phi = value; break;
    case Param::epsilon: p.epsilon = value; break;
  }
}

std::string_view to_string(Param which) {
  switch (which) {
    case Param::omega: return "omega";
    case Param::amplitude: return "amplitude";
    case Param::beta: return "beta";
    case Param::phi: return "phi";
    case Param::epsilon: return "epsilon";
  }
  return "?";
}

Param parse_param(std::string_view name) {
  if (name == "omega" || name == "w") return Param::omega;
  if (name == "amplitude" || name == "A") return Param::amplitude;
  if (name == "beta") return Param::beta;
  if (name == "phi") return Param::phi;
  if (name == "epsilon" || name == "eps") return Param::epsilon;
  throw DomainError("unknown parameter name '" + std::string(name) + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Heterogeneity Heterogeneity::gaussian(int n, std::uint64_t seed) {
  if (n < 1) throw DomainError("heterogeneity size must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Heterogeneity h;
  h.seed = seed;
  h.mu.resize(n);
  for (int i = 0; i < n; ++i) h.mu[i] = normal(rng);
  return h;
}

Heterogeneity Heterogeneity::from_values(Eigen::VectorXd mu, std::uint64_t seed) {
  Heterogeneity h;
  h.mu = std::move(mu);
  h.seed = seed;
  return h;
}

NetworkState NetworkState::uniform(int n, double x0, double y0, double t) {
  return NetworkState(Eigen::VectorXd::Constant(n, x0), Eigen::VectorXd::Constant(n, y0), t);
}

bool NetworkState::all_finite() const {
  return x.allFinite() && y.allFinite() && std::isfinite(t);
}

namespace {

void check_dimensions(const NetworkState& state, const ModelParams& params, const Heterogeneity& het) {
  if (state.x.size() != state.y.size() || state.size() != params.n_osc || het.size() != params.n_osc) {
    std::ostringstream msg;
    msg << "dimension mismatch: x=" << state.x.size() << " y=" << state.y.size()
        << " n_osc=" << params.n_osc << " mu=" << het.size();
    throw DomainError(msg.str());
  }
}

}  // namespace

Derivative rhs(const NetworkState& state, const ModelParams& params, const Heterogeneity& het) {
  check_dimensions(state, params, het);
  if (!state.all_finite()) throw DomainError("non-finite network state");
  Derivative d;
  const double mean_x = state.x.mean();
  const auto x = state.x.array();
  const Eigen::ArrayXd c = params.phi + params.beta * het.mu.array();
  d.dx = (state.y.array() - x * (x.square() / 3.0 - c) + x.square() / 2.0 -
          params.epsilon * (x - mean_x))
             .matrix();
  d.dy = (-x + params.amplitude * std::sin(params.omega * state.t)).matrix();
  return d;
}

NetworkIntegrator::NetworkIntegrator(const ModelParams& params, const Heterogeneity& het,
                                     IntegratorOptions options)
    : params_(params), options_(options) {
  params_.validate();
  if (het.size() != params_.n_osc) throw DomainError("heterogeneity size does not match n_osc");
  if (!(options_.dt > 0.0)) throw DomainError("dt must be > 0");
  excitability_ = params_.phi + params_.beta * het.mu.array();
  const int n = params_.n_osc;
  for (auto* v : {&k1x_, &k1y_, &k2x_, &k2y_, &k3x_, &k3y_, &k4x_, &k4y_, &tx_, &ty_}) v->resize(n);
}

void NetworkIntegrator::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t,
                             Eigen::VectorXd& dx, Eigen::VectorXd& dy) const {
  const double mean_x = x.mean();
  const double forcing = params_.amplitude * std::sin(params_.omega * t);
  const double eps = params_.epsilon;
  const auto xa = x.array();
  dx.array() = y.array() - xa * (xa.square() * (1.0 / 3.0) - excitability_) + 0.5 * xa.square() -
               eps * (xa - mean_x);
  dy.array() = forcing - xa;
}

void NetworkIntegrator::step(NetworkState& s, double h) {
  const double t = s.t;
  eval(s.x, s.y, t, k1x_, k1y_);
  tx_ = s.x + (0.5 * h) * k1x_;
  ty_ = s.y + (0.5 * h) * k1y_;
  eval(tx_, ty_, t + 0.5 * h, k2x_, k2y_);
  tx_ = s.x + (0.5 * h) * k2x_;
  ty_ = s.y + (0.5 * h) * k2y_;
  eval(tx_, ty_, t + 0.5 * h, k3x_, k3y_);
  tx_ = s.x + h * k3x_;
  ty_ = s.y + h * k3y_;
  eval(tx_, ty_, t + h, k4x_, k4y_);
  s.x += (h / 6.0) * (k1x_ + 2.0 * k2x_ + 2.0 * k3x_ + k4x_);
  s.y += (h / 6.0) * (k1y_ + 2.0 * k2y_ + 2.0 * k3y_ + k4y_);
  s.t = t + h;
}

std::pair<long, double> NetworkIntegrator::step_plan(double duration) const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw DomainError("duration must be finite and >= 0");
  const double dt = options_.dt;
  const double ratio = duration / dt;
  long full = static_cast<long>(std::floor(ratio));
  double last = duration - static_cast<double>(full) * dt;
  // Durations that are a multiple of dt up to round-off take no partial step.
  if (last < 1e-9 * dt) {
    last = 0.0;
  } else if (dt - last < 1e-9 * dt) {
    ++full;
    last = 0.0;
  }
  return {full, last};
}

void NetworkIntegrator::check_guard(const NetworkState& s) const {
  const double g = options_.blowup_guard;
  const double m = std::max(s.x.cwiseAbs().maxCoeff(), s.y.cwiseAbs().maxCoeff());
  if (!(m <= g)) {
    std::ostringstream msg;
    msg << "network state diverged at t=" << s.t << " (max |component| = " << m << ")";
    throw DivergenceError(msg.str(), s.t);
  }
}

NetworkState integrate(NetworkState state, const ModelParams& params, const Heterogeneity& het,
                       double duration, const IntegratorOptions& options) {
  check_dimensions(state, params, het);
  if (!state.all_finite()) throw DomainError("non-finite network state");
  NetworkIntegrator integrator(params, het, options);
  integrator.advance(state, duration);
  return state;
}

NetworkState strobe_full(NetworkState state, const ModelParams& params, const Heterogeneity& het,
                         const IntegratorOptions& options) {
  return integrate(std::move(state), params, het, params.forcing_period(), options);
}

FrequencyEstimate measure_angular_frequency(const ModelParams& params, const Heterogeneity& het,
                                            const FrequencyOptions& options) {
  if (params.amplitude != 0.0) throw DomainError("frequency measurement requires A = 0");
  if (!(options.measure_time > 0.0)) throw DomainError("measure_time must be > 0");
  NetworkIntegrator integrator(params, het, options.integrator);
  NetworkState s = NetworkState::uniform(params.n_osc, options.x0, options.y0);
  integrator.advance(s, options.settle_time);

  std::vector<double> times;
  std::vector<double> values;
  const auto expected = static_cast<std::size_t>(options.measure_time / options.integrator.dt) + 2;
  times.reserve(expected);
  values.reserve(expected);
  times.push_back(s.t);
  values.push_back(s.x[0]);
  integrator.advance(s, options.measure_time, [&](const NetworkState& st) {
    times.push_back(st.t);
    values.push_back(st.x[0]);
  });

  FrequencyEstimate est;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  est.amplitude = *hi - *lo;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());

  std::vector<double> crossings;
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double a = values[k - 1] - mean;
    const double b = values[k] - mean;
    if (a < 0.0 && b >= 0.0) {
      const double frac = a / (a - b);
      crossings.push_back(times[k - 1] + frac * (times[k] - times[k - 1]));
    }
  }
  est.crossings = static_cast<int>(crossings.size());
  if (crossings.size() < 2 || est.amplitude < options.quiescent_amplitude) {
    est.quiescent = true;
    return est;
  }
  const double span = crossings.back() - crossings.front();
  est.angular_frequency =
      2.0 * std::numbers::pi * static_cast<double>(crossings.size() - 1) / span;
  return est;
}

}  // namespace vdpnet
