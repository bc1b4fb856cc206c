#include "vdpnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "vdpnet/errors.hpp"
#include "vdpnet/parallel.hpp"

namespace vdpnet {

namespace {

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

NetworkState starting_state(const std::optional<NetworkState>& initial, int n) {
  if (!initial) return NetworkState::uniform(n, 1.0, 0.0);
  if (initial->size() != n) throw DomainError("initial state size does not match n_osc");
  NetworkState s = *initial;
  s.t = 0.0;
  return s;
}

}  // namespace

SyncReport classify_synchrony(const ModelParams& params, const Heterogeneity& het, int observe_periods,
                              const SyncOptions& options) {
  if (observe_periods < 20) throw DomainError("observe_periods must be >= 20");
  if (options.settle_periods < 0 || options.mean_periods < 1) throw DomainError("invalid settle/mean windows");
  if (options.oscillations < 1 || options.periods < 1) throw DomainError("locking ratio must be positive");
  const int n = params.n_osc;
  NetworkIntegrator integrator(params, het, options.integrator);
  const double period = params.forcing_period();
  NetworkState s = starting_state(options.initial, n);
  integrator.advance(s, options.settle_periods * period);

  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd lo = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::ArrayXd hi = -lo;
  long samples = 0;
  integrator.advance(s, options.mean_periods * period, [&](const NetworkState& st) {
    sum += st.x.array();
    lo = lo.min(st.x.array());
    hi = hi.max(st.x.array());
    ++samples;
  });
  const Eigen::ArrayXd mean = sum / static_cast<double>(std::max<long>(samples, 1));
  const Eigen::ArrayXd swing = hi - lo;
  const Eigen::ArrayXd upper = mean + options.hysteresis * swing;
  const Eigen::ArrayXd lower = mean - options.hysteresis * swing;

  SyncReport rep;
  rep.n_osc = n;
  rep.observe_periods = observe_periods;
  rep.per_oscillator_rotation.assign(static_cast<std::size_t>(n), 0);
  std::vector<char> armed(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) armed[static_cast<std::size_t>(i)] = s.x[i] < lower[i];
  auto count = [&](const NetworkState& st) {
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (armed[k] && st.x[i] > upper[i]) {
        ++rep.per_oscillator_rotation[k];
        armed[k] = 0;
      } else if (st.x[i] < lower[i]) {
        armed[k] = 1;
      }
    }
  };
  if (options.record_raster) rep.raster.resize(n, observe_periods);
  for (int k = 0; k < observe_periods; ++k) {
    integrator.advance(s, period, count);
    if (options.record_raster) rep.raster.col(k) = s.x;
  }

  std::map<int, int> histogram;
  for (int i = 0; i < n; ++i) {
    const int c = rep.per_oscillator_rotation[static_cast<std::size_t>(i)];
    if (swing[i] < options.quiescent_amplitude || c == 0) {
      rep.quiescent_indices.push_back(i);
    } else {
      ++histogram[c];
    }
  }
  int best = 0;
  for (const auto& [c, freq] : histogram) {
    if (freq > best) {
      best = freq;
      rep.modal_count = c;
    }
  }
  for (const auto& [c, freq] : histogram) {
    if (freq == best && c != rep.modal_count) rep.tied_counts.push_back(c);
  }
  const std::vector<int> quiet = rep.quiescent_indices;
  for (int i = 0; i < n; ++i) {
    if (std::binary_search(quiet.begin(), quiet.end(), i)) continue;
    if (rep.per_oscillator_rotation[static_cast<std::size_t>(i)] == rep.modal_count) {
      ++rep.n_locked_cluster;
    } else {
      rep.desync_indices.push_back(i);
    }
  }
  rep.desync_fraction = static_cast<double>(rep.desync_indices.size()) / n;
  rep.cluster_locked_to_forcing =
      rep.n_locked_cluster > 0 && rep.modal_count * options.periods == observe_periods * options.oscillations;
  return rep;
}

DesyncProbe make_desync_probe(std::vector<Heterogeneity> realizations, int observe_periods, SyncOptions options) {
  if (realizations.empty()) throw DomainError("desync probe needs at least one realization");
  return [hets = std::move(realizations), observe_periods, options](const ModelParams& p) {
    std::vector<double> f(hets.size());
    parallel_for(hets.size(), [&](std::size_t j) {
      f[j] = classify_synchrony(p, hets[j], observe_periods, options).desync_fraction;
    });
    double total = 0.0;
    for (double v : f) total += v;
    return total / static_cast<double>(f.size());
  };
}

std::vector<long> detect_slips(const std::vector<double>& strobed, double band_mads, int rearm_strobes) {
  std::vector<long> slips;
  if (strobed.empty()) return slips;
  const double m = median(strobed);
  std::vector<double> dev(strobed.size());
  for (std::size_t k = 0; k < strobed.size(); ++k) dev[k] = std::abs(strobed[k] - m);
  double band = band_mads * median(dev);
  if (!(band > 0.0)) band = 1e-12 * std::max(1.0, std::abs(m));
  int inside = 0;
  bool armed = false;
  for (std::size_t k = 0; k < strobed.size(); ++k) {
    if (std::abs(strobed[k] - m) <= band) {
      if (++inside >= rearm_strobes) armed = true;
    } else {
      if (armed) slips.push_back(static_cast<long>(k));
      armed = false;
      inside = 0;
    }
  }
  return slips;
}

std::vector<WalkthroughEstimate> walkthrough_period(const ModelParams& params, const Heterogeneity& het,
                                                    double omega_star, const std::vector<double>& omega_values,
                                                    const WalkthroughOptions& options) {
  if (options.budget_periods < 2) throw DomainError("budget_periods must be >= 2");
  if (!(options.band_mads > 0.0)) throw DomainError("band_mads must be > 0");
  const int q = params.n_osc == 1 ? 0 : options.q;
  const ChaosBasis basis(het, q);
  std::vector<WalkthroughEstimate> out(omega_values.size());
  parallel_for(omega_values.size(), [&](std::size_t j) {
    ModelParams p = params;
    p.omega = omega_values[j];
    const double period = p.forcing_period();
    NetworkIntegrator integrator(p, het, options.integrator);
    NetworkState s = starting_state(options.initial, p.n_osc);
    integrator.advance(s, options.settle_periods * period);
    std::vector<double> a0(static_cast<std::size_t>(options.budget_periods));
    for (auto& v : a0) {
      integrator.advance(s, period);
      v = basis.restrict_values(s.x)[0];
    }
    const auto slips = detect_slips(a0, options.band_mads, options.rearm_strobes);
    WalkthroughEstimate& e = out[j];
    e.omega = p.omega;
    e.distance = std::abs(p.omega - omega_star);
    e.slips = static_cast<int>(slips.size());
    if (slips.size() < 2) {
      e.period = std::numeric_limits<double>::quiet_NaN();
      e.period_spread = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    e.resolved = true;
    const auto intervals = static_cast<double>(slips.size() - 1);
    e.period = static_cast<double>(slips.back() - slips.front()) / intervals * period;
    double var = 0.0;
    for (std::size_t k = 1; k < slips.size(); ++k) {
      const double d = static_cast<double>(slips[k] - slips[k - 1]) * period - e.period;
      var += d * d;
    }
    e.period_spread = std::sqrt(var / intervals);
  });
  return out;
}

std::vector<CorrelationSnapshot> correlation_snapshot(const ModelParams& params, const Heterogeneity& het,
                                                      const std::vector<double>& times,
                                                      const CorrelationOptions& options) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || (k > 0 && times[k] < times[k - 1])) {
      throw DomainError("snapshot times must be ascending and >= 0");
    }
  }
  const ChaosBasis basis(het, options.q);
  const int n = params.n_osc;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-options.spread, options.spread);
  NetworkState s;
  s.x.resize(n);
  s.y.resize(n);
  for (int i = 0; i < n; ++i) s.x[i] = uniform(rng);
  for (int i = 0; i < n; ++i) s.y[i] = uniform(rng);
  NetworkIntegrator integrator(params, het, options.integrator);
  std::vector<CorrelationSnapshot> out;
  out.reserve(times.size());
  for (double t : times) {
    integrator.advance(s, t - s.t);
    s.t = t;
    CorrelationSnapshot snap;
    snap.t = t;
    snap.mu = het.mu;
    snap.x = s.x;
    snap.y = s.y;
    snap.fit = basis.restrict_state(s);
    snap.residual = basis.fit_residual(s);
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace vdpnet
