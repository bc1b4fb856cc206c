#include "vdpnet/projective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/QR>

#include "vdpnet/errors.hpp"

namespace vdpnet {

void ProjectionSchedule::validate() const {
  if (!(dt > 0.0)) throw DomainError("schedule dt must be > 0");
  if (fit_order < 0) throw DomainError("fit_order must be >= 0");
  if (n_inner < fit_order || n_inner < 1) throw DomainError("n_inner must be >= max(1, fit_order)");
  if (n_project < 0) throw DomainError("n_project must be >= 0");
}

RealizationSource RealizationSource::fixed(Heterogeneity het) {
  RealizationSource s;
  s.fresh_ = false;
  s.n_osc_ = het.size();
  s.current_ = std::move(het);
  return s;
}

RealizationSource RealizationSource::fresh(int n_osc, std::uint64_t seed) {
  RealizationSource s;
  s.fresh_ = true;
  s.n_osc_ = n_osc;
  s.seed_ = seed;
  return s;
}

const Heterogeneity& RealizationSource::next() {
  if (fresh_) current_ = Heterogeneity::gaussian(n_osc_, derive_seed(seed_, static_cast<std::uint64_t>(lifts_)));
  ++lifts_;
  return current_;
}

double extrapolate(std::span<const double> times, std::span<const double> values, int order,
                   double t_eval) {
  const std::size_t m = times.size();
  if (m != values.size() || m < static_cast<std::size_t>(order) + 1) {
    throw DomainError("extrapolation needs at least order+1 samples");
  }
  const double t_ref = times.back();
  if (m == static_cast<std::size_t>(order) + 1) {
    // Newton divided differences on times shifted to the last sample.
    std::vector<double> coef(values.begin(), values.end());
    for (std::size_t level = 1; level < m; ++level) {
      for (std::size_t i = m - 1; i >= level; --i) {
        coef[i] = (coef[i] - coef[i - 1]) / (times[i] - times[i - level]);
      }
    }
    double p = coef[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) p = p * (t_eval - times[i]) + coef[i];
    return p;
  }
  // Least squares in a scaled time variable to keep the Vandermonde matrix tame.
  const double scale = std::max(std::abs(times.back() - times.front()), 1e-300);
  Eigen::MatrixXd v(m, order + 1);
  Eigen::VectorXd rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = (times[i] - t_ref) / scale;
    double pw = 1.0;
    for (int j = 0; j <= order; ++j) {
      v(static_cast<Eigen::Index>(i), j) = pw;
      pw *= s;
    }
    rhs[static_cast<Eigen::Index>(i)] = values[i];
  }
  const Eigen::VectorXd c = v.colPivHouseholderQr().solve(rhs);
  const double s = (t_eval - t_ref) / scale;
  double p = 0.0;
  for (int j = order; j >= 0; --j) p = p * s + c[j];
  return p;
}

std::vector<CoarseSample> projective_integrate(const ChaosCoeffs& initial, const ModelParams& params,
                                               const ProjectionSchedule& schedule,
                                               RealizationSource& realizations, double duration) {
  schedule.validate();
  params.validate();
  if (!(duration > 0.0)) throw DomainError("duration must be > 0");
  if (!initial.all_finite()) throw DomainError("non-finite initial coarse state");
  const int q = initial.order();
  const int dim = initial.dimension();
  const IntegratorOptions opts{schedule.dt};
  const double tol = 1e-9 * schedule.dt;

  std::vector<CoarseSample> out;
  out.push_back({0.0, initial, SampleKind::initial});

  const Heterogeneity* het = &realizations.next();
  ChaosBasis basis(*het, q);
  NetworkState state = basis.lift(initial, 0.0);
  ChaosCoeffs z = initial;

  NetworkIntegrator integrator(params, *het, opts);
  std::vector<double> times(schedule.n_inner + 1);
  std::vector<std::vector<double>> series(dim, std::vector<double>(schedule.n_inner + 1));

  // Times are counted in whole steps from the last lift so that a run
  // without projection reproduces a plain integration bit for bit.
  double lift_time = 0.0;
  long steps_since_lift = 0;
  for (int cycle = 0; state.t < duration - tol; ++cycle) {
    const Eigen::VectorXd z0 = z.stacked();
    times[0] = state.t;
    for (int c = 0; c < dim; ++c) series[c][0] = z0[c];
    const double t0 = state.t;
    for (int k = 1; k <= schedule.n_inner; ++k) {
      try {
        integrator.step(state, schedule.dt);
        state.t = lift_time + static_cast<double>(++steps_since_lift) * schedule.dt;
        if (!state.all_finite() || std::max(state.x.cwiseAbs().maxCoeff(), state.y.cwiseAbs().maxCoeff()) >
                                       integrator.options().blowup_guard) {
          throw DivergenceError("burst diverged", state.t);
        }
      } catch (const DivergenceError& e) {
        std::ostringstream msg;
        msg << "projective burst diverged in cycle " << cycle << " at t=" << e.time();
        throw BurstDivergence(msg.str(), cycle);
      }
      z = basis.restrict_state(state);
      const Eigen::VectorXd zk = z.stacked();
      times[k] = state.t;
      for (int c = 0; c < dim; ++c) series[c][k] = zk[c];
      out.push_back({state.t, z, SampleKind::burst});
      if (state.t >= duration - tol) break;
    }
    if (state.t >= duration - tol) break;
    if (schedule.n_project == 0) continue;

    const double t_target = t0 + (schedule.n_inner + schedule.n_project) * schedule.dt;
    Eigen::VectorXd next(dim);
    for (int c = 0; c < dim; ++c) {
      next[c] = extrapolate(times, series[c], schedule.fit_order, t_target);
    }
    if (!next.allFinite()) {
      std::ostringstream msg;
      msg << "extrapolated coarse state is non-finite in cycle " << cycle;
      throw ProjectionOvershoot(msg.str(), cycle);
    }
    z = ChaosCoeffs::from_stacked(next);
    out.push_back({t_target, z, SampleKind::projected});
    if (realizations.is_fresh()) {
      het = &realizations.next();
      basis = ChaosBasis(*het, q);
      integrator = NetworkIntegrator(params, *het, opts);
    } else {
      realizations.next();
    }
    state = basis.lift(z, t_target);
    lift_time = t_target;
    steps_since_lift = 0;
  }
  return out;
}

std::vector<CoarseSample> direct_coarse_trajectory(const ChaosCoeffs& initial, const ModelParams& params,
                                                   const Heterogeneity& het, double dt, double duration) {
  const ChaosBasis basis(het, initial.order());
  NetworkState state = basis.lift(initial, 0.0);
  NetworkIntegrator integrator(params, het, IntegratorOptions{dt});
  std::vector<CoarseSample> out;
  out.push_back({0.0, initial, SampleKind::initial});
  integrator.advance(state, duration, [&](const NetworkState& s) {
    out.push_back({s.t, basis.restrict_state(s), SampleKind::burst});
  });
  return out;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SpeedupReport measure_speedup(const ModelParams& params, const ProjectionSchedule& schedule,
                              double duration, int q, std::uint64_t seed, int repeats) {
  using clock = std::chrono::steady_clock;
  repeats = std::max(1, repeats);
  const Heterogeneity het = Heterogeneity::gaussian(params.n_osc, seed);
  ChaosCoeffs initial = ChaosCoeffs::zero(q);
  initial.a[0] = 1.0;

  std::vector<double> direct;
  std::vector<double> projective;
  for (int rep = 0; rep < repeats; ++rep) {
    {
      const auto start = clock::now();
      NetworkState s = lift(initial, het, 0.0);
      NetworkIntegrator integrator(params, het, IntegratorOptions{schedule.dt});
      integrator.advance(s, duration);
      const auto stop = clock::now();
      direct.push_back(std::chrono::duration<double>(stop - start).count());
      if (!s.all_finite()) throw DomainError("direct timing run produced a non-finite state");
    }
    {
      const auto start = clock::now();
      RealizationSource source = RealizationSource::fresh(params.n_osc, seed);
      const auto series = projective_integrate(initial, params, schedule, source, duration);
      const auto stop = clock::now();
      projective.push_back(std::chrono::duration<double>(stop - start).count());
      if (series.empty()) throw DomainError("projective timing run produced no samples");
    }
  }
  SpeedupReport r;
  r.n_project = schedule.n_project;
  r.direct_seconds = median(direct);
  r.projective_seconds = median(projective);
  r.ratio = r.direct_seconds / r.projective_seconds;
  return r;
}

std::optional<int> speedup_crossover(const std::vector<SpeedupReport>& reports) {
  std::optional<int> crossover;
  for (auto it = reports.rbegin(); it != reports.rend(); ++it) {
    if (it->ratio > 1.0) {
      crossover = it->n_project;
    } else {
      break;
    }
  }
  return crossover;
}

}  // namespace vdpnet
