#include "vdpnet/coarse_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "vdpnet/errors.hpp"
#include "vdpnet/parallel.hpp"

namespace vdpnet {

std::vector<std::uint64_t> CoarseMapConfig::seeds() const {
  if (!realization_seeds.empty()) return realization_seeds;
  std::vector<std::uint64_t> s(static_cast<std::size_t>(std::max(r, 0)));
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = derive_seed(base_seed, j);
  return s;
}

void CoarseMapConfig::validate() const {
  if (q < 0) throw DomainError("q must be >= 0");
  if (r < 1) throw DomainError("r must be >= 1");
  if (!realization_seeds.empty() && static_cast<int>(realization_seeds.size()) != r) {
    throw DomainError("realization_seeds must have r entries");
  }
  if (!(fd_step > 0.0)) throw DomainError("fd_step must be > 0");
  if (!(newton_tol > 0.0)) throw DomainError("newton_tol must be > 0");
  if (newton_max_iter < 1) throw DomainError("newton_max_iter must be >= 1");
}

namespace {

ChaosCoeffs coarse_map_with(const ChaosBasis& basis, const ChaosCoeffs& z, const ModelParams& params,
                            const IntegratorOptions& options) {
  NetworkState s = basis.lift(z, 0.0);
  NetworkIntegrator integrator(params, basis.heterogeneity(), options);
  integrator.advance(s, params.forcing_period());
  return basis.restrict_state(s);
}

}  // namespace

ChaosCoeffs coarse_map(const ChaosCoeffs& z, const ModelParams& params, const Heterogeneity& het,
                       const IntegratorOptions& options) {
  return coarse_map_with(ChaosBasis(het, z.order()), z, params, options);
}

AveragedMap::AveragedMap(int n_osc, CoarseMapConfig config) : n_osc_(n_osc), config_(std::move(config)) {
  config_.validate();
  auto bases = std::make_shared<std::vector<ChaosBasis>>();
  for (std::uint64_t seed : config_.seeds()) {
    bases->emplace_back(Heterogeneity::gaussian(n_osc_, seed), config_.q);
  }
  bases_ = std::move(bases);
}

std::vector<Eigen::VectorXd> AveragedMap::members(const Eigen::VectorXd& z, const ModelParams& params) const {
  if (z.size() != dimension()) throw DomainError("coarse state has the wrong dimension");
  if (params.n_osc != n_osc_) throw DomainError("model n_osc does not match the averaged map");
  if (!z.allFinite()) throw DomainError("non-finite coarse state");
  const ChaosCoeffs zc = ChaosCoeffs::from_stacked(z);
  const auto& bases = *bases_;
  std::vector<Eigen::VectorXd> out(bases.size());
  parallel_for(bases.size(), [&](std::size_t j) {
    try {
      out[j] = coarse_map_with(bases[j], zc, params, config_.integrator).stacked();
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "realization " << j << " (seed " << bases[j].heterogeneity().seed << ") failed: " << e.what();
      throw MemberEvaluationError(msg.str(), bases[j].heterogeneity().seed);
    }
  });
  return out;
}

Eigen::VectorXd AveragedMap::operator()(const Eigen::VectorXd& z, const ModelParams& params) const {
  const auto m = members(z, params);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(z.size());
  for (const auto& v : m) sum += v;
  return sum / static_cast<double>(m.size());
}

CoarseMapFn AveragedMap::as_function() const {
  return [self = *this](const Eigen::VectorXd& z, const ModelParams& p) { return self(z, p); };
}

ChaosCoeffs averaged_map(const ChaosCoeffs& z, const ModelParams& params, const CoarseMapConfig& config) {
  if (z.order() != config.q) throw DomainError("coarse state order does not match config.q");
  return ChaosCoeffs::from_stacked(AveragedMap(params.n_osc, config)(z.stacked(), params));
}

Eigen::MatrixXd finite_difference_jacobian(const CoarseMapFn& map, const Eigen::VectorXd& z,
                                           const ModelParams& params, double step) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be > 0");
  const auto n = z.size();
  std::vector<Eigen::VectorXd> evals(static_cast<std::size_t>(2 * n));
  parallel_for(evals.size(), [&](std::size_t i) {
    Eigen::VectorXd zp = z;
    const auto k = static_cast<Eigen::Index>(i / 2);
    zp[k] += (i % 2 == 0) ? step : -step;
    evals[i] = map(zp, params);
  });
  Eigen::MatrixXd jac(evals.front().size(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    jac.col(k) = (evals[2 * k] - evals[2 * k + 1]) / (2.0 * step);
  }
  return jac;
}

Eigen::MatrixXd coarse_jacobian(const ChaosCoeffs& z, const ModelParams& params, const CoarseMapConfig& config) {
  const AveragedMap map(params.n_osc, config);
  return finite_difference_jacobian(map.as_function(), z.stacked(), params, config.fd_step);
}

std::vector<std::complex<double>> spectrum(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  if (solver.info() != Eigen::Success) throw DomainError("eigenvalue computation failed");
  std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                       solver.eigenvalues().data() + solver.eigenvalues().size());
  std::stable_sort(ev.begin(), ev.end(), [](auto a, auto b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return ev;
}

bool all_inside_unit_circle(const std::vector<std::complex<double>>& eigenvalues) {
  return std::all_of(eigenvalues.begin(), eigenvalues.end(), [](auto l) { return std::abs(l) < 1.0; });
}

CoarseFixedPoint newton_fixed_point(const CoarseMapFn& map, const Eigen::VectorXd& z0,
                                    const ModelParams& params, const NewtonOptions& options) {
  if (!z0.allFinite()) throw DomainError("non-finite initial guess");
  CoarseFixedPoint fp;
  Eigen::VectorXd z = z0;
  Eigen::VectorXd f = map(z, params) - z;
  double res = f.lpNorm<Eigen::Infinity>();
  fp.residual_history.push_back(res);
  const auto n = z.size();
  Eigen::MatrixXd jac;
  int it = 0;
  while (!(res < options.tol)) {
    if (it >= options.max_iter) {
      std::ostringstream msg;
      msg << "Newton did not converge in " << options.max_iter << " iterations (residual " << res << ")";
      throw ConvergenceError(msg.str(), res);
    }
    jac = finite_difference_jacobian(map, z, params, options.fd_step);
    const Eigen::MatrixXd a = jac - Eigen::MatrixXd::Identity(n, n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    // Absolute size matters too: LU's rcond cannot see a J - I made of round-off.
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
    const double sigma_min = sv[sv.size() - 1];
    if (!lu.isInvertible() || lu.rcond() < 1e-12 || sigma_min < 1e-9 * std::max(1.0, sv[0])) {
      std::ostringstream msg;
      msg << "Newton matrix J - I is singular (smallest singular value " << sigma_min
          << "); the fixed point is near a fold, use pseudo-arclength continuation";
      throw SingularJacobian(msg.str());
    }
    z -= lu.solve(f);
    if (!z.allFinite()) throw ConvergenceError("Newton iterate became non-finite", res);
    f = map(z, params) - z;
    res = f.lpNorm<Eigen::Infinity>();
    fp.residual_history.push_back(res);
    ++it;
  }
  fp.iterations = it;
  fp.residual = res;
  fp.z = ChaosCoeffs::from_stacked(z);
  fp.jacobian = finite_difference_jacobian(map, z, params, options.fd_step);
  fp.eigenvalues = spectrum(fp.jacobian);
  fp.stable = all_inside_unit_circle(fp.eigenvalues);
  return fp;
}

CoarseFixedPoint newton_fixed_point(const AveragedMap& map, const ChaosCoeffs& z0, const ModelParams& params) {
  const auto& cfg = map.config();
  return newton_fixed_point(map.as_function(), z0.stacked(), params,
                            NewtonOptions{cfg.fd_step, cfg.newton_tol, cfg.newton_max_iter});
}

CoarseFixedPoint newton_fixed_point(const ChaosCoeffs& z0, const ModelParams& params,
                                    const CoarseMapConfig& config) {
  if (z0.order() != config.q) throw DomainError("initial guess order does not match config.q");
  return newton_fixed_point(AveragedMap(params.n_osc, config), z0, params);
}

ChaosCoeffs relaxed_guess(const ChaosCoeffs& rough, const ModelParams& params, const CoarseMapConfig& config,
                          int periods) {
  config.validate();
  const ChaosBasis basis(Heterogeneity::gaussian(params.n_osc, config.seeds().front()), config.q);
  NetworkState s = basis.lift(rough, 0.0);
  NetworkIntegrator integrator(params, basis.heterogeneity(), config.integrator);
  integrator.advance(s, periods * params.forcing_period());
  return basis.restrict_state(s);
}

}  // namespace vdpnet
