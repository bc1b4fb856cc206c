#include "vdpnet/hermite_chaos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "vdpnet/errors.hpp"

namespace vdpnet {

double hermite(int j, double z) {
  if (j < 0) throw DomainError("Hermite order must be >= 0");
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * z;
  for (int k = 1; k < j; ++k) {
    const double next = 2.0 * z * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

ChaosCoeffs::ChaosCoeffs(Eigen::VectorXd a_, Eigen::VectorXd b_) : a(std::move(a_)), b(std::move(b_)) {
  if (a.size() != b.size() || a.size() == 0) throw DomainError("chaos coefficient vectors must have equal, nonzero length");
}

ChaosCoeffs ChaosCoeffs::zero(int q) {
  return {Eigen::VectorXd::Zero(q + 1), Eigen::VectorXd::Zero(q + 1)};
}

ChaosCoeffs ChaosCoeffs::from_stacked(const Eigen::VectorXd& v) {
  if (v.size() < 2 || v.size() % 2 != 0) throw DomainError("stacked coarse state must have even length >= 2");
  const Eigen::Index m = v.size() / 2;
  return {v.head(m), v.tail(m)};
}

Eigen::VectorXd ChaosCoeffs::stacked() const {
  Eigen::VectorXd v(a.size() + b.size());
  v << a, b;
  return v;
}

namespace {

std::size_t distinct_count(const Eigen::VectorXd& mu) {
  std::vector<double> v(mu.data(), mu.data() + mu.size());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

Eigen::MatrixXd hermite_columns(const Eigen::VectorXd& mu, int q) {
  Eigen::MatrixXd d(mu.size(), q + 1);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    // Same recurrence as hermite(), one pass per row.
    const double z = mu[i];
    d(i, 0) = 1.0;
    if (q >= 1) d(i, 1) = 2.0 * z;
    for (int j = 1; j < q; ++j) d(i, j + 1) = 2.0 * z * d(i, j) - 2.0 * j * d(i, j - 1);
  }
  return d;
}

}  // namespace

Eigen::MatrixXd design_matrix(const Eigen::VectorXd& mu, int q) {
  if (q < 0) throw DomainError("expansion order must be >= 0");
  if (!mu.allFinite()) throw DomainError("non-finite heterogeneity values");
  const auto cols = static_cast<std::size_t>(q) + 1;
  if (distinct_count(mu) < cols) {
    std::ostringstream msg;
    msg << "restriction is ill-posed: " << distinct_count(mu) << " distinct mu values for "
        << cols << " coefficients";
    throw IllPosedRestriction(msg.str());
  }
  return hermite_columns(mu, q);
}

ChaosBasis::ChaosBasis(const Heterogeneity& het, int q)
    : het_(het), q_(q), design_(design_matrix(het.mu, q)), qr_(design_) {
  if (qr_.rank() < q + 1) {
    std::ostringstream msg;
    msg << "restriction is ill-posed: design matrix has numerical rank " << qr_.rank() << " < "
        << q + 1;
    throw IllPosedRestriction(msg.str());
  }
}

Eigen::VectorXd ChaosBasis::restrict_values(const Eigen::VectorXd& values) const {
  if (values.size() != design_.rows()) throw DomainError("restriction data size does not match realization");
  return qr_.solve(values);
}

ChaosCoeffs ChaosBasis::restrict_state(const NetworkState& state) const {
  return {restrict_values(state.x), restrict_values(state.y)};
}

NetworkState ChaosBasis::lift(const ChaosCoeffs& z, double t) const {
  if (z.order() != q_) throw DomainError("coarse state order does not match basis order");
  return NetworkState(design_ * z.a, design_ * z.b, t);
}

FitResidual ChaosBasis::fit_residual(const NetworkState& state) const {
  auto normalized = [&](const Eigen::VectorXd& v) {
    const double n = static_cast<double>(v.size());
    const double var = (v.array() - v.mean()).square().sum() / n;
    if (var <= 0.0) return 0.0;
    const Eigen::VectorXd r = v - design_ * restrict_values(v);
    return std::sqrt(r.squaredNorm() / n / var);
  };
  return {normalized(state.x), normalized(state.y)};
}

ChaosCoeffs restrict_state(const NetworkState& state, const Heterogeneity& het, int q) {
  return ChaosBasis(het, q).restrict_state(state);
}

NetworkState lift(const ChaosCoeffs& z, const Heterogeneity& het, double t) {
  // Lifting needs no factorization and is defined for any realization.
  const Eigen::MatrixXd d = hermite_columns(het.mu, z.order());
  return NetworkState(d * z.a, d * z.b, t);
}

FitResidual fit_residual(const NetworkState& state, const Heterogeneity& het, int q) {
  return ChaosBasis(het, q).fit_residual(state);
}

}  // namespace vdpnet
