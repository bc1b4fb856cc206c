#include "vdpnet/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "vdpnet/errors.hpp"
#include "vdpnet/parallel.hpp"

namespace vdpnet {

void ContinuationConfig::validate() const {
  if (!(min_step > 0.0 && min_step <= initial_step && initial_step <= max_step)) {
    throw DomainError("continuation steps must satisfy 0 < min_step <= initial_step <= max_step");
  }
  if (!(corrector_tol > 0.0)) throw DomainError("corrector_tol must be > 0");
  if (corrector_max_iter < 1) throw DomainError("corrector_max_iter must be >= 1");
  if (max_points < 2) throw DomainError("max_points must be >= 2");
  if (direction != 1 && direction != -1) throw DomainError("direction must be +1 or -1");
  if (!(fd_step > 0.0) || !(direction_step > 0.0)) throw DomainError("finite-difference steps must be > 0");
  if (!(max_turn_angle > 0.0 && max_turn_angle <= std::numbers::pi)) {
    throw DomainError("max_turn_angle must be in (0, pi]");
  }
  for (const auto& b : bounds) {
    if (!(b.lo < b.hi)) throw DomainError("parameter bound must have lo < hi");
  }
}

std::optional<ParamBound> ContinuationConfig::bound_for(Param p) const {
  for (const auto& b : bounds) {
    if (b.param == p) return b;
  }
  return std::nullopt;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::max_points: return "max_points";
    case Termination::domain_boundary: return "domain_boundary";
    case Termination::closed_loop: return "closed_loop";
    case Termination::curve_endpoint: return "curve_endpoint";
    case Termination::min_step_underflow: return "min_step_underflow";
    case Termination::numerical_failure: return "numerical_failure";
    case Termination::physics_breakdown: return "physics_breakdown";
  }
  return "?";
}

int BranchPoint::unstable_count() const {
  return static_cast<int>(
      std::count_if(eigenvalues.begin(), eigenvalues.end(), [](auto l) { return std::abs(l) > 1.0; }));
}

TestFunctions test_functions(const Eigen::MatrixXd& jacobian,
                             const std::vector<std::complex<double>>& eigenvalues) {
  TestFunctions tf;
  const auto n = jacobian.rows();
  tf.fold = (jacobian - Eigen::MatrixXd::Identity(n, n)).determinant();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& l : eigenvalues) {
    if (l.imag() <= 1e-10 * std::max(1.0, std::abs(l))) continue;
    const double m2 = std::norm(l) - 1.0;
    if (std::abs(m2) < best) {
      best = std::abs(m2);
      tf.hopf = m2;
      tf.theta = std::arg(l);
    }
  }
  return tf;
}

namespace {

// ---------------------------------------------------------------------------
// Generic pseudo-arclength machinery on u = (state unknowns, free params).

struct CurveSystem {
  Eigen::Index n_state = 0;  // coarse map dimension
  std::vector<Param> params;
  ModelParams base;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;  // dim() - 1 equations
  std::function<void(const Eigen::VectorXd&)> on_accept;

  Eigen::Index dim = 0;

  ModelParams params_at(const Eigen::VectorXd& u) const {
    ModelParams p = base;
    const auto k = static_cast<Eigen::Index>(params.size());
    for (Eigen::Index i = 0; i < k; ++i) set(p, params[static_cast<std::size_t>(i)], u[dim - k + i]);
    return p;
  }
  Eigen::Index param_index(std::size_t i) const {
    return dim - static_cast<Eigen::Index>(params.size()) + static_cast<Eigen::Index>(i);
  }
};

// Linear side condition normal . u = offset closing the square system.
struct Constraint {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

Constraint arclength_constraint(const Eigen::VectorXd& anchor, const Eigen::VectorXd& tangent, double ds) {
  return {tangent, tangent.dot(anchor) + ds};
}

Constraint fixed_coordinate(Eigen::Index dim, Eigen::Index k, double value) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e[k] = 1.0;
  return {e, value};
}

Eigen::MatrixXd residual_jacobian(const CurveSystem& sys, const Eigen::VectorXd& u, double h) {
  std::vector<Eigen::VectorXd> evals(static_cast<std::size_t>(2 * sys.dim));
  parallel_for(evals.size(), [&](std::size_t i) {
    Eigen::VectorXd up = u;
    up[static_cast<Eigen::Index>(i / 2)] += (i % 2 == 0) ? h : -h;
    evals[i] = sys.residual(up);
  });
  Eigen::MatrixXd jac(sys.dim - 1, sys.dim);
  for (Eigen::Index k = 0; k < sys.dim; ++k) jac.col(k) = (evals[2 * k] - evals[2 * k + 1]) / (2.0 * h);
  return jac;
}

Eigen::VectorXd null_tangent(const Eigen::MatrixXd& gu) {
  const auto m = gu.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gu.transpose());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  return q.col(m - 1).normalized();
}

struct CorrectorResult {
  bool converged = false;
  Eigen::VectorXd u;
  int iterations = 0;
  double residual = 0.0;
  std::string message;
};

// Newton on [G(u); constraint] with Broyden updates of the G rows and a fresh
// finite-difference Jacobian when convergence stalls.
CorrectorResult correct(const CurveSystem& sys, Eigen::VectorXd u, const Constraint& c, Eigen::MatrixXd gu,
                        const ContinuationConfig& cfg) {
  CorrectorResult out;
  const Eigen::Index m = sys.dim;
  auto eval = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd h(m);
    h.head(m - 1) = sys.residual(v);
    h[m - 1] = c.normal.dot(v) - c.offset;
    return h;
  };
  try {
    if (gu.size() == 0) gu = residual_jacobian(sys, u, cfg.fd_step);
    Eigen::VectorXd h = eval(u);
    double res = h.lpNorm<Eigen::Infinity>();
    const double res0 = std::max(res, cfg.corrector_tol);
    int refreshes = 0;
    for (int it = 0; it <= cfg.corrector_max_iter; ++it) {
      if (res < cfg.corrector_tol) {
        out.converged = true;
        out.u = std::move(u);
        out.iterations = it;
        out.residual = res;
        return out;
      }
      if (it == cfg.corrector_max_iter) break;
      Eigen::MatrixXd jh(m, m);
      jh.topRows(m - 1) = gu;
      jh.row(m - 1) = c.normal.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jh);
      if (!lu.isInvertible()) {
        out.message = "singular corrector matrix";
        out.residual = res;
        return out;
      }
      const Eigen::VectorXd step = -lu.solve(h);
      const Eigen::VectorXd un = u + step;
      const Eigen::VectorXd hn = eval(un);
      if (!hn.allFinite()) {
        out.message = "non-finite residual";
        out.residual = res;
        return out;
      }
      const double rn = hn.lpNorm<Eigen::Infinity>();
      const Eigen::VectorXd dg = hn.head(m - 1) - h.head(m - 1);
      const double s2 = step.squaredNorm();
      if (s2 > 0.0) gu += ((dg - gu * step) * step.transpose()) / s2;
      if (rn > 0.5 * res && refreshes < 2) {
        gu = residual_jacobian(sys, un, cfg.fd_step);
        ++refreshes;
      }
      if (rn > 1e3 * res0) {
        out.message = "corrector diverging";
        out.residual = rn;
        return out;
      }
      u = un;
      h = hn;
      res = rn;
    }
    std::ostringstream msg;
    msg << "corrector did not converge in " << cfg.corrector_max_iter << " iterations (residual " << res << ")";
    out.message = msg.str();
    out.residual = res;
  } catch (const Error& e) {
    out.message = e.what();
  }
  return out;
}

BranchPoint make_point(const CurveSystem& sys, const Eigen::VectorXd& u, const Eigen::MatrixXd& gu,
                       double arclength) {
  BranchPoint p;
  const auto n = sys.n_state;
  p.params = sys.params_at(u);
  p.active = sys.params;
  p.z = ChaosCoeffs::from_stacked(u.head(n));
  const Eigen::MatrixXd jac = gu.topLeftCorner(n, n) + Eigen::MatrixXd::Identity(n, n);
  p.eigenvalues = spectrum(jac);
  p.stable = all_inside_unit_circle(p.eigenvalues);
  const TestFunctions tf = test_functions(jac, p.eigenvalues);
  p.fold_test = tf.fold;
  p.hopf_test = tf.hopf;
  p.theta = tf.theta;
  p.arclength = arclength;
  p.unknowns = u;
  return p;
}

bool in_domain(const CurveSystem& sys, const ContinuationConfig& cfg, const Eigen::VectorXd& u,
               Eigen::Index* violated = nullptr, double* bound_value = nullptr) {
  for (std::size_t i = 0; i < sys.params.size(); ++i) {
    const auto b = cfg.bound_for(sys.params[i]);
    if (!b) continue;
    const double v = u[sys.param_index(i)];
    if (v < b->lo || v > b->hi) {
      if (violated) *violated = sys.param_index(i);
      if (bound_value) *bound_value = v < b->lo ? b->lo : b->hi;
      return false;
    }
  }
  return true;
}

// Optional end-of-curve hook: given the previous and the newly accepted
// unknowns, returns a refined final point when the curve ends in between.
using EndHook = std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct TraceInput {
  Eigen::VectorXd u0;
  Eigen::MatrixXd gu0;
  Eigen::VectorXd tangent0;
  Termination failure_reason = Termination::min_step_underflow;
  const TerminationPolicy* policy = nullptr;
  EndHook end_hook;
};

Branch trace(const CurveSystem& sys, const TraceInput& in, const ContinuationConfig& cfg) {
  Branch br;
  Eigen::VectorXd u = in.u0;
  Eigen::MatrixXd gu = in.gu0;
  Eigen::VectorXd tangent = in.tangent0;
  double s = 0.0;
  br.points.push_back(make_point(sys, u, gu, s));
  double ds = cfg.initial_step;
  int failures = 0;

  auto probe = [&](const ModelParams& p) {
    const double f = in.policy->desync_probe(p);
    br.desync_fraction = f;
    return f;
  };
  auto accept = [&](const Eigen::VectorXd& un, Eigen::MatrixXd gu_new) {
    if (sys.on_accept) sys.on_accept(un);
    gu = std::move(gu_new);
    s += (un - u).norm();
    br.points.push_back(make_point(sys, un, gu, s));
    tangent = (un - u).normalized();
    u = un;
  };

  while (static_cast<int>(br.points.size()) < cfg.max_points) {
    const Eigen::VectorXd pred = u + ds * tangent;
    Eigen::Index violated = -1;
    double bound_value = 0.0;
    if (!in_domain(sys, cfg, pred, &violated, &bound_value)) {
      // Land exactly on the boundary when the curve reaches it.
      Eigen::VectorXd start = pred;
      start[violated] = bound_value;
      const auto res = correct(sys, start, fixed_coordinate(sys.dim, violated, bound_value), gu, cfg);
      if (res.converged && tangent.dot(res.u - u) > 0.0 && (res.u - u).norm() < 2.0 * ds + cfg.min_step) {
        try {
          accept(res.u, residual_jacobian(sys, res.u, cfg.fd_step));
        } catch (const Error&) {
          // The boundary point itself cannot be evaluated; end on the previous one.
        }
      }
      br.reason = Termination::domain_boundary;
      std::ostringstream msg;
      msg << "reached bound " << bound_value << " of parameter "
          << to_string(sys.params[static_cast<std::size_t>(violated - sys.param_index(0))]);
      br.message = msg.str();
      return br;
    }

    auto res = correct(sys, pred, arclength_constraint(u, tangent, ds), gu, cfg);
    if (res.converged && tangent.dot((res.u - u).normalized()) < std::cos(cfg.max_turn_angle)) {
      res.converged = false;
      res.message = "step turned too sharply";
    }
    Eigen::MatrixXd gu_new;
    if (res.converged) {
      try {
        gu_new = residual_jacobian(sys, res.u, cfg.fd_step);
      } catch (const Error& e) {
        res.converged = false;
        res.message = std::string("Jacobian at the corrected point failed: ") + e.what();
      }
    }
    if (!res.converged) {
      ++failures;
      ds *= 0.5;
      if (in.policy && in.policy->desync_probe && failures == in.policy->failure_limit) {
        const double f = probe(sys.params_at(u));
        if (f >= in.policy->desync_threshold) {
          br.reason = Termination::physics_breakdown;
          std::ostringstream msg;
          msg << "corrector failed " << failures << " times and desynchronized fraction is " << f
              << " (>= " << in.policy->desync_threshold << "): " << res.message;
          br.message = msg.str();
          return br;
        }
      }
      if (ds < cfg.min_step) {
        br.reason = in.failure_reason;
        br.message = "step size fell below min_step: " + res.message;
        return br;
      }
      continue;
    }
    failures = 0;

    if (in.end_hook) {
      if (auto end = in.end_hook(u, res.u)) {
        accept(*end, residual_jacobian(sys, *end, cfg.fd_step));
        br.reason = Termination::curve_endpoint;
        br.message = "curve end reached";
        return br;
      }
    }
    const Eigen::VectorXd prev = u;
    accept(res.u, std::move(gu_new));

    if (in.policy && in.policy->desync_probe && in.policy->probe_every_point) {
      const double f = probe(br.points.back().params);
      if (f >= in.policy->desync_threshold) {
        br.reason = Termination::physics_breakdown;
        std::ostringstream msg;
        msg << "desynchronized fraction " << f << " >= " << in.policy->desync_threshold;
        br.message = msg.str();
        return br;
      }
    }

    if (cfg.stop_on_closed_loop && br.points.size() > 4 && s > 4.0 * cfg.min_step) {
      const double to_start = (u - in.u0).norm();
      const double last_step = (u - prev).norm();
      if (to_start < 1.2 * last_step && s > 3.0 * last_step) {
        s += to_start;
        BranchPoint closing = br.points.front();
        closing.arclength = s;
        br.points.push_back(std::move(closing));
        br.reason = Termination::closed_loop;
        br.message = "branch returned to its starting point";
        return br;
      }
    }
    if (res.iterations <= cfg.fast_iterations) ds = std::min(cfg.max_step, ds * cfg.step_growth);
  }
  br.reason = Termination::max_points;
  br.message = "max_points reached";
  return br;
}

// Secant refinement (Illinois variant) of a scalar test function along the
// chord between two accepted points. `test` receives the corrected unknowns
// and, when kNeedsJacobian, the residual Jacobian there.
struct ChordSolution {
  Eigen::VectorXd u;
  Eigen::MatrixXd gu;
  double value = 0.0;
};

template <bool kNeedsJacobian, class TestFn>
ChordSolution refine_on_chord(const CurveSystem& sys, const Eigen::VectorXd& ua, const Eigen::VectorXd& ub,
                              double fa, double fb, double tol, Eigen::MatrixXd gu,
                              const ContinuationConfig& cfg, TestFn&& test) {
  const double len = (ub - ua).norm();
  const Eigen::VectorXd t = (ub - ua) / len;
  double sa = 0.0;
  double sb = 1.0;
  ChordSolution best;
  bool have_best = false;
  int side = 0;
  for (int it = 0; it < 60; ++it) {
    double sm = sb - fb * (sb - sa) / (fb - fa);
    if (!(sm > sa && sm < sb)) sm = 0.5 * (sa + sb);
    const Eigen::VectorXd guess = ua + sm * len * t;
    const auto res = correct(sys, guess, arclength_constraint(ua, t, sm * len), gu, cfg);
    if (!res.converged) throw ConvergenceError("refinement corrector failed: " + res.message, res.residual);
    if constexpr (kNeedsJacobian) gu = residual_jacobian(sys, res.u, cfg.fd_step);
    const double fm = test(res.u, gu);
    if (!have_best || std::abs(fm) < std::abs(best.value)) {
      best.u = res.u;
      if constexpr (kNeedsJacobian) best.gu = gu;
      best.value = fm;
      have_best = true;
    }
    if (std::abs(fm) < tol || (sb - sa) * len < 1e-13) break;
    if ((fm < 0.0) == (fa < 0.0)) {
      sa = sm;
      fa = fm;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      sb = sm;
      fb = fm;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return best;
}

Eigen::MatrixXd map_jacobian(const Eigen::MatrixXd& gu, Eigen::Index n) {
  return gu.topLeftCorner(n, n) + Eigen::MatrixXd::Identity(n, n);
}


ModelParams with_params(ModelParams base, const std::vector<Param>& params, const Eigen::VectorXd& values) {
  for (std::size_t i = 0; i < params.size(); ++i) set(base, params[i], values[static_cast<Eigen::Index>(i)]);
  return base;
}

CurveSystem fixed_point_system(const CoarseMapFn& map, const ModelParams& base, Eigen::Index n,
                               std::vector<Param> params) {
  CurveSystem sys;
  sys.n_state = n;
  sys.params = std::move(params);
  sys.base = base;
  sys.dim = n + static_cast<Eigen::Index>(sys.params.size());
  const auto k = static_cast<Eigen::Index>(sys.params.size());
  sys.residual = [map, base, n, k, ps = sys.params](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const Eigen::VectorXd z = u.head(n);
    return map(z, with_params(base, ps, u.tail(k))) - z;
  };
  return sys;
}

Eigen::VectorXd oriented(Eigen::VectorXd t, Eigen::Index lead, int direction) {
  double c = t[lead];
  // Leading parameter stationary: fall back to the last unknown.
  if (std::abs(c) < 1e-12) c = t[t.size() - 1];
  if ((c < 0.0) != (direction < 0)) t = -t;
  return t;
}

// Joins a backward run (reversed, its start dropped) with a forward run that
// share the same first point.
Branch join(const Branch& backward, const Branch& forward) {
  Branch out;
  for (auto it = backward.points.rbegin(); it != backward.points.rend(); ++it) {
    if (std::next(it) == backward.points.rend()) break;
    out.points.push_back(*it);
  }
  out.points.insert(out.points.end(), forward.points.begin(), forward.points.end());
  double s = 0.0;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (i > 0) s += (out.points[i].unknowns - out.points[i - 1].unknowns).norm();
    out.points[i].arclength = s;
  }
  out.reason = forward.reason;
  out.message = "backward: " + std::string(to_string(backward.reason)) + " (" + backward.message +
                "); forward: " + std::string(to_string(forward.reason)) + " (" + forward.message + ")";
  out.desync_fraction = std::isnan(forward.desync_fraction) ? backward.desync_fraction : forward.desync_fraction;
  return out;
}

Eigen::MatrixXd jacobian_at(const CoarseMapFn& map, const BranchPoint& p, double step) {
  return finite_difference_jacobian(map, p.z.stacked(), p.params, step);
}

// Map evaluations at z and z +- d v, run concurrently.
struct Stencil {
  Eigen::VectorXd center;
  Eigen::VectorXd derivative;  // (h(z + d v) - h(z - d v)) / (2 d)
};

Stencil directional(const CoarseMapFn& map, const Eigen::VectorXd& z, const Eigen::VectorXd& v,
                    const ModelParams& p, double d, bool with_center) {
  std::vector<Eigen::VectorXd> ev(with_center ? 3 : 2);
  parallel_for(ev.size(), [&](std::size_t i) {
    if (i == 2) {
      ev[i] = map(z, p);
    } else {
      ev[i] = map(i == 0 ? Eigen::VectorXd(z + d * v) : Eigen::VectorXd(z - d * v), p);
    }
  });
  Stencil s;
  s.derivative = (ev[0] - ev[1]) / (2.0 * d);
  if (with_center) s.center = std::move(ev[2]);
  return s;
}

// Unit vector in span{w, J w} orthogonal to w.
Eigen::VectorXd orthogonal_partner(const Eigen::VectorXd& w, const Eigen::VectorXd& jw) {
  const Eigen::VectorXd r = jw - w.dot(jw) / w.squaredNorm() * w;
  if (!(r.norm() > 0.0)) throw NotAHopf("J w is parallel to w; no rotation in the critical plane");
  return r.normalized();
}

}  // namespace

Branch continue_branch(const CoarseMapFn& map, const CoarseFixedPoint& start, const ModelParams& params,
                       Param free_param, const ContinuationConfig& config) {
  config.validate();
  if (free_param == Param::omega && params.amplitude == 0.0) {
    throw DomainError("continuation in omega requires A > 0: without forcing the fixed point is not isolated");
  }
  const Eigen::VectorXd z0 = start.z.stacked();
  const Eigen::Index n = z0.size();
  const CurveSystem sys = fixed_point_system(map, params, n, {free_param});
  Eigen::VectorXd u0(n + 1);
  u0 << z0, get(params, free_param);
  if (!in_domain(sys, config, u0)) throw DomainError("starting parameter lies outside the continuation bounds");
  const Eigen::MatrixXd gu0 = residual_jacobian(sys, u0, config.fd_step);
  TraceInput in;
  in.u0 = u0;
  in.gu0 = gu0;
  in.tangent0 = oriented(null_tangent(gu0), n, config.direction);
  Branch br = trace(sys, in, config);
  if (br.points.size() == 1 && br.reason == Termination::min_step_underflow) {
    throw CannotStart("first continuation step failed: " + br.message);
  }
  return br;
}

Branch continue_branch_both(const CoarseMapFn& map, const CoarseFixedPoint& start, const ModelParams& params,
                            Param free_param, const ContinuationConfig& config) {
  Branch forward = continue_branch(map, start, params, free_param, config);
  if (forward.reason == Termination::closed_loop) return forward;
  ContinuationConfig back = config;
  back.direction = -config.direction;
  Branch backward;
  try {
    backward = continue_branch(map, start, params, free_param, back);
  } catch (const CannotStart& e) {
    forward.message = "backward: " + std::string(e.what()) + "; forward: " + forward.message;
    return forward;
  }
  return join(backward, forward);
}

std::vector<std::size_t> fold_brackets(const Branch& branch) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + 1 < branch.points.size(); ++k) {
    if (branch.points[k].fold_test * branch.points[k + 1].fold_test < 0.0) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> hopf_brackets(const Branch& branch) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + 1 < branch.points.size(); ++k) {
    const double a = branch.points[k].hopf_test;
    const double b = branch.points[k + 1].hopf_test;
    if (std::isfinite(a) && std::isfinite(b) && a * b < 0.0) out.push_back(k);
  }
  return out;
}

namespace {

CurveSystem branch_system(const CoarseMapFn& map, const Branch& branch, std::size_t k) {
  if (k + 1 >= branch.points.size()) throw DomainError("bracket index out of range");
  const auto& a = branch.points[k];
  const auto n = static_cast<Eigen::Index>(a.z.dimension());
  CurveSystem sys = fixed_point_system(map, a.params, n, a.active);
  if (a.active.size() != 1 || a.unknowns.size() != sys.dim || branch.points[k + 1].unknowns.size() != sys.dim) {
    throw DomainError("bracket points do not come from a one-parameter branch");
  }
  return sys;
}

}  // namespace

BranchPoint detect_fold(const CoarseMapFn& map, const Branch& branch, std::size_t k,
                        const ContinuationConfig& config) {
  const CurveSystem sys = branch_system(map, branch, k);
  const auto& a = branch.points[k];
  const auto& b = branch.points[k + 1];
  if (!(a.fold_test * b.fold_test < 0.0)) throw NotAFold("no sign change of det(J - I) in the bracket");
  const auto n = sys.n_state;
  const auto sol = refine_on_chord<true>(
      sys, a.unknowns, b.unknowns, a.fold_test, b.fold_test, config.fold_tol, Eigen::MatrixXd(), config,
      [n](const Eigen::VectorXd&, const Eigen::MatrixXd& gu) { return gu.topLeftCorner(n, n).determinant(); });
  return make_point(sys, sol.u, sol.gu, a.arclength + (sol.u - a.unknowns).norm());
}

BranchPoint detect_hopf(const CoarseMapFn& map, const Branch& branch, std::size_t k,
                        const ContinuationConfig& config) {
  const CurveSystem sys = branch_system(map, branch, k);
  const auto& a = branch.points[k];
  const auto& b = branch.points[k + 1];
  if (!(std::isfinite(a.hopf_test) && std::isfinite(b.hopf_test) && a.hopf_test * b.hopf_test < 0.0)) {
    throw NotAHopf("no sign change of |lambda|^2 - 1 for a complex pair in the bracket");
  }
  const auto n = sys.n_state;
  const auto sol = refine_on_chord<true>(
      sys, a.unknowns, b.unknowns, a.hopf_test, b.hopf_test, config.hopf_tol, Eigen::MatrixXd(), config,
      [n](const Eigen::VectorXd&, const Eigen::MatrixXd& gu) {
        const Eigen::MatrixXd jac = map_jacobian(gu, n);
        const auto tf = test_functions(jac, spectrum(jac));
        if (!std::isfinite(tf.hopf)) {
          throw ResonanceAmbiguity("critical eigenvalue pair became real during Hopf refinement");
        }
        return tf.hopf;
      });
  return make_point(sys, sol.u, sol.gu, a.arclength + (sol.u - a.unknowns).norm());
}

Branch continue_fold_curve(const CoarseMapFn& map, const BranchPoint& fold, std::pair<Param, Param> free_params,
                           const ContinuationConfig& config, const TerminationPolicy& policy) {
  config.validate();
  if (free_params.first == free_params.second) throw DomainError("fold curve needs two distinct parameters");
  const Eigen::VectorXd z0 = fold.z.stacked();
  const Eigen::Index n = z0.size();
  const Eigen::MatrixXd jac = jacobian_at(map, fold, config.fd_step);
  Eigen::EigenSolver<Eigen::MatrixXd> es(jac, true);
  Eigen::Index best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = std::abs(es.eigenvalues()[i] - 1.0);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  if (best < 0 || dist > 1e-3 || std::abs(es.eigenvalues()[best].imag()) > 1e-8) {
    throw NotAFold("no real eigenvalue of the map Jacobian near +1");
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real().normalized();
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v[big] < 0.0) v = -v;

  CurveSystem sys;
  sys.n_state = n;
  sys.params = {free_params.first, free_params.second};
  sys.base = fold.params;
  sys.dim = 2 * n + 2;
  const double d = config.direction_step;
  sys.residual = [map, n, d, base = fold.params, ps = sys.params](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const Eigen::VectorXd z = u.head(n);
    const Eigen::VectorXd vv = u.segment(n, n);
    const ModelParams p = with_params(base, ps, u.tail(2));
    const Stencil s = directional(map, z, vv, p, d, true);
    Eigen::VectorXd g(2 * n + 1);
    g.head(n) = s.center - z;
    g.segment(n, n) = s.derivative - vv;
    g[2 * n] = vv.squaredNorm() - 1.0;
    return g;
  };

  Eigen::VectorXd u0(sys.dim);
  u0 << z0, v, get(fold.params, free_params.first), get(fold.params, free_params.second);
  const auto start = correct(sys, u0, fixed_coordinate(sys.dim, sys.dim - 1, u0[sys.dim - 1]), {}, config);
  if (!start.converged) throw CannotStart("fold system did not converge at the starting point: " + start.message);

  TraceInput in;
  in.u0 = start.u;
  in.gu0 = residual_jacobian(sys, start.u, config.fd_step);
  in.tangent0 = oriented(null_tangent(in.gu0), sys.dim - 2, config.direction);
  in.failure_reason = Termination::numerical_failure;
  in.policy = &policy;
  return trace(sys, in, config);
}

HopfCurve continue_hopf_curve(const CoarseMapFn& map, const BranchPoint& hopf, std::pair<Param, Param> free_params,
                              const ContinuationConfig& config, const TerminationPolicy& policy) {
  config.validate();
  if (free_params.first == free_params.second) throw DomainError("Hopf curve needs two distinct parameters");
  const Eigen::VectorXd z0 = hopf.z.stacked();
  const Eigen::Index n = z0.size();
  const Eigen::MatrixXd jac = jacobian_at(map, hopf, config.fd_step);
  Eigen::EigenSolver<Eigen::MatrixXd> es(jac, true);
  Eigen::Index best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto l = es.eigenvalues()[i];
    if (l.imag() <= 1e-10 * std::max(1.0, std::abs(l))) continue;
    const double d = std::abs(std::norm(l) - 1.0);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  if (best < 0 || dist > 1e-3) throw NotAHopf("no complex eigenvalue pair of the map Jacobian on the unit circle");
  const auto lambda = es.eigenvalues()[best];
  Eigen::VectorXd w = es.eigenvectors().col(best).real();
  if (w.norm() < 1e-8) w = es.eigenvectors().col(best).imag();
  w.normalize();
  const double kappa0 = lambda.real() / std::abs(lambda);
  auto partner = std::make_shared<Eigen::VectorXd>(orthogonal_partner(w, jac * w));

  CurveSystem sys;
  sys.n_state = n;
  sys.params = {free_params.first, free_params.second};
  sys.base = hopf.params;
  sys.dim = 2 * n + 3;
  const double d = config.direction_step;
  const ModelParams base = hopf.params;
  const auto ps = sys.params;
  sys.residual = [map, n, d, base, ps, partner](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const Eigen::VectorXd z = u.head(n);
    const Eigen::VectorXd ww = u.segment(n, n);
    const double kappa = u[2 * n];
    const ModelParams p = with_params(base, ps, u.tail(2));
    const Stencil s1 = directional(map, z, ww, p, d, true);
    const double jw_norm = s1.derivative.norm();
    Eigen::VectorXd jjw = Eigen::VectorXd::Zero(n);
    if (jw_norm > 0.0) {
      jjw = jw_norm * directional(map, z, s1.derivative / jw_norm, p, d, false).derivative;
    }
    Eigen::VectorXd g(2 * n + 2);
    g.head(n) = s1.center - z;
    g.segment(n, n) = jjw - 2.0 * kappa * s1.derivative + ww;
    g[2 * n] = ww.squaredNorm() - 1.0;
    g[2 * n + 1] = partner->dot(ww);
    return g;
  };
  sys.on_accept = [map, n, d, base, ps, partner](const Eigen::VectorXd& u) {
    const Eigen::VectorXd z = u.head(n);
    const Eigen::VectorXd ww = u.segment(n, n);
    const Stencil s = directional(map, z, ww, with_params(base, ps, u.tail(2)), d, false);
    *partner = orthogonal_partner(ww, s.derivative);
  };

  Eigen::VectorXd u0(sys.dim);
  u0 << z0, w, kappa0, get(hopf.params, free_params.first), get(hopf.params, free_params.second);
  const auto start = correct(sys, u0, fixed_coordinate(sys.dim, sys.dim - 1, u0[sys.dim - 1]), {}, config);
  if (!start.converged) throw CannotStart("Hopf system did not converge at the starting point: " + start.message);

  const Eigen::Index kappa_index = 2 * n;
  EndHook hook = [&sys, &config, kappa_index](const Eigen::VectorXd& a,
                                              const Eigen::VectorXd& b) -> std::optional<Eigen::VectorXd> {
    for (double target : {1.0, -1.0}) {
      const double fa = a[kappa_index] - target;
      const double fb = b[kappa_index] - target;
      if (fa * fb < 0.0) {
        const auto sol = refine_on_chord<false>(
            sys, a, b, fa, fb, config.endpoint_tol, Eigen::MatrixXd(), config,
            [kappa_index, target](const Eigen::VectorXd& u, const Eigen::MatrixXd&) {
              return u[kappa_index] - target;
            });
        return sol.u;
      }
    }
    return std::nullopt;
  };

  const Eigen::MatrixXd gu0 = residual_jacobian(sys, start.u, config.fd_step);
  const Eigen::VectorXd tangent = oriented(null_tangent(gu0), sys.dim - 2, config.direction);
  const Eigen::VectorXd partner0 = *partner;

  auto run = [&](int direction) {
    *partner = partner0;
    TraceInput in;
    in.u0 = start.u;
    in.gu0 = gu0;
    in.tangent0 = direction == config.direction ? tangent : Eigen::VectorXd(-tangent);
    in.failure_reason = Termination::numerical_failure;
    in.policy = &policy;
    in.end_hook = hook;
    return trace(sys, in, config);
  };
  const Branch forward = run(config.direction);
  const Branch backward = run(-config.direction);

  HopfCurve out;
  out.reason_forward = forward.reason;
  out.reason_backward = backward.reason;
  out.curve = join(backward, forward);
  out.curve.reason = forward.reason == Termination::curve_endpoint ? backward.reason : forward.reason;
  for (auto& p : out.curve.points) p.theta = std::acos(std::clamp(p.unknowns[kappa_index], -1.0, 1.0));
  bool up = true;
  bool down = true;
  for (std::size_t i = 1; i < out.curve.points.size(); ++i) {
    const double dt = out.curve.points[i].theta - out.curve.points[i - 1].theta;
    if (dt < -1e-12) up = false;
    if (dt > 1e-12) down = false;
  }
  out.theta_monotone = up || down;
  return out;
}

}  // namespace vdpnet
