#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "vdpnet/coarse_map.hpp"
#include "vdpnet/errors.hpp"

using namespace vdpnet;

namespace {

ModelParams network(int n, double beta) {
  ModelParams p;
  p.n_osc = n;
  p.beta = beta;
  return p;
}

ChaosCoeffs guess() {
  ChaosCoeffs z = ChaosCoeffs::zero(1);
  z.a[0] = -1.8;
  z.b[0] = -1.3;
  return z;
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// Locked strobe of one oscillator from a long plain simulation.
Eigen::Vector2d locked_strobe(const ModelParams& p) {
  ModelParams single = p;
  single.n_osc = 1;
  single.beta = 0.0;
  NetworkIntegrator integ(single, Heterogeneity::from_values(Eigen::VectorXd::Zero(1)));
  NetworkState s = NetworkState::uniform(1, 1.0, 0.0);
  integ.advance(s, 400 * single.forcing_period());
  return {s.x[0], s.y[0]};
}

}  // namespace

TEST_SUITE("coarse_map") {
  TEST_CASE("config validation") {
    CoarseMapConfig c;
    CHECK_NOTHROW(c.validate());
    c.r = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.fd_step = 0.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.newton_tol = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.realization_seeds = {1, 2};
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.r = 2;
    CHECK(c.seeds() == std::vector<std::uint64_t>{1, 2});
  }

  TEST_CASE("homogeneous network never excites higher coefficients") {
    const auto p = network(100, 0.0);
    ChaosCoeffs z = ChaosCoeffs::zero(2);
    z.a[0] = 0.7;
    z.b[0] = -0.2;
    const auto out = coarse_map(z, p, Heterogeneity::gaussian(100, 5));
    CHECK(std::abs(out.a[1]) < 1e-13);
    CHECK(std::abs(out.a[2]) < 1e-13);
    CHECK(std::abs(out.b[1]) < 1e-13);
    CHECK(std::abs(out.b[2]) < 1e-13);
  }

  TEST_CASE("permuting the oscillators does not change h") {
    const auto p = network(60, 0.5);
    const auto het = Heterogeneity::gaussian(60, 9);
    Eigen::VectorXd rev = het.mu.reverse();
    ChaosCoeffs z = guess();
    z.a[1] = 0.3;
    const auto a = coarse_map(z, p, het);
    const auto b = coarse_map(z, p, Heterogeneity::from_values(rev));
    CHECK(max_abs(a.stacked() - b.stacked()) < 1e-11);
  }

  TEST_CASE("one realization equals the plain coarse map") {
    const auto p = network(80, 0.5);
    CoarseMapConfig c;
    c.r = 1;
    c.realization_seeds = {4242};
    const auto avg = averaged_map(guess(), p, c);
    const auto plain = coarse_map(guess(), p, Heterogeneity::gaussian(80, 4242));
    CHECK(avg.stacked() == plain.stacked());
  }

  TEST_CASE("without heterogeneity the average ignores r and the seeds") {
    const auto p = network(80, 0.0);
    CoarseMapConfig c1;
    c1.r = 1;
    c1.base_seed = 3;
    CoarseMapConfig c2;
    c2.r = 5;
    c2.base_seed = 77;
    const auto a = averaged_map(guess(), p, c1);
    const auto b = averaged_map(guess(), p, c2);
    CHECK(max_abs(a.stacked() - b.stacked()) < 1e-12);
  }

  TEST_CASE("averaged map is a pure function of its seeds") {
    const auto p = network(80, 0.5);
    CoarseMapConfig c;
    c.r = 3;
    c.base_seed = 12;
    const AveragedMap m1(80, c);
    const AveragedMap m2(80, c);
    CHECK(m1(guess().stacked(), p) == m2(guess().stacked(), p));
    c.base_seed = 13;
    CHECK(AveragedMap(80, c)(guess().stacked(), p) != m1(guess().stacked(), p));
  }

  TEST_CASE("member spread shrinks with network size") {
    auto spread = [](int n) {
      CoarseMapConfig c;
      c.r = 8;
      const AveragedMap m(n, c);
      const auto out = m.members(guess().stacked(), network(n, 0.5));
      double mean = 0.0;
      for (const auto& v : out) mean += v[0];
      mean /= static_cast<double>(out.size());
      double var = 0.0;
      for (const auto& v : out) var += (v[0] - mean) * (v[0] - mean);
      return std::sqrt(var / static_cast<double>(out.size() - 1));
    };
    CHECK(spread(500) < spread(100));
  }

  TEST_CASE("finite differences recover a linear map") {
    Eigen::Matrix3d a;
    a << 0.5, -1.0, 2.0, 0.0, 3.0, 0.25, -4.0, 1.5, 0.1;
    const Eigen::Vector3d c(1.0, -2.0, 0.5);
    const CoarseMapFn map = [&](const Eigen::VectorXd& z, const ModelParams&) -> Eigen::VectorXd {
      return a * z + c;
    };
    const Eigen::MatrixXd j = finite_difference_jacobian(map, Eigen::Vector3d(0.3, -0.7, 2.0), {}, 1e-5);
    CHECK((j - a).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_THROWS_AS(finite_difference_jacobian(map, Eigen::Vector3d::Zero(), {}, 0.0), DomainError);
  }

  TEST_CASE("spectrum ordering and conjugate symmetry") {
    Eigen::Matrix3d m;
    m << 0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.5;
    const auto ev = spectrum(m);
    REQUIRE(ev.size() == 3);
    CHECK(std::abs(ev[0]) == doctest::Approx(2.0));
    CHECK(ev[0] == std::conj(ev[1]));
    CHECK(ev[2].real() == doctest::Approx(0.5));
    CHECK_FALSE(all_inside_unit_circle(ev));
    CHECK(all_inside_unit_circle({{0.5, 0.5}, {0.5, -0.5}}));
  }

  TEST_CASE("homogeneous fixed point agrees with the locked strobe of one oscillator") {
    const auto p = network(100, 0.0);
    CoarseMapConfig c;
    c.r = 2;
    const auto fp = newton_fixed_point(relaxed_guess(guess(), p, c), p, c);
    const Eigen::Vector2d oracle = locked_strobe(p);
    CHECK(fp.z.a[0] == doctest::Approx(oracle[0]).epsilon(1e-7));
    CHECK(fp.z.b[0] == doctest::Approx(oracle[1]).epsilon(1e-7));
    CHECK(fp.z.a[0] == doctest::Approx(-1.7510438832).epsilon(1e-8));
    CHECK(std::abs(fp.z.a[1]) < 1e-12);
    CHECK(std::abs(fp.z.b[1]) < 1e-12);
    CHECK(fp.stable);
    CHECK(fp.eigenvalues.size() == 4);
    CHECK(fp.residual < c.newton_tol);
  }

  TEST_CASE("heterogeneous fixed point") {
    const auto p = network(100, 0.5);
    CoarseMapConfig c;
    c.r = 4;
    const AveragedMap map(100, c);
    const auto fp = newton_fixed_point(map, relaxed_guess(guess(), p, c), p);

    SUBCASE("newton converges quadratically") {
      const auto& h = fp.residual_history;
      REQUIRE(h.size() >= 3);
      for (std::size_t k = 0; k + 1 < h.size(); ++k) {
        if (h[k] > 1e-7) CHECK(h[k + 1] < h[k] * h[k]);
      }
    }

    SUBCASE("restart at the fixed point takes at most one iteration") {
      const auto again = newton_fixed_point(map, fp.z, p);
      CHECK(again.iterations <= 1);
      CHECK(max_abs(again.z.stacked() - fp.z.stacked()) < 1e-7);
    }

    SUBCASE("spectrum is stable, conjugate-closed and of full size") {
      CHECK(fp.stable);
      REQUIRE(fp.eigenvalues.size() == 4);
      for (const auto& l : fp.eigenvalues) {
        const bool has_partner = std::any_of(fp.eigenvalues.begin(), fp.eigenvalues.end(),
                                             [&](auto m) { return std::abs(m - std::conj(l)) < 1e-12; });
        CHECK(has_partner);
      }
    }

    SUBCASE("halving the difference step barely changes the Jacobian") {
      CoarseMapConfig half = c;
      half.fd_step = 0.5 * c.fd_step;
      const Eigen::MatrixXd j2 = coarse_jacobian(fp.z, p, half);
      const double scale = fp.jacobian.cwiseAbs().maxCoeff();
      for (Eigen::Index i = 0; i < j2.size(); ++i) {
        const double ref = std::max(std::abs(fp.jacobian(i)), 1e-3 * scale);
        CHECK(std::abs(j2(i) - fp.jacobian(i)) < 0.01 * ref);
      }
    }
  }

  TEST_CASE("coarse fixed point whose microscopic state does not return") {
    const auto p = network(100, 0.5);
    CoarseMapConfig c;
    c.r = 1;
    c.realization_seeds = {31};
    const auto fp = newton_fixed_point(relaxed_guess(guess(), p, c), p, c);
    const ChaosBasis basis(Heterogeneity::gaussian(100, 31), 1);
    const NetworkState start = basis.lift(fp.z, 0.0);
    NetworkState s = start;
    NetworkIntegrator(p, basis.heterogeneity()).advance(s, p.forcing_period());
    CHECK(max_abs(basis.restrict_state(s).stacked() - fp.z.stacked()) < 1e-8);
    CHECK(max_abs(s.x - start.x) > 1e-3);
  }

  TEST_CASE("stable coarse fixed point keeps the full simulation nearby") {
    const auto p = network(100, 0.5);
    CoarseMapConfig c;
    c.r = 1;
    c.realization_seeds = {31};
    const auto fp = newton_fixed_point(relaxed_guess(guess(), p, c), p, c);
    REQUIRE(fp.stable);
    const ChaosBasis basis(Heterogeneity::gaussian(100, 31), 1);
    NetworkState s = basis.lift(fp.z, 0.0);
    NetworkIntegrator integ(p, basis.heterogeneity());
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      integ.advance(s, p.forcing_period());
      worst = std::max(worst, max_abs(basis.restrict_state(s).stacked() - fp.z.stacked()));
    }
    CHECK(worst < 0.05);
  }

  TEST_CASE("newton failure modes") {
    const CoarseMapFn shift = [](const Eigen::VectorXd& z, const ModelParams&) -> Eigen::VectorXd {
      return z + Eigen::VectorXd::Ones(z.size());
    };
    CHECK_THROWS_AS(newton_fixed_point(shift, Eigen::Vector2d(0.0, 0.0), {}), SingularJacobian);

    const CoarseMapFn rootless = [](const Eigen::VectorXd& z, const ModelParams&) -> Eigen::VectorXd {
      return Eigen::Vector2d(z[0] + std::exp(z[0]), 0.5 * z[1]);
    };
    NewtonOptions o;
    o.max_iter = 5;
    try {
      newton_fixed_point(rootless, Eigen::Vector2d(0.0, 1.0), {}, o);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.last_residual() > 0.0);
      CHECK(e.last_residual() == doctest::Approx(std::exp(-5.0)).epsilon(1e-4));
    }
    CHECK_THROWS_AS(newton_fixed_point(rootless, Eigen::Vector2d(NAN, 0.0), {}), DomainError);
  }

  TEST_CASE("a failing member names its seed") {
    const auto p = network(20, 0.5);
    CoarseMapConfig c;
    c.r = 3;
    c.realization_seeds = {101, 202, 303};
    ChaosCoeffs z = ChaosCoeffs::zero(1);
    z.a[0] = 1e7;
    try {
      averaged_map(z, p, c);
      FAIL("expected MemberEvaluationError");
    } catch (const MemberEvaluationError& e) {
      CHECK((e.seed() == 101 || e.seed() == 202 || e.seed() == 303));
    }
  }
}
