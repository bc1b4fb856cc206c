#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vdpnet/diagnostics.hpp"
#include "vdpnet/errors.hpp"

using namespace vdpnet;

namespace {

ModelParams network(int n, double beta, double omega = 0.85) {
  ModelParams p;
  p.n_osc = n;
  p.beta = beta;
  p.omega = omega;
  return p;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("identical oscillators inside the tongue are one locked cluster") {
    const auto r = classify_synchrony(network(20, 0.0), Heterogeneity::gaussian(20, 1), 30);
    CHECK(r.desync_fraction == 0.0);
    CHECK(r.desync_indices.empty());
    CHECK(r.n_locked_cluster == 20);
    CHECK(r.modal_count == 30);
    CHECK(r.cluster_locked_to_forcing);
    CHECK(r.tied_counts.empty());
  }

  TEST_CASE("locking ratio is configurable") {
    SyncOptions o;
    o.oscillations = 1;
    o.periods = 2;
    const auto r = classify_synchrony(network(5, 0.0), Heterogeneity::gaussian(5, 1), 30, o);
    CHECK_FALSE(r.cluster_locked_to_forcing);
  }

  TEST_CASE("below onset every oscillator is quiescent, not desynchronized") {
    ModelParams p = network(10, 0.0);
    p.phi = -0.5;
    p.amplitude = 0.0;
    p.epsilon = 0.0;
    const auto r = classify_synchrony(p, Heterogeneity::gaussian(10, 2), 20);
    CHECK(r.quiescent_indices.size() == 10);
    CHECK(r.desync_indices.empty());
    CHECK(r.n_locked_cluster == 0);
    CHECK(r.desync_fraction == 0.0);
    CHECK_FALSE(r.cluster_locked_to_forcing);
  }

  TEST_CASE("categories partition the network and the raster has one column per strobe") {
    SyncOptions o;
    o.record_raster = true;
    const auto r = classify_synchrony(network(60, 2.5, 0.93), Heterogeneity::gaussian(60, 4), 25, o);
    CHECK(r.n_locked_cluster + static_cast<int>(r.desync_indices.size() + r.quiescent_indices.size()) == 60);
    CHECK(r.desync_fraction >= 0.0);
    CHECK(r.desync_fraction <= 1.0);
    CHECK(r.desync_fraction == doctest::Approx(static_cast<double>(r.desync_indices.size()) / 60));
    CHECK(r.desync_fraction > 0.0);
    CHECK(r.raster.rows() == 60);
    CHECK(r.raster.cols() == 25);
  }

  TEST_CASE("relabeling the oscillators relabels the report") {
    const auto p = network(60, 2.5, 0.93);
    const auto het = Heterogeneity::gaussian(60, 4);
    const Eigen::VectorXd rev = het.mu.reverse();
    const auto a = classify_synchrony(p, het, 25);
    const auto b = classify_synchrony(p, Heterogeneity::from_values(rev), 25);
    CHECK(a.modal_count == b.modal_count);
    CHECK(a.n_locked_cluster == b.n_locked_cluster);
    std::vector<int> mapped;
    for (int i : b.desync_indices) mapped.push_back(59 - i);
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == a.desync_indices);
  }

  TEST_CASE("invalid windows") {
    CHECK_THROWS_AS(classify_synchrony(network(5, 0.0), Heterogeneity::gaussian(5, 1), 19), DomainError);
    SyncOptions o;
    o.periods = 0;
    CHECK_THROWS_AS(classify_synchrony(network(5, 0.0), Heterogeneity::gaussian(5, 1), 20, o), DomainError);
    CHECK_THROWS_AS(make_desync_probe({}), DomainError);
  }

  TEST_CASE("median desynchronized fraction does not decrease with heterogeneity") {
    double prev = -1.0;
    for (double beta : {0.5, 0.8, 1.0, 1.2}) {
      std::vector<double> f;
      for (std::uint64_t s = 0; s < 10; ++s) {
        f.push_back(classify_synchrony(network(500, beta, 0.93), Heterogeneity::gaussian(500, derive_seed(7, s)), 40)
                        .desync_fraction);
      }
      const double m = median(f);
      CHECK(m >= prev);
      prev = m;
    }
  }

  TEST_CASE("probe averages over realizations") {
    const std::vector<Heterogeneity> hets{Heterogeneity::gaussian(20, 1), Heterogeneity::gaussian(20, 2)};
    const auto probe = make_desync_probe(hets, 20);
    CHECK(probe(network(20, 0.0)) == 0.0);
  }

  TEST_CASE("slip detection on synthetic series") {
    std::vector<double> s(100, 1.0);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += 1e-3 * std::sin(0.7 * static_cast<double>(k));
    s[20] = 3.0;
    s[21] = 2.5;  // same excursion, not a second slip
    s[50] = -1.0;
    s[52] = -1.0;  // only one in-band strobe in between
    s[80] = 3.0;
    CHECK(detect_slips(s, 3.0, 3) == std::vector<long>{20, 50, 80});
    CHECK(detect_slips(s, 3.0, 1) == std::vector<long>{20, 50, 52, 80});
    CHECK(detect_slips({}, 3.0, 3).empty());
    CHECK(detect_slips(std::vector<double>(10, 2.0), 3.0, 3).empty());
  }

  TEST_CASE("walkthrough period of a single oscillator beyond the fold") {
    ModelParams p;
    p.n_osc = 1;
    const auto het = Heterogeneity::from_values(Eigen::VectorXd::Zero(1));
    const double omega_star = 0.9891202311;
    const std::vector<double> omegas{omega_star + 0.001, omega_star + 0.004};
    WalkthroughOptions o;
    o.budget_periods = 3000;
    const auto short_run = walkthrough_period(p, het, omega_star, omegas, o);
    o.budget_periods = 6000;
    const auto long_run = walkthrough_period(p, het, omega_star, omegas, o);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      REQUIRE(short_run[i].resolved);
      CHECK(short_run[i].slips >= 5);
      CHECK(short_run[i].distance == doctest::Approx(omegas[i] - omega_star));
      CHECK(long_run[i].period == doctest::Approx(short_run[i].period).epsilon(0.01));
    }
    // Closer to the fold the bottleneck is slower; a 4x distance halves the period.
    const double slope = std::log(short_run[1].period / short_run[0].period) / std::log(4.0);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.1));

    o.budget_periods = 50;
    const auto starved = walkthrough_period(p, het, omega_star, {omega_star + 0.001}, o);
    CHECK_FALSE(starved[0].resolved);
    CHECK(std::isnan(starved[0].period));
  }

  TEST_CASE("after desynchronization the walkthrough period is not well defined") {
    const auto p = network(100, 3.0, 0.93);
    WalkthroughOptions o;
    o.budget_periods = 1500;
    std::vector<double> t;
    for (std::uint64_t s = 0; s < 8; ++s) {
      const auto e = walkthrough_period(p, Heterogeneity::gaussian(100, derive_seed(3, s)), 0.0, {0.93}, o);
      if (e[0].resolved) t.push_back(e[0].period);
    }
    REQUIRE(t.size() >= 4);
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= static_cast<double>(t.size());
    double var = 0.0;
    for (double v : t) var += (v - mean) * (v - mean);
    CHECK(std::sqrt(var / static_cast<double>(t.size() - 1)) / mean > 0.2);
  }

  TEST_CASE("correlations develop within two forcing periods") {
    const auto p = network(500, 0.1);
    const double period = p.forcing_period();
    std::vector<double> r0, r1, r2x, r0y, r2y;
    for (std::uint64_t s = 1; s <= 10; ++s) {
      CorrelationOptions o;
      o.seed = s;
      const auto snaps = correlation_snapshot(p, Heterogeneity::gaussian(500, 100 + s), {0.0, period, 2 * period}, o);
      REQUIRE(snaps.size() == 3);
      CHECK(snaps[0].x.size() == 500);
      CHECK(snaps[2].t == 2 * period);
      r0.push_back(snaps[0].residual.x);
      r1.push_back(snaps[1].residual.x);
      r2x.push_back(snaps[2].residual.x);
      r0y.push_back(snaps[0].residual.y);
      r2y.push_back(snaps[2].residual.y);
    }
    CHECK(median(r0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(median(r2x) < 0.1);
    // y lags x; how far it has come by 4 pi / omega depends on the initial spread.
    CHECK(median(r2y) < 0.2 * median(r0y));
    CHECK(median(r2x) <= median(r1));
    CHECK(median(r1) <= median(r0));
    CHECK_THROWS_AS(correlation_snapshot(p, Heterogeneity::gaussian(500, 1), {1.0, 0.5}), DomainError);
  }
}
