#include "tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vdpnet/coarse_map.hpp"
#include "vdpnet/continuation.hpp"
#include "vdpnet/diagnostics.hpp"
#include "vdpnet/errors.hpp"
#include "vdpnet/projective.hpp"

namespace vdpnet::cli {

namespace {

// Realization k of the run. A single oscillator has mu = 0.
Heterogeneity realization(const ExperimentConfig& c, std::uint64_t k) {
  const int n = c.model().n_osc;
  if (n == 1) return Heterogeneity::from_values(Eigen::VectorXd::Zero(1));
  return Heterogeneity::gaussian(n, derive_seed(c.seed(), k));
}

std::vector<Column> coeff_columns(int q) {
  std::vector<Column> cols;
  for (int j = 0; j <= q; ++j) cols.push_back({"a" + std::to_string(j), "coefficient of H_" + std::to_string(j) + " in x"});
  for (int j = 0; j <= q; ++j) cols.push_back({"b" + std::to_string(j), "coefficient of H_" + std::to_string(j) + " in y"});
  return cols;
}

std::vector<Column> operator+(std::vector<Column> a, const std::vector<Column>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void put(Table& t, const ChaosCoeffs& z) {
  for (auto v : z.a) t << v;
  for (auto v : z.b) t << v;
}

std::vector<double> linspace(double from, double to, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) v[k] = count == 1 ? from : from + (to - from) * k / (count - 1);
  return v;
}

Json seeds_of(const AveragedMap& map) {
  Json s = Json::array();
  for (const auto& b : map.realizations()) s.push_back(b.heterogeneity().seed);
  return s;
}

// Modulus of the eigenvalue pair whose product is closest to 1.
double critical_pair_modulus(const std::vector<std::complex<double>>& ev) {
  double best = std::numeric_limits<double>::infinity(), mod = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      const bool pair = (ev[i].imag() == 0.0 && ev[j].imag() == 0.0) ||
                        std::abs(ev[i] - std::conj(ev[j])) < 1e-12 * (1.0 + std::abs(ev[i]));
      if (!pair) continue;
      const double m = std::sqrt(std::abs(ev[i] * ev[j]));
      if (std::abs(m - 1.0) < best) {
        best = std::abs(m - 1.0);
        mod = m;
      }
    }
  }
  return mod;
}

void record(TaskOutput& out, const std::string& what, const Branch& b) {
  out.terminations.push_back({{"run", what},
                              {"reason", std::string(to_string(b.reason))},
                              {"message", b.message},
                              {"points", b.points.size()},
                              {"desync_fraction", std::isnan(b.desync_fraction) ? Json() : Json(b.desync_fraction)}});
  if (b.reason == Termination::physics_breakdown) out.escalate("physics_breakdown", what + ": " + b.message);
  if (b.reason == Termination::numerical_failure) out.escalate("numerical_failure", what + ": " + b.message);
}

CoarseFixedPoint start_point(const ExperimentConfig& c, const AveragedMap& map, const ModelParams& p) {
  const auto& init = c.section("initial");
  ChaosCoeffs g = ChaosCoeffs::zero(map.config().q);
  g.a[0] = init["a0"];
  g.b[0] = init["b0"];
  const int relax = init["relax_periods"];
  if (relax > 0) g = relaxed_guess(g, p, map.config(), relax);
  return newton_fixed_point(map, g, p);
}

struct BranchRun {
  Branch branch;
  std::vector<BranchPoint> folds;  // ascending in the free parameter
  std::vector<BranchPoint> hopfs;
};

BranchRun branch_with_specials(const ExperimentConfig& c, const AveragedMap& map, TaskOutput& out) {
  const ModelParams p = c.model();
  const Param free = parse_param(c.section("continuation")["param"].get<std::string>());
  const ContinuationConfig cc = c.continuation("bounds");
  BranchRun r;
  r.branch = continue_branch_both(map.as_function(), start_point(c, map, p), p, free, cc);
  record(out, "branch in " + std::string(to_string(free)), r.branch);
  for (auto k : fold_brackets(r.branch)) {
    try {
      r.folds.push_back(detect_fold(map.as_function(), r.branch, k, cc));
    } catch (const Error& e) {
      out.terminations.push_back({{"run", "fold refinement at point " + std::to_string(k)}, {"reason", "skipped"},
                                  {"message", e.what()}});
    }
  }
  for (auto k : hopf_brackets(r.branch)) {
    try {
      r.hopfs.push_back(detect_hopf(map.as_function(), r.branch, k, cc));
    } catch (const Error& e) {
      out.terminations.push_back({{"run", "Hopf refinement at point " + std::to_string(k)}, {"reason", "skipped"},
                                  {"message", e.what()}});
    }
  }
  const auto by_param = [free](const BranchPoint& a, const BranchPoint& b) { return a.param(free) < b.param(free); };
  std::sort(r.folds.begin(), r.folds.end(), by_param);
  std::sort(r.hopfs.begin(), r.hopfs.end(), by_param);
  return r;
}

Table branch_table(const Branch& b, Param free, int q) {
  Table t("points", std::vector<Column>{{"index", "point number along the branch"},
                                        {"arclength", "pseudo-arclength from the start point"},
                                        {std::string(to_string(free)), "continuation parameter"}} +
                        coeff_columns(q) +
                        std::vector<Column>{{"stable", "1 when every multiplier is inside the unit circle"},
                                            {"unstable_count", "multipliers outside the unit circle"},
                                            {"fold_test", "det(J - I)"},
                                            {"hopf_test", "|lambda|^2 - 1 of the complex pair nearest the circle"},
                                            {"theta", "argument of that pair"},
                                            {"max_modulus", "largest multiplier modulus"}});
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const auto& pt = b.points[i];
    t.row() << static_cast<long>(i) << pt.arclength << pt.param(free);
    put(t, pt.z);
    t << pt.stable << pt.unstable_count() << pt.fold_test << pt.hopf_test << pt.theta
      << std::abs(pt.eigenvalues.front());
  }
  return t;
}

Table specials_table(const BranchRun& r, Param free, int q) {
  Table t("special", std::vector<Column>{{"kind", "fold or hopf"},
                                         {std::string(to_string(free)), "parameter value"},
                                         {"theta", "argument of the critical pair (hopf)"}} +
                         coeff_columns(q));
  for (const auto& f : r.folds) {
    t.row() << "fold" << f.param(free) << std::numeric_limits<double>::quiet_NaN();
    put(t, f.z);
  }
  for (const auto& h : r.hopfs) {
    t.row() << "hopf" << h.param(free) << h.theta;
    put(t, h.z);
  }
  return t;
}

TerminationPolicy policy_for(const ExperimentConfig& c, const AveragedMap& map) {
  const auto& s = c.section("continuation");
  TerminationPolicy pol;
  pol.desync_threshold = s["desync_threshold"];
  pol.failure_limit = s["failure_limit"];
  pol.probe_every_point = s["probe_every_point"];
  if (s["desync_probe"].get<bool>()) {
    std::vector<Heterogeneity> hets;
    for (const auto& b : map.realizations()) hets.push_back(b.heterogeneity());
    SyncOptions so;
    so.integrator = c.integrator();
    pol.desync_probe = make_desync_probe(std::move(hets), s["probe_periods"].get<int>(), so);
  }
  return pol;
}

std::pair<Param, Param> curve_params(const ExperimentConfig& c) {
  const auto& cp = c.section("continuation")["curve_params"];
  return {parse_param(cp[0].get<std::string>()), parse_param(cp[1].get<std::string>())};
}

// ---------------------------------------------------------------------------

void simulate(const ExperimentConfig& c, TaskOutput& out) {
  const ModelParams p = c.model();
  const auto& s = c.section("simulate");
  const Heterogeneity het = realization(c, 0);
  const int q = p.n_osc == 1 ? 0 : s["q"].get<int>();
  const ChaosBasis basis(het, q);
  NetworkState st = NetworkState::uniform(p.n_osc, s["x0"], s["y0"]);
  NetworkIntegrator integ(p, het, c.integrator());
  const int per = s["samples_per_period"];
  const double h = p.forcing_period() / per;
  Table t("series", std::vector<Column>{{"t", "time"},
                                        {"x_mean", "network mean of x"},
                                        {"x_first", "x of oscillator 0"},
                                        {"y_first", "y of oscillator 0"}} +
                        coeff_columns(q));
  const auto emit = [&] {
    t.row() << st.t << st.x.mean() << st.x[0] << st.y[0];
    put(t, basis.restrict_state(st));
  };
  emit();
  const long total = s["periods"].get<long>() * per;
  for (long k = 1; k <= total; ++k) {
    integ.advance(st, h);
    st.t = k * h;  // no drift from repeated addition
    emit();
  }
  out.seeds["heterogeneity"] = het.seed;
  out.tables.push_back(std::move(t));
}

void freq_sweep(const ExperimentConfig& c, TaskOutput& out) {
  const auto& s = c.section("freq_sweep");
  const Param which = parse_param(s["param"].get<std::string>());
  FrequencyOptions o;
  o.settle_time = s["settle_time"];
  o.measure_time = s["measure_time"];
  o.integrator = c.integrator();
  const Heterogeneity het = realization(c, 0);
  Table t("frequency", {{std::string(to_string(which)), "swept parameter"},
                        {"quiescent", "1 when the oscillation decays"},
                        {"angular_frequency", "from upward zero-crossings of x_0; 0 when quiescent"},
                        {"crossings", "upward crossings in the measurement window"},
                        {"amplitude", "peak-to-peak of x_0"}});
  for (double v : linspace(s["from"], s["to"], s["count"])) {
    ModelParams p = c.model();
    set(p, which, v);
    const auto f = measure_angular_frequency(p, het, o);
    t.row() << v << f.quiescent << f.angular_frequency << f.crossings << f.amplitude;
  }
  out.seeds["heterogeneity"] = het.seed;
  out.tables.push_back(std::move(t));
}

void correlate(const ExperimentConfig& c, TaskOutput& out) {
  const ModelParams p = c.model();
  const auto& s = c.section("correlate");
  std::vector<double> times;
  for (const auto& k : s["times_in_periods"]) times.push_back(k.get<double>() * p.forcing_period());
  CorrelationOptions o;
  o.q = p.n_osc == 1 ? 0 : s["q"].get<int>();
  o.seed = derive_seed(c.seed(), 1000);
  o.spread = s["spread"];
  o.integrator = c.integrator();
  const Heterogeneity het = realization(c, 0);
  const auto snaps = correlation_snapshot(p, het, times, o);
  Table pts("points", {{"t", "snapshot time"}, {"i", "oscillator"}, {"mu", "heterogeneity"}, {"x", "x_i"}, {"y", "y_i"}});
  Table fits("fits", std::vector<Column>{{"t", "snapshot time"},
                                         {"residual_x", "RMS fit residual of x over its standard deviation"},
                                         {"residual_y", "same for y"}} +
                         coeff_columns(o.q));
  for (const auto& sn : snaps) {
    for (int i = 0; i < p.n_osc; ++i) pts.row() << sn.t << i << sn.mu[i] << sn.x[i] << sn.y[i];
    fits.row() << sn.t << sn.residual.x << sn.residual.y;
    put(fits, sn.fit);
  }
  out.seeds["heterogeneity"] = het.seed;
  out.seeds["initial_condition"] = o.seed;
  out.tables.push_back(std::move(pts));
  out.tables.push_back(std::move(fits));
}

ProjectionSchedule schedule_of(const ExperimentConfig& c) {
  const auto& s = c.section("project");
  ProjectionSchedule sc;
  sc.dt = c.section("numerics")["dt"];
  sc.n_inner = s["n_inner"];
  sc.n_project = s["n_project"];
  sc.fit_order = s["fit_order"];
  return sc;
}

void project(const ExperimentConfig& c, TaskOutput& out) {
  const ModelParams p = c.model();
  const auto& s = c.section("project");
  const int q = p.n_osc == 1 ? 0 : s["q"].get<int>();
  ChaosCoeffs z = ChaosCoeffs::zero(q);
  z.a[0] = s["a0"];
  z.b[0] = s["b0"];
  const ProjectionSchedule sc = schedule_of(c);
  const double duration = s["duration"];
  const Heterogeneity het = realization(c, 0);
  const bool fresh = s["fresh_realizations"];
  const std::uint64_t source_seed = derive_seed(c.seed(), 1);
  auto source = fresh ? RealizationSource::fresh(p.n_osc, source_seed) : RealizationSource::fixed(het);
  const auto series = projective_integrate(z, p, sc, source, duration);
  Table t("series", std::vector<Column>{{"t", "time"}, {"kind", "initial, burst or projected"}} + coeff_columns(q));
  for (const auto& smp : series) {
    t.row() << smp.t
            << (smp.kind == SampleKind::initial ? "initial" : smp.kind == SampleKind::burst ? "burst" : "projected");
    put(t, smp.z);
  }
  out.tables.push_back(std::move(t));
  out.seeds["heterogeneity"] = het.seed;
  if (fresh) out.seeds["realization_source"] = source_seed;
  out.summary["lifts"] = source.lifts();

  if (s["compare_direct"].get<bool>()) {
    const auto direct = direct_coarse_trajectory(z, p, het, sc.dt, duration);
    Table d("direct", std::vector<Column>{{"t", "time"}} + coeff_columns(q));
    for (const auto& smp : direct) {
      d.row() << smp.t;
      put(d, smp.z);
    }
    // Largest deviation of the leading heterogeneity coefficient.
    const int j = std::min(q, 1);
    double worst = 0.0;
    for (const auto& smp : series) {
      const auto k = static_cast<std::size_t>(std::llround(smp.t / sc.dt));
      if (k < direct.size()) worst = std::max(worst, std::abs(smp.z.a[j] - direct[k].z.a[j]));
    }
    out.summary["max_abs_diff_a" + std::to_string(j)] = worst;
    out.tables.push_back(std::move(d));
  }
}

void speedup(const ExperimentConfig& c, TaskOutput& out) {
  const ModelParams p = c.model();
  const auto& s = c.section("speedup");
  const int q = p.n_osc == 1 ? 0 : c.section("project")["q"].get<int>();
  ProjectionSchedule sc = schedule_of(c);
  const std::uint64_t seed = derive_seed(c.seed(), 1);
  Table t("speedup", {{"n_project", "projection horizon N2 in steps"},
                      {"direct_seconds", "median wall-clock of the direct run"},
                      {"projective_seconds", "median wall-clock of the projective run"},
                      {"ratio", "direct / projective"},
                      {"status", "ok or diverged"}});
  std::vector<SpeedupReport> reports;
  for (const auto& n2 : s["n_project_values"]) {
    sc.n_project = n2;
    try {
      reports.push_back(measure_speedup(p, sc, s["duration"], q, seed, s["repeats"]));
      const auto& r = reports.back();
      t.row() << static_cast<long>(r.n_project) << r.direct_seconds << r.projective_seconds << r.ratio << "ok";
    } catch (const Error& e) {
      // Long horizons can extrapolate the burst out of the basin; that N2 has no speedup.
      if (!dynamic_cast<const BurstDivergence*>(&e) && !dynamic_cast<const ProjectionOvershoot*>(&e)) throw;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      t.row() << n2.get<long>() << nan << nan << nan << "diverged";
    }
  }
  const auto cross = speedup_crossover(reports);
  out.summary["crossover_n_project"] = cross ? Json(*cross) : Json();
  out.summary["note"] = "timings vary between runs";
  out.seeds["realization_source"] = seed;
  out.tables.push_back(std::move(t));
}

void fixed_point(const ExperimentConfig& c, TaskOutput& out) {
  const ModelParams p = c.model();
  const AveragedMap map(p.n_osc, c.coarse_map());
  out.seeds["realizations"] = seeds_of(map);
  const auto fp = start_point(c, map, p);
  const int q = map.config().q;
  Table z("fixed_point", coeff_columns(q) + std::vector<Column>{{"residual", "||h(z) - z||_inf"},
                                                               {"iterations", "Newton iterations"},
                                                               {"stable", "1 when every multiplier is inside"}});
  z.row();
  put(z, fp.z);
  z << fp.residual << fp.iterations << fp.stable;
  Table ev("eigenvalues", {{"index", "decreasing modulus"}, {"re", "real part"}, {"im", "imaginary part"},
                           {"modulus", "|lambda|"}});
  for (std::size_t k = 0; k < fp.eigenvalues.size(); ++k) {
    ev.row() << static_cast<long>(k) << fp.eigenvalues[k].real() << fp.eigenvalues[k].imag()
             << std::abs(fp.eigenvalues[k]);
  }
  out.tables.push_back(std::move(z));
  out.tables.push_back(std::move(ev));
  out.summary["residual_history"] = fp.residual_history;
  if (c.section("fixed_point")["defect_table"].get<bool>()) {
    // The microscopic state lifted from z* does not return after one period.
    const auto& basis = map.realizations().front();
    const NetworkState s0 = basis.lift(fp.z);
    const NetworkState s1 = strobe_full(s0, p, basis.heterogeneity(), c.integrator());
    Table d("defect", {{"i", "oscillator"}, {"mu", "heterogeneity"}, {"dx", "x_i(T) - x_i(0)"},
                       {"dy", "y_i(T) - y_i(0)"}});
    for (int i = 0; i < p.n_osc; ++i) {
      d.row() << i << basis.heterogeneity().mu[i] << s1.x[i] - s0.x[i] << s1.y[i] - s0.y[i];
    }
    out.summary["max_abs_dx"] = (s1.x - s0.x).lpNorm<Eigen::Infinity>();
    out.summary["defect_realization_seed"] = basis.heterogeneity().seed;
    out.tables.push_back(std::move(d));
  }
}

void branch(const ExperimentConfig& c, TaskOutput& out) {
  const AveragedMap map(c.model().n_osc, c.coarse_map());
  out.seeds["realizations"] = seeds_of(map);
  const Param free = parse_param(c.section("continuation")["param"].get<std::string>());
  const auto r = branch_with_specials(c, map, out);
  out.tables.push_back(branch_table(r.branch, free, map.config().q));
  out.tables.push_back(specials_table(r, free, map.config().q));
}

void fold_curve(const ExperimentConfig& c, TaskOutput& out) {
  const AveragedMap map(c.model().n_osc, c.coarse_map());
  out.seeds["realizations"] = seeds_of(map);
  const Param free = parse_param(c.section("continuation")["param"].get<std::string>());
  const auto r = branch_with_specials(c, map, out);
  const auto [p1, p2] = curve_params(c);
  const int q = map.config().q;
  const TerminationPolicy pol = policy_for(c, map);
  Table t("curves", std::vector<Column>{{"curve", "fold number, ascending in the branch parameter"},
                                        {"direction", "+1 or -1: initial direction in the first parameter"},
                                        {"index", "point number along the curve"},
                                        {std::string(to_string(p1)), "first curve parameter"},
                                        {std::string(to_string(p2)), "second curve parameter"}} +
                        coeff_columns(q) + std::vector<Column>{{"stable", "1 when every multiplier is inside"}});
  ContinuationConfig cc = c.continuation("curve_bounds");
  const bool both = c.section("continuation")["both_directions"];
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    for (int dir : {cc.direction, -cc.direction}) {
      if (dir != cc.direction && !both) break;
      ContinuationConfig d = cc;
      d.direction = dir;
      const Branch curve = continue_fold_curve(map.as_function(), r.folds[f], {p1, p2}, d, pol);
      record(out, "fold curve " + std::to_string(f) + " direction " + std::to_string(dir), curve);
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& pt = curve.points[i];
        t.row() << static_cast<long>(f) << dir << static_cast<long>(i) << pt.param(p1) << pt.param(p2);
        put(t, pt.z);
        t << pt.stable;
      }
    }
  }
  out.summary["folds_on_branch"] = r.folds.size();
  out.tables.push_back(specials_table(r, free, q));
  out.tables.push_back(std::move(t));
}

void hopf_curve(const ExperimentConfig& c, TaskOutput& out) {
  const AveragedMap map(c.model().n_osc, c.coarse_map());
  out.seeds["realizations"] = seeds_of(map);
  const Param free = parse_param(c.section("continuation")["param"].get<std::string>());
  const auto r = branch_with_specials(c, map, out);
  const auto [p1, p2] = curve_params(c);
  const int q = map.config().q;
  const TerminationPolicy pol = policy_for(c, map);
  const ContinuationConfig cc = c.continuation("curve_bounds");
  Table t("curves", std::vector<Column>{{"curve", "Hopf point number, ascending in the branch parameter"},
                                        {"index", "point number along the curve"},
                                        {std::string(to_string(p1)), "first curve parameter"},
                                        {std::string(to_string(p2)), "second curve parameter"},
                                        {"theta", "argument of the critical pair"},
                                        {"pair_modulus", "sqrt(|lambda1 lambda2|) of the critical pair"}} +
                        coeff_columns(q));
  Json mono = Json::array();
  for (std::size_t h = 0; h < r.hopfs.size(); ++h) {
    const HopfCurve hc = continue_hopf_curve(map.as_function(), r.hopfs[h], {p1, p2}, cc, pol);
    record(out, "Hopf curve " + std::to_string(h), hc.curve);
    out.terminations.back()["reason_backward"] = std::string(to_string(hc.reason_backward));
    out.terminations.back()["reason_forward"] = std::string(to_string(hc.reason_forward));
    mono.push_back(hc.theta_monotone);
    for (std::size_t i = 0; i < hc.curve.points.size(); ++i) {
      const auto& pt = hc.curve.points[i];
      t.row() << static_cast<long>(h) << static_cast<long>(i) << pt.param(p1) << pt.param(p2) << pt.theta
              << critical_pair_modulus(pt.eigenvalues);
      put(t, pt.z);
    }
  }
  out.summary["hopf_points_on_branch"] = r.hopfs.size();
  out.summary["theta_monotone"] = mono;
  out.tables.push_back(specials_table(r, free, q));
  out.tables.push_back(std::move(t));
}

void sync_scan(const ExperimentConfig& c, TaskOutput& out) {
  const auto& s = c.section("sync");
  const Param which = parse_param(s["param"].get<std::string>());
  SyncOptions o;
  o.settle_periods = s["settle_periods"];
  o.integrator = c.integrator();
  const int observe = s["observe_periods"];
  const bool raster = s["record_raster"];
  Table t("scan", {{std::string(to_string(which)), "scanned parameter"},
                   {"realization", "realization number"},
                   {"desync_fraction", "desynchronized oscillators over N"},
                   {"n_locked", "size of the modal winding-count cluster"},
                   {"n_quiescent", "oscillators without oscillation"},
                   {"modal_count", "winding count of the cluster"},
                   {"locked_to_forcing", "1 when the cluster count matches the locking ratio"},
                   {"ties", "other counts as frequent as the modal one"}});
  Table ras("raster", {{std::string(to_string(which)), "scanned parameter"},
                       {"oscillator", "index i"},
                       {"strobe", "forcing period number after settling"},
                       {"x", "x_i at the strobe"}});
  Json seeds = Json::array();
  const int n_seeds = s["seeds"];
  for (int k = 0; k < n_seeds; ++k) seeds.push_back(realization(c, static_cast<std::uint64_t>(k)).seed);
  for (const auto& v : s["values"]) {
    ModelParams p = c.model();
    set(p, which, v.get<double>());
    for (int k = 0; k < n_seeds; ++k) {
      SyncOptions ok = o;
      ok.record_raster = raster && k == 0;
      const auto rep = classify_synchrony(p, realization(c, static_cast<std::uint64_t>(k)), observe, ok);
      t.row() << v.get<double>() << k << rep.desync_fraction << rep.n_locked_cluster
              << static_cast<long>(rep.quiescent_indices.size()) << rep.modal_count << rep.cluster_locked_to_forcing
              << static_cast<long>(rep.tied_counts.size());
      if (ok.record_raster) {
        for (Eigen::Index i = 0; i < rep.raster.rows(); ++i) {
          for (Eigen::Index j = 0; j < rep.raster.cols(); ++j) {
            ras.row() << v.get<double>() << static_cast<long>(i) << static_cast<long>(j) << rep.raster(i, j);
          }
        }
      }
    }
  }
  out.seeds["realizations"] = seeds;
  out.tables.push_back(std::move(t));
  if (raster) out.tables.push_back(std::move(ras));
}

void walkthrough(const ExperimentConfig& c, TaskOutput& out) {
  const ModelParams p = c.model();
  const auto& s = c.section("walkthrough");
  const bool right = s["side"].get<std::string>() == "right";
  double omega_star = s["omega_star"];
  if (s["omega_star_auto"].get<bool>()) {
    // Tongue edge from the omega-branch of the coarse map at these parameters.
    const AveragedMap map(p.n_osc, c.coarse_map());
    out.seeds["realizations"] = seeds_of(map);
    const ContinuationConfig cc = c.continuation("bounds");
    const Branch b = continue_branch_both(map.as_function(), start_point(c, map, p), p, Param::omega, cc);
    record(out, "branch in omega", b);
    std::vector<double> folds;
    for (auto k : fold_brackets(b)) folds.push_back(detect_fold(map.as_function(), b, k, cc).param(Param::omega));
    if (folds.empty()) throw NotAFold("no fold on the omega-branch; set walkthrough.omega_star by hand");
    omega_star = right ? *std::max_element(folds.begin(), folds.end()) : *std::min_element(folds.begin(), folds.end());
  }
  std::vector<double> omegas;
  for (const auto& d : s["distances"]) omegas.push_back(omega_star + (right ? 1.0 : -1.0) * d.get<double>());
  WalkthroughOptions o;
  o.budget_periods = s["budget_periods"];
  o.settle_periods = s["settle_periods"];
  o.q = p.n_osc == 1 ? 0 : c.section("numerics")["q"].get<int>();
  o.integrator = c.integrator();
  const Heterogeneity het = realization(c, 0);
  const auto est = walkthrough_period(p, het, omega_star, omegas, o);
  Table t("walkthrough", {{"omega", "forcing frequency"},
                          {"distance", "|omega - omega_star|"},
                          {"resolved", "1 when at least two slips were seen"},
                          {"slips", "slips in the budget"},
                          {"period", "mean time between slips"},
                          {"period_spread", "standard deviation of slip intervals"}});
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& e : est) {
    t.row() << e.omega << e.distance << e.resolved << e.slips << e.period << e.period_spread;
    if (e.resolved) {
      const double lx = std::log(e.distance), ly = std::log(e.period);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
  }
  out.summary["omega_star"] = omega_star;
  out.summary["loglog_slope"] = n >= 2 ? Json((n * sxy - sx * sy) / (n * sxx - sx * sx)) : Json();
  out.seeds["heterogeneity"] = het.seed;
  out.tables.push_back(std::move(t));
}

}  // namespace

void dispatch(const ExperimentConfig& c, TaskOutput& out) {
  const std::string& task = c.task();
  if (task == "simulate") return simulate(c, out);
  if (task == "freq-sweep") return freq_sweep(c, out);
  if (task == "correlate") return correlate(c, out);
  if (task == "project") return project(c, out);
  if (task == "speedup") return speedup(c, out);
  if (task == "fixed-point") return fixed_point(c, out);
  if (task == "branch") return branch(c, out);
  if (task == "fold-curve") return fold_curve(c, out);
  if (task == "hopf-curve") return hopf_curve(c, out);
  if (task == "sync-scan") return sync_scan(c, out);
  if (task == "walkthrough") return walkthrough(c, out);
  throw ConfigError("task", "unknown task '" + task + "'");
}

}  // namespace vdpnet::cli
