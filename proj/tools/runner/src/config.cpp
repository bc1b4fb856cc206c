#include "vdpnet_runner/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vdpnet/errors.hpp"

namespace vdpnet::cli {

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"simulate",    "freq-sweep", "correlate",  "project",
                                              "speedup",     "fixed-point", "branch",    "fold-curve",
                                              "hopf-curve",  "sync-scan",  "walkthrough"};
  return names;
}

const Json& default_config() {
  static const Json d = Json::parse(R"({
    "task": "simulate",
    "seed": 1,
    "threads": 0,
    "output": {"dir": "out", "prefix": ""},
    "model": {"phi": 1.0, "beta": 0.0, "epsilon": 1.0, "amplitude": 0.5, "omega": 0.85, "n_osc": 500},
    "numerics": {"dt": 0.005, "blowup_guard": 1e6, "q": 1, "r": 20,
                 "fd_step": 1e-5, "newton_tol": 1e-8, "newton_max_iter": 25},
    "initial": {"a0": -1.75, "b0": -1.16, "relax_periods": 30},
    "simulate": {"periods": 50, "samples_per_period": 1, "x0": 1.0, "y0": 0.0, "q": 1},
    "freq_sweep": {"param": "phi", "from": -0.5, "to": 3.0, "count": 36,
                   "settle_time": 400.0, "measure_time": 200.0},
    "correlate": {"times_in_periods": [0.0, 1.0, 2.0], "spread": 2.0, "q": 1},
    "project": {"q": 2, "n_inner": 3, "n_project": 1, "fit_order": 3, "duration": 100.0,
                "fresh_realizations": true, "compare_direct": true, "a0": 1.0, "b0": 0.0},
    "speedup": {"n_project_values": [1, 2, 5, 10, 15, 20, 30, 50, 71], "repeats": 3, "duration": 100.0},
    "fixed_point": {"defect_table": true},
    "continuation": {"param": "omega", "curve_params": ["beta", "omega"],
                     "initial_step": 0.02, "min_step": 1e-6, "max_step": 0.1, "max_points": 400,
                     "corrector_tol": 1e-8, "max_turn_angle": 0.35, "direction": 1,
                     "bounds": {"omega": [0.3, 2.0]}, "curve_bounds": {"omega": [0.3, 2.0]},
                     "both_directions": true, "desync_probe": false, "desync_threshold": 0.01,
                     "failure_limit": 3, "probe_every_point": false, "probe_periods": 40},
    "sync": {"param": "beta", "values": [0.5, 1.0, 1.5], "seeds": 10, "observe_periods": 40,
             "settle_periods": 50, "record_raster": false},
    "walkthrough": {"omega_star_auto": true, "omega_star": 0.0, "side": "right",
                    "distances": [0.0004, 0.0008, 0.0016, 0.0032], "budget_periods": 20000,
                    "settle_periods": 50}
  })");
  return d;
}

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

const char* kind(const Json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

bool same_kind(const Json& def, const Json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

bool is_bounds(const std::string& path) {
  return path == "continuation.bounds" || path == "continuation.curve_bounds";
}

void check_bounds(const Json& v, const std::string& path) {
  for (const auto& [name, range] : v.items()) {
    const std::string at = join(path, name);
    try {
      parse_param(name);
    } catch (const DomainError&) {
      throw ConfigError(at, "unknown parameter name");
    }
    if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number() ||
        !(range[0].get<double>() < range[1].get<double>())) {
      throw ConfigError(at, "expected [lo, hi] with lo < hi");
    }
  }
}

// Merges `user` over `def` in place, checking keys and types.
void merge(Json& def, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError(path, std::string("expected object, got ") + kind(user));
  for (const auto& [key, v] : user.items()) {
    const std::string at = join(path, key);
    if (!def.contains(key)) throw ConfigError(at, "unknown field");
    Json& d = def[key];
    if (!same_kind(d, v)) {
      throw ConfigError(at, std::string("expected ") + kind(d) + ", got " + kind(v));
    }
    if (is_bounds(at)) {
      check_bounds(v, at);
      d = v;
    } else if (d.is_object()) {
      merge(d, v, at);
    } else if (d.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!same_kind(d.front(), v[i])) {
          throw ConfigError(at + "[" + std::to_string(i) + "]",
                            std::string("expected ") + kind(d.front()) + ", got " + kind(v[i]));
        }
      }
      d = v;
    } else {
      d = v;
    }
  }
}

double num(const Json& doc, const char* sec, const char* key) { return doc[sec][key].get<double>(); }
long integer(const Json& doc, const char* sec, const char* key) { return doc[sec][key].get<long>(); }

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

void check_param_name(const Json& doc, const char* sec, const char* key) {
  try {
    parse_param(doc[sec][key].get<std::string>());
  } catch (const DomainError&) {
    throw ConfigError(std::string(sec) + "." + key, "unknown parameter name '" + doc[sec][key].get<std::string>() + "'");
  }
}

void semantic_checks(const Json& d) {
  require(num(d, "model", "omega") > 0.0, "model.omega", "must be > 0");
  require(integer(d, "model", "n_osc") >= 1, "model.n_osc", "must be >= 1");
  require(num(d, "model", "amplitude") >= 0.0, "model.amplitude", "must be >= 0");
  require(num(d, "numerics", "dt") > 0.0, "numerics.dt", "must be > 0");
  require(num(d, "numerics", "blowup_guard") > 0.0, "numerics.blowup_guard", "must be > 0");
  require(integer(d, "numerics", "q") >= 0, "numerics.q", "must be >= 0");
  require(integer(d, "numerics", "r") >= 1, "numerics.r", "must be >= 1");
  require(num(d, "numerics", "fd_step") > 0.0, "numerics.fd_step", "must be > 0");
  require(num(d, "numerics", "newton_tol") > 0.0, "numerics.newton_tol", "must be > 0");
  require(integer(d, "numerics", "newton_max_iter") >= 1, "numerics.newton_max_iter", "must be >= 1");
  require(integer(d, "initial", "relax_periods") >= 0, "initial.relax_periods", "must be >= 0");
  require(d["threads"].get<long>() >= 0, "threads", "must be >= 0");
  require(d["seed"].get<long long>() >= 0, "seed", "must be >= 0");
  require(!d["output"]["dir"].get<std::string>().empty(), "output.dir", "must not be empty");

  require(integer(d, "simulate", "periods") >= 1, "simulate.periods", "must be >= 1");
  require(integer(d, "simulate", "samples_per_period") >= 1, "simulate.samples_per_period", "must be >= 1");
  require(integer(d, "simulate", "q") >= 0, "simulate.q", "must be >= 0");

  check_param_name(d, "freq_sweep", "param");
  require(integer(d, "freq_sweep", "count") >= 1, "freq_sweep.count", "must be >= 1");
  require(num(d, "freq_sweep", "measure_time") > 0.0, "freq_sweep.measure_time", "must be > 0");

  const auto& times = d["correlate"]["times_in_periods"];
  require(!times.empty(), "correlate.times_in_periods", "must not be empty");
  require(std::is_sorted(times.begin(), times.end()) && times.front().get<double>() >= 0.0,
          "correlate.times_in_periods", "must be ascending and >= 0");
  require(num(d, "correlate", "spread") > 0.0, "correlate.spread", "must be > 0");

  require(integer(d, "project", "q") >= 0, "project.q", "must be >= 0");
  require(integer(d, "project", "n_inner") >= 1, "project.n_inner", "must be >= 1");
  require(integer(d, "project", "n_project") >= 0, "project.n_project", "must be >= 0");
  require(integer(d, "project", "fit_order") >= 0, "project.fit_order", "must be >= 0");
  require(integer(d, "project", "fit_order") <= integer(d, "project", "n_inner"), "project.fit_order",
          "must not exceed n_inner");
  require(num(d, "project", "duration") > 0.0, "project.duration", "must be > 0");

  const auto& n2 = d["speedup"]["n_project_values"];
  require(!n2.empty() && std::is_sorted(n2.begin(), n2.end()) && n2.front().get<long>() >= 0,
          "speedup.n_project_values", "must be non-empty, ascending and >= 0");
  require(integer(d, "speedup", "repeats") >= 1, "speedup.repeats", "must be >= 1");

  check_param_name(d, "continuation", "param");
  const auto& cp = d["continuation"]["curve_params"];
  require(cp.size() == 2, "continuation.curve_params", "expected two parameter names");
  for (std::size_t i = 0; i < 2; ++i) {
    try {
      parse_param(cp[i].get<std::string>());
    } catch (const DomainError&) {
      throw ConfigError("continuation.curve_params[" + std::to_string(i) + "]", "unknown parameter name");
    }
  }
  require(cp[0] != cp[1], "continuation.curve_params", "the two parameters must differ");
  const long dir = integer(d, "continuation", "direction");
  require(dir == 1 || dir == -1, "continuation.direction", "must be +1 or -1");
  require(integer(d, "continuation", "failure_limit") >= 1, "continuation.failure_limit", "must be >= 1");
  require(integer(d, "continuation", "probe_periods") >= 1, "continuation.probe_periods", "must be >= 1");

  check_param_name(d, "sync", "param");
  require(!d["sync"]["values"].empty(), "sync.values", "must not be empty");
  require(integer(d, "sync", "seeds") >= 1, "sync.seeds", "must be >= 1");
  require(integer(d, "sync", "observe_periods") >= 1, "sync.observe_periods", "must be >= 1");

  const auto side = d["walkthrough"]["side"].get<std::string>();
  require(side == "right" || side == "left", "walkthrough.side", "must be \"right\" or \"left\"");
  for (std::size_t i = 0; i < d["walkthrough"]["distances"].size(); ++i) {
    require(d["walkthrough"]["distances"][i].get<double>() > 0.0,
            "walkthrough.distances[" + std::to_string(i) + "]", "must be > 0");
  }
  require(integer(d, "walkthrough", "budget_periods") >= 2, "walkthrough.budget_periods", "must be >= 2");

  const long n = integer(d, "model", "n_osc");
  if (n == 1) {
    require(num(d, "model", "beta") == 0.0, "model.beta", "a single oscillator has no heterogeneity; set it to 0");
  } else {
    // Least squares needs at least q + 1 oscillators.
    for (const char* sec : {"numerics", "simulate", "correlate", "project"}) {
      require(integer(d, sec, "q") < n, std::string(sec) + ".q", "must be smaller than model.n_osc");
    }
  }

  const std::string task = d["task"].get<std::string>();
  if (task == "freq-sweep") {
    require(num(d, "model", "amplitude") == 0.0, "model.amplitude",
            "freq-sweep measures the unforced oscillator; set it to 0");
  }
}

}  // namespace

void apply_override(Json& doc, std::string_view path, std::string_view value) {
  if (path.empty()) throw ConfigError("", "empty override path");
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (key.empty()) throw ConfigError(std::string(path), "malformed override path");
    if (!node->is_object()) node = &(*node = Json::object());
    if (dot == std::string_view::npos) {
      Json parsed = Json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? Json(std::string(value)) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("", "config file '" + path + "' is not valid JSON");
  return doc;
}

ExperimentConfig ExperimentConfig::resolve(const Json& user) {
  ExperimentConfig c;
  c.doc_ = default_config();
  merge(c.doc_, user.is_null() ? Json::object() : user, "");
  c.task_ = c.doc_["task"].get<std::string>();
  const auto& names = task_names();
  if (std::find(names.begin(), names.end(), c.task_) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("task", "unknown task '" + c.task_ + "' (expected one of " + list + ")");
  }
  semantic_checks(c.doc_);
  // The echoed config states what actually ran.
  if (c.doc_["model"]["n_osc"].get<int>() == 1) {
    c.doc_["numerics"]["q"] = 0;
    c.doc_["numerics"]["r"] = 1;
  }
  try {
    c.model().validate();
    c.coarse_map().validate();
  } catch (const DomainError& e) {
    throw ConfigError("model", e.what());
  }
  c.continuation("bounds");
  c.continuation("curve_bounds");
  return c;
}

ModelParams ExperimentConfig::model() const {
  const auto& m = doc_["model"];
  ModelParams p;
  p.phi = m["phi"];
  p.beta = m["beta"];
  p.epsilon = m["epsilon"];
  p.amplitude = m["amplitude"];
  p.omega = m["omega"];
  p.n_osc = m["n_osc"];
  return p;
}

IntegratorOptions ExperimentConfig::integrator() const {
  IntegratorOptions o;
  o.dt = doc_["numerics"]["dt"];
  o.blowup_guard = doc_["numerics"]["blowup_guard"];
  return o;
}

CoarseMapConfig ExperimentConfig::coarse_map() const {
  const auto& n = doc_["numerics"];
  CoarseMapConfig c;
  c.q = n["q"];
  c.r = n["r"];
  c.base_seed = seed();
  c.fd_step = n["fd_step"];
  c.newton_tol = n["newton_tol"];
  c.newton_max_iter = n["newton_max_iter"];
  c.integrator = integrator();
  return c;
}

ContinuationConfig ExperimentConfig::continuation(const char* bounds_section) const {
  const auto& s = doc_["continuation"];
  ContinuationConfig c;
  c.initial_step = s["initial_step"];
  c.min_step = s["min_step"];
  c.max_step = s["max_step"];
  c.max_points = s["max_points"];
  c.corrector_tol = s["corrector_tol"];
  c.max_turn_angle = s["max_turn_angle"];
  c.direction = s["direction"];
  c.fd_step = doc_["numerics"]["fd_step"];
  for (const auto& [name, range] : s[bounds_section].items()) {
    c.bounds.push_back({parse_param(name), range[0].get<double>(), range[1].get<double>()});
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError("continuation", e.what());
  }
  return c;
}

}  // namespace vdpnet::cli
