#include "vdpnet/errors.hpp"
#include "vdpnet_runner/runner.hpp"

namespace vdpnet::cli {

namespace {

Json with_prefix(Json cfg, const std::string& prefix) {
  cfg["output"]["prefix"] = prefix;
  return cfg;
}

const Json single = {{"n_osc", 1}, {"beta", 0.0}};

Json network(double beta) { return {{"n_osc", 500}, {"beta", beta}}; }

Json merged(Json a, const Json& b) {
  a.merge_patch(b);
  return a;
}

}  // namespace

std::vector<Json> reproduce_configs(int figure) {
  const std::string fig = "fig" + std::to_string(figure) + "_";
  switch (figure) {
    case 1:
      return {with_prefix({{"task", "freq-sweep"},
                           {"model", {{"n_osc", 1}, {"beta", 0.0}, {"epsilon", 0.0}, {"amplitude", 0.0}}},
                           {"freq_sweep", {{"param", "phi"}, {"from", -0.5}, {"to", 3.0}, {"count", 36}}}},
                          fig)};
    case 2:
      return {with_prefix({{"task", "correlate"}, {"model", network(0.1)}}, fig)};
    case 3:
      return {with_prefix({{"task", "speedup"}, {"model", network(0.5)}, {"project", {{"q", 2}}}}, fig),
              with_prefix({{"task", "project"},
                           {"model", network(0.5)},
                           {"project", {{"q", 2}, {"n_project", 1}, {"compare_direct", true}}}},
                          fig)};
    case 4:
      return {with_prefix({{"task", "project"},
                           {"model", network(0.5)},
                           {"project", {{"q", 2}, {"n_project", 71}, {"compare_direct", true}}}},
                          fig)};
    case 5:
      return {with_prefix({{"task", "fixed-point"}, {"model", network(0.5)}}, fig)};
    case 6:
      return {with_prefix({{"task", "branch"}, {"model", single}}, fig + "single_"),
              with_prefix({{"task", "branch"}, {"model", network(0.5)}}, fig + "network_")};
    case 7: {
      const Json curve = {{"curve_params", {"amplitude", "omega"}},
                          {"curve_bounds", {{"amplitude", {0.02, 1.0}}, {"omega", {0.3, 2.0}}}}};
      return {with_prefix({{"task", "fold-curve"}, {"model", single}, {"continuation", curve}}, fig + "single_"),
              with_prefix({{"task", "fold-curve"}, {"model", network(0.5)}, {"continuation", curve}},
                          fig + "network_")};
    }
    case 8:
      return {with_prefix({{"task", "fold-curve"},
                           {"model", network(0.5)},
                           {"continuation",
                            {{"curve_params", {"beta", "omega"}},
                             {"curve_bounds", {{"beta", {0.0, 2.0}}, {"omega", {0.3, 2.0}}}},
                             {"desync_probe", true},
                             {"max_points", 300}}}},
                          fig)};
    case 9:
      return {with_prefix({{"task", "sync-scan"},
                           {"model", network(1.2)},
                           {"sync",
                            {{"param", "omega"},
                             {"values", {0.935, 0.925}},
                             {"seeds", 1},
                             {"observe_periods", 100},
                             {"record_raster", true}}}},
                          fig)};
    case 10:
    case 12: {
      const Json curve = {{"curve_params", {"phi", "omega"}},
                          {"curve_bounds", {{"phi", {0.3, 1.5}}, {"omega", {0.3, 2.0}}}},
                          {"max_points", 1000}};
      std::vector<Json> runs{
          with_prefix({{"task", "fold-curve"}, {"model", single}, {"continuation", curve}}, fig + "single_"),
          with_prefix({{"task", "fold-curve"}, {"model", network(0.3)}, {"continuation", curve}},
                      fig + "network_")};
      if (figure == 12) {
        // Hopf curves start from the phi = 0.7 branch, below the cusp.
        const Json hopf = {{"task", "hopf-curve"},
                           {"initial", {{"a0", 1.0}, {"b0", 0.0}, {"relax_periods", 100}}},
                           {"continuation",
                            {{"curve_params", {"omega", "phi"}},
                             {"curve_bounds", {{"phi", {0.3, 1.5}}, {"omega", {0.3, 2.0}}}},
                             {"max_points", 3000},
                             {"initial_step", 0.01},
                             {"max_step", 0.05}}}};
        runs.push_back(with_prefix(merged(hopf, {{"model", merged(single, {{"phi", 0.7}})}}), fig + "single_"));
        runs.push_back(
            with_prefix(merged(hopf, {{"model", merged(network(0.3), {{"phi", 0.7}})}}), fig + "network_"));
      }
      return runs;
    }
    case 11:
      return {with_prefix({{"task", "branch"},
                           {"model", merged(single, {{"phi", 0.8}})},
                           {"continuation", {{"max_points", 3000}}}},
                          fig)};
    default:
      throw ConfigError("figure", "expected a figure number from 1 to 12");
  }
}

}  // namespace vdpnet::cli
