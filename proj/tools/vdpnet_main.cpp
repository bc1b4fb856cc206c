// vdpnet: run one experiment task, or the canned runs behind a figure.
//
//   vdpnet <task> [--config file.json] [--set path=value]... [--seed n] [--threads n] [--out dir]
//   vdpnet reproduce <1..12> [--seed n] [--threads n] [--out dir]

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vdpnet/errors.hpp"
#include "vdpnet_runner/config.hpp"
#include "vdpnet_runner/runner.hpp"

using namespace vdpnet;
using namespace vdpnet::cli;

namespace {

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::optional<long> threads;
  std::string out;
  bool print_config = false;
};

Json build(const Json& base, const Flags& f) {
  Json doc = base;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("", "--set expects path=value, got '" + s + "'");
    apply_override(doc, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) doc["seed"] = *f.seed;
  if (f.threads) doc["threads"] = *f.threads;
  if (!f.out.empty()) doc["output"]["dir"] = f.out;
  return doc;
}

int run_one(const ExperimentConfig& cfg) {
  const RunResult r = run(cfg);
  std::cerr << "vdpnet: " << cfg.task() << " " << r.status;
  if (!r.message.empty()) std::cerr << " (" << r.message << ")";
  std::cerr << "; wrote " << r.files.size() << " files to " << cfg.doc()["output"]["dir"].get<std::string>() << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equation-free analysis of a forced heterogeneous van der Pol network"};
  Flags f;
  std::string task;
  std::optional<int> figure;
  std::string tasks_help = "task: ";
  for (const auto& n : task_names()) tasks_help += n + ", ";
  tasks_help += "or reproduce";
  app.add_option("task", task, tasks_help)->required();
  app.add_option("figure", figure, "figure number for reproduce (1..12)");
  app.add_option("--config", f.config_file, "JSON config file");
  app.add_option("--set", f.sets, "override a config field, e.g. --set model.beta=0.5");
  app.add_option("--seed", f.seed, "base seed for every realization");
  app.add_option("--threads", f.threads, "worker thread cap (0: hardware concurrency)");
  app.add_option("--out", f.out, "output directory");
  app.add_flag("--print-config", f.print_config, "print the resolved config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    std::vector<ExperimentConfig> runs;
    if (task == "reproduce") {
      if (!figure) throw ConfigError("figure", "reproduce needs a figure number from 1 to 12");
      if (!f.config_file.empty() || !f.sets.empty()) {
        throw ConfigError("", "reproduce uses canned configs; only --seed, --threads and --out apply");
      }
      for (const auto& c : reproduce_configs(*figure)) runs.push_back(ExperimentConfig::resolve(build(c, f)));
    } else {
      if (figure) throw ConfigError("figure", "only reproduce takes a figure number");
      Json base = f.config_file.empty() ? Json::object() : load_config_file(f.config_file);
      base["task"] = task;
      runs.push_back(ExperimentConfig::resolve(build(base, f)));
    }
    if (f.print_config) {
      for (const auto& r : runs) std::cout << r.doc().dump(2) << "\n";
      return 0;
    }
    int worst = exit_ok;
    for (const auto& r : runs) worst = std::max(worst, run_one(r));
    return worst;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  }
}
