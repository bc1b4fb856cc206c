#pragma once

// Experiment configuration: a JSON document merged over built-in defaults.
// Every key the user supplies must exist in the defaults with a compatible
// type; errors carry the dotted field path.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vdpnet/coarse_map.hpp"
#include "vdpnet/continuation.hpp"
#include "vdpnet/network.hpp"

namespace vdpnet::cli {

using Json = nlohmann::json;

const std::vector<std::string>& task_names();

/// The full default document; every accepted key appears here.
const Json& default_config();

/// Sets `path` (dotted) in `doc` to `value`. The value text is parsed as JSON
/// when possible and kept as a string otherwise.
void apply_override(Json& doc, std::string_view path, std::string_view value);

/// Reads a config file; throws ConfigError on unreadable or malformed input.
Json load_config_file(const std::string& path);

/// Validated configuration with defaults resolved.
class ExperimentConfig {
 public:
  /// Throws ConfigError with the offending field path.
  static ExperimentConfig resolve(const Json& user);

  const Json& doc() const { return doc_; }
  const std::string& task() const { return task_; }
  std::uint64_t seed() const { return doc_["seed"].get<std::uint64_t>(); }

  ModelParams model() const;
  IntegratorOptions integrator() const;
  /// Coarse-map settings; a single oscillator always uses q = 0, r = 1.
  CoarseMapConfig coarse_map() const;
  /// `section` is "bounds" (one-parameter runs) or "curve_bounds".
  ContinuationConfig continuation(const char* section) const;
  const Json& section(const char* name) const { return doc_[name]; }

 private:
  Json doc_;
  std::string task_;
};

}  // namespace vdpnet::cli
