#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "tasks.hpp"
#include "vdpnet/errors.hpp"
#include "vdpnet/parallel.hpp"
#include "vdpnet_runner/runner.hpp"

#ifndef VDPNET_VERSION
#define VDPNET_VERSION "unknown"
#endif

namespace vdpnet::cli {

std::string library_version() { return VDPNET_VERSION; }

namespace {

// Shortest text that reads back to the same double; locale-independent.
std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

int severity(const std::string& status) {
  if (status == "physics_breakdown") return 2;
  if (status == "numerical_failure") return 1;
  return 0;
}

}  // namespace

Table& Table::operator<<(double v) {
  rows_.back().push_back(format(v));
  return *this;
}

Table& Table::operator<<(long v) {
  rows_.back().push_back(std::to_string(v));
  return *this;
}

Table& Table::operator<<(const std::string& v) {
  rows_.back().push_back(quote(v));
  return *this;
}

void Table::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  for (std::size_t k = 0; k < columns_.size(); ++k) out << (k ? "," : "") << columns_[k].name;
  out << '\n';
  for (const auto& r : rows_) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
    out << '\n';
  }
}

void TaskOutput::escalate(const std::string& new_status, const std::string& why) {
  if (severity(new_status) > severity(status)) {
    status = new_status;
    message = why;
  }
}

int exit_code_for(const std::string& status) {
  switch (severity(status)) {
    case 2:
      return exit_physics;
    case 1:
      return exit_numerical;
    default:
      return exit_ok;
  }
}

RunResult run(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  set_max_threads(config.doc()["threads"].get<unsigned>());
  TaskOutput out;
  try {
    dispatch(config, out);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out.escalate("numerical_failure", e.what());
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunResult res;
  res.status = out.status;
  res.message = out.message;
  res.exit_code = exit_code_for(out.status);

  const std::filesystem::path dir = config.doc()["output"]["dir"].get<std::string>();
  std::filesystem::create_directories(dir);
  const std::string stem = config.doc()["output"]["prefix"].get<std::string>() + config.task();
  Json files = Json::array();
  for (const auto& t : out.tables) {
    const auto path = dir / (stem + "_" + t.name() + ".csv");
    t.write_csv(path);
    res.files.push_back(path);
    Json cols = Json::array();
    for (const auto& c : t.columns()) cols.push_back({{"name", c.name}, {"doc", c.doc}});
    files.push_back({{"file", path.filename().string()}, {"rows", t.size()}, {"columns", cols}});
  }
  Json meta{{"version", library_version()},
            {"task", config.task()},
            {"config", config.doc()},
            {"seeds", out.seeds},
            {"status", out.status},
            {"exit_code", res.exit_code},
            {"message", out.message},
            {"summary", out.summary},
            {"terminations", out.terminations},
            {"files", files},
            {"wall_clock_seconds", wall}};
  const auto meta_path = dir / (stem + ".meta.json");
  std::ofstream m(meta_path, std::ios::binary);
  if (!m) throw Error("cannot write " + meta_path.string());
  m << meta.dump(2) << '\n';
  res.files.push_back(meta_path);
  return res;
}

}  // namespace vdpnet::cli
