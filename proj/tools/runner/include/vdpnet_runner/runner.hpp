#pragma once

// Task dispatch and result emission. Each run writes one CSV per result table
// and a JSON sidecar with the resolved config, seeds, terminations, version
// and wall-clock time. Only the wall-clock field (and timing tables of the
// speedup task) vary between identical runs.

#include <filesystem>
#include <string>
#include <vector>

#include "vdpnet_runner/config.hpp"

namespace vdpnet::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_numerical = 3,
  exit_physics = 4,
};

struct Column {
  std::string name;
  std::string doc;
};

class Table {
 public:
  Table(std::string name, std::vector<Column> columns) : name_(std::move(name)), columns_(std::move(columns)) {}

  Table& row() {
    rows_.emplace_back();
    return *this;
  }
  Table& operator<<(double v);
  Table& operator<<(long v);
  Table& operator<<(int v) { return *this << static_cast<long>(v); }
  Table& operator<<(bool v) { return *this << static_cast<long>(v); }
  Table& operator<<(const std::string& v);
  Table& operator<<(const char* v) { return *this << std::string(v); }

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }
  void write_csv(const std::filesystem::path& file) const;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// What a task produced. `status` is "ok", "numerical_failure" or
/// "physics_breakdown"; the worst one decides the exit code.
struct TaskOutput {
  std::vector<Table> tables;
  Json summary = Json::object();
  Json terminations = Json::array();
  Json seeds = Json::object();
  std::string status = "ok";
  std::string message;

  void escalate(const std::string& new_status, const std::string& why);
};

struct RunResult {
  int exit_code = exit_ok;
  std::string status;
  std::string message;
  std::vector<std::filesystem::path> files;
};

/// Runs the task of a resolved config and writes its files. Library errors
/// during the computation become a numerical failure; the tables finished
/// before the error are still written.
RunResult run(const ExperimentConfig& config);

/// Canned user configs for figure k (1..12); several tasks for some figures.
/// Each entry carries output.prefix so that file names do not collide.
std::vector<Json> reproduce_configs(int figure);

int exit_code_for(const std::string& status);

std::string library_version();

}  // namespace vdpnet::cli
