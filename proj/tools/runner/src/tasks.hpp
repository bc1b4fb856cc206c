#pragma once

#include "vdpnet_runner/config.hpp"
#include "vdpnet_runner/runner.hpp"

namespace vdpnet::cli {

/// Runs the configured task, appending tables and records to `out`.
void dispatch(const ExperimentConfig& config, TaskOutput& out);

}  // namespace vdpnet::cli
