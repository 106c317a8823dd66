#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace qleak {

struct ExperimentOutcome {
  bool ok = false;                    // every sweep point succeeded
  std::vector<std::string> outputs;   // filenames relative to the output dir
  std::string manifest_path;          // absolute or out-dir-relative path
};

// Load a config file; a manifest produced by an earlier run is accepted and
// unwrapped to its embedded config.
nlohmann::json load_config_file(const std::string& path);

// Validate and run one experiment, writing <output>.csv and
// <output>.manifest.json under out_dir. Sweep-point failures are recorded in
// the manifest and clear the ok flag; configuration errors throw.
ExperimentOutcome run_experiment(const nlohmann::json& config, const std::string& out_dir);

// Deterministic shortest-stable formatting used for every CSV number.
std::string format_double(double v);

const char* qleak_version_string();

}  // namespace qleak
