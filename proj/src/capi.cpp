#include "qleak/qleak.h"

#include <json.hpp>

#include <cstring>
#include <stdexcept>
#include <string>

#include "cliffords.hpp"
#include "errors.hpp"
#include "experiments.hpp"

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& msg) { t_last_error = msg; }

int translate_exception() {
  try {
    throw;
  } catch (const qleak::ConfigError& e) {
    set_error(e.what());
    return QLEAK_ERR_CONFIG;
  } catch (const qleak::NumericalError& e) {
    set_error(e.what());
    return QLEAK_ERR_NUMERICAL;
  } catch (const qleak::CalibrationError& e) {
    set_error(e.what());
    return QLEAK_ERR_CALIBRATION;
  } catch (const qleak::OptimizationError& e) {
    set_error(e.what());
    return QLEAK_ERR_OPTIMIZATION;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return QLEAK_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return QLEAK_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return QLEAK_ERR_INTERNAL;
  }
}

}  // namespace

struct qleak_experiment {
  nlohmann::json config;
  std::string out_dir = ".";
  std::string manifest_path;
  bool has_run = false;
};

extern "C" {

const char* qleak_version(void) { return qleak::qleak_version_string(); }

const char* qleak_last_error(void) { return t_last_error.c_str(); }

int qleak_experiment_create_from_file(const char* path, qleak_experiment** out) {
  if (path == nullptr || out == nullptr) {
    set_error("null argument");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  try {
    auto* exp = new qleak_experiment;
    exp->config = qleak::load_config_file(path);
    *out = exp;
    return QLEAK_OK;
  } catch (...) {
    return translate_exception();
  }
}

int qleak_experiment_create_from_json(const char* json_text, qleak_experiment** out) {
  if (json_text == nullptr || out == nullptr) {
    set_error("null argument");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  try {
    auto* exp = new qleak_experiment;
    exp->config = nlohmann::json::parse(json_text);
    *out = exp;
    return QLEAK_OK;
  } catch (const nlohmann::json::parse_error& e) {
    set_error(e.what());
    return QLEAK_ERR_CONFIG;
  } catch (...) {
    return translate_exception();
  }
}

int qleak_experiment_set_seed(qleak_experiment* exp, unsigned long long seed) {
  if (exp == nullptr) {
    set_error("null experiment");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  exp->config["seed"] = seed;
  return QLEAK_OK;
}

int qleak_experiment_set_output_dir(qleak_experiment* exp, const char* dir) {
  if (exp == nullptr || dir == nullptr) {
    set_error("null argument");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  exp->out_dir = dir;
  return QLEAK_OK;
}

int qleak_experiment_set_threads(qleak_experiment* exp, int threads) {
  if (exp == nullptr || threads < 0) {
    set_error("invalid thread count");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  exp->config["threads"] = threads;
  return QLEAK_OK;
}

int qleak_experiment_set_kind(qleak_experiment* exp, const char* kind) {
  if (exp == nullptr || kind == nullptr) {
    set_error("null argument");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  if (exp->config.contains("experiment")) {
    if (!exp->config["experiment"].is_string() ||
        exp->config["experiment"].get<std::string>() != kind) {
      set_error(std::string("config is for experiment '") +
                (exp->config["experiment"].is_string()
                     ? exp->config["experiment"].get<std::string>()
                     : std::string("?")) +
                "', not '" + kind + "'");
      return QLEAK_ERR_CONFIG;
    }
  } else {
    exp->config["experiment"] = kind;
  }
  return QLEAK_OK;
}

int qleak_experiment_run(qleak_experiment* exp) {
  if (exp == nullptr) {
    set_error("null experiment");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  try {
    const qleak::ExperimentOutcome outcome = qleak::run_experiment(exp->config, exp->out_dir);
    exp->manifest_path = outcome.manifest_path;
    exp->has_run = true;
    if (!outcome.ok) {
      set_error("one or more sweep points failed; see the manifest error list");
      return QLEAK_ERR_SWEEP_POINT_FAILED;
    }
    return QLEAK_OK;
  } catch (...) {
    return translate_exception();
  }
}

const char* qleak_experiment_manifest_path(const qleak_experiment* exp) {
  if (exp == nullptr || !exp->has_run) return nullptr;
  return exp->manifest_path.c_str();
}

void qleak_experiment_destroy(qleak_experiment* exp) { delete exp; }

int qleak_clifford_table_json(char** out) {
  if (out == nullptr) {
    set_error("null argument");
    return QLEAK_ERR_INVALID_ARGUMENT;
  }
  try {
    const std::string dump = qleak::CliffordTable::instance().to_json();
    char* buf = new char[dump.size() + 1];
    std::memcpy(buf, dump.c_str(), dump.size() + 1);
    *out = buf;
    return QLEAK_OK;
  } catch (...) {
    return translate_exception();
  }
}

void qleak_string_free(char* s) { delete[] s; }

}  // extern "C"
