#include "experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "analysis.hpp"
#include "calibration.hpp"
#include "cliffords.hpp"
#include "errors.hpp"
#include "qutrit.hpp"
#include "rb.hpp"
#include "readout.hpp"
#include "units.hpp"

namespace qleak {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// config helpers

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(std::string("expected number for '") + key + "'");
  return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError(std::string("expected integer for '") + key + "'");
  }
  return obj[key].get<int>();
}

std::string get_str(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ConfigError(std::string("expected string for '") + key + "'");
  return obj[key].get<std::string>();
}

std::vector<double> get_num_array(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw ConfigError(std::string("expected array for '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) throw ConfigError(std::string("expected numbers in '") + key + "'");
    out.push_back(v.get<double>());
  }
  if (out.empty()) throw ConfigError(std::string("'") + key + "' must be nonempty");
  return out;
}

std::vector<int> get_int_array(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw ConfigError(std::string("expected array for '") + key + "'");
  }
  std::vector<int> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number_integer()) throw ConfigError(std::string("expected integers in '") + key + "'");
    out.push_back(v.get<int>());
  }
  if (out.empty()) throw ConfigError(std::string("'") + key + "' must be nonempty");
  return out;
}

SystemParams parse_system(const json& root) {
  SystemParams sys;
  if (!root.contains("system")) return sys;
  const json& s = root["system"];
  check_keys(s, {"anharmonicity_mhz", "relative_12_coupling"}, "system");
  sys.anharmonicity = mhz_to_radns(get_num(s, "anharmonicity_mhz", -212.0));
  sys.relative_12_coupling = get_num(s, "relative_12_coupling", std::numbers::sqrt2);
  sys.validate();
  return sys;
}

NoiseParams parse_noise(const json& root) {
  NoiseParams noise;
  if (!root.contains("noise")) {
    noise.tphi1_us = kInf;
    noise.tphi2_us = kInf;
    return noise;
  }
  const json& n = root["noise"];
  check_keys(n,
             {"t1_10_us", "t1_21_us", "heat_12_per_ms", "heat_01_per_ms", "tphi1_us", "tphi2_us",
              "deph2_scale"},
             "noise");
  auto time_or_off = [&](const char* key) {
    const double v = get_num(n, key, 0.0);
    return v > 0.0 ? v : kInf;
  };
  noise.t1_10_us = time_or_off("t1_10_us");
  noise.t1_21_us = time_or_off("t1_21_us");
  noise.heat_12_per_ms = get_num(n, "heat_12_per_ms", 0.0);
  noise.heat_01_per_ms = get_num(n, "heat_01_per_ms", 0.0);
  noise.tphi1_us = time_or_off("tphi1_us");
  noise.tphi2_us = time_or_off("tphi2_us");
  noise.deph2_scale = get_num(n, "deph2_scale", 2.0);
  noise.validate();
  return noise;
}

GateParams parse_gate(const json& root) {
  GateParams gp;
  if (!root.contains("gate")) return gp;
  const json& g = root["gate"];
  check_keys(g,
             {"duration_ns", "dt_ns", "alpha1", "alpha2", "detuning_mhz", "pi_amplitude",
              "half_pi_amplitude"},
             "gate");
  gp.duration_ns = get_num(g, "duration_ns", 10.0);
  gp.dt_ns = get_num(g, "dt_ns", kDefaultDt);
  gp.alpha1 = get_num(g, "alpha1", 0.0);
  gp.alpha2 = get_num(g, "alpha2", 0.0);
  gp.detuning_mhz = get_num(g, "detuning_mhz", 0.0);
  gp.pi_amplitude = get_num(g, "pi_amplitude", 0.0);
  gp.half_pi_amplitude = get_num(g, "half_pi_amplitude", 0.0);
  if (!(gp.duration_ns > 0.0)) throw ConfigError("gate.duration_ns must be positive");
  if (!(gp.dt_ns > 0.0)) throw ConfigError("gate.dt_ns must be positive");
  return gp;
}

// calibrate any amplitude left at zero
void ensure_amplitudes(GateParams& gp, const NoiseParams& noise, const SystemParams& sys) {
  if (gp.pi_amplitude > 0.0 && gp.half_pi_amplitude > 0.0) return;
  const auto amps = calibrate_amplitude(gp, noise, sys);
  if (gp.pi_amplitude <= 0.0) gp.pi_amplitude = amps.first;
  if (gp.half_pi_amplitude <= 0.0) gp.half_pi_amplitude = amps.second;
}

ConfusionMatrix parse_confusion(const json& obj, const std::string& where) {
  if (obj.contains("matrix")) {
    const json& m = obj["matrix"];
    if (!m.is_array() || m.size() != 3) throw ConfigError(where + ".matrix: expected 3 rows");
    ConfusionMatrix cm;
    for (int r = 0; r < 3; ++r) {
      if (!m[static_cast<size_t>(r)].is_array() || m[static_cast<size_t>(r)].size() != 3) {
        throw ConfigError(where + ".matrix: expected 3 columns");
      }
      for (int c = 0; c < 3; ++c) {
        cm.m(r, c) = m[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
      }
    }
    cm.validate();
    return cm;
  }
  if (obj.contains("confusion_csv")) {
    std::ifstream is(obj["confusion_csv"].get<std::string>());
    if (!is) throw ConfigError(where + ": cannot open confusion_csv");
    return read_confusion_csv(is);
  }
  return ConfusionMatrix::paper();
}

// ---------------------------------------------------------------------------
// output plumbing

class Writer {
 public:
  Writer(std::string out_dir, std::string stem, std::string experiment, json config)
      : out_dir_(std::move(out_dir)),
        stem_(std::move(stem)),
        experiment_(std::move(experiment)),
        config_(std::move(config)) {
    std::filesystem::create_directories(out_dir_);
  }

  std::string csv_name(const std::string& suffix = "") const {
    return stem_ + (suffix.empty() ? "" : "_" + suffix) + ".csv";
  }

  void write_csv(const std::string& name, const std::string& columns,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os(std::filesystem::path(out_dir_) / name, std::ios::binary);
    os << "# qleak csv v1 experiment=" << experiment_ << "\n" << columns << "\n";
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << "\n";
    }
    outputs_.push_back(name);
  }

  void write_raw(const std::string& name, const std::string& content) {
    std::ofstream os(std::filesystem::path(out_dir_) / name, std::ios::binary);
    os << content;
    outputs_.push_back(name);
  }

  void record_error(const std::string& point, const std::string& message) {
    errors_.push_back({{"point", point}, {"error", message}});
  }

  json& results() { return results_; }

  ExperimentOutcome finish() {
    json manifest;
    manifest["tool"] = "qleak";
    manifest["version"] = kVersion;
    manifest["experiment"] = experiment_;
    manifest["config"] = config_;
    manifest["outputs"] = outputs_;
    manifest["results"] = results_;
    manifest["errors"] = errors_;
    manifest["ok"] = errors_.empty();
    const std::string name = stem_ + ".manifest.json";
    std::ofstream os(std::filesystem::path(out_dir_) / name, std::ios::binary);
    os << manifest.dump(2) << "\n";

    ExperimentOutcome outcome;
    outcome.ok = errors_.empty();
    outcome.outputs = outputs_;
    outcome.outputs.push_back(name);
    outcome.manifest_path = (std::filesystem::path(out_dir_) / name).string();
    return outcome;
  }

 private:
  std::string out_dir_, stem_, experiment_;
  json config_;
  std::vector<std::string> outputs_;
  json results_ = json::object();
  json errors_ = json::array();
};

std::vector<std::string> num_row(const std::vector<double>& vals) {
  std::vector<std::string> row;
  row.reserve(vals.size());
  for (double v : vals) row.push_back(format_double(v));
  return row;
}

// shared RB helpers --------------------------------------------------------

RBConfig base_rb_config(const json& root, const GateParams& gp, const NoiseParams& noise,
                        const SystemParams& sys) {
  RBConfig cfg;
  cfg.gate = gp;
  cfg.noise = noise;
  cfg.sys = sys;
  cfg.master_seed = root.value("seed", 0ULL);
  cfg.threads = get_int(root, "threads", 0);
  return cfg;
}

struct RBFits {
  FidelityFit fidelity;
  LeakageFit leakage;
};

RBFits fit_dataset(const RBDataset& data) {
  std::vector<double> m, p0, p2;
  for (size_t i = 0; i < data.lengths.size(); ++i) {
    m.push_back(static_cast<double>(data.lengths[i]));
    p0.push_back(data.mean[i][0]);
    p2.push_back(data.mean[i][2]);
  }
  RBFits fits;
  fits.fidelity = fit_sequence_fidelity(m, p0);
  fits.leakage = fit_leakage(m, p2);
  return fits;
}

json fidelity_json(const FidelityFit& f) {
  return {{"A", f.amplitude},        {"B", f.offset},
          {"p", f.decay},            {"r_clifford", f.r_clifford},
          {"converged", f.fit.converged}, {"degenerate", f.fit.degenerate},
          {"residual_norm", f.fit.residual_norm}};
}

json leakage_json(const LeakageFit& f) {
  const Eigen::MatrixXd& cov = f.fit.covariance;
  const bool have_cov = f.fit.converged && cov.rows() == 3;
  return {{"gamma_up", f.rates.gamma_up},
          {"gamma_down", f.rates.gamma_down},
          {"p0", f.rates.p0},
          {"gamma_up_err", have_cov ? std::sqrt(std::max(0.0, cov(0, 0))) : 0.0},
          {"gamma_down_err", have_cov ? std::sqrt(std::max(0.0, cov(1, 1))) : 0.0},
          {"p_inf", f.rates.saturation()},
          {"converged", f.fit.converged},
          {"residual_norm", f.fit.residual_norm}};
}

double average_clifford_time_ns(const GateParams& gp) {
  const CliffordTable& t = CliffordTable::instance();
  return (t.average_pi_count() + t.average_half_pi_count()) * gp.duration_ns;
}

// ---------------------------------------------------------------------------
// experiments

void run_rb(const json& root, Writer& w) {
  const json& e = root.at("rb");
  check_keys(e, {"lengths", "num_sequences", "mode", "readout"}, "rb");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  GateParams gp = parse_gate(root);

  RBConfig cfg = base_rb_config(root, gp, noise, sys);
  cfg.lengths = get_int_array(e, "lengths");
  cfg.num_sequences = get_int(e, "num_sequences", 75);
  const std::string mode = get_str(e, "mode", "pulse");
  if (mode != "pulse" && mode != "unitary") throw ConfigError("rb.mode must be pulse or unitary");
  cfg.exact_unitary = (mode == "unitary");
  if (!cfg.exact_unitary) {
    ensure_amplitudes(cfg.gate, noise, sys);
  }
  cfg.validate();

  RBDataset data = rb_sweep(cfg);

  bool applied = false, corrected = false;
  if (e.contains("readout")) {
    const json& r = e["readout"];
    check_keys(r, {"matrix", "confusion_csv", "apply", "correct"}, "rb.readout");
    const ConfusionMatrix cm = parse_confusion(r, "rb.readout");
    applied = r.value("apply", true);
    corrected = r.value("correct", false);
    for (size_t i = 0; i < data.lengths.size(); ++i) {
      Eigen::Vector3d p(data.mean[i][0], data.mean[i][1], data.mean[i][2]);
      if (applied) p = apply_confusion(p, cm);
      if (corrected) p = correct_visibility(p, cm).probs;
      data.mean[i] = {p[0], p[1], p[2]};
    }
  }

  std::ostringstream csv;
  write_rb_csv(data, csv);
  // reuse the standard dataset schema but keep the versioned header
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < data.lengths.size(); ++i) {
    rows.push_back(num_row({static_cast<double>(data.lengths[i]), data.mean[i][0], data.sem[i][0],
                            data.mean[i][1], data.sem[i][1], data.mean[i][2], data.sem[i][2]}));
  }
  w.write_csv(w.csv_name(), "m,mean_p0,sem_p0,mean_p1,sem_p1,mean_p2,sem_p2", rows);

  try {
    const RBFits fits = fit_dataset(data);
    w.results()["fidelity_fit"] = fidelity_json(fits.fidelity);
    w.results()["leakage_fit"] = leakage_json(fits.leakage);
  } catch (const std::exception& ex) {
    w.record_error("fit", ex.what());
  }
  w.results()["pi_amplitude"] = cfg.gate.pi_amplitude;
  w.results()["half_pi_amplitude"] = cfg.gate.half_pi_amplitude;
  w.results()["readout_applied"] = applied;
  w.results()["readout_corrected"] = corrected;
}

void run_leakage_vs_alpha(const json& root, Writer& w) {
  const json& e = root.at("leakage_vs_alpha");
  check_keys(e,
             {"alphas", "sweep", "detuning", "nelder_mead", "lengths", "num_sequences",
              "detuning_reps", "nm_lengths", "nm_sequences", "nm_iterations"},
             "leakage_vs_alpha");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  const GateParams base_gp = parse_gate(root);

  const std::vector<double> alphas = get_num_array(e, "alphas");
  const std::string sweep = get_str(e, "sweep", "alpha1");
  if (sweep != "alpha1" && sweep != "alpha2") {
    throw ConfigError("leakage_vs_alpha.sweep must be alpha1 or alpha2");
  }
  const std::string detuning = get_str(e, "detuning", "none");
  if (detuning != "none" && detuning != "calibrated") {
    throw ConfigError("leakage_vs_alpha.detuning must be none or calibrated");
  }
  const bool use_nm = e.value("nelder_mead", false);
  const int reps = get_int(e, "detuning_reps", 5);

  std::vector<std::vector<std::string>> rows;
  json points = json::array();
  for (double a : alphas) {
    const std::string label = "alpha=" + format_double(a);
    try {
      GateParams gp = base_gp;
      (sweep == "alpha1" ? gp.alpha1 : gp.alpha2) = a;
      gp.detuning_mhz = 0.0;
      gp.pi_amplitude = 0.0;
      gp.half_pi_amplitude = 0.0;

      if (use_nm) {
        RBBudget budget;
        if (e.contains("nm_lengths")) budget.lengths = get_int_array(e, "nm_lengths");
        budget.num_sequences = get_int(e, "nm_sequences", 20);
        budget.nm_max_iterations = get_int(e, "nm_iterations", 40);
        budget.seed = root.value("seed", 0ULL) + 7;
        budget.threads = get_int(root, "threads", 0);
        const CalibrationResult cal = tune_gate(gp.alpha1, gp.alpha2, gp, budget, noise, sys);
        gp.pi_amplitude = cal.pi_amplitude;
        gp.half_pi_amplitude = cal.half_pi_amplitude;
        gp.detuning_mhz = cal.detuning_mhz;
      } else {
        ensure_amplitudes(gp, noise, sys);
        if (detuning == "calibrated") {
          gp.detuning_mhz = calibrate_detuning(gp, reps, noise, sys).detuning_mhz;
          gp.pi_amplitude = 0.0;
          gp.half_pi_amplitude = 0.0;
          ensure_amplitudes(gp, noise, sys);
        }
      }

      RBConfig cfg = base_rb_config(root, gp, noise, sys);
      cfg.lengths = get_int_array(e, "lengths");
      cfg.num_sequences = get_int(e, "num_sequences", 50);
      cfg.validate();
      const RBDataset data = rb_sweep(cfg);
      const RBFits fits = fit_dataset(data);

      const Eigen::MatrixXd& fcov = fits.fidelity.fit.covariance;
      const double r_err =
          fits.fidelity.fit.converged && fcov.rows() == 3 ? 0.5 * std::sqrt(std::max(0.0, fcov(2, 2))) : 0.0;
      const Eigen::MatrixXd& lcov = fits.leakage.fit.covariance;
      const bool lc = fits.leakage.fit.converged && lcov.rows() == 3;
      rows.push_back(num_row({a, gp.detuning_mhz, fits.fidelity.r_clifford, r_err,
                              fits.leakage.rates.gamma_up,
                              lc ? std::sqrt(std::max(0.0, lcov(0, 0))) : 0.0,
                              fits.leakage.rates.gamma_down,
                              lc ? std::sqrt(std::max(0.0, lcov(1, 1))) : 0.0}));
      json pt;
      pt["alpha"] = a;
      pt["detuning_mhz"] = gp.detuning_mhz;
      pt["fidelity_fit"] = fidelity_json(fits.fidelity);
      pt["leakage_fit"] = leakage_json(fits.leakage);
      points.push_back(pt);
    } catch (const std::exception& ex) {
      w.record_error(label, ex.what());
    }
  }
  w.write_csv(w.csv_name(),
              "alpha,detuning_mhz,r_clifford,r_clifford_err,gamma_up,gamma_up_err,gamma_down,"
              "gamma_down_err",
              rows);
  w.results()["points"] = points;
  w.results()["sweep"] = sweep;
}

void run_leakage_vs_length(const json& root, Writer& w) {
  const json& e = root.at("leakage_vs_length");
  check_keys(e, {"pulse_lengths_ns", "alpha1", "alpha2", "lengths", "num_sequences"},
             "leakage_vs_length");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  const GateParams base_gp = parse_gate(root);

  const std::vector<double> pulse_lengths = get_num_array(e, "pulse_lengths_ns");
  const double alpha1 = get_num(e, "alpha1", 0.0);
  const double alpha2 = get_num(e, "alpha2", 0.0);

  std::vector<std::vector<std::string>> rows;
  json points = json::array();
  for (double t : pulse_lengths) {
    const std::string label = "pulse_ns=" + format_double(t);
    try {
      GateParams gp = base_gp;
      gp.duration_ns = t;
      gp.alpha1 = alpha1;
      gp.alpha2 = alpha2;
      gp.pi_amplitude = 0.0;
      gp.half_pi_amplitude = 0.0;
      ensure_amplitudes(gp, noise, sys);

      RBConfig cfg = base_rb_config(root, gp, noise, sys);
      cfg.lengths = get_int_array(e, "lengths");
      cfg.num_sequences = get_int(e, "num_sequences", 50);
      cfg.validate();
      const RBDataset data = rb_sweep(cfg);
      const RBFits fits = fit_dataset(data);

      // incoherent floor: heating rate x average Clifford time x mean |1>
      // occupancy 1/2 (uniform over the axial Bloch states)
      const double floor = rate_per_ms_to_per_ns(noise.heat_12_per_ms) *
                           average_clifford_time_ns(gp) * 0.5;
      const Eigen::MatrixXd& lcov = fits.leakage.fit.covariance;
      const bool lc = fits.leakage.fit.converged && lcov.rows() == 3;
      rows.push_back(num_row({t, fits.leakage.rates.gamma_up,
                              lc ? std::sqrt(std::max(0.0, lcov(0, 0))) : 0.0,
                              fits.leakage.rates.gamma_down,
                              lc ? std::sqrt(std::max(0.0, lcov(1, 1))) : 0.0, floor}));
      json pt;
      pt["pulse_ns"] = t;
      pt["leakage_fit"] = leakage_json(fits.leakage);
      pt["heating_floor"] = floor;
      points.push_back(pt);
    } catch (const std::exception& ex) {
      w.record_error(label, ex.what());
    }
  }
  w.write_csv(w.csv_name(), "pulse_ns,gamma_up,gamma_up_err,gamma_down,gamma_down_err,heating_floor",
              rows);
  w.results()["points"] = points;
  w.results()["heating_floor_note"] =
      "floor = heat_12 rate x mean Clifford time x 1/2 mean |1> occupancy";
}

void run_heating(const json& root, Writer& w) {
  const json& e = root.at("heating");
  check_keys(e, {"initial", "delays_us", "fit", "readout_correction", "matrix", "confusion_csv"},
             "heating");
  const NoiseParams noise = parse_noise(root);

  const int initial = get_int(e, "initial", 1);
  if (initial < 0 || initial > 2) throw ConfigError("heating.initial must be 0, 1, or 2");
  const std::vector<double> delays = get_num_array(e, "delays_us");
  const std::string fit_kind = get_str(e, "fit", initial == 1 ? "heat_12" : "heat_01");

  RelaxationCurves curves = relaxation_experiment(initial, delays, noise);

  const bool correct = e.value("readout_correction", false);
  if (correct) {
    const ConfusionMatrix cm = parse_confusion(e, "heating");
    for (auto& p : curves.populations) {
      Eigen::Vector3d v(p[0], p[1], p[2]);
      v = apply_confusion(v, cm);          // what the detector would report
      v = correct_visibility(v, cm).probs;  // the published corrected data
      p = {v[0], v[1], v[2]};
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<double> t_ns, p1, p2;
  for (size_t i = 0; i < curves.delays_us.size(); ++i) {
    rows.push_back(num_row({curves.delays_us[i], curves.populations[i][0],
                            curves.populations[i][1], curves.populations[i][2]}));
    t_ns.push_back(us_to_ns(curves.delays_us[i]));
    p1.push_back(curves.populations[i][1]);
    p2.push_back(curves.populations[i][2]);
  }
  w.write_csv(w.csv_name(), "t_us,p0,p1,p2", rows);

  try {
    if (fit_kind == "heat_12") {
      const RateFit fit = fit_heating_12(t_ns, p2, noise.t1_10_us, noise.t1_21_us);
      w.results()["heating_fit"] = {{"rate_per_ns", fit.rate_per_ns},
                                    {"time_constant_ms", fit.rate_per_ns > 0.0
                                                             ? 1e-6 / fit.rate_per_ns
                                                             : kInf},
                                    {"residual_norm", fit.residual_norm},
                                    {"kind", "1->2 with fixed T1s"}};
    } else if (fit_kind == "heat_01") {
      const RateFit fit = fit_heating_01(t_ns, p1, noise.t1_10_us);
      w.results()["heating_fit"] = {{"rate_per_ns", fit.rate_per_ns},
                                    {"time_constant_ms", fit.rate_per_ns > 0.0
                                                             ? 1e-6 / fit.rate_per_ns
                                                             : kInf},
                                    {"residual_norm", fit.residual_norm},
                                    {"kind", "0->1 with fixed T1"}};
    } else {
      throw ConfigError("heating.fit must be heat_12 or heat_01");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    w.record_error("fit", ex.what());
  }
  w.results()["readout_corrected"] = correct;
}

void run_detune_sweep(const json& root, Writer& w) {
  const json& e = root.at("detune_sweep");
  check_keys(e, {"alphas", "pulse_lengths_ns", "reps"}, "detune_sweep");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  const GateParams base_gp = parse_gate(root);

  const std::vector<double> alphas = get_num_array(e, "alphas");
  const std::vector<double> pulse_lengths = get_num_array(e, "pulse_lengths_ns");
  const int reps = get_int(e, "reps", 5);

  std::vector<std::vector<std::string>> rows;
  json per_length = json::array();
  std::vector<double> lengths_ok, slopes_abs;
  for (double t : pulse_lengths) {
    std::vector<double> xs, ys;
    for (double a : alphas) {
      const std::string label =
          "pulse_ns=" + format_double(t) + ",alpha=" + format_double(a);
      try {
        GateParams gp = base_gp;
        gp.duration_ns = t;
        gp.alpha1 = a;
        gp.pi_amplitude = 0.0;
        gp.half_pi_amplitude = 0.0;
        ensure_amplitudes(gp, noise, sys);
        const DetuningResult det = calibrate_detuning(gp, reps, noise, sys);
        rows.push_back(num_row({t, a, det.detuning_mhz, det.flat ? 1.0 : 0.0}));
        xs.push_back(a);
        ys.push_back(det.detuning_mhz);
      } catch (const std::exception& ex) {
        w.record_error(label, ex.what());
      }
    }
    if (xs.size() >= 2) {
      const LinearFit lin = fit_linear(xs, ys);
      json lj;
      lj["pulse_ns"] = t;
      lj["slope_mhz_per_alpha"] = lin.slope;
      lj["intercept_mhz"] = lin.intercept;
      lj["r_squared"] = lin.r_squared;
      per_length.push_back(lj);
      if (std::abs(lin.slope) > 0.0) {
        lengths_ok.push_back(t);
        slopes_abs.push_back(std::abs(lin.slope));
      }
    }
  }
  w.write_csv(w.csv_name(), "pulse_ns,alpha,optimal_detuning_mhz,flat", rows);
  w.results()["linear_fits"] = per_length;
  if (lengths_ok.size() >= 3) {
    const PowerFit pw = fit_power(lengths_ok, slopes_abs);
    w.results()["slope_power_fit"] = {{"prefactor", pw.prefactor},
                                      {"exponent", pw.exponent},
                                      {"r_squared", pw.r_squared}};
  }
}

void run_tomography(const json& root, Writer& w) {
  const json& e = root.at("tomography");
  check_keys(e, {"fractions", "num_points"}, "tomography");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  GateParams gp = parse_gate(root);

  std::vector<double> fractions;
  if (e.contains("fractions")) {
    fractions = get_num_array(e, "fractions");
  } else {
    const int n = get_int(e, "num_points", 21);
    if (n < 2) throw ConfigError("tomography.num_points must be >= 2");
    for (int i = 0; i < n; ++i) fractions.push_back(static_cast<double>(i) / (n - 1));
  }
  ensure_amplitudes(gp, noise, sys);

  const auto bloch = tomography_trajectory(fractions, gp, noise, sys);
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < fractions.size(); ++i) {
    rows.push_back(num_row({fractions[i], bloch[i][0], bloch[i][1], bloch[i][2]}));
  }
  w.write_csv(w.csv_name(), "fraction,x,y,z", rows);
  w.results()["pi_amplitude"] = gp.pi_amplitude;
  w.results()["detuning_mhz"] = gp.detuning_mhz;
}

void run_drag2_scan(const json& root, Writer& w) {
  const json& e = root.at("drag2_scan");
  check_keys(e, {"alpha1_values", "alpha2_values", "sequence_length", "num_sequences"},
             "drag2_scan");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  const GateParams base_gp = parse_gate(root);

  const std::vector<double> a1s = get_num_array(e, "alpha1_values");
  const std::vector<double> a2s = get_num_array(e, "alpha2_values");
  const int m = get_int(e, "sequence_length", 700);
  const int k = get_int(e, "num_sequences", 45);

  std::vector<std::vector<std::string>> rows;
  double best_p2 = kInf;
  double best_a1 = 0.0, best_a2 = 0.0;
  for (double a1 : a1s) {
    for (double a2 : a2s) {
      const std::string label =
          "alpha1=" + format_double(a1) + ",alpha2=" + format_double(a2);
      try {
        GateParams gp = base_gp;
        gp.alpha1 = a1;
        gp.alpha2 = a2;
        gp.pi_amplitude = 0.0;
        gp.half_pi_amplitude = 0.0;
        ensure_amplitudes(gp, noise, sys);

        RBConfig cfg = base_rb_config(root, gp, noise, sys);
        cfg.lengths = {m};
        cfg.num_sequences = k;
        cfg.validate();
        const RBDataset data = rb_sweep(cfg);
        const double p2 = data.mean[0][2];
        rows.push_back(num_row({a1, a2, p2, data.sem[0][2]}));
        if (p2 < best_p2) {
          best_p2 = p2;
          best_a1 = a1;
          best_a2 = a2;
        }
      } catch (const std::exception& ex) {
        w.record_error(label, ex.what());
      }
    }
  }
  w.write_csv(w.csv_name(), "alpha1,alpha2,p2,p2_sem", rows);
  if (best_p2 < kInf) {
    w.results()["minimum"] = {{"alpha1", best_a1}, {"alpha2", best_a2}, {"p2", best_p2}};
  }
  w.results()["sequence_length"] = m;
}

void run_decay_rates(const json& root, Writer& w) {
  const json& e = root.at("decay_rates");
  check_keys(e, {"alphas", "lengths", "num_sequences"}, "decay_rates");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  const GateParams base_gp = parse_gate(root);

  const std::vector<double> alphas = get_num_array(e, "alphas");
  const double t_clifford = average_clifford_time_ns(base_gp);
  const double baseline =
      noise.t1_21_us < kInf ? t_clifford / us_to_ns(noise.t1_21_us) : 0.0;

  std::vector<std::vector<std::string>> rows;
  for (double a : alphas) {
    const std::string label = "alpha=" + format_double(a);
    try {
      GateParams gp = base_gp;
      gp.alpha1 = a;
      gp.pi_amplitude = 0.0;
      gp.half_pi_amplitude = 0.0;
      ensure_amplitudes(gp, noise, sys);

      RBConfig cfg = base_rb_config(root, gp, noise, sys);
      cfg.lengths = get_int_array(e, "lengths");
      cfg.num_sequences = get_int(e, "num_sequences", 50);
      cfg.validate();
      const RBDataset data = rb_sweep(cfg);
      const RBFits fits = fit_dataset(data);
      const Eigen::MatrixXd& lcov = fits.leakage.fit.covariance;
      const bool lc = fits.leakage.fit.converged && lcov.rows() == 3;
      rows.push_back(num_row({a, fits.leakage.rates.gamma_down,
                              lc ? std::sqrt(std::max(0.0, lcov(1, 1))) : 0.0, baseline}));
    } catch (const std::exception& ex) {
      w.record_error(label, ex.what());
    }
  }
  w.write_csv(w.csv_name(), "alpha,gamma_down,gamma_down_err,t1_baseline", rows);
  w.results()["t1_baseline"] = baseline;
  w.results()["mean_clifford_time_ns"] = t_clifford;
}

void run_calibrate(const json& root, Writer& w) {
  const json& e = root.at("calibrate");
  check_keys(e,
             {"alpha1", "alpha2", "rb_lengths", "rb_sequences", "nm_iterations", "detuning_reps"},
             "calibrate");
  const SystemParams sys = parse_system(root);
  const NoiseParams noise = parse_noise(root);
  GateParams gp = parse_gate(root);

  RBBudget budget;
  if (e.contains("rb_lengths")) budget.lengths = get_int_array(e, "rb_lengths");
  budget.num_sequences = get_int(e, "rb_sequences", 20);
  budget.nm_max_iterations = get_int(e, "nm_iterations", 40);
  budget.seed = root.value("seed", 0ULL);
  budget.threads = get_int(root, "threads", 0);

  const double alpha1 = get_num(e, "alpha1", gp.alpha1);
  const double alpha2 = get_num(e, "alpha2", gp.alpha2);
  const CalibrationResult cal = tune_gate(alpha1, alpha2, gp, budget, noise, sys);

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < cal.objective_history.size(); ++i) {
    const auto& [x, v] = cal.objective_history[i];
    rows.push_back(num_row({static_cast<double>(i), v, x[0], x[1], x[2]}));
  }
  w.write_csv(w.csv_name(), "iteration,r_clifford,pi_amplitude,half_pi_amplitude,detuning_mhz",
              rows);

  // dump the tuned pi envelope for inspection
  GateParams tuned = gp;
  tuned.alpha1 = alpha1;
  tuned.alpha2 = alpha2;
  tuned.pi_amplitude = cal.pi_amplitude;
  tuned.half_pi_amplitude = cal.half_pi_amplitude;
  tuned.detuning_mhz = cal.detuning_mhz;
  std::ostringstream env_csv;
  write_envelope_csv(make_pulse(primitive_spec(Primitive::XPi, tuned, sys.anharmonicity),
                                tuned.dt_ns),
                     env_csv);
  w.write_raw(w.csv_name("envelope"), env_csv.str());

  w.results()["calibration"] = {{"pi_amplitude", cal.pi_amplitude},
                                {"half_pi_amplitude", cal.half_pi_amplitude},
                                {"detuning_mhz", cal.detuning_mhz},
                                {"alpha1", cal.alpha1},
                                {"alpha2", cal.alpha2},
                                {"r_clifford", cal.r_clifford},
                                {"detuning_flat", cal.detuning_flat}};
}

}  // namespace

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* qleak_version_string() { return kVersion; }

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    is >> root;
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config parse error in ") + path + ": " + ex.what());
  }
  if (root.contains("tool") && root.contains("config")) {
    json cfg = root["config"];
    if (!cfg.contains("experiment") && root.contains("experiment")) {
      cfg["experiment"] = root["experiment"];
    }
    return cfg;  // manifest re-run
  }
  return root;
}

ExperimentOutcome run_experiment(const nlohmann::json& config, const std::string& out_dir) {
  static const std::set<std::string> kExperiments = {
      "rb",           "leakage_vs_alpha", "leakage_vs_length", "heating", "detune_sweep",
      "tomography",   "drag2_scan",       "decay_rates",       "calibrate"};

  if (!config.is_object()) throw ConfigError("config: expected a JSON object");
  if (!config.contains("experiment") || !config["experiment"].is_string()) {
    throw ConfigError("config: missing 'experiment'");
  }
  const std::string experiment = config["experiment"].get<std::string>();
  if (!kExperiments.count(experiment)) {
    throw ConfigError("config: unknown experiment '" + experiment + "'");
  }

  std::set<std::string> allowed = {"experiment", "seed", "output", "threads",
                                   "system",     "noise", "gate"};
  allowed.insert(experiment);
  check_keys(config, allowed, "config");
  if (!config.contains(experiment)) {
    throw ConfigError("config: missing experiment block '" + experiment + "'");
  }
  if (config.contains("seed") &&
      !(config["seed"].is_number_unsigned() || config["seed"].is_number_integer())) {
    throw ConfigError("config: seed must be an integer");
  }

  // resolve defaults into the stored config so the manifest replays exactly
  json resolved = config;
  if (!resolved.contains("seed")) resolved["seed"] = 0;
  if (!resolved.contains("threads")) resolved["threads"] = 0;
  const std::string stem = get_str(resolved, "output", experiment);
  resolved["output"] = stem;

  Writer writer(out_dir, stem, experiment, resolved);
  if (experiment == "rb") {
    run_rb(resolved, writer);
  } else if (experiment == "leakage_vs_alpha") {
    run_leakage_vs_alpha(resolved, writer);
  } else if (experiment == "leakage_vs_length") {
    run_leakage_vs_length(resolved, writer);
  } else if (experiment == "heating") {
    run_heating(resolved, writer);
  } else if (experiment == "detune_sweep") {
    run_detune_sweep(resolved, writer);
  } else if (experiment == "tomography") {
    run_tomography(resolved, writer);
  } else if (experiment == "drag2_scan") {
    run_drag2_scan(resolved, writer);
  } else if (experiment == "decay_rates") {
    run_decay_rates(resolved, writer);
  } else if (experiment == "calibrate") {
    run_calibrate(resolved, writer);
  }
  return writer.finish();
}

}  // namespace qleak
