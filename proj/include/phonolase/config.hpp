#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phonolase/engine.hpp"
#include "phonolase/oracle.hpp"

namespace phonolase {

enum class ExperimentKind { Run, Sweep, Transient, Oracle, Calibrate };

/// Fully resolved experiment description. Fields mirror the flat key=value
/// config file one-to-one (key-space units), so dump/parse round-trips are
/// bit-exact; unit conversions happen in engine_config()/rate_params().
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Run;

  std::string output_dir = ".";
  bool emit_plots = false;

  // trap.*
  double mass_kg = 0.0;  // resolved default: 150 nm silica sphere
  double omega0_hz = 125.0e3;
  double gamma_hz = 100.0;
  double temperature_k = 300.0;
  double hbar_eff_js = 1.054571817e-34;
  double u_max = 0.5;

  // detector.*
  double sensitivity_m_per_sqrt_hz = 1.0e-12;
  double sample_rate_hz = 0.0;  // resolved default: 128 * omega0_hz

  // nonlinear.*
  double bp_center_hz = 0.0;  // resolved default: omega0_hz
  double bp_q = 10.0;
  double nonlinear_phase_rad = 0.0;
  double nonlinear_gain = 0.0;

  // linear.*
  double pll_center_hz = 0.0;     // resolved default: omega0_hz
  double pll_bandwidth_hz = 0.0;  // resolved default: omega0_hz / 50
  double pll_damping = 0.70711;
  double linear_phase_rad = 0.0;
  double linear_depth = 0.0;

  // engine.*
  double duration_s = 0.1;
  double warmup_s = -1.0;  // resolved default: 20 / (2 pi gamma_hz)
  int record_stride = 64;
  std::uint64_t seed = 0;
  std::optional<double> gain_switch_time_s;
  double initial_phonon = 0.0;

  // sweep.*
  std::vector<double> sweep_depths;
  double wave_duration_s = 0.5;
  int wave_stride = 32;

  // analysis.*
  double lock_in_tau_s = 0.0;  // resolved default: 12.5 / omega0_hz
  int welch_segment = 65536;
  int histogram_bins = 60;

  // oracle.*
  double oracle_gain_per_s = 0.0;
  double oracle_loss_per_s = 1.0;
  double oracle_sat_per_s_phonon = 0.0;
  double oracle_diffusion_per_s = 100.0;
  double oracle_n_max = 0.0;  // 0 = auto
  int oracle_grid_points = 20000;
  double oracle_sde_n0 = 0.0;
  double oracle_sde_dt_s = 0.0;  // 0 = auto from the stability bound
  double oracle_sde_duration_s = 0.0;  // 0 = no SDE output

  bool operator==(const ExperimentSpec&) const = default;

  EngineConfig engine_config() const;
  oracle::RateParams rate_params() const;
};

/// Parse the flat key=value format (dotted sections, '#' comments). Unknown
/// or duplicate keys are hard errors with line numbers; every key except
/// engine.seed has a documented default.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec load_config(const std::string& path);

/// Serialize every resolved key; parse_config(dump_config(s)) == s.
std::string dump_config(const ExperimentSpec& spec);

const char* kind_name(ExperimentKind kind);

}  // namespace phonolase
