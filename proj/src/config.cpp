#include "phonolase/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "phonolase/constants.hpp"

namespace phonolase {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key, int line) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("config line " + std::to_string(line) + ": " +
                                key + ": cannot parse number '" + v + "'");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Run: return "run";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Transient: return "transient";
    case ExperimentKind::Oracle: return "oracle";
    case ExperimentKind::Calibrate: return "calibrate";
  }
  return "run";
}

EngineConfig ExperimentSpec::engine_config() const {
  EngineConfig cfg;
  cfg.trap.mass = mass_kg;
  cfg.trap.omega0 = kTwoPi * omega0_hz;
  cfg.trap.gamma = kTwoPi * gamma_hz;
  cfg.trap.temperature = temperature_k;
  cfg.trap.hbar_eff = hbar_eff_js;
  cfg.trap.u_max = u_max;
  cfg.detector.sensitivity = sensitivity_m_per_sqrt_hz;
  cfg.detector.sample_rate = sample_rate_hz;
  cfg.nonlinear.bp_center = bp_center_hz;
  cfg.nonlinear.bp_q = bp_q;
  cfg.nonlinear.phase_shift = nonlinear_phase_rad;
  cfg.nonlinear.gain = nonlinear_gain;
  cfg.linear.pll_center = pll_center_hz;
  cfg.linear.pll_bandwidth = pll_bandwidth_hz;
  cfg.linear.pll_damping = pll_damping;
  cfg.linear.phase_shift = linear_phase_rad;
  cfg.linear.depth = linear_depth;
  cfg.dt = 1.0 / sample_rate_hz;
  cfg.duration = duration_s;
  cfg.warmup = warmup_s;
  cfg.record_stride = record_stride;
  cfg.seed = seed;
  cfg.gain_switch_time = gain_switch_time_s;
  cfg.initial_phonon = initial_phonon;
  return cfg;
}

oracle::RateParams ExperimentSpec::rate_params() const {
  oracle::RateParams p;
  p.gain = oracle_gain_per_s;
  p.loss = oracle_loss_per_s;
  p.sat = oracle_sat_per_s_phonon;
  p.diffusion = oracle_diffusion_per_s;
  return p;
}

namespace {

void validate_spec(const ExperimentSpec& s) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: " + key + ": " + why);
  };
  if (!(s.mass_kg > 0)) fail("trap.mass_kg", "must be > 0");
  if (!(s.omega0_hz > 0)) fail("trap.omega0_hz", "must be > 0");
  if (!(s.gamma_hz >= 0)) fail("trap.gamma_hz", "must be >= 0");
  if (!(s.gamma_hz < s.omega0_hz))
    fail("trap.gamma_hz", "must be < trap.omega0_hz (underdamped regime)");
  if (!(s.temperature_k >= 0)) fail("trap.temperature_k", "must be >= 0");
  if (!(s.hbar_eff_js > 0)) fail("trap.hbar_eff_js", "must be > 0");
  if (!(s.u_max >= 0 && s.u_max <= 1)) fail("trap.u_max", "must be in [0, 1]");
  if (!(s.sensitivity_m_per_sqrt_hz >= 0))
    fail("detector.sensitivity_m_per_sqrt_hz", "must be >= 0");
  if (!(s.sample_rate_hz > 20.0 * s.omega0_hz))
    fail("detector.sample_rate_hz",
         "must exceed 20x trap.omega0_hz (Nyquist margin)");
  if (s.omega0_hz * kTwoPi / s.sample_rate_hz > kMaxOmegaDt)
    fail("detector.sample_rate_hz",
         "violates the integrator bound omega0*dt <= 0.05");
  if (!(s.bp_center_hz > 0 && s.bp_center_hz < s.sample_rate_hz / 2))
    fail("nonlinear.bp_center_hz", "must lie in (0, sample_rate/2)");
  if (!(s.bp_q > 0)) fail("nonlinear.bp_q", "must be > 0");
  if (!(s.nonlinear_gain >= 0)) fail("nonlinear.gain", "must be >= 0");
  if (!(s.pll_center_hz > 0)) fail("linear.pll_center_hz", "must be > 0");
  if (!(s.pll_bandwidth_hz > 0 && s.pll_bandwidth_hz < s.pll_center_hz / 10))
    fail("linear.pll_bandwidth_hz", "must lie in (0, pll_center/10)");
  if (!(s.pll_damping > 0)) fail("linear.pll_damping", "must be > 0");
  if (!(s.linear_depth >= 0)) fail("linear.depth", "must be >= 0");
  if (!(s.duration_s > 0)) fail("engine.duration_s", "must be > 0");
  if (!(s.warmup_s >= 0 && s.warmup_s < s.duration_s))
    fail("engine.warmup_s", "need duration_s > warmup_s >= 0");
  if (s.record_stride < 1) fail("engine.record_stride", "must be >= 1");
  if (!(s.initial_phonon >= 0)) fail("engine.initial_phonon", "must be >= 0");
  if (s.gain_switch_time_s && !(*s.gain_switch_time_s >= 0))
    fail("engine.gain_switch_time_s", "must be >= 0 or 'none'");
  if (s.kind == ExperimentKind::Sweep) {
    if (s.sweep_depths.empty()) fail("sweep.depths", "required for kind=sweep");
    for (size_t i = 1; i < s.sweep_depths.size(); ++i)
      if (!(s.sweep_depths[i] > s.sweep_depths[i - 1]))
        fail("sweep.depths", "must be strictly increasing");
  }
  if (!(s.wave_duration_s > 0)) fail("sweep.wave_duration_s", "must be > 0");
  if (s.wave_stride < 1) fail("sweep.wave_stride", "must be >= 1");
  if (!(s.lock_in_tau_s >= 10.0 / s.omega0_hz))
    fail("analysis.lock_in_tau_s", "must be >= 10 trap periods");
  if (s.welch_segment < 16) fail("analysis.welch_segment", "must be >= 16");
  if (s.histogram_bins < 1) fail("analysis.bins", "must be >= 1");
  if (!(s.oracle_loss_per_s >= 0)) fail("oracle.loss_per_s", "must be >= 0");
  if (!(s.oracle_gain_per_s >= 0)) fail("oracle.gain_per_s", "must be >= 0");
  if (!(s.oracle_sat_per_s_phonon >= 0))
    fail("oracle.sat_per_s_phonon", "must be >= 0");
  if (!(s.oracle_diffusion_per_s > 0))
    fail("oracle.diffusion_per_s", "must be > 0");
  if (s.oracle_grid_points < 100) fail("oracle.grid_points", "must be >= 100");
  if (!(s.oracle_sde_n0 >= 0)) fail("oracle.sde_n0", "must be >= 0");
}

}  // namespace

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec s;
  bool seen_seed = false;
  bool user_sample_rate = false, user_bp_center = false;
  bool user_pll_center = false, user_pll_bw = false;
  bool user_warmup = false, user_mass = false, user_tau = false;

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string stripped =
        trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": expected key=value, got '" + stripped +
                                  "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": empty key or value");
    if (!seen.insert(key).second)
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": duplicate key '" + key + "'");

    auto num = [&] { return parse_double(val, key, line); };

    if (key == "artifact.version") {
      // informational; written by manifests
    } else if (key == "experiment.kind") {
      if (val == "run") s.kind = ExperimentKind::Run;
      else if (val == "sweep") s.kind = ExperimentKind::Sweep;
      else if (val == "transient") s.kind = ExperimentKind::Transient;
      else if (val == "oracle") s.kind = ExperimentKind::Oracle;
      else if (val == "calibrate") s.kind = ExperimentKind::Calibrate;
      else
        throw std::invalid_argument(
            "config line " + std::to_string(line) +
            ": experiment.kind must be run|sweep|transient|oracle|calibrate");
    } else if (key == "output.dir") {
      s.output_dir = val;
    } else if (key == "output.emit_plots") {
      if (val == "true") s.emit_plots = true;
      else if (val == "false") s.emit_plots = false;
      else
        throw std::invalid_argument("config line " + std::to_string(line) +
                                    ": output.emit_plots must be true|false");
    } else if (key == "trap.mass_kg") { s.mass_kg = num(); user_mass = true;
    } else if (key == "trap.omega0_hz") { s.omega0_hz = num();
    } else if (key == "trap.gamma_hz") { s.gamma_hz = num();
    } else if (key == "trap.temperature_k") { s.temperature_k = num();
    } else if (key == "trap.hbar_eff_js") { s.hbar_eff_js = num();
    } else if (key == "trap.u_max") { s.u_max = num();
    } else if (key == "detector.sensitivity_m_per_sqrt_hz") {
      s.sensitivity_m_per_sqrt_hz = num();
    } else if (key == "detector.sample_rate_hz") {
      s.sample_rate_hz = num();
      user_sample_rate = true;
    } else if (key == "nonlinear.bp_center_hz") {
      s.bp_center_hz = num();
      user_bp_center = true;
    } else if (key == "nonlinear.bp_q") { s.bp_q = num();
    } else if (key == "nonlinear.phase_shift_rad") {
      s.nonlinear_phase_rad = num();
    } else if (key == "nonlinear.gain") { s.nonlinear_gain = num();
    } else if (key == "linear.pll_center_hz") {
      s.pll_center_hz = num();
      user_pll_center = true;
    } else if (key == "linear.pll_bandwidth_hz") {
      s.pll_bandwidth_hz = num();
      user_pll_bw = true;
    } else if (key == "linear.pll_damping") { s.pll_damping = num();
    } else if (key == "linear.phase_shift_rad") { s.linear_phase_rad = num();
    } else if (key == "linear.depth") { s.linear_depth = num();
    } else if (key == "engine.duration_s") { s.duration_s = num();
    } else if (key == "engine.warmup_s") {
      s.warmup_s = num();
      user_warmup = true;
    } else if (key == "engine.record_stride") {
      s.record_stride = static_cast<int>(num());
    } else if (key == "engine.seed") {
      std::uint64_t sd = 0;
      const auto res = std::from_chars(val.data(), val.data() + val.size(), sd);
      if (res.ec != std::errc() || res.ptr != val.data() + val.size())
        throw std::invalid_argument("config line " + std::to_string(line) +
                                    ": engine.seed must be a 64-bit unsigned "
                                    "integer");
      s.seed = sd;
      seen_seed = true;
    } else if (key == "engine.gain_switch_time_s") {
      if (val == "none") s.gain_switch_time_s.reset();
      else s.gain_switch_time_s = num();
    } else if (key == "engine.initial_phonon") { s.initial_phonon = num();
    } else if (key == "sweep.depths") {
      s.sweep_depths.clear();
      std::istringstream ds(val);
      std::string tok;
      while (std::getline(ds, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        s.sweep_depths.push_back(parse_double(tok, key, line));
      }
    } else if (key == "sweep.wave_duration_s") { s.wave_duration_s = num();
    } else if (key == "sweep.wave_stride") {
      s.wave_stride = static_cast<int>(num());
    } else if (key == "analysis.lock_in_tau_s") {
      s.lock_in_tau_s = num();
      user_tau = true;
    } else if (key == "analysis.welch_segment") {
      s.welch_segment = static_cast<int>(num());
    } else if (key == "analysis.bins") {
      s.histogram_bins = static_cast<int>(num());
    } else if (key == "oracle.gain_per_s") { s.oracle_gain_per_s = num();
    } else if (key == "oracle.loss_per_s") { s.oracle_loss_per_s = num();
    } else if (key == "oracle.sat_per_s_phonon") {
      s.oracle_sat_per_s_phonon = num();
    } else if (key == "oracle.diffusion_per_s") {
      s.oracle_diffusion_per_s = num();
    } else if (key == "oracle.n_max") { s.oracle_n_max = num();
    } else if (key == "oracle.grid_points") {
      s.oracle_grid_points = static_cast<int>(num());
    } else if (key == "oracle.sde_n0") { s.oracle_sde_n0 = num();
    } else if (key == "oracle.sde_dt_s") { s.oracle_sde_dt_s = num();
    } else if (key == "oracle.sde_duration_s") {
      s.oracle_sde_duration_s = num();
    } else {
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": unknown key '" + key + "'");
    }
  }

  if (!seen_seed)
    throw std::invalid_argument(
        "config: engine.seed is required (the only key without a default)");

  // Derived defaults, resolved after all explicit keys are read.
  if (!user_mass)
    s.mass_kg = kSilicaDensity * (kPi / 6.0) * 150e-9 * 150e-9 * 150e-9;
  if (!user_sample_rate) s.sample_rate_hz = 128.0 * s.omega0_hz;
  if (!user_bp_center) s.bp_center_hz = s.omega0_hz;
  if (!user_pll_center) s.pll_center_hz = s.omega0_hz;
  if (!user_pll_bw) s.pll_bandwidth_hz = s.omega0_hz / 50.0;
  if (!user_warmup)
    s.warmup_s = s.gamma_hz > 0 ? 20.0 / (kTwoPi * s.gamma_hz)
                                : 0.1 * s.duration_s;
  if (!user_tau) s.lock_in_tau_s = 12.5 / s.omega0_hz;

  validate_spec(s);
  return s;
}

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("load_config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentSpec& s) {
  std::ostringstream out;
  auto put = [&](const std::string& key, const std::string& val) {
    out << key << " = " << val << "\n";
  };
  auto putd = [&](const std::string& key, double v) {
    put(key, format_double(v));
  };
  put("experiment.kind", kind_name(s.kind));
  put("output.dir", s.output_dir);
  put("output.emit_plots", s.emit_plots ? "true" : "false");
  putd("trap.mass_kg", s.mass_kg);
  putd("trap.omega0_hz", s.omega0_hz);
  putd("trap.gamma_hz", s.gamma_hz);
  putd("trap.temperature_k", s.temperature_k);
  putd("trap.hbar_eff_js", s.hbar_eff_js);
  putd("trap.u_max", s.u_max);
  putd("detector.sensitivity_m_per_sqrt_hz", s.sensitivity_m_per_sqrt_hz);
  putd("detector.sample_rate_hz", s.sample_rate_hz);
  putd("nonlinear.bp_center_hz", s.bp_center_hz);
  putd("nonlinear.bp_q", s.bp_q);
  putd("nonlinear.phase_shift_rad", s.nonlinear_phase_rad);
  putd("nonlinear.gain", s.nonlinear_gain);
  putd("linear.pll_center_hz", s.pll_center_hz);
  putd("linear.pll_bandwidth_hz", s.pll_bandwidth_hz);
  putd("linear.pll_damping", s.pll_damping);
  putd("linear.phase_shift_rad", s.linear_phase_rad);
  putd("linear.depth", s.linear_depth);
  putd("engine.duration_s", s.duration_s);
  putd("engine.warmup_s", s.warmup_s);
  put("engine.record_stride", std::to_string(s.record_stride));
  put("engine.seed", std::to_string(s.seed));
  put("engine.gain_switch_time_s",
      s.gain_switch_time_s ? format_double(*s.gain_switch_time_s) : "none");
  putd("engine.initial_phonon", s.initial_phonon);
  if (!s.sweep_depths.empty()) {
    std::string joined;
    for (size_t i = 0; i < s.sweep_depths.size(); ++i) {
      if (i) joined += ",";
      joined += format_double(s.sweep_depths[i]);
    }
    put("sweep.depths", joined);
  }
  putd("sweep.wave_duration_s", s.wave_duration_s);
  put("sweep.wave_stride", std::to_string(s.wave_stride));
  putd("analysis.lock_in_tau_s", s.lock_in_tau_s);
  put("analysis.welch_segment", std::to_string(s.welch_segment));
  put("analysis.bins", std::to_string(s.histogram_bins));
  putd("oracle.gain_per_s", s.oracle_gain_per_s);
  putd("oracle.loss_per_s", s.oracle_loss_per_s);
  putd("oracle.sat_per_s_phonon", s.oracle_sat_per_s_phonon);
  putd("oracle.diffusion_per_s", s.oracle_diffusion_per_s);
  putd("oracle.n_max", s.oracle_n_max);
  put("oracle.grid_points", std::to_string(s.oracle_grid_points));
  putd("oracle.sde_n0", s.oracle_sde_n0);
  putd("oracle.sde_dt_s", s.oracle_sde_dt_s);
  putd("oracle.sde_duration_s", s.oracle_sde_duration_s);
  return out.str();
}

}  // namespace phonolase
