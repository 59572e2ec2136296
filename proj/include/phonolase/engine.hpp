#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "phonolase/dsp.hpp"
#include "phonolase/dynamics.hpp"

namespace phonolase {

struct EngineConfig {
  TrapConfig trap;
  dsp::DetectorConfig detector;
  dsp::NonlinearBranchConfig nonlinear;
  dsp::LinearBranchConfig linear;
  double dt = 6.25e-8;        // s; must equal 1/detector.sample_rate
  double duration = 1.0;      // s
  std::uint64_t seed = 0;
  int record_stride = 64;
  double warmup = 0.0;        // s of discarded transient
  std::optional<double> gain_switch_time;  // s; linear depth 0 before this
  double initial_phonon = 0.0;  // coherent seed excitation (x>0, v=0)

  void validate() const;
};

/// Decimated closed-loop trajectory. All arrays share one length; times are
/// strictly increasing with stride dt*record_stride.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> n;
  std::vector<double> u_nl;
  std::vector<double> u_lin;
  std::vector<double> pll_freq;
  std::vector<std::uint8_t> pll_locked;

  size_t size() const { return times.size(); }
};

/// Thrown when |x| exceeds 1e6 x the thermal amplitude scale: runaway gain
/// without saturation headroom rather than a numerical bug.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& msg, double last_stable)
      : std::runtime_error(msg), last_stable_time(last_stable) {}
  double last_stable_time;
};

/// Run the full measurement-feedback loop: step oscillator with the previous
/// sample's modulation, detect, run both branches, sum and limit. One-sample
/// actuation latency; bit-deterministic in (cfg, seed).
TrajectoryRecord run_closed_loop(const EngineConfig& cfg);

/// Net linear amplification rate G of the pump branch at the given depth,
/// measured by fitting ln n(t) on a closed-loop run from a small coherent
/// excitation at near-zero temperature (returns fit slope + gamma).
double calibrate_linear_rate(const EngineConfig& cfg, double depth);

struct PhaseCalibration {
  double cooling_phase;     // nonlinear-branch energy minimizer
  double amplifying_phase;  // linear-branch energy maximizer
};

/// 16-point scan of each branch's phase shift over [0, 2pi), scoring
/// steady-state mean phonon number with common random numbers across scan
/// points. Nonlinear branch returns the minimizer, linear the maximizer.
PhaseCalibration calibrate_phases(const EngineConfig& cfg);

/// Scan one branch only; exposed for tests of the phase-antisymmetry
/// property. `branch` is "nonlinear" or "linear".
double calibrate_branch_phase(const EngineConfig& cfg, const char* branch,
                              bool maximize);

}  // namespace phonolase
