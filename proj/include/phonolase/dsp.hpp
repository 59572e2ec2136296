#pragma once

#include <cmath>
#include <vector>

#include "phonolase/constants.hpp"

namespace phonolase::dsp {

struct DetectorConfig {
  double sensitivity = 1.0e-12;  // m/sqrt(Hz), white displacement noise floor
  double sample_rate = 16.0e6;   // Hz

  void validate() const;
};

/// Noisy position readout: x plus white noise whose one-sided PSD equals
/// sensitivity^2 (per-sample sigma = sensitivity * sqrt(sample_rate/2)).
inline double detect(double x, const DetectorConfig& det, double noise_draw) {
  return x + det.sensitivity * std::sqrt(det.sample_rate * 0.5) * noise_draw;
}

/// Second-order resonator bandpass (constant peak gain form): unity gain and
/// zero phase at `center`, -3 dB width center/q. Streaming, constant memory.
class BiquadBandpass {
 public:
  BiquadBandpass(double center, double q, double sample_rate);

  double step(double x) {
    const double y = b0_ * x + s1_;
    s1_ = -a1_ * y + s2_;
    s2_ = b2_ * x - a2_ * y;
    return y;
  }

  void reset() { s1_ = s2_ = 0.0; }

 private:
  double b0_, b2_, a1_, a2_;
  double s1_ = 0.0, s2_ = 0.0;
};

/// Square-law frequency doubler: squares the input and removes the slowly
/// varying mean with a one-pole high-pass. For input A cos(w t) the steady
/// output is (A^2/2) cos(2 w t); the A^2 envelope is deliberately kept
/// (not normalized), making downstream feedback depth quadratic in amplitude.
class FrequencyDoubler {
 public:
  FrequencyDoubler(double highpass_cutoff, double sample_rate);

  double step(double x) {
    const double s = x * x;
    const double y = r_ * (y_prev_ + s - s_prev_);
    s_prev_ = s;
    y_prev_ = y;
    return y;
  }

  void reset() { s_prev_ = y_prev_ = 0.0; }

 private:
  double r_;
  double s_prev_ = 0.0, y_prev_ = 0.0;
};

/// Narrowband phase shifter realized as an interpolated fractional delay of
/// wrap(-theta)/(2 pi carrier) seconds. Exact only for signals at `carrier`;
/// theta = 0 maps to zero delay (bit-exact identity).
class PhaseShifter {
 public:
  PhaseShifter(double theta, double carrier, double sample_rate);

  double step(double x);
  void reset();

 private:
  std::vector<double> buf_;
  int head_ = 0;
  int delay_int_ = 0;
  double delay_frac_ = 0.0;
};

struct NonlinearBranchConfig {
  double bp_center = 125.0e3;  // Hz
  double bp_q = 10.0;
  double phase_shift = 0.0;  // rad, applied at 2*bp_center
  double gain = 0.0;         // normalized doubled signal -> modulation depth

  void validate() const;
};

struct LinearBranchConfig {
  double pll_center = 125.0e3;    // Hz, initial frequency estimate
  double pll_bandwidth = 2.5e3;   // Hz, loop natural frequency
  double pll_damping = 0.70711;   // loop damping factor
  double phase_shift = 0.0;       // rad
  double depth = 0.0;             // fixed modulation depth (the pump)

  void validate() const;
};

/// Phase-locked loop state. `phase` is the internal oscillator phase wrapped
/// to [0, 2pi); `locked` reports whether the low-passed phase-error magnitude
/// has stayed below 0.2 rad for 10/pll_bandwidth seconds. The remaining
/// fields are loop-filter internals.
struct PllState {
  double phase = 0.0;
  double freq_estimate = 0.0;  // Hz; 0 means "initialize from config"
  double integrator = 0.0;     // rad/s
  bool locked = false;
  // internals: input power tracker, two-pole-filtered phase error and
  // in-phase correlation, error-angle envelope, lock timer
  double env2 = 0.0;
  double err_lp1 = 0.0;
  double err_lp = 0.0;
  double coh_lp1 = 0.0;
  double coh_lp = 0.0;
  double err_env = 0.0;
  double lock_time = 0.0;
};

struct PllStepResult {
  PllState state;
  double reference;  // cos(phase) after the update
};

/// One sample of a classic second-order PLL: multiplying phase detector
/// (input x quadrature of the internal oscillator, low-passed), PI loop
/// filter, numerically controlled oscillator. The detector output is
/// normalized by a tracked input envelope so loop dynamics are independent
/// of signal amplitude.
PllStepResult pll_step(double sample, const PllState& state,
                       const LinearBranchConfig& cfg, double sample_rate);

/// EOM limiter: clamp(u_nl + u_lin, -u_max, +u_max).
inline double combine_and_limit(double u_nl, double u_lin, double u_max) {
  const double u = u_nl + u_lin;
  if (u > u_max) return u_max;
  if (u < -u_max) return -u_max;
  return u;
}

inline double wrap_two_pi(double phi) {
  phi = std::fmod(phi, kTwoPi);
  return phi < 0.0 ? phi + kTwoPi : phi;
}

}  // namespace phonolase::dsp
