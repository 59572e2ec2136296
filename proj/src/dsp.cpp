#include "phonolase/dsp.hpp"

#include <algorithm>
#include <stdexcept>

namespace phonolase::dsp {

void DetectorConfig::validate() const {
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity))
    throw std::invalid_argument("DetectorConfig: sensitivity must be >= 0");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw std::invalid_argument("DetectorConfig: sample_rate must be > 0");
}

void NonlinearBranchConfig::validate() const {
  if (!(bp_center > 0.0))
    throw std::invalid_argument("NonlinearBranchConfig: bp_center must be > 0");
  if (!(bp_q > 0.0))
    throw std::invalid_argument("NonlinearBranchConfig: bp_q must be > 0");
  if (!(gain >= 0.0))
    throw std::invalid_argument("NonlinearBranchConfig: gain must be >= 0");
}

void LinearBranchConfig::validate() const {
  if (!(pll_center > 0.0))
    throw std::invalid_argument("LinearBranchConfig: pll_center must be > 0");
  if (!(pll_bandwidth > 0.0 && pll_bandwidth < pll_center / 10.0))
    throw std::invalid_argument(
        "LinearBranchConfig: pll_bandwidth must be in (0, pll_center/10)");
  if (!(pll_damping > 0.0))
    throw std::invalid_argument("LinearBranchConfig: pll_damping must be > 0");
  if (!(depth >= 0.0))
    throw std::invalid_argument("LinearBranchConfig: depth must be >= 0");
}

BiquadBandpass::BiquadBandpass(double center, double q, double sample_rate) {
  if (!(center > 0.0 && center < sample_rate * 0.5))
    throw std::invalid_argument(
        "BiquadBandpass: center must lie in (0, sample_rate/2)");
  if (!(q > 0.0)) throw std::invalid_argument("BiquadBandpass: q must be > 0");
  const double w = kTwoPi * center / sample_rate;
  const double alpha = std::sin(w) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  b0_ = alpha / a0;
  b2_ = -alpha / a0;
  a1_ = -2.0 * std::cos(w) / a0;
  a2_ = (1.0 - alpha) / a0;
}

FrequencyDoubler::FrequencyDoubler(double highpass_cutoff,
                                   double sample_rate) {
  if (!(highpass_cutoff > 0.0 && highpass_cutoff < sample_rate * 0.5))
    throw std::invalid_argument(
        "FrequencyDoubler: cutoff must lie in (0, sample_rate/2)");
  r_ = 1.0 / (1.0 + kTwoPi * highpass_cutoff / sample_rate);
}

PhaseShifter::PhaseShifter(double theta, double carrier, double sample_rate) {
  if (!(carrier > 0.0 && carrier < sample_rate * 0.5))
    throw std::invalid_argument(
        "PhaseShifter: carrier must lie in (0, sample_rate/2)");
  // Phase advance by theta == delay by wrap(-theta)/omega_c.
  const double lag = wrap_two_pi(-theta);
  const double delay_samples = lag / kTwoPi * (sample_rate / carrier);
  delay_int_ = static_cast<int>(delay_samples);
  delay_frac_ = delay_samples - delay_int_;
  buf_.assign(static_cast<size_t>(delay_int_) + 2, 0.0);
}

double PhaseShifter::step(double x) {
  buf_[head_] = x;
  const int n = static_cast<int>(buf_.size());
  const int i0 = (head_ - delay_int_ + n) % n;
  const int i1 = (i0 - 1 + n) % n;
  const double y = (1.0 - delay_frac_) * buf_[i0] + delay_frac_ * buf_[i1];
  head_ = (head_ + 1) % n;
  return y;
}

void PhaseShifter::reset() {
  std::fill(buf_.begin(), buf_.end(), 0.0);
  head_ = 0;
}

PllStepResult pll_step(double sample, const PllState& state,
                       const LinearBranchConfig& cfg, double sample_rate) {
  const double dt = 1.0 / sample_rate;
  PllState st = state;
  if (st.freq_estimate <= 0.0) st.freq_estimate = cfg.pll_center;

  // Input power tracker (for amplitude-independent loop gain).
  const double a_env = 1.0 - std::exp(-kTwoPi * cfg.pll_bandwidth * dt);
  st.env2 += a_env * (sample * sample - st.env2);
  const double amp = std::max(std::sqrt(2.0 * st.env2), 1e-300);

  // Multiplying phase detector against the NCO quadrature; the product's
  // baseband term is sin(theta_in - theta_nco). Two cascaded one-poles at
  // pll_center/8 suppress the 2w ripple below the loop's resolution while
  // costing little phase margin at the loop bandwidth. The in-phase product
  // gives cos(delta), used by the lock detector.
  double pd = -2.0 * sample * std::sin(st.phase) / amp;
  pd = std::clamp(pd, -2.0, 2.0);
  double coh = 2.0 * sample * std::cos(st.phase) / amp;
  coh = std::clamp(coh, -2.0, 2.0);
  const double a_pd = 1.0 - std::exp(-kTwoPi * (cfg.pll_center / 8.0) * dt);
  st.err_lp1 += a_pd * (pd - st.err_lp1);
  st.err_lp += a_pd * (st.err_lp1 - st.err_lp);
  st.coh_lp1 += a_pd * (coh - st.coh_lp1);
  st.coh_lp += a_pd * (st.coh_lp1 - st.coh_lp);

  // PI loop filter, natural frequency 2*pi*pll_bandwidth.
  const double wn = kTwoPi * cfg.pll_bandwidth;
  const double kp = 2.0 * cfg.pll_damping * wn;
  const double ki = wn * wn;
  st.integrator += ki * st.err_lp * dt;
  const double correction = kp * st.err_lp + st.integrator;  // rad/s

  st.freq_estimate = cfg.pll_center + correction / kTwoPi;
  st.phase = wrap_two_pi(st.phase + kTwoPi * st.freq_estimate * dt);

  // Lock detector: the low-passed phase-error angle atan2(sin d, cos d)
  // must stay below 0.2 rad for 10/pll_bandwidth seconds. Using the
  // in-phase correlation as the reference arm makes broadband noise (no
  // coherent component) report unlocked.
  const double err_angle = std::abs(std::atan2(st.err_lp, st.coh_lp));
  const double a_lock = 1.0 - std::exp(-kTwoPi * 0.5 * cfg.pll_bandwidth * dt);
  st.err_env += a_lock * (err_angle - st.err_env);
  if (st.err_env < 0.2) {
    st.lock_time += dt;
  } else {
    st.lock_time = 0.0;
  }
  st.locked = st.lock_time >= 10.0 / cfg.pll_bandwidth;

  return {st, std::cos(st.phase)};
}

}  // namespace phonolase::dsp
