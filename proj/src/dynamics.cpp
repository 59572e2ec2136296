#include "phonolase/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phonolase {

void TrapConfig::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument("TrapConfig: mass must be finite and > 0");
  if (!(omega0 > 0.0) || !std::isfinite(omega0))
    throw std::invalid_argument("TrapConfig: omega0 must be finite and > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("TrapConfig: gamma must be finite and >= 0");
  if (!(gamma < omega0))
    throw std::invalid_argument(
        "TrapConfig: gamma must be < omega0 (underdamped regime required)");
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("TrapConfig: temperature must be >= 0");
  if (!(hbar_eff > 0.0) || !std::isfinite(hbar_eff))
    throw std::invalid_argument("TrapConfig: hbar_eff must be > 0");
  if (!(u_max >= 0.0 && u_max <= 1.0))
    throw std::invalid_argument("TrapConfig: u_max must be in [0, 1]");
}

OscillatorState step_oscillator(const OscillatorState& state,
                                const TrapConfig& trap, double u, double dt,
                                double noise_draw) {
  if (!std::isfinite(state.x) || !std::isfinite(state.v) ||
      !std::isfinite(state.t))
    throw std::invalid_argument("step_oscillator: non-finite state");
  if (!std::isfinite(u) || std::abs(u) > trap.u_max * (1.0 + 1e-12))
    throw std::invalid_argument("step_oscillator: |u| exceeds u_max");
  if (!(dt > 0.0))
    throw std::invalid_argument("step_oscillator: dt must be > 0");
  if (trap.omega0 * dt > kMaxOmegaDt)
    throw std::invalid_argument(
        "step_oscillator: stability bound omega0*dt <= " +
        std::to_string(kMaxOmegaDt) + " violated (omega0*dt = " +
        std::to_string(trap.omega0 * dt) + ")");

  // Per-step thermal impulse variance 2 m gamma kB T dt (fluctuation-
  // dissipation), applied to velocity.
  const double w2 = trap.omega0 * trap.omega0;
  const double force = -w2 * (1.0 + u) * state.x - trap.gamma * state.v;
  const double kick =
      std::sqrt(2.0 * trap.gamma * kBoltzmann * trap.temperature * dt /
                trap.mass) *
      noise_draw;

  OscillatorState next;
  next.v = state.v + dt * force + kick;
  next.x = state.x + dt * next.v;
  next.t = state.t + dt;
  return next;
}

double phonon_number(const OscillatorState& state, const TrapConfig& trap) {
  const double energy = 0.5 * trap.mass * state.v * state.v +
                        0.5 * trap.mass * trap.omega0 * trap.omega0 * state.x *
                            state.x;
  const double n = energy / (trap.hbar_eff * trap.omega0) - 0.5;
  return n > 0.0 ? n : 0.0;
}

double default_mass_from_diameter(double diameter, double density) {
  if (!(diameter > 0.0))
    throw std::invalid_argument("default_mass_from_diameter: diameter <= 0");
  if (!(density > 0.0))
    throw std::invalid_argument("default_mass_from_diameter: density <= 0");
  return density * (kPi / 6.0) * diameter * diameter * diameter;
}

double thermal_phonon_number(const TrapConfig& trap) {
  return kBoltzmann * trap.temperature / (trap.hbar_eff * trap.omega0);
}

double amplitude_for_phonon(double n, const TrapConfig& trap) {
  return std::sqrt(2.0 * trap.hbar_eff * (n + 0.5) /
                   (trap.mass * trap.omega0));
}

}  // namespace phonolase
