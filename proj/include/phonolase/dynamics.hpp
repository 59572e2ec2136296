#pragma once

#include <cstdint>

#include "phonolase/constants.hpp"

namespace phonolase {

/// Physical parameters of the optical trap and its thermal environment.
/// hbar_eff is the energy quantum used to convert oscillator energy to a
/// phonon number; it defaults to the physical hbar but may be raised for
/// dimensionless desk-scale runs (all statistics except absolute n are
/// invariant under that rescaling).
struct TrapConfig {
  double mass = 3.8877e-18;          // kg
  double omega0 = kTwoPi * 125.0e3;  // rad/s
  double gamma = kTwoPi * 100.0;     // 1/s
  double temperature = 300.0;        // K
  double hbar_eff = kHbar;           // J*s
  double u_max = 0.5;                // max |fractional stiffness modulation|

  void validate() const;  // throws std::invalid_argument
};

struct OscillatorState {
  double x = 0.0;  // m
  double v = 0.0;  // m/s
  double t = 0.0;  // s
};

/// One step of the trap Langevin equation
///   x'' = -omega0^2 (1+u) x - gamma x' + sqrt(2 gamma kB T / m) xi(t)
/// with a semi-implicit (velocity-first) Euler-Maruyama update. Weak order 1;
/// requires omega0*dt <= 0.05. Bit-deterministic in (state, u, dt, noise).
OscillatorState step_oscillator(const OscillatorState& state,
                                const TrapConfig& trap, double u, double dt,
                                double noise_draw);

/// Energy in phonon units: max(0, E/(hbar_eff*omega0) - 1/2) with
/// E = m v^2/2 + m omega0^2 x^2/2. Uses the d.c. omega0, not the
/// instantaneous modulated stiffness.
double phonon_number(const OscillatorState& state, const TrapConfig& trap);

/// Sphere mass from diameter and material density: rho * (pi/6) * d^3.
double default_mass_from_diameter(double diameter, double density);

/// Thermal occupation kB*T/(hbar_eff*omega0).
double thermal_phonon_number(const TrapConfig& trap);

/// Peak displacement of a pure oscillation carrying n phonons.
double amplitude_for_phonon(double n, const TrapConfig& trap);

}  // namespace phonolase
