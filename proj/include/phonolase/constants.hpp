#pragma once

namespace phonolase {

inline constexpr double kBoltzmann = 1.380649e-23;       // J/K
inline constexpr double kHbar = 1.054571817e-34;         // J*s
inline constexpr double kSilicaDensity = 2200.0;         // kg/m^3
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Hard cap on omega0*dt for the semi-implicit integrator.
inline constexpr double kMaxOmegaDt = 0.05;

}  // namespace phonolase
