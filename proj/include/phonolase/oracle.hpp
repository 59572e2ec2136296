#pragma once

#include <cstdint>
#include <vector>

#include "phonolase/analysis.hpp"

namespace phonolase::oracle {

/// Single-mode laser rate model for the phonon number:
///   dn = [(G - Gamma) n - eta n^2 + D] dt + sqrt(2 D n) dW
/// with stationary density P(n) ~ exp[((G - Gamma) n - (eta/2) n^2) / D].
struct RateParams {
  double gain = 0.0;       // G, 1/s
  double loss = 0.0;       // Gamma, 1/s
  double sat = 0.0;        // eta, 1/(s phonon)
  double diffusion = 1.0;  // D, phonon^2/s

  void validate() const;
};

/// Closed-form stationary density on [0, n_max], trapezoid-normalized on a
/// uniform grid. Throws if the parameters are non-normalizable (G >= Gamma
/// with eta = 0) or if n_max truncates the density (P(n_max) > 1e-12 max P).
PhononDistribution steady_state_distribution(const RateParams& p, double n_max,
                                             int grid_points = 20000);

/// A grid upper bound that comfortably satisfies the tail precondition.
double suggest_n_max(const RateParams& p);

struct OracleTrajectory {
  double dt = 0.0;
  std::vector<double> n;
};

/// Euler-Maruyama integration of the rate SDE with reflection at n = 0.
/// Deterministic in seed; enforces dt * max(Gamma, G, eta n_typ) <= 0.01.
OracleTrajectory sde_trajectory(const RateParams& p, double n0, double dt,
                                double duration, std::uint64_t seed);

/// g2(0) = <n(n-1)>/<n>^2 of the stationary density.
double g2_from_params(const RateParams& p);

}  // namespace phonolase::oracle
