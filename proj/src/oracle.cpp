#include "phonolase/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "phonolase/rng.hpp"

namespace phonolase::oracle {

void RateParams::validate() const {
  if (!(loss >= 0.0) || !std::isfinite(loss))
    throw std::invalid_argument("RateParams: loss must be >= 0");
  if (!(gain >= 0.0) || !std::isfinite(gain))
    throw std::invalid_argument("RateParams: gain must be >= 0");
  if (!(sat >= 0.0) || !std::isfinite(sat))
    throw std::invalid_argument("RateParams: sat must be >= 0");
  if (!(diffusion > 0.0) || !std::isfinite(diffusion))
    throw std::invalid_argument("RateParams: diffusion must be > 0");
}

double suggest_n_max(const RateParams& p) {
  const double a = p.gain - p.loss;
  if (p.sat > 0.0) {
    const double mode = std::max(a / p.sat, 0.0);
    const double width = std::sqrt(p.diffusion / p.sat);
    double nmax = mode + 12.0 * width;
    if (a < 0.0) nmax = std::max(nmax, 40.0 * p.diffusion / -a);
    return nmax;
  }
  if (a < 0.0) return 40.0 * p.diffusion / -a;
  throw std::invalid_argument(
      "RateParams: non-normalizable (gain >= loss with sat = 0)");
}

PhononDistribution steady_state_distribution(const RateParams& p, double n_max,
                                             int grid_points) {
  p.validate();
  const double a = p.gain - p.loss;
  if (p.sat == 0.0 && a >= 0.0)
    throw std::invalid_argument(
        "steady_state_distribution: non-normalizable parameters "
        "(gain >= loss with sat = 0)");
  if (!(n_max > 0.0))
    throw std::invalid_argument("steady_state_distribution: n_max must be > 0");
  if (grid_points < 100)
    throw std::invalid_argument("steady_state_distribution: grid too coarse");

  const int m = grid_points;
  const double dn = n_max / m;
  std::vector<double> logp(m + 1);
  double logp_max = -1e300;
  for (int i = 0; i <= m; ++i) {
    const double n = i * dn;
    logp[i] = (a * n - 0.5 * p.sat * n * n) / p.diffusion;
    logp_max = std::max(logp_max, logp[i]);
  }
  if (logp[m] - logp_max > std::log(1e-12))
    throw std::invalid_argument(
        "steady_state_distribution: n_max too small, P(n_max) > 1e-12 max P");

  std::vector<double> dens(m + 1);
  for (int i = 0; i <= m; ++i) dens[i] = std::exp(logp[i] - logp_max);

  // Trapezoid normalization and moments on the same grid.
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    const double n = i * dn;
    z += w * dens[i];
    m1 += w * dens[i] * n;
    m2 += w * dens[i] * n * n;
  }
  m1 /= z;
  m2 /= z;

  PhononDistribution d;
  d.bin_edges.resize(m + 1);
  d.probabilities.resize(m);
  for (int i = 0; i <= m; ++i) d.bin_edges[i] = i * dn;
  for (int i = 0; i < m; ++i)
    d.probabilities[i] = 0.5 * (dens[i] + dens[i + 1]) / z;
  d.mean = m1;
  d.variance = m2 - m1 * m1;
  d.g2_zero = (m2 - m1) / (m1 * m1);
  d.sample_count = 0;  // closed form, not sampled
  return d;
}

OracleTrajectory sde_trajectory(const RateParams& p, double n0, double dt,
                                double duration, std::uint64_t seed) {
  p.validate();
  if (!(n0 >= 0.0))
    throw std::invalid_argument("sde_trajectory: n0 must be >= 0");
  if (!(dt > 0.0) || !(duration > 0.0))
    throw std::invalid_argument("sde_trajectory: need dt > 0 and duration > 0");

  // Typical scale for the stability bound: the largest of the start value,
  // the above-threshold mode, the stationary width, and the subthreshold
  // mean.
  double n_typ = n0;
  const double a = p.gain - p.loss;
  if (p.sat > 0.0) {
    n_typ = std::max(n_typ, std::max(a, 0.0) / p.sat);
    n_typ = std::max(n_typ, std::sqrt(p.diffusion / p.sat));
  }
  if (a < 0.0) n_typ = std::max(n_typ, p.diffusion / -a);
  const double fastest = std::max({p.loss, p.gain, p.sat * n_typ});
  if (dt * fastest > 0.01)
    throw std::invalid_argument(
        "sde_trajectory: stability bound dt*max(Gamma, G, eta*n_typ) <= 0.01 "
        "violated (value = " +
        std::to_string(dt * fastest) + ")");

  GaussianRng rng(seed);
  const auto steps = static_cast<std::uint64_t>(duration / dt);
  OracleTrajectory out;
  out.dt = dt;
  out.n.reserve(steps + 1);
  double n = n0;
  out.n.push_back(n);
  const double sq_dt = std::sqrt(dt);
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double drift = (a - p.sat * n) * n + p.diffusion;
    n += drift * dt +
         std::sqrt(2.0 * p.diffusion * std::max(n, 0.0)) * sq_dt * rng.normal();
    if (n < 0.0) n = -n;  // reflecting boundary
    out.n.push_back(n);
  }
  return out;
}

double g2_from_params(const RateParams& p) {
  return steady_state_distribution(p, suggest_n_max(p)).g2_zero;
}

}  // namespace phonolase::oracle
