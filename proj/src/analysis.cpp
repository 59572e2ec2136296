#include "phonolase/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "phonolase/fft.hpp"

namespace phonolase {

namespace {

struct Moments {
  double mean = 0.0, variance = 0.0, g2 = 0.0;
};

Moments sample_moments(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  double s1 = 0.0, s2 = 0.0;
  for (double x : v) {
    s1 += x;
    s2 += x * x;
  }
  Moments m;
  m.mean = s1 / n;
  m.variance = s2 / n - m.mean * m.mean;
  m.g2 = (s2 / n - m.mean) / (m.mean * m.mean);
  return m;
}

}  // namespace

PhononDistribution phonon_histogram(const std::vector<double>& n_samples,
                                    int bins) {
  if (n_samples.size() < 100)
    throw std::invalid_argument(
        "phonon_histogram: fewer than 100 samples is statistically "
        "meaningless");
  if (bins < 1) throw std::invalid_argument("phonon_histogram: bins < 1");

  const double lo = 0.0;
  double hi = *std::max_element(n_samples.begin(), n_samples.end());
  if (hi <= lo) hi = lo + 1.0;
  hi *= 1.0 + 1e-12;

  PhononDistribution d;
  d.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    d.bin_edges[b] = lo + (hi - lo) * b / bins;
  d.probabilities.assign(bins, 0.0);
  const double inv_w = bins / (hi - lo);
  for (double x : n_samples) {
    int b = static_cast<int>((x - lo) * inv_w);
    b = std::clamp(b, 0, bins - 1);
    d.probabilities[b] += 1.0;
  }
  for (double& p : d.probabilities) p /= static_cast<double>(n_samples.size());

  const Moments m = sample_moments(n_samples);
  d.mean = m.mean;
  d.variance = m.variance;
  d.g2_zero = m.g2;
  d.sample_count = static_cast<long>(n_samples.size());
  return d;
}

PhononDistribution phonon_histogram(const TrajectoryRecord& record, int bins) {
  return phonon_histogram(record.n, bins);
}

IQSeries lock_in(const std::vector<double>& x, double f_ref, double tau,
                 double sample_rate, double t0) {
  if (!(f_ref > 0.0 && f_ref < sample_rate * 0.5))
    throw std::invalid_argument("lock_in: f_ref must lie in (0, rate/2)");
  if (!(tau >= 10.0 / f_ref))
    throw std::invalid_argument("lock_in: need tau >= 10/f_ref");
  const double dt = 1.0 / sample_rate;
  const double a = 1.0 - std::exp(-dt / tau);

  IQSeries out;
  out.times.resize(x.size());
  out.i.resize(x.size());
  out.q.resize(x.size());
  double li = 0.0, lq = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    const double ph = kTwoPi * f_ref * t;
    li += a * (2.0 * x[k] * std::cos(ph) - li);
    lq += a * (-2.0 * x[k] * std::sin(ph) - lq);
    out.times[k] = t;
    out.i[k] = li;
    out.q[k] = lq;
  }
  return out;
}

RadialStats radial_statistics(const IQSeries& iq) {
  if (iq.i.size() < 1000)
    throw std::invalid_argument(
        "radial_statistics: need at least 1000 decorrelated samples");
  std::vector<double> r2(iq.i.size());
  double max_r2 = 0.0;
  for (size_t k = 0; k < iq.i.size(); ++k) {
    r2[k] = iq.i[k] * iq.i[k] + iq.q[k] * iq.q[k];
    max_r2 = std::max(max_r2, r2[k]);
  }
  if (max_r2 <= 0.0)
    throw std::invalid_argument("radial_statistics: degenerate all-zero series");

  const Moments m = sample_moments(r2);
  RadialStats out;
  out.annulus_score = m.variance / (m.mean * m.mean);

  // Mode of the kernel-smoothed radial density (Gaussian kernel, Silverman
  // bandwidth, 512-point grid).
  std::vector<double> r(r2.size());
  for (size_t k = 0; k < r2.size(); ++k) r[k] = std::sqrt(r2[k]);
  const Moments mr = sample_moments(r);
  const double sigma = std::sqrt(std::max(mr.variance, 0.0));
  const double h =
      1.06 * std::max(sigma, 1e-300) *
      std::pow(static_cast<double>(r.size()), -0.2);
  const double rmax = *std::max_element(r.begin(), r.end()) + 3.0 * h;
  constexpr int kGrid = 512;
  double best_density = -1.0, best_r = 0.0;
  for (int g = 0; g < kGrid; ++g) {
    const double rg = rmax * (g + 0.5) / kGrid;
    double dens = 0.0;
    for (double rv : r) {
      const double z = (rg - rv) / h;
      dens += std::exp(-0.5 * z * z);
    }
    if (dens > best_density) {
      best_density = dens;
      best_r = rg;
    }
  }
  out.peak_radius = best_r;
  return out;
}

namespace {

// Lorentzian S(f) = h / (1 + ((f - f0)/(w/2))^2) + b fitted by damped
// Gauss-Newton. Returns false if the fit fails to converge or r2 < 0.9.
bool fit_lorentzian(const std::vector<double>& f, const std::vector<double>& s,
                    double h0, double f0, double w0, double b0, double* fwhm) {
  double h = h0, fc = f0, w = std::max(w0, 1e-12), b = b0;
  const size_t n = f.size();
  if (n < 8) return false;

  auto residual_ss = [&](double hh, double ff, double ww, double bb) {
    double ss = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double z = (f[k] - ff) / (0.5 * ww);
      const double pred = hh / (1.0 + z * z) + bb;
      ss += (s[k] - pred) * (s[k] - pred);
    }
    return ss;
  };

  double lambda = 1e-3;
  double ss_prev = residual_ss(h, fc, w, b);
  for (int iter = 0; iter < 200; ++iter) {
    // Normal equations for parameters (h, fc, w, b).
    double jtj[4][4] = {};
    double jtr[4] = {};
    for (size_t k = 0; k < n; ++k) {
      const double z = (f[k] - fc) / (0.5 * w);
      const double den = 1.0 + z * z;
      const double pred = h / den + b;
      const double r = s[k] - pred;
      const double dh = 1.0 / den;
      const double common = h / (den * den) * 2.0 * z;
      const double dfc = common / (0.5 * w);
      const double dw = common * z / w;
      const double db = 1.0;
      const double grad[4] = {dh, dfc, dw, db};
      for (int a2 = 0; a2 < 4; ++a2) {
        jtr[a2] += grad[a2] * r;
        for (int b2 = 0; b2 < 4; ++b2) jtj[a2][b2] += grad[a2] * grad[b2];
      }
    }
    for (int a2 = 0; a2 < 4; ++a2) jtj[a2][a2] *= 1.0 + lambda;

    // Solve the 4x4 system by Gaussian elimination.
    double m[4][5];
    for (int r2 = 0; r2 < 4; ++r2) {
      for (int c = 0; c < 4; ++c) m[r2][c] = jtj[r2][c];
      m[r2][4] = jtr[r2];
    }
    bool singular = false;
    for (int col = 0; col < 4; ++col) {
      int piv = col;
      for (int r2 = col + 1; r2 < 4; ++r2)
        if (std::abs(m[r2][col]) > std::abs(m[piv][col])) piv = r2;
      if (std::abs(m[piv][col]) < 1e-300) {
        singular = true;
        break;
      }
      std::swap(m[piv], m[col]);
      for (int r2 = 0; r2 < 4; ++r2) {
        if (r2 == col) continue;
        const double fac = m[r2][col] / m[col][col];
        for (int c = col; c < 5; ++c) m[r2][c] -= fac * m[col][c];
      }
    }
    if (singular) break;
    const double step[4] = {m[0][4] / m[0][0], m[1][4] / m[1][1],
                            m[2][4] / m[2][2], m[3][4] / m[3][3]};
    const double h_n = h + step[0];
    const double fc_n = fc + step[1];
    const double w_n = w + step[2];
    const double b_n = b + step[3];
    if (!(w_n > 0.0) || !std::isfinite(h_n + fc_n + w_n + b_n)) {
      lambda *= 10.0;
      continue;
    }
    const double ss_new = residual_ss(h_n, fc_n, w_n, b_n);
    if (ss_new < ss_prev) {
      const bool converged = ss_prev - ss_new < 1e-12 * ss_prev;
      h = h_n;
      fc = fc_n;
      w = w_n;
      b = b_n;
      ss_prev = ss_new;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (converged) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  double mean_s = 0.0;
  for (double v : s) mean_s += v;
  mean_s /= static_cast<double>(n);
  double ss_tot = 0.0;
  for (double v : s) ss_tot += (v - mean_s) * (v - mean_s);
  const double r2 = ss_tot > 0.0 ? 1.0 - ss_prev / ss_tot : 0.0;
  if (r2 < 0.9 || !(w > 0.0)) return false;
  *fwhm = w;
  return true;
}

}  // namespace

PsdEstimate welch_psd(const std::vector<double>& x, double sample_rate,
                      size_t segment_length) {
  if (segment_length < 16)
    throw std::invalid_argument("welch_psd: segment_length too short");
  const size_t hop = segment_length / 2;  // 50% overlap
  if (x.size() < segment_length + 3 * hop)
    throw std::invalid_argument(
        "welch_psd: series shorter than 4 overlapping segments");

  double mean = std::accumulate(x.begin(), x.end(), 0.0) /
                static_cast<double>(x.size());

  const size_t nfft = next_power_of_two(segment_length);
  const size_t nfreq = nfft / 2 + 1;
  std::vector<double> window(segment_length);
  double u = 0.0;
  for (size_t i = 0; i < segment_length; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) /
                                     static_cast<double>(segment_length - 1));
    u += window[i] * window[i];
  }

  std::vector<double> acc(nfreq, 0.0);
  std::vector<std::complex<double>> buf(nfft);
  size_t segments = 0;
  for (size_t start = 0; start + segment_length <= x.size(); start += hop) {
    for (size_t i = 0; i < segment_length; ++i)
      buf[i] = {(x[start + i] - mean) * window[i], 0.0};
    for (size_t i = segment_length; i < nfft; ++i) buf[i] = {0.0, 0.0};
    fft_inplace(buf);
    const double scale = 1.0 / (sample_rate * u);
    for (size_t k = 0; k < nfreq; ++k) {
      double p = std::norm(buf[k]) * scale;
      if (k != 0 && k != nfft / 2) p *= 2.0;  // one-sided
      acc[k] += p;
    }
    ++segments;
  }
  for (double& v : acc) v /= static_cast<double>(segments);

  PsdEstimate out;
  out.freqs.resize(nfreq);
  for (size_t k = 0; k < nfreq; ++k)
    out.freqs[k] = static_cast<double>(k) * sample_rate /
                   static_cast<double>(nfft);
  out.psd = std::move(acc);

  size_t kp = 1;
  for (size_t k = 1; k + 1 < nfreq; ++k)
    if (out.psd[k] > out.psd[kp]) kp = k;
  out.peak_freq = out.freqs[kp];

  // Half-max width guess, then a Lorentzian fit over +/-10 guesses.
  const double half = 0.5 * out.psd[kp];
  size_t kl = kp, kr = kp;
  while (kl > 1 && out.psd[kl] > half) --kl;
  while (kr + 1 < nfreq && out.psd[kr] > half) ++kr;
  const double w_guess =
      std::max(out.freqs[kr] - out.freqs[kl], out.freqs[1] - out.freqs[0]);
  const double f_lo = out.freqs[kp] - 10.0 * w_guess;
  const double f_hi = out.freqs[kp] + 10.0 * w_guess;
  std::vector<double> ff, ss;
  for (size_t k = 1; k < nfreq; ++k) {
    if (out.freqs[k] >= f_lo && out.freqs[k] <= f_hi) {
      ff.push_back(out.freqs[k]);
      ss.push_back(out.psd[k]);
    }
  }
  double fwhm = 0.0;
  if (!ff.empty() &&
      fit_lorentzian(ff, ss, out.psd[kp], out.freqs[kp], w_guess,
                     *std::min_element(ss.begin(), ss.end()), &fwhm))
    out.linewidth = fwhm;
  return out;
}

ThresholdResult detect_threshold(const std::vector<SweepPoint>& sweep) {
  const size_t n = sweep.size();
  if (n < 8)
    throw std::invalid_argument(
        "detect_threshold: need at least 8 sweep points spanning both "
        "regimes");
  for (size_t i = 1; i < n; ++i)
    if (!(sweep[i].depth > sweep[i - 1].depth))
      throw std::invalid_argument(
          "detect_threshold: depths must be strictly increasing");

  std::vector<double> d(n), m(n);
  for (size_t i = 0; i < n; ++i) {
    d[i] = sweep[i].depth;
    m[i] = sweep[i].mean_n;
  }

  auto seg_fit = [&](size_t lo, size_t hi, double* slope, double* icpt) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(hi - lo);
    for (size_t i = lo; i < hi; ++i) {
      sx += d[i];
      sy += m[i];
      sxx += d[i] * d[i];
      sxy += d[i] * m[i];
    }
    const double den = cnt * sxx - sx * sx;
    *slope = (cnt * sxy - sx * sy) / den;
    *icpt = (sy - *slope * sx) / cnt;
    double ss = 0;
    for (size_t i = lo; i < hi; ++i) {
      const double r = m[i] - (*slope * d[i] + *icpt);
      ss += r * r;
    }
    return ss;
  };

  double best_ss = std::numeric_limits<double>::infinity();
  double lo_s = 0, lo_b = 0, hi_s = 0, hi_b = 0;
  for (size_t split = 2; split + 2 <= n; ++split) {
    double s1, b1, s2, b2;
    const double ss = seg_fit(0, split, &s1, &b1) + seg_fit(split, n, &s2, &b2);
    if (ss < best_ss) {
      best_ss = ss;
      lo_s = s1;
      lo_b = b1;
      hi_s = s2;
      hi_b = b2;
    }
  }

  double one_s, one_b;
  const double ss_one = seg_fit(0, n, &one_s, &one_b);
  if (!(hi_s > lo_s) || !(best_ss < 0.5 * ss_one))
    throw std::runtime_error(
        "detect_threshold: no knee found (single-regime sweep); "
        "two-segment residual " +
        std::to_string(best_ss) + " vs single-line " + std::to_string(ss_one));

  ThresholdResult out;
  out.threshold_depth = (lo_b - hi_b) / (hi_s - lo_s);
  if (!(out.threshold_depth > d.front() && out.threshold_depth < d.back()))
    throw std::runtime_error(
        "detect_threshold: fitted knee lies outside the sweep range");

  // g2 = 1.5 crossing, interpolated.
  out.g2_crossing_depth = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 1; i < n; ++i) {
    if (sweep[i - 1].g2_zero > 1.5 && sweep[i].g2_zero <= 1.5) {
      const double f = (sweep[i - 1].g2_zero - 1.5) /
                       (sweep[i - 1].g2_zero - sweep[i].g2_zero);
      out.g2_crossing_depth = d[i - 1] + f * (d[i] - d[i - 1]);
      break;
    }
  }
  if (std::isfinite(out.g2_crossing_depth)) {
    // Consistent when the crossing is within two grid points of the knee.
    auto grid_pos = [&](double depth) {
      size_t i = 0;
      while (i + 1 < n && d[i + 1] < depth) ++i;
      return static_cast<double>(i) +
             (depth - d[i]) / (d[i + 1] - d[i]);
    };
    out.g2_consistent =
        std::abs(grid_pos(out.g2_crossing_depth) -
                 grid_pos(out.threshold_depth)) <= 2.0;
  }
  return out;
}

}  // namespace phonolase
