#pragma once

#include <optional>
#include <vector>

#include "phonolase/engine.hpp"

namespace phonolase {

/// Normalized phonon-number histogram with moments taken from the raw
/// samples (never from binned values).
struct PhononDistribution {
  std::vector<double> bin_edges;      // size bins+1
  std::vector<double> probabilities;  // size bins, sums to 1
  double mean = 0.0;
  double variance = 0.0;
  double g2_zero = 0.0;  // <n(n-1)> / <n>^2
  long sample_count = 0;
};

struct IQSeries {
  std::vector<double> times;
  std::vector<double> i;
  std::vector<double> q;
};

struct PsdEstimate {
  std::vector<double> freqs;  // Hz, strictly increasing
  std::vector<double> psd;    // one-sided, m^2/Hz
  std::optional<double> linewidth;  // Lorentzian FWHM, Hz
  double peak_freq = 0.0;
};

struct RadialStats {
  double peak_radius = 0.0;    // mode of the kernel-smoothed radial density
  double annulus_score = 0.0;  // Var(r^2)/mean(r^2)^2: thermal 1, annulus << 1
};

struct SweepPoint {
  double depth = 0.0;
  double mean_n = 0.0;
  double g2_zero = 0.0;
};

struct ThresholdResult {
  double threshold_depth = 0.0;   // knee of the two-segment fit
  double g2_crossing_depth = 0.0; // where g2 crosses 1.5 (NaN if it never does)
  bool g2_consistent = false;     // crossing within +/-2 grid points of knee
};

PhononDistribution phonon_histogram(const std::vector<double>& n_samples,
                                    int bins);
PhononDistribution phonon_histogram(const TrajectoryRecord& record, int bins);

/// Digital lock-in: multiply by 2cos/-2sin at f_ref and low-pass each with a
/// one-pole of time constant tau. Input A cos(2 pi f_ref t + phi) settles to
/// (I, Q) = (A cos phi, A sin phi).
IQSeries lock_in(const std::vector<double>& x, double f_ref, double tau,
                 double sample_rate, double t0 = 0.0);

RadialStats radial_statistics(const IQSeries& iq);

/// Welch PSD: Hann window, 50% overlap, one-sided density; integrated PSD
/// equals the signal variance to within a few percent (Parseval). Linewidth
/// is the FWHM of a least-squares Lorentzian fit around the peak, absent if
/// the fit has r2 < 0.9.
PsdEstimate welch_psd(const std::vector<double>& x, double sample_rate,
                      size_t segment_length);

/// Knee of a pump sweep: intersection of two-segment line fits to mean n vs
/// depth, with the g2 = 1.5 crossing as a consistency check.
ThresholdResult detect_threshold(const std::vector<SweepPoint>& sweep);

}  // namespace phonolase
