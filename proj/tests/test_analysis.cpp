#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "phonolase/analysis.hpp"
#include "phonolase/dynamics.hpp"
#include "phonolase/oracle.hpp"
#include "phonolase/rng.hpp"
#include "test_util.hpp"

using namespace phonolase;

TEST_CASE("phonon histogram: thermal statistics anchor") {
  const auto samples = testutil::exponential_samples(20000, 1000.0, 11);
  const auto d = phonon_histogram(samples, 60);
  CHECK(d.g2_zero == doctest::Approx(2.0).epsilon(0.025));
  CHECK(d.variance / (d.mean * d.mean) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(d.sample_count == 20000);
  double psum = 0.0;
  for (double p : d.probabilities) psum += p;
  CHECK(psum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("phonon histogram: delta distribution") {
  std::vector<double> samples(500, 500.0);
  const auto d = phonon_histogram(samples, 10);
  CHECK(d.mean == 500.0);
  CHECK(d.variance == doctest::Approx(0.0));
  // <n(n-1)>/<n>^2 = 499*500/500^2
  CHECK(d.g2_zero == doctest::Approx(0.998).epsilon(1e-9));
}

TEST_CASE("phonon histogram: moments come from raw samples") {
  const auto samples = testutil::exponential_samples(5000, 3.7, 2);
  const auto d = phonon_histogram(samples, 7);  // deliberately coarse bins
  CHECK(d.mean == doctest::Approx(testutil::mean(samples)).epsilon(1e-12));
  CHECK(d.variance ==
        doctest::Approx(testutil::variance(samples)).epsilon(1e-12));
}

TEST_CASE("phonon histogram rejects tiny sample sets") {
  std::vector<double> few(99, 1.0);
  CHECK_THROWS_AS(phonon_histogram(few, 10), std::invalid_argument);
}

TEST_CASE("histogram of samples from the far-above-threshold closed form") {
  // Truncated Gaussian with mode/width = 31.6: sample it directly (the
  // truncation is numerically irrelevant) and compare the empirical CDF
  // with the oracle's stationary density.
  oracle::RateParams p;
  p.gain = 2.0;
  p.loss = 1.0;
  p.sat = 1e-3;
  p.diffusion = 1.0;
  const auto d = oracle::steady_state_distribution(p, oracle::suggest_n_max(p));

  std::mt19937_64 eng(21);
  std::normal_distribution<double> gauss(1000.0, std::sqrt(1000.0));
  std::vector<double> samples;
  samples.reserve(10000);
  while (samples.size() < 10000) {
    const double v = gauss(eng);
    if (v >= 0.0) samples.push_back(v);
  }
  std::vector<double> cum(d.probabilities.size() + 1, 0.0);
  for (size_t i = 0; i < d.probabilities.size(); ++i)
    cum[i + 1] = cum[i] + d.probabilities[i];
  const double w = d.bin_edges[1] - d.bin_edges[0];
  auto cdf = [&](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= d.bin_edges.back()) return 1.0;
    const double pos = x / w;
    const auto i = static_cast<size_t>(pos);
    return cum[i] + (pos - static_cast<double>(i)) * d.probabilities[i];
  };
  CHECK(testutil::ks_distance(samples, cdf) < 0.03);
}

TEST_CASE("lock-in convention and off-frequency rejection") {
  const double fs = 4.0e6, f_ref = 125e3, tau = 1e-4;
  auto tone = [&](double amp, double phase, double f, size_t n) {
    std::vector<double> x(n);
    for (size_t k = 0; k < n; ++k)
      x[k] = amp * std::cos(kTwoPi * f * static_cast<double>(k) / fs + phase);
    return x;
  };
  const auto n = static_cast<size_t>(20.0 * tau * fs);

  SUBCASE("in-phase tone lands on I") {
    const auto iq = lock_in(tone(3e-9, 0.0, f_ref, n), f_ref, tau, fs);
    CHECK(iq.i.back() == doctest::Approx(3e-9).epsilon(0.01));
    CHECK(std::abs(iq.q.back()) < 0.01 * 3e-9);
  }
  SUBCASE("quadrature tone lands on Q") {
    const auto iq = lock_in(tone(3e-9, kPi / 2, f_ref, n), f_ref, tau, fs);
    CHECK(iq.q.back() == doctest::Approx(3e-9).epsilon(0.01));
    CHECK(std::abs(iq.i.back()) < 0.01 * 3e-9);
  }
  SUBCASE("detuned tone attenuated >= 30 dB") {
    const double f_off = f_ref + 100.0 / tau;
    const auto iq = lock_in(tone(3e-9, 0.0, f_off, 4 * n), f_ref, tau, fs);
    const double mag =
        std::hypot(iq.i.back(), iq.q.back());
    CHECK(mag < 3e-9 * 0.0316);
  }
  SUBCASE("global input phase rotates (I,Q) and preserves magnitude") {
    const double phi = 1.234;
    const auto a = lock_in(tone(2e-9, 0.2, f_ref, n), f_ref, tau, fs);
    const auto b = lock_in(tone(2e-9, 0.2 + phi, f_ref, n), f_ref, tau, fs);
    const double ma = std::hypot(a.i.back(), a.q.back());
    const double mb = std::hypot(b.i.back(), b.q.back());
    CHECK(ma == doctest::Approx(mb).epsilon(1e-3));
    const double ang =
        std::atan2(b.q.back(), b.i.back()) - std::atan2(a.q.back(), a.i.back());
    CHECK(std::remainder(ang - phi, kTwoPi) == doctest::Approx(0.0).epsilon(1e-2));
  }
}

TEST_CASE("radial statistics separate thermal disks from annuli") {
  GaussianRng rng(3);
  SUBCASE("isotropic Gaussian scores ~1") {
    IQSeries iq;
    for (int k = 0; k < 5000; ++k) {
      iq.times.push_back(k);
      iq.i.push_back(rng.normal());
      iq.q.push_back(rng.normal());
    }
    const auto rs = radial_statistics(iq);
    CHECK(rs.annulus_score == doctest::Approx(1.0).epsilon(0.10));
  }
  SUBCASE("fixed radius with random phase scores ~0") {
    IQSeries iq;
    for (int k = 0; k < 5000; ++k) {
      const double phi = kTwoPi * rng.uniform();
      iq.times.push_back(k);
      iq.i.push_back(4.0 * std::cos(phi));
      iq.q.push_back(4.0 * std::sin(phi));
    }
    const auto rs = radial_statistics(iq);
    CHECK(rs.annulus_score <= 0.02);
    CHECK(rs.peak_radius == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("score is rotation and scale invariant") {
    IQSeries iq, iq2;
    for (int k = 0; k < 3000; ++k) {
      const double i = rng.normal(), q = rng.normal();
      iq.times.push_back(k);
      iq.i.push_back(i);
      iq.q.push_back(q);
      const double c = std::cos(0.7), s = std::sin(0.7);
      iq2.times.push_back(k);
      iq2.i.push_back(13.0 * (c * i - s * q));
      iq2.q.push_back(13.0 * (s * i + c * q));
    }
    const auto a = radial_statistics(iq);
    const auto b = radial_statistics(iq2);
    CHECK(a.annulus_score == doctest::Approx(b.annulus_score).epsilon(1e-9));
  }
  SUBCASE("degenerate all-zero series is rejected") {
    IQSeries iq;
    iq.times.assign(2000, 0.0);
    iq.i.assign(2000, 0.0);
    iq.q.assign(2000, 0.0);
    CHECK_THROWS_AS(radial_statistics(iq), std::invalid_argument);
  }
}

TEST_CASE("welch psd: tone location and Parseval") {
  const double fs = 2.0e6;
  const size_t n = 1 << 19;
  std::vector<double> x(n);
  for (size_t k = 0; k < n; ++k)
    x[k] = 1e-9 * std::cos(kTwoPi * 125e3 * static_cast<double>(k) / fs);
  const auto psd = welch_psd(x, fs, 1 << 14);
  CHECK(psd.peak_freq ==
        doctest::Approx(125e3).epsilon(fs / (1 << 14) / 125e3 * 1.5));
  double integral = 0.0;
  const double df = psd.freqs[1] - psd.freqs[0];
  for (double p : psd.psd) integral += p * df;
  CHECK(integral == doctest::Approx(0.5e-18).epsilon(0.03));
}

TEST_CASE("welch psd: white noise level") {
  const double fs = 2.0e6;
  GaussianRng rng(17);
  const size_t n = 1 << 20;
  std::vector<double> x(n);
  const double sigma = 2.5e-10;
  for (auto& v : x) v = sigma * rng.normal();
  const auto psd = welch_psd(x, fs, 1 << 12);
  // One-sided density 2 sigma^2 / fs, checked as a band average.
  const double expected = 2.0 * sigma * sigma / fs;
  double acc = 0.0;
  size_t cnt = 0;
  for (size_t k = 1; k + 1 < psd.freqs.size(); ++k) {
    acc += psd.psd[k];
    ++cnt;
  }
  CHECK(acc / static_cast<double>(cnt) ==
        doctest::Approx(expected).epsilon(0.10));
  double integral = 0.0;
  const double df = psd.freqs[1] - psd.freqs[0];
  for (double p : psd.psd) integral += p * df;
  CHECK(integral ==
        doctest::Approx(testutil::variance(x)).epsilon(0.03));
}

TEST_CASE("welch psd: free thermal oscillator linewidth is gamma/2pi") {
  TrapConfig trap;
  trap.mass = 3.8877e-18;
  trap.omega0 = kTwoPi * 125e3;
  trap.gamma = kTwoPi * 2000.0;
  trap.temperature = 300.0;
  const double fs = 16e6;
  const double dt = 1.0 / fs;
  const int stride = 8;
  GaussianRng rng(23);
  OscillatorState s;
  std::vector<double> x;
  const auto steps = static_cast<long>(0.09 * fs);
  x.reserve(steps / stride + 1);
  for (long k = 0; k < steps; ++k) {
    s = step_oscillator(s, trap, 0.0, dt, rng.normal());
    if (k % stride == 0) x.push_back(s.x);
  }
  const auto psd = welch_psd(x, fs / stride, 1 << 15);
  REQUIRE(psd.linewidth.has_value());
  CHECK(*psd.linewidth == doctest::Approx(2000.0).epsilon(0.20));
  CHECK(psd.peak_freq == doctest::Approx(125e3).epsilon(0.01));
}

TEST_CASE("welch psd rejects short series") {
  std::vector<double> x(100, 0.0);
  CHECK_THROWS_AS(welch_psd(x, 1e6, 64), std::invalid_argument);
}

TEST_CASE("threshold detection on a constructed knee") {
  std::vector<SweepPoint> sweep;
  for (int i = 0; i < 10; ++i) {
    const double depth = 0.002 * (i + 1);
    const double mean = depth < 0.01 ? 100.0 : 100.0 + 5e4 * (depth - 0.01);
    const double g2 = depth < 0.01 ? 2.0 : 1.05;
    sweep.push_back({depth, mean, g2});
  }
  const auto th = detect_threshold(sweep);
  CHECK(th.threshold_depth == doctest::Approx(0.01).epsilon(0.1));
  CHECK(std::abs(th.threshold_depth - 0.01) <= 0.001);  // half grid spacing
  CHECK(th.g2_consistent);
}

TEST_CASE("threshold detection on an oracle-generated sweep") {
  // G = c * depth; knee expected at depth = Gamma / c.
  const double c = 400.0, gamma = 1.0, eta = 1e-3, diff = 10.0;
  std::vector<SweepPoint> sweep;
  for (int i = 1; i <= 12; ++i) {
    const double depth = 5e-4 * i;
    oracle::RateParams p;
    p.gain = c * depth;
    p.loss = gamma;
    p.sat = eta;
    p.diffusion = diff;
    const auto d =
        oracle::steady_state_distribution(p, oracle::suggest_n_max(p));
    sweep.push_back({depth, d.mean, d.g2_zero});
  }
  const auto th = detect_threshold(sweep);
  CHECK(th.threshold_depth == doctest::Approx(gamma / c).epsilon(0.10));
  CHECK(th.g2_consistent);
}

TEST_CASE("stronger cooling moves the detected threshold upward") {
  auto sweep_for = [](double eta) {
    std::vector<SweepPoint> sweep;
    for (int i = 1; i <= 12; ++i) {
      const double depth = 5e-4 * i;
      oracle::RateParams p;
      p.gain = 400.0 * depth;
      p.loss = 1.0;
      p.sat = eta;
      p.diffusion = 10.0;
      const auto d =
          oracle::steady_state_distribution(p, oracle::suggest_n_max(p));
      sweep.push_back({depth, d.mean, d.g2_zero});
    }
    return detect_threshold(sweep).threshold_depth;
  };
  CHECK(sweep_for(4e-3) > sweep_for(1e-3));
}

TEST_CASE("threshold detection errors") {
  SUBCASE("too few points") {
    std::vector<SweepPoint> sweep(5, {0.0, 0.0, 0.0});
    for (int i = 0; i < 5; ++i) sweep[i].depth = i + 1.0;
    CHECK_THROWS_AS(detect_threshold(sweep), std::invalid_argument);
  }
  SUBCASE("single-regime sweep") {
    std::vector<SweepPoint> sweep;
    for (int i = 0; i < 10; ++i)
      sweep.push_back({0.01 * (i + 1), 50.0 + i, 2.0});
    CHECK_THROWS_AS(detect_threshold(sweep), std::runtime_error);
  }
}
