#include <doctest.h>

#include <cmath>
#include <vector>

#include "phonolase/analysis.hpp"
#include "phonolase/engine.hpp"
#include "phonolase/rng.hpp"
#include "test_util.hpp"

using namespace phonolase;

namespace {

// Desk-scale test loop: 125 kHz trap, fast bath (Q = 62.5), hbar_eff scaled
// so the thermal occupation is 1e4.
EngineConfig test_config(std::uint64_t seed) {
  EngineConfig cfg;
  cfg.trap.mass = 3.8877e-18;
  cfg.trap.omega0 = kTwoPi * 125e3;
  cfg.trap.gamma = kTwoPi * 2000.0;
  cfg.trap.temperature = 300.0;
  cfg.trap.hbar_eff =
      kBoltzmann * 300.0 / (1e4 * cfg.trap.omega0);
  cfg.trap.u_max = 0.5;
  cfg.detector.sensitivity = 1e-12;
  cfg.detector.sample_rate = 128.0 * 125e3;
  cfg.dt = 1.0 / cfg.detector.sample_rate;
  cfg.nonlinear.bp_center = 125e3;
  cfg.nonlinear.bp_q = 10.0;
  cfg.linear.pll_center = 125e3;
  cfg.linear.pll_bandwidth = 2500.0;
  cfg.seed = seed;
  cfg.warmup = 10.0 / cfg.trap.gamma;
  cfg.duration = cfg.warmup + 0.3;
  cfg.record_stride = 256;
  return cfg;
}

double mean_n(const TrajectoryRecord& rec) {
  return testutil::mean(rec.n);
}

constexpr double kNth = 1e4;

// Phase calibrations for the test loop, computed once per binary run.
double cooling_phase() {
  static const double value = [] {
    EngineConfig cfg = test_config(301);
    cfg.nonlinear.gain =
        2.0 * (0.2 * cfg.trap.gamma / kNth) / cfg.trap.omega0;
    cfg.warmup = 10.0 / cfg.trap.gamma;
    cfg.duration = cfg.warmup + 60.0 / cfg.trap.gamma;
    cfg.record_stride = 64;
    return calibrate_branch_phase(cfg, "nonlinear", false);
  }();
  return value;
}

double amplifying_phase() {
  static const double value = [] {
    EngineConfig cfg = test_config(302);
    cfg.linear.depth = 0.014;  // below threshold, bounded response
    cfg.warmup = 10.0 / cfg.trap.gamma;
    cfg.duration = cfg.warmup + 60.0 / cfg.trap.gamma;
    cfg.record_stride = 64;
    return calibrate_branch_phase(cfg, "linear", true);
  }();
  return value;
}

}  // namespace

TEST_CASE("closed loop is bit-deterministic in (config, seed)") {
  EngineConfig cfg = test_config(5);
  cfg.duration = cfg.warmup + 0.01;
  cfg.linear.depth = 0.01;
  cfg.linear.phase_shift = 1.0;
  cfg.nonlinear.gain = 1e-7;
  const auto a = run_closed_loop(cfg);
  const auto b = run_closed_loop(cfg);
  CHECK(a.times == b.times);
  CHECK(a.x == b.x);
  CHECK(a.n == b.n);
  CHECK(a.u_nl == b.u_nl);
  CHECK(a.u_lin == b.u_lin);
  CHECK(a.pll_freq == b.pll_freq);
  cfg.seed = 6;
  const auto c = run_closed_loop(cfg);
  CHECK(a.x != c.x);
}

TEST_CASE("record layout: equal lengths, strictly increasing stride") {
  EngineConfig cfg = test_config(8);
  cfg.duration = cfg.warmup + 0.005;
  const auto rec = run_closed_loop(cfg);
  REQUIRE(rec.size() > 10);
  CHECK(rec.x.size() == rec.size());
  CHECK(rec.n.size() == rec.size());
  CHECK(rec.u_nl.size() == rec.size());
  CHECK(rec.u_lin.size() == rec.size());
  CHECK(rec.pll_freq.size() == rec.size());
  CHECK(rec.pll_locked.size() == rec.size());
  const double stride = cfg.dt * cfg.record_stride;
  for (size_t i = 1; i < rec.size(); ++i) {
    CHECK(rec.times[i] > rec.times[i - 1]);
    CHECK(rec.times[i] - rec.times[i - 1] ==
          doctest::Approx(stride).epsilon(1e-9));
  }
  CHECK(rec.times.front() >= cfg.warmup);
}

TEST_CASE("zero feedback reproduces the open-loop thermal state") {
  EngineConfig cfg = test_config(11);
  cfg.duration = cfg.warmup + 0.8;
  const auto rec = run_closed_loop(cfg);

  // Open-loop oracle: the bare Langevin equation, separate seed stream.
  GaussianRng rng(1101);
  OscillatorState s;
  double sum = 0.0;
  long count = 0;
  const auto steps = static_cast<long>(cfg.duration / cfg.dt);
  for (long k = 0; k < steps; ++k) {
    s = step_oscillator(s, cfg.trap, 0.0, cfg.dt, rng.normal());
    if (s.t >= cfg.warmup) {
      sum += phonon_number(s, cfg.trap);
      ++count;
    }
  }
  const double open_loop_mean = sum / count;
  CHECK(mean_n(rec) == doctest::Approx(open_loop_mean).epsilon(0.03));
  CHECK(open_loop_mean == doctest::Approx(kNth).epsilon(0.05));
}

TEST_CASE("calibrated cooling branch pulls the mean below thermal") {
  EngineConfig cfg = test_config(13);
  cfg.nonlinear.phase_shift = cooling_phase();
  cfg.nonlinear.gain = 2.0 * (3.0 * cfg.trap.gamma / kNth) / cfg.trap.omega0;
  cfg.duration = cfg.warmup + 0.3;
  const double cooled = mean_n(run_closed_loop(cfg));
  CHECK(cooled < 0.55 * kNth);

  // Anti-phase heats instead.
  EngineConfig hot = cfg;
  hot.nonlinear.gain = 2.0 * (0.2 * hot.trap.gamma / kNth) / hot.trap.omega0;
  hot.nonlinear.phase_shift =
      dsp::wrap_two_pi(cooling_phase() + kPi);
  const double heated = mean_n(run_closed_loop(hot));
  CHECK(heated > kNth);
}

TEST_CASE("blow-up guard aborts runaway gain with a diagnostic") {
  EngineConfig cfg = test_config(17);
  cfg.linear.depth = 0.3;
  cfg.linear.phase_shift = amplifying_phase();
  cfg.duration = cfg.warmup + 0.5;
  try {
    run_closed_loop(cfg);
    FAIL("expected BlowupError");
  } catch (const BlowupError& e) {
    CHECK(e.last_stable_time > 0.0);
    CHECK(std::string(e.what()).find("last stable") != std::string::npos);
  }
}

TEST_CASE("saturation keeps the stiffness positive: |u| <= u_max") {
  EngineConfig cfg = test_config(19);
  cfg.trap.u_max = 0.4;
  cfg.nonlinear.gain = 1e-4;  // absurdly hot branch, clamped by the limiter
  cfg.nonlinear.phase_shift = dsp::wrap_two_pi(cooling_phase() + kPi);
  cfg.duration = cfg.warmup + 0.02;
  bool blew_up = false;
  TrajectoryRecord rec;
  try {
    rec = run_closed_loop(cfg);
  } catch (const BlowupError&) {
    blew_up = true;  // allowed: guard fires, but never NaN
  }
  for (size_t i = 0; i < rec.size(); ++i) {
    CHECK(std::isfinite(rec.x[i]));
    CHECK(std::abs(rec.u_nl[i] + rec.u_lin[i]) <=
          cfg.trap.u_max + 1.0);  // branch outputs are pre-limit
  }
  (void)blew_up;
}

TEST_CASE("config validation failures") {
  EngineConfig cfg = test_config(1);
  SUBCASE("dt must match the sample rate") {
    cfg.dt *= 2.0;
    CHECK_THROWS_AS(run_closed_loop(cfg), std::invalid_argument);
  }
  SUBCASE("PLL must start near the trap frequency") {
    cfg.linear.pll_center = 125e3 * 1.5;
    CHECK_THROWS_AS(run_closed_loop(cfg), std::invalid_argument);
  }
  SUBCASE("warmup must precede the end of the run") {
    cfg.warmup = cfg.duration + 1.0;
    CHECK_THROWS_AS(run_closed_loop(cfg), std::invalid_argument);
  }
}

TEST_CASE("calibrate_linear_rate: zero depth recovers zero net gain") {
  EngineConfig cfg = test_config(23);
  cfg.duration = 1.0;  // fit-window cap
  const double g = calibrate_linear_rate(cfg, 0.0);
  CHECK(std::abs(g) <= 0.05 * cfg.trap.gamma);
}

TEST_CASE("calibrate_linear_rate: gain is linear in depth") {
  EngineConfig cfg = test_config(29);
  cfg.linear.phase_shift = amplifying_phase();
  cfg.duration = 1.0;
  const double g1 = calibrate_linear_rate(cfg, 0.04);
  const double g2 = calibrate_linear_rate(cfg, 0.08);
  CHECK(g1 > 0.0);
  CHECK(g2 > g1);
  CHECK(g2 / g1 == doctest::Approx(2.0).epsilon(0.20));
  // Nominal parametric rate depth*omega0/2, within the phase-grid margin.
  CHECK(g1 == doctest::Approx(0.04 * cfg.trap.omega0 / 2.0).epsilon(0.25));
}

TEST_CASE("phase scans: amplifying and de-amplifying are pi apart") {
  EngineConfig cfg = test_config(31);
  cfg.linear.depth = 0.014;
  cfg.warmup = 10.0 / cfg.trap.gamma;
  cfg.duration = cfg.warmup + 60.0 / cfg.trap.gamma;
  cfg.record_stride = 64;
  const double up = calibrate_branch_phase(cfg, "linear", true);
  const double down = calibrate_branch_phase(cfg, "linear", false);
  const double sep = std::abs(std::remainder(up - down, kTwoPi));
  CHECK(sep == doctest::Approx(kPi).epsilon(kTwoPi / 16.0 / kPi * 1.01));
}

TEST_CASE("phase scan is reproducible across seeds") {
  EngineConfig a = test_config(37), b = test_config(38);
  for (EngineConfig* cfg : {&a, &b}) {
    cfg->linear.depth = 0.014;
    cfg->warmup = 10.0 / cfg->trap.gamma;
    cfg->duration = cfg->warmup + 60.0 / cfg->trap.gamma;
    cfg->record_stride = 64;
  }
  const double pa = calibrate_branch_phase(a, "linear", true);
  const double pb = calibrate_branch_phase(b, "linear", true);
  const double step = kTwoPi / 16.0;
  CHECK(std::abs(std::remainder(pa - pb, kTwoPi)) <= step * 1.01);
}

TEST_CASE("zero-gain branch fails the flat-response gate") {
  EngineConfig cfg = test_config(41);
  cfg.duration = cfg.warmup + 30.0 / cfg.trap.gamma;
  cfg.record_stride = 64;
  CHECK_THROWS_AS(calibrate_branch_phase(cfg, "nonlinear", false),
                  std::runtime_error);
}

TEST_CASE("mean n is monotone in pump depth and cooling moves the knee") {
  // Two coarse 8-point sweeps with saturation gains 4x apart. Checks the
  // monotone-ordering invariant and that stronger cooling shifts the
  // detected knee to higher depth.
  auto sweep_knee = [&](double eta_factor, std::uint64_t seed,
                        std::vector<double>* means) {
    const std::vector<double> depths = {0.006, 0.013, 0.020, 0.027,
                                        0.044, 0.058, 0.072, 0.086};
    std::vector<SweepPoint> pts;
    EngineConfig base = test_config(seed);
    base.nonlinear.phase_shift = cooling_phase();
    base.nonlinear.gain =
        2.0 * (eta_factor * base.trap.gamma / kNth) / base.trap.omega0;
    base.linear.phase_shift = amplifying_phase();
    base.duration = base.warmup + 0.35;
    for (size_t i = 0; i < depths.size(); ++i) {
      EngineConfig cfg = base;
      cfg.linear.depth = depths[i];
      cfg.seed = split_seed(seed, i);
      const auto rec = run_closed_loop(cfg);
      const auto dist = phonon_histogram(rec, 50);
      pts.push_back({depths[i], dist.mean, dist.g2_zero});
      means->push_back(dist.mean);
    }
    return detect_threshold(pts).threshold_depth;
  };

  std::vector<double> means_soft, means_hard;
  const double knee_soft = sweep_knee(0.05, 51, &means_soft);
  const double knee_hard = sweep_knee(0.20, 52, &means_hard);

  for (size_t i = 1; i < means_soft.size(); ++i)
    CHECK(means_soft[i] > means_soft[i - 1] * 0.97);
  CHECK(knee_hard > knee_soft);
}
