#include <doctest.h>

#include <cmath>
#include <vector>

#include "phonolase/dynamics.hpp"
#include "phonolase/rng.hpp"
#include "test_util.hpp"

using namespace phonolase;

namespace {

TrapConfig unit_trap() {
  TrapConfig t;
  t.mass = 1.0;
  t.omega0 = 1.0;
  t.gamma = 0.0;
  t.temperature = 0.0;
  t.hbar_eff = 1.0;
  t.u_max = 1.0;
  return t;
}

double energy(const OscillatorState& s, const TrapConfig& t) {
  return 0.5 * t.mass * s.v * s.v +
         0.5 * t.mass * t.omega0 * t.omega0 * s.x * s.x;
}

}  // namespace

TEST_CASE("undamped oscillator returns to start after one period") {
  const TrapConfig trap = unit_trap();
  OscillatorState s{1.0, 0.0, 0.0};
  const double dt = 1e-3;
  const double e0 = energy(s, trap);
  const auto steps = static_cast<long>(std::round(kTwoPi / dt));
  double max_drift = 0.0;
  for (long k = 0; k < steps; ++k) {
    s = step_oscillator(s, trap, 0.0, dt, 0.0);
    max_drift = std::max(max_drift, std::abs(energy(s, trap) / e0 - 1.0));
  }
  CHECK(s.x == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(max_drift <= 1e-3);
}

TEST_CASE("damped oscillator follows the exp(-gamma t/2) envelope") {
  TrapConfig trap = unit_trap();
  trap.gamma = 0.01;
  OscillatorState s{1.0, 0.0, 0.0};
  const double dt = 5e-3;
  // Quadrature amplitude tracks the envelope up to O(gamma/omega0) ripple.
  while (trap.gamma * s.t < 5.0) {
    s = step_oscillator(s, trap, 0.0, dt, 0.0);
    const double envelope = std::sqrt(s.x * s.x + s.v * s.v / (trap.omega0 *
                                                               trap.omega0));
    const double expected = std::exp(-0.5 * trap.gamma * s.t);
    CHECK(envelope == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("thermal run satisfies equipartition") {
  // Independent long-run statistical oracle: time-averaged total energy
  // against kB*T.
  TrapConfig trap;
  trap.mass = 1e-18;
  trap.omega0 = kTwoPi * 1e5;
  trap.gamma = 0.02 * trap.omega0;
  trap.temperature = 300.0;
  const double dt = 0.045 / trap.omega0;
  const double duration = 2000.0 / trap.gamma;

  GaussianRng rng(12345);
  OscillatorState s;
  double e_sum = 0.0;
  long count = 0;
  const auto steps = static_cast<long>(duration / dt);
  for (long k = 0; k < steps; ++k) {
    s = step_oscillator(s, trap, 0.0, dt, rng.normal());
    e_sum += energy(s, trap);
    ++count;
  }
  const double e_mean = e_sum / count;
  CHECK(e_mean == doctest::Approx(kBoltzmann * 300.0).epsilon(0.05));
}

TEST_CASE("thermal mean phonon number matches kB T/(hbar omega)") {
  TrapConfig trap;
  trap.mass = 3.8877e-18;
  trap.omega0 = kTwoPi * 125e3;
  trap.gamma = kTwoPi * 2000.0;  // faster bath for statistics
  trap.temperature = 300.0;
  const double expected = kBoltzmann * 300.0 / (kHbar * trap.omega0);
  CHECK(expected == doctest::Approx(5.0e7).epsilon(0.01));

  const double dt = 0.045 / trap.omega0;
  GaussianRng rng(777);
  OscillatorState s;
  double n_sum = 0.0;
  const auto steps = static_cast<long>(1500.0 / trap.gamma / dt);
  for (long k = 0; k < steps; ++k) {
    s = step_oscillator(s, trap, 0.0, dt, rng.normal());
    n_sum += phonon_number(s, trap);
  }
  CHECK(n_sum / steps == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("phonon number conversion") {
  TrapConfig trap = unit_trap();
  SUBCASE("zero state clamps to zero") {
    CHECK(phonon_number({0.0, 0.0, 0.0}, trap) == 0.0);
  }
  SUBCASE("inverse of the defining formula") {
    trap.mass = 3.8877e-18;
    trap.omega0 = kTwoPi * 125e3;
    trap.hbar_eff = kHbar;
    OscillatorState s;
    s.x = amplitude_for_phonon(100.0, trap);
    CHECK(phonon_number(s, trap) == doctest::Approx(100.0).epsilon(1e-11));
  }
  SUBCASE("zero-point offset never yields negative n") {
    trap.hbar_eff = 10.0;  // huge quantum, tiny energy
    OscillatorState s{1e-6, 0.0, 0.0};
    CHECK(phonon_number(s, trap) >= 0.0);
  }
}

TEST_CASE("sphere mass from diameter") {
  // 2200 * (pi/6) * (150e-9)^3, evaluated independently: 3.8877e-18 kg.
  CHECK(default_mass_from_diameter(150e-9, 2200.0) ==
        doctest::Approx(3.8877e-18).epsilon(1e-4));
  CHECK_THROWS_AS(default_mass_from_diameter(0.0, 2200.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(default_mass_from_diameter(150e-9, -1.0),
                  std::invalid_argument);
  const double m1 = default_mass_from_diameter(1e-7, 2200.0);
  const double m2 = default_mass_from_diameter(2e-7, 2200.0);
  CHECK(m2 == doctest::Approx(8.0 * m1).epsilon(1e-12));
}

TEST_CASE("parameter and state validation") {
  TrapConfig trap = unit_trap();
  SUBCASE("overdamped rejected") {
    trap.gamma = 2.0;
    CHECK_THROWS_AS(trap.validate(), std::invalid_argument);
  }
  SUBCASE("stability bound enforced by name") {
    OscillatorState s{1.0, 0.0, 0.0};
    try {
      step_oscillator(s, trap, 0.0, 0.06, 0.0);
      FAIL("expected a stability-bound error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("omega0*dt") != std::string::npos);
    }
  }
  SUBCASE("non-finite state rejected") {
    OscillatorState s{std::nan(""), 0.0, 0.0};
    CHECK_THROWS_AS(step_oscillator(s, trap, 0.0, 1e-3, 0.0),
                    std::invalid_argument);
  }
  SUBCASE("dt must be positive") {
    OscillatorState s{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(step_oscillator(s, trap, 0.0, 0.0, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("trajectories are bit-deterministic in the seed") {
  TrapConfig trap = unit_trap();
  trap.gamma = 0.01;
  trap.temperature = 1e-21 / kBoltzmann;  // kB T = 1e-21 J in unit system
  auto run = [&](std::uint64_t seed) {
    GaussianRng rng(seed);
    OscillatorState s{1.0, 0.0, 0.0};
    std::vector<double> xs;
    for (int k = 0; k < 20000; ++k) {
      s = step_oscillator(s, trap, 0.0, 1e-2, rng.normal());
      xs.push_back(s.x);
    }
    return xs;
  };
  const auto a = run(42), b = run(42), c = run(43);
  CHECK(a == b);  // bit-identical
  CHECK(a != c);
}

TEST_CASE("zero-crossing period tracks omega0") {
  for (double f : {0.5, 1.0, 2.0}) {
    TrapConfig trap = unit_trap();
    trap.omega0 = kTwoPi * f;
    OscillatorState s{1.0, 0.0, 0.0};
    const double dt = 0.04 / trap.omega0;
    int crossings = 0;
    double first = 0.0, last = 0.0;
    double prev_x = s.x;
    while (crossings < 41) {
      s = step_oscillator(s, trap, 0.0, dt, 0.0);
      if (prev_x > 0.0 && s.x <= 0.0) {
        if (crossings == 0) first = s.t;
        last = s.t;
        ++crossings;
      }
      prev_x = s.x;
    }
    const double period = (last - first) / 40.0;
    CHECK(period == doctest::Approx(kTwoPi / trap.omega0).epsilon(2e-3));
  }
}

TEST_CASE("free decay is monotone at period resolution") {
  TrapConfig trap = unit_trap();
  trap.gamma = 0.01;
  OscillatorState s{1.0, 0.0, 0.0};
  const double dt = 1e-2;
  const auto per_period = static_cast<long>(std::round(kTwoPi / dt));
  const double e0 = energy(s, trap);
  double prev_e = e0;
  for (int period = 0; period < 50; ++period) {
    for (long k = 0; k < per_period; ++k)
      s = step_oscillator(s, trap, 0.0, dt, 0.0);
    const double e = energy(s, trap);
    CHECK(e < prev_e * (1.0 + 1e-9));
    prev_e = e;
  }
  // Decay rate matches gamma.
  CHECK(prev_e ==
        doctest::Approx(e0 * std::exp(-trap.gamma * s.t)).epsilon(0.02));
}
