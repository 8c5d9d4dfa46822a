#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "iout/energetics.hpp"
#include "iout/rng.hpp"
#include "oracles.hpp"

using namespace iout;

TEST_CASE("thrust from power") {
  CHECK(thrust_from_power(0.0) == doctest::Approx(2.8372));
  CHECK(thrust_from_power(100.0) == doctest::Approx(45.2572).epsilon(1e-12));
  CHECK_THROWS_AS(thrust_from_power(-1.0), std::domain_error);
}

TEST_CASE("efficiency from speed") {
  CHECK(efficiency_from_speed(0.0) == doctest::Approx(0.541));
  CHECK(efficiency_from_speed(1.0) == doctest::Approx(0.665).epsilon(1e-12));
  CHECK(efficiency_from_speed(2.0) == doctest::Approx(0.733).epsilon(1e-12));
  CHECK_THROWS_AS(efficiency_from_speed(-0.1), std::domain_error);
  CHECK_THROWS_AS(efficiency_from_speed(2.1), std::domain_error);
}

TEST_CASE("power from speed vs quadratic-root oracle") {
  CHECK(power_from_speed(2.0) ==
        doctest::Approx(oracles::quadratic_root_oracle(2.0)).epsilon(1e-12));
  CHECK(power_from_speed(2.0) == doctest::Approx(137.315).epsilon(1e-5));
  CHECK(power_from_speed(1.0) ==
        doctest::Approx(oracles::quadratic_root_oracle(1.0)).epsilon(1e-12));

  // cross-check with thrust_from_power: F_T(P) = eta(v) P / v
  const double p2 = power_from_speed(2.0);
  CHECK(thrust_from_power(p2) ==
        doctest::Approx(efficiency_from_speed(2.0) * p2 / 2.0).epsilon(1e-3));

  // residual identity |F_T(P) v / P - eta(v)| <= 1e-9 on random speeds
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(0.01, 2.0);
    const double p = power_from_speed(v);
    CHECK(std::abs(thrust_from_power(p) * v / p -
                   efficiency_from_speed(v)) <= 1e-9);
  }

  // strictly increasing on (0.1, 2]
  double prev = power_from_speed(0.1);
  for (int i = 1; i <= 100; ++i) {
    const double v = 0.1 + 1.9 * i / 100.0;
    const double cur = power_from_speed(v);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(power_from_speed(0.0), std::domain_error);
}

TEST_CASE("step energy") {
  EnergyConfig cfg;
  cfg.hover_power_w = 5.0;
  cfg.dt = 1.0;
  CHECK(step_energy(0.0, false, cfg) == doctest::Approx(5.0));
  CHECK(step_energy(1.7, true, cfg) == doctest::Approx(5.0));
  CHECK(step_energy(2.0, false, cfg) ==
        doctest::Approx(137.315).epsilon(1e-5));
  cfg.dt = 2.0;
  CHECK(step_energy(2.0, false, cfg) ==
        doctest::Approx(2.0 * 137.31521398861523).epsilon(1e-9));
  CHECK_THROWS_AS(step_energy(2.5, false, cfg), std::domain_error);
}
