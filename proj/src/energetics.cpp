#include "iout/energetics.hpp"

#include <cmath>
#include <stdexcept>

namespace iout {

double thrust_from_power(double power_w) {
  if (!(power_w >= 0.0))
    throw std::domain_error("thrust_from_power: power must be >= 0");
  return -0.0021 * power_w * power_w + 0.6342 * power_w + 2.8372;
}

double efficiency_from_speed(double v, double v_max) {
  if (!(v >= 0.0 && v <= v_max))
    throw std::domain_error("efficiency_from_speed: speed out of [0, v_max]");
  return -0.081 * v * v * v + 0.215 * v * v - 0.01 * v + 0.541;
}

double power_from_speed(double v, double v_max) {
  if (!(v > 0.0 && v <= v_max))
    throw std::domain_error("power_from_speed: speed out of (0, v_max]");
  // F_T(P) = eta(v) P / v  =>  a P^2 + b P + c = 0 with
  //   a = -0.0021, b = 0.6342 - eta(v)/v, c = 2.8372.
  const double a = -0.0021;
  const double b = 0.6342 - efficiency_from_speed(v, v_max) / v;
  const double c = 2.8372;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0)
    throw std::runtime_error("power_from_speed: no real root");
  const double sq = std::sqrt(disc);
  const double r1 = (-b + sq) / (2.0 * a);
  const double r2 = (-b - sq) / (2.0 * a);
  const double p = std::max(r1, r2);
  if (!(p > 0.0))
    throw std::runtime_error("power_from_speed: no positive root");
  return p;
}

double step_energy(double v, bool hovering, const EnergyConfig& cfg) {
  if (!(v >= 0.0 && v <= cfg.v_max))
    throw std::domain_error("step_energy: speed out of [0, v_max]");
  if (hovering || v == 0.0) return cfg.hover_power_w * cfg.dt;
  return power_from_speed(v, cfg.v_max) * cfg.dt;
}

}  // namespace iout
