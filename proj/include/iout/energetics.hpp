#pragma once

namespace iout {

struct EnergyConfig {
  double hover_power_w = 5.0;
  double dt = 1.0;
  double v_max = 2.0;
};

// Empirical thrust from propulsion power: F_T(P) = -0.0021 P^2 + 0.6342 P
// + 2.8372 (P in W, F_T in N).
double thrust_from_power(double power_w);

// Propeller efficiency from sailing speed, valid on [0, v_max].
double efficiency_from_speed(double v, double v_max = 2.0);

// Power needed to sail at speed v, from F_T(P) = eta(v) P / v. Positive root
// of the resulting quadratic; the other root is negative on (0, v_max].
double power_from_speed(double v, double v_max = 2.0);

// Energy for one step: hover power when hovering or stationary, otherwise
// propulsion power at commanded speed.
double step_energy(double v, bool hovering, const EnergyConfig& cfg);

}  // namespace iout
