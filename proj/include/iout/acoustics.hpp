#pragma once

namespace iout {

// Acoustic link parameters. Sound levels are dB re 1 uPa conventions; the
// absolute reference cancels in the sonar-equation margins we compute.
struct AcousticConfig {
  double center_frequency_khz = 20.0;
  double source_level_db = 135.0;
  double target_strength_db = 10.0;
  double directivity_index_db = 10.0;
  double detection_threshold_db = 10.0;
  double shipping_activity = 0.5;  // in (0,1)
  double wind_speed_mps = 0.0;
  double bandwidth_hz = 10000.0;
  double capacity_clamp_bps = 1.0e6;  // N_max

  void validate() const;  // throws std::domain_error on bad fields
};

struct NoiseBreakdown {
  double turbulence_db = 0.0;
  double shipping_db = 0.0;
  double wind_db = 0.0;
  double thermal_db = 0.0;
  double total_db = 0.0;  // dB of the linear-power sum of the four
};

// Seawater absorption coefficient, dB/km, f in kHz (Thorp).
double thorp_absorption(double f_khz);

// Spherical spreading plus absorption, dB, d in metres.
double transmission_loss(double d_m, double f_khz);

// Ambient noise PSD components at f_khz, shipping activity s in (0,1),
// wind speed w in m/s. All values dB re reference PSD.
NoiseBreakdown noise_psd(double f_khz, double s, double w);

// Band-integrated noise level: total PSD at the centre frequency plus
// 10*log10(bandwidth) (flat-PSD band approximation).
double noise_level_db(const AcousticConfig& cfg);

// Active-sonar echo excess, dB. Detection when nonnegative.
double echo_excess(double d_m, const AcousticConfig& cfg);

// Unique range where echo_excess crosses zero, by bisection to 0.01 m.
// Throws std::runtime_error when the budget is nonpositive at 1 m.
double detection_range(const AcousticConfig& cfg);

// Shannon capacity of the one-way link at range d_m, bits/s, clamped to
// [0, capacity_clamp_bps].
double channel_capacity(double d_m, const AcousticConfig& cfg);

}  // namespace iout
