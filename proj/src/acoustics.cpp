#include "iout/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iout {

void AcousticConfig::validate() const {
  if (!(center_frequency_khz > 0.0))
    throw std::domain_error("acoustics: center_frequency_khz must be > 0");
  if (!(shipping_activity > 0.0 && shipping_activity < 1.0))
    throw std::domain_error("acoustics: shipping_activity must be in (0,1)");
  if (!(wind_speed_mps >= 0.0))
    throw std::domain_error("acoustics: wind_speed_mps must be >= 0");
  if (!(bandwidth_hz > 0.0))
    throw std::domain_error("acoustics: bandwidth_hz must be > 0");
  if (!(capacity_clamp_bps >= 0.0))
    throw std::domain_error("acoustics: capacity_clamp_bps must be >= 0");
}

double thorp_absorption(double f_khz) {
  if (!(f_khz > 0.0))
    throw std::domain_error("thorp_absorption: frequency must be > 0");
  const double f2 = f_khz * f_khz;
  return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) +
         2.75e-4 * f2 + 0.003;
}

double transmission_loss(double d_m, double f_khz) {
  if (!(d_m > 0.0))
    throw std::domain_error("transmission_loss: distance must be > 0");
  return 20.0 * std::log10(d_m) + d_m * thorp_absorption(f_khz) / 1000.0;
}

NoiseBreakdown noise_psd(double f_khz, double s, double w) {
  if (!(f_khz > 0.0))
    throw std::domain_error("noise_psd: frequency must be > 0");
  if (!(s > 0.0 && s < 1.0))
    throw std::domain_error("noise_psd: shipping activity must be in (0,1)");
  if (!(w >= 0.0))
    throw std::domain_error("noise_psd: wind speed must be >= 0");

  const double logf = std::log10(f_khz);
  NoiseBreakdown n;
  n.turbulence_db = 17.0 - 30.0 * logf;
  // Shipping term as printed in the source relation: a bare base-10 log of
  // f^26/(f+0.03)^60, not the usual Wenz 26logf - 60log(f+0.03) scaled form.
  n.shipping_db =
      30.0 + 20.0 * s + (26.0 * logf - 60.0 * std::log10(f_khz + 0.03));
  n.wind_db = 50.0 + 7.5 * std::sqrt(w) +
              20.0 * (logf - 2.0 * std::log10(f_khz + 0.4));
  n.thermal_db = -15.0 + 20.0 * logf;

  const double lin = std::pow(10.0, n.turbulence_db / 10.0) +
                     std::pow(10.0, n.shipping_db / 10.0) +
                     std::pow(10.0, n.wind_db / 10.0) +
                     std::pow(10.0, n.thermal_db / 10.0);
  n.total_db = 10.0 * std::log10(lin);
  return n;
}

double noise_level_db(const AcousticConfig& cfg) {
  const NoiseBreakdown n =
      noise_psd(cfg.center_frequency_khz, cfg.shipping_activity,
                cfg.wind_speed_mps);
  return n.total_db + 10.0 * std::log10(cfg.bandwidth_hz);
}

double echo_excess(double d_m, const AcousticConfig& cfg) {
  const double nl = noise_level_db(cfg);
  return cfg.source_level_db + cfg.target_strength_db +
         cfg.directivity_index_db - nl - cfg.detection_threshold_db -
         2.0 * transmission_loss(d_m, cfg.center_frequency_khz);
}

double detection_range(const AcousticConfig& cfg) {
  if (echo_excess(1.0, cfg) <= 0.0)
    throw std::runtime_error(
        "detection_range: echo excess nonpositive at 1 m, no range exists");

  double lo = 1.0;
  double hi = 2.0;
  while (echo_excess(hi, cfg) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1.0e9)
      throw std::runtime_error("detection_range: no zero crossing found");
  }
  // TL is strictly increasing in d, so the root is unique.
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    if (echo_excess(mid, cfg) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double channel_capacity(double d_m, const AcousticConfig& cfg) {
  const double snr_db = cfg.source_level_db -
                        transmission_loss(d_m, cfg.center_frequency_khz) -
                        noise_level_db(cfg);
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double cap = cfg.bandwidth_hz * std::log2(1.0 + snr);
  return std::clamp(cap, 0.0, cfg.capacity_clamp_bps);
}

}  // namespace iout
