#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "iout/acoustics.hpp"
#include "iout/energetics.hpp"
#include "iout/mission.hpp"
#include "iout/ocean_env.hpp"

namespace iout {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Observation/action construction parameters (see mdp_io).
struct MdpConfig {
  int node_slots = 5;            // K nearest needing nodes in the observation
  double comm_range_auv = 0.0;   // peer-gating range; <= 0 resolves to the
                                 // sonar detection range, capped at the
                                 // field diagonal
};

struct TrainParams {
  double lr = 2e-4;
  double lr_alpha = 3e-4;
  double alpha_init = 0.01;
  double tau = 0.01;
  double gamma = 0.99;
  int epochs = 400;
  int batch_size = 256;
  int buffer_capacity = 80000;
  double target_entropy_h0 = 2.0;  // magnitude as tabulated
  double target_entropy_sign = -1.0;
  int updates_per_epoch = 5;  // offline gradient updates per epoch per agent
  int hidden1 = 64;
  int hidden2 = 64;

  double target_entropy() const {
    return target_entropy_sign * target_entropy_h0;
  }
};

// Online-phase plumbing (warmup and update cadence).
struct OnlineParams {
  int start_steps = 500;     // uniform-random warmup actions
  int update_after = 500;    // buffer size before updates begin
  int updates_per_step = 1;
  int eval_every = 10;       // epochs between deterministic eval rollouts
};

struct CqlParams {
  double alpha_cql = 1.0;
  int num_action_samples = 10;
};

// Full experiment configuration; defaults reproduce the reference setup.
struct TrainConfig {
  std::uint64_t seed = 0;
  WorldConfig world;
  AcousticConfig acoustics;
  double hover_power_w = 5.0;
  PriorityParams priority;
  VoiParams voi;
  RewardWeights reward;
  ObjectiveWeights objective;
  MdpConfig mdp;
  TrainParams train;
  OnlineParams online;
  CqlParams cql;

  EnergyConfig energy_config() const {
    return EnergyConfig{hover_power_w, world.dt, world.v_max};
  }
  // Keeps cross-section copies (c_max, n_max, d_s) coherent.
  void sync_derived();
  void validate() const;  // throws ConfigError
};

// Parses a flat sectioned key=value file over the defaults. Unknown
// sections or keys are hard errors.
TrainConfig parse_config_file(const std::string& path);
TrainConfig parse_config_text(const std::string& text);

// Canonical text form: fixed section/key order, round-trip precision.
std::string serialize_config(const TrainConfig& cfg);

// FNV-1a over the canonical serialization.
std::uint64_t config_fingerprint(const TrainConfig& cfg);

std::uint64_t fnv1a(const void* data, std::size_t len);

}  // namespace iout
