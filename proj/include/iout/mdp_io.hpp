#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "iout/config.hpp"
#include "iout/mission.hpp"
#include "iout/ocean_env.hpp"

namespace iout {

// Bump when the observation layout changes; written into dataset headers so
// stale datasets are rejected at load.
inline constexpr std::uint32_t kObservationLayoutVersion = 1;

inline constexpr int kActionDim = 2;  // (accel, angular velocity)

struct AgentAction {
  double accel = 0.0;    // m/s^2, within [-accel_max, accel_max]
  double ang_vel = 0.0;  // rad/s, within [-ang_vel_max, ang_vel_max]
  std::optional<int> target;
  bool nonfinite_input = false;
};

// Resolved observation-builder parameters for a fixed config.
struct ObsSpec {
  int node_slots = 5;  // K
  int num_auvs = 2;
  double field_size = 120.0;
  double v_max = 2.0;
  double c_max_bits = 2e6;
  double n_max_bps = 1e6;
  double energy_budget_j = 1.0;  // normalizer for the energy fraction
  double comm_range_auv = 0.0;   // e_j^k gate distance

  // 6 own + 7 per node slot + 6 per other AUV + 5 vortex block
  int dim() const { return 6 + 7 * node_slots + 6 * (num_auvs - 1) + 5; }
};

// Resolves the spec from the config: energy budget = cruise power over a
// full episode, peer gate = sonar detection range capped at the field
// diagonal unless overridden.
ObsSpec make_obs_spec(const TrainConfig& cfg);

// Deterministic fixed-layout observation for one AUV. Peer blocks are
// gated by e_j^k in {0,1}: 1 within comm_range_auv, else the block is
// zeroed (SC-DTDE weighting).
std::vector<double> build_observation(const WorldState& world, int auv_index,
                                      const ObsSpec& spec);
void build_observation(const WorldState& world, int auv_index,
                       const ObsSpec& spec, std::span<double> out);

// Maps a raw 2-vector policy output through tanh to bounded controls and
// resolves the target: keep the current claim while its node still needs
// collection, otherwise re-select greedily (claiming occupancy). Non-finite
// outputs decode to the zero action with a diagnostic flag.
AgentAction decode_action(std::span<const double> policy_output,
                          WorldState& world, int auv_index,
                          const WorldConfig& wcfg,
                          const PriorityParams& params);

}  // namespace iout
