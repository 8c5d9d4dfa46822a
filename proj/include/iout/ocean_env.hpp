#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "iout/acoustics.hpp"
#include "iout/energetics.hpp"
#include "iout/rng.hpp"
#include "iout/vec2.hpp"

namespace iout {

// Lamb-Oseen vortex.
struct Vortex {
  Vec2 center;
  double radius_delta = 48.0;    // m
  double intensity_gamma = 8.0;  // m^2/s
};

struct AuvState {
  Vec2 position;
  double heading = 0.0;    // rad, wrapped to (-pi, pi]
  double speed_cmd = 0.0;  // commanded speed through water, [0, v_max]
  double energy_spent = 0.0;  // J, nondecreasing
  std::optional<int> target_node;
  bool hovering = false;
};

struct NodeState {
  Vec2 position;
  double stored_data = 0.0;       // bits, [0, c_max]
  double channel_capacity = 0.0;  // bits/s to the nearest AUV, [0, n_max]
  double initial_voi = 1.0;
  std::optional<double> collection_start_time;  // T_h, set at first drain
  bool needs_collection = false;
  std::optional<int> occupied_by;  // claiming AUV, at most one
};

// Environment geometry, kinematics and node-dynamics parameters.
struct WorldConfig {
  double field_size = 120.0;  // square field [0,S]^2, m
  int num_devices = 55;
  int num_auvs = 2;
  double water_depth = -50.0;     // node depth, m
  double sailing_depth = -10.0;   // AUV depth, m
  double comm_distance = 6.0;     // L, horizontal hover/drain range, m
  double v_max = 2.0;             // m/s
  double accel_max = 0.5;         // m/s^2
  double ang_vel_max = M_PI / 4.0;  // rad/s
  double dt = 1.0;                // s
  double episode_duration = 1000.0;  // T, s
  double crash_distance = 5.0;    // d_s, m
  double c_max_bits = 2.0e6;
  double arrival_rate_bps = 1000.0;
  double needing_fraction = 0.4;
  double initial_voi = 1.0;
  bool turbulence = true;
  int num_vortices = 2;
  double vortex_gamma = 8.0;
  double vortex_delta = 48.0;

  int episode_steps() const {
    return static_cast<int>(std::llround(episode_duration / dt));
  }
  // Vertical offset between sailing depth and node depth; the acoustic link
  // length is the slant range over this offset.
  double depth_offset() const { return std::abs(sailing_depth - water_depth); }
  double slant_range(double horizontal_m) const {
    return std::hypot(horizontal_m, depth_offset());
  }
  double field_diagonal() const { return field_size * std::sqrt(2.0); }
};

// Per-step per-AUV bookkeeping used by rewards and metrics, cleared at the
// start of every step.
struct StepEvents {
  double energy_j = 0.0;
  double bits_collected = 0.0;
  std::vector<int> completed_nodes;         // drained to zero this step
  std::vector<double> hover_start_capacity; // bits/s at each new hover event
  bool action_clamped = false;
};

struct WorldState {
  double time = 0.0;
  std::vector<AuvState> auvs;
  std::vector<NodeState> nodes;
  std::vector<Vortex> vortices;
  Rng rng;
  std::vector<StepEvents> step_events;           // one per AUV
  std::vector<std::pair<int, int>> crash_pairs;  // pairs below d_s this step
};

// Physical control after decoding: bounded acceleration and angular rate.
struct ControlInput {
  double accel = 0.0;    // m/s^2
  double ang_vel = 0.0;  // rad/s
};

// Superposed Lamb-Oseen flow at p. Each vortex contributes
//   V = (Gamma / (2 pi r^2)) (1 - e^{-r^2/delta^2}) * (-(y-y0), x-x0),
// a tangential field; the contribution at the core is zero.
Vec2 flow_velocity(std::span<const Vortex> vortices, Vec2 p);

// Gamma/(pi delta^2) e^{-r^2/delta^2}.
double vorticity(const Vortex& v, Vec2 p);

// Ground velocity of a vehicle commanding v_cmd through the water at p.
Vec2 relative_velocity(Vec2 v_cmd, Vec2 p, std::span<const Vortex> vortices);

// One explicit-Euler step; out-of-bound actions are clamped and flagged.
// Position is clamped to the field box.
AuvState step_kinematics(const AuvState& auv, ControlInput action, double dt,
                         std::span<const Vortex> vortices,
                         const WorldConfig& cfg, bool* clamped = nullptr);

// All unordered AUV pairs closer than d_s.
std::vector<std::pair<int, int>> detect_collisions(
    std::span<const AuvState> auvs, double d_s);

// Node data dynamics for one step: needing nodes accrue, hovered nodes
// drain at the link capacity, drained nodes release their occupancy. Also
// refreshes every node's channel capacity against the nearest AUV.
void step_nodes(WorldState& world, const WorldConfig& cfg,
                const AcousticConfig& acfg);

// Full world step: hover resolution, kinematics and energy accrual for the
// given controls, node dynamics, collision detection. Fills step_events and
// crash_pairs and advances time by dt.
void step_world(WorldState& world, std::span<const ControlInput> controls,
                const WorldConfig& cfg, const AcousticConfig& acfg,
                const EnergyConfig& ecfg);

// Fresh episode world: seeded node/AUV/vortex placement.
WorldState make_world(const WorldConfig& cfg, const AcousticConfig& acfg,
                      std::uint64_t seed);

// True when no node needs collection any more (episode task complete).
bool all_drained(const WorldState& world);

}  // namespace iout
