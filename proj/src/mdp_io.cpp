#include "iout/mdp_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iout/acoustics.hpp"
#include "iout/energetics.hpp"

namespace iout {

ObsSpec make_obs_spec(const TrainConfig& cfg) {
  ObsSpec spec;
  spec.node_slots = cfg.mdp.node_slots;
  spec.num_auvs = cfg.world.num_auvs;
  spec.field_size = cfg.world.field_size;
  spec.v_max = cfg.world.v_max;
  spec.c_max_bits = cfg.world.c_max_bits;
  spec.n_max_bps = cfg.acoustics.capacity_clamp_bps;
  spec.energy_budget_j =
      power_from_speed(cfg.world.v_max, cfg.world.v_max) *
      cfg.world.episode_duration;
  if (cfg.mdp.comm_range_auv > 0.0) {
    spec.comm_range_auv = cfg.mdp.comm_range_auv;
  } else {
    double r;
    try {
      r = detection_range(cfg.acoustics);
    } catch (const std::exception&) {
      r = cfg.world.field_diagonal();  // no sonar margin: gate always open
    }
    spec.comm_range_auv = std::min(r, cfg.world.field_diagonal());
  }
  return spec;
}

void build_observation(const WorldState& world, int auv_index,
                       const ObsSpec& spec, std::span<double> out) {
  const auto dim = static_cast<std::size_t>(spec.dim());
  std::fill(out.begin(), out.begin() + dim, 0.0);
  const AuvState& me = world.auvs[auv_index];
  const double S = spec.field_size;
  const double diag = S * std::sqrt(2.0);
  std::size_t k = 0;

  // Own state
  out[k++] = me.position.x / S;
  out[k++] = me.position.y / S;
  out[k++] = std::cos(me.heading);
  out[k++] = std::sin(me.heading);
  out[k++] = me.speed_cmd / spec.v_max;
  out[k++] = me.energy_spent / spec.energy_budget_j;

  // K nearest needing nodes, nearest first; unused slots remain zero.
  std::vector<std::pair<double, int>> needing;
  for (std::size_t i = 0; i < world.nodes.size(); ++i) {
    if (!world.nodes[i].needs_collection) continue;
    needing.emplace_back(distance(me.position, world.nodes[i].position),
                         static_cast<int>(i));
  }
  std::sort(needing.begin(), needing.end());
  const int slots = std::min<int>(spec.node_slots,
                                  static_cast<int>(needing.size()));
  for (int s = 0; s < slots; ++s) {
    const NodeState& n = world.nodes[needing[s].second];
    const std::size_t base = 6 + 7 * static_cast<std::size_t>(s);
    out[base + 0] = (n.position.x - me.position.x) / S;
    out[base + 1] = (n.position.y - me.position.y) / S;
    out[base + 2] = needing[s].first / diag;
    out[base + 3] = n.stored_data / spec.c_max_bits;
    out[base + 4] = n.channel_capacity / spec.n_max_bps;
    out[base + 5] = n.occupied_by ? 1.0 : 0.0;
    out[base + 6] =
        (me.target_node && *me.target_node == needing[s].second) ? 1.0 : 0.0;
  }

  // Other AUVs in index order, each block scaled by the communication gate
  // e_j^k (zero when out of range, so the block vanishes).
  std::size_t slot = 0;
  for (std::size_t j = 0; j < world.auvs.size(); ++j) {
    if (static_cast<int>(j) == auv_index) continue;
    const AuvState& other = world.auvs[j];
    const double gate =
        distance(me.position, other.position) <= spec.comm_range_auv ? 1.0
                                                                     : 0.0;
    const std::size_t base =
        6 + 7 * static_cast<std::size_t>(spec.node_slots) + 6 * slot;
    out[base + 0] = gate * (other.position.x - me.position.x) / S;
    out[base + 1] = gate * (other.position.y - me.position.y) / S;
    out[base + 2] = gate * std::cos(other.heading);
    out[base + 3] = gate * std::sin(other.heading);
    out[base + 4] = gate * other.speed_cmd / spec.v_max;
    out[base + 5] = gate * (other.hovering ? 1.0 : 0.0);
    ++slot;
  }

  // Nearest vortex: relative position, local flow, local vorticity.
  if (!world.vortices.empty()) {
    const Vortex* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const Vortex& v : world.vortices) {
      const double d = distance(me.position, v.center);
      if (d < best) {
        best = d;
        nearest = &v;
      }
    }
    const std::size_t base = dim - 5;
    out[base + 0] = (nearest->center.x - me.position.x) / S;
    out[base + 1] = (nearest->center.y - me.position.y) / S;
    const Vec2 flow = flow_velocity(world.vortices, me.position);
    out[base + 2] = flow.x;
    out[base + 3] = flow.y;
    out[base + 4] = vorticity(*nearest, me.position);
  }
}

std::vector<double> build_observation(const WorldState& world, int auv_index,
                                      const ObsSpec& spec) {
  std::vector<double> out(spec.dim());
  build_observation(world, auv_index, spec, out);
  return out;
}

AgentAction decode_action(std::span<const double> policy_output,
                          WorldState& world, int auv_index,
                          const WorldConfig& wcfg,
                          const PriorityParams& params) {
  AgentAction a;
  if (policy_output.size() >= kActionDim &&
      std::isfinite(policy_output[0]) && std::isfinite(policy_output[1])) {
    a.accel = std::tanh(policy_output[0]) * wcfg.accel_max;
    a.ang_vel = std::tanh(policy_output[1]) * wcfg.ang_vel_max;
  } else {
    a.nonfinite_input = true;
  }

  AuvState& me = world.auvs[auv_index];
  const bool target_valid =
      me.target_node && world.nodes[*me.target_node].needs_collection &&
      world.nodes[*me.target_node].occupied_by &&
      *world.nodes[*me.target_node].occupied_by == auv_index;
  if (!target_valid) {
    a.target = select_target(world, auv_index, params);
  } else {
    a.target = me.target_node;
  }
  return a;
}

}  // namespace iout
