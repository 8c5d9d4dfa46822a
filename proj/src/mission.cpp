#include "iout/mission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iout {

bool AssignmentMatrix::chi(int auv, int node) const {
  const auto& t = world->auvs[auv].target_node;
  return t && *t == node;
}

int AssignmentMatrix::column_sum(int node) const {
  int s = 0;
  for (std::size_t j = 0; j < world->auvs.size(); ++j)
    s += chi(static_cast<int>(j), node) ? 1 : 0;
  return s;
}

int AssignmentMatrix::row_count(int auv) const {
  return world->auvs[auv].target_node ? 1 : 0;
}

bool AssignmentMatrix::consistent() const {
  for (std::size_t i = 0; i < world->nodes.size(); ++i) {
    const int col = column_sum(static_cast<int>(i));
    if (col > 1) return false;
    const auto& owner = world->nodes[i].occupied_by;
    if (col == 1) {
      if (!owner || !chi(*owner, static_cast<int>(i))) return false;
    } else if (owner) {
      return false;
    }
  }
  return true;
}

double node_priority(const NodeState& node, Vec2 auv_pos,
                     const PriorityParams& params) {
  const double n_norm =
      std::clamp(node.channel_capacity / params.n_max_bps, 0.0, 1.0);
  const double ratio =
      node.stored_data / (params.c_max_bits * (n_norm + params.epsilon));
  return ratio - params.xi * distance(auv_pos, node.position);
}

std::optional<int> select_target(WorldState& world, int auv_index,
                                 const PriorityParams& params) {
  release_target(world, auv_index);
  const Vec2 pos = world.auvs[auv_index].position;
  std::optional<int> best;
  double best_p = 0.0;
  for (std::size_t i = 0; i < world.nodes.size(); ++i) {
    const NodeState& n = world.nodes[i];
    if (!n.needs_collection || n.occupied_by) continue;
    const double p = node_priority(n, pos, params);
    if (!best || p > best_p) {  // ties keep the lower index
      best = static_cast<int>(i);
      best_p = p;
    }
  }
  if (best) {
    world.auvs[auv_index].target_node = best;
    world.nodes[*best].occupied_by = auv_index;
  }
  return best;
}

void release_target(WorldState& world, int auv_index) {
  auto& target = world.auvs[auv_index].target_node;
  if (target) {
    auto& owner = world.nodes[*target].occupied_by;
    if (owner && *owner == auv_index) owner.reset();
    target.reset();
  }
  world.auvs[auv_index].hovering = false;
}

double voi(const NodeState& node, double t, const VoiParams& params) {
  if (!node.collection_start_time || t < *node.collection_start_time)
    return 0.0;
  const double decay =
      std::exp(-(t - *node.collection_start_time) / params.sigma);
  return params.beta * node.initial_voi +
         (1.0 - params.beta) * node.initial_voi * decay;
}

double voi_update(const NodeState& node, double t_c, double t_m,
                  const VoiParams& params) {
  const double decay = std::exp(-(t_c + t_m) / params.sigma);
  return params.beta * node.initial_voi +
         (1.0 - params.beta) * node.initial_voi * decay;
}

double collection_time(const NodeState& node) {
  if (!(node.channel_capacity > 0.0))
    throw std::runtime_error(
        "collection_time: zero channel capacity, collection never finishes");
  return node.stored_data / node.channel_capacity;
}

RewardParts step_reward(const WorldState& world, int auv_index,
                        const RewardWeights& weights, const VoiParams& voi_p) {
  const AuvState& auv = world.auvs[auv_index];
  const StepEvents& ev = world.step_events[auv_index];
  RewardParts r;

  r.r_ec = ev.energy_j;
  r.r_dr = ev.bits_collected;
  for (int node_idx : ev.completed_nodes)
    r.r_voi += voi(world.nodes[node_idx], world.time, voi_p);

  if (auv.target_node) {
    const double d =
        distance(auv.position, world.nodes[*auv.target_node].position);
    if (d <= weights.d_r) r.r_dp = 1.0 / (d + weights.o);
  }

  const int n = static_cast<int>(world.auvs.size());
  if (n > 1) {
    for (int k = 0; k < n; ++k) {
      if (k == auv_index) continue;
      const double d =
          distance(auv.position, world.auvs[k].position);
      r.r_cs += 1.0 - std::min(d, weights.d_s) / weights.d_s;
    }
    r.r_cs /= static_cast<double>(n - 1);
  }

  r.total = weights.w_ec * r.r_ec + weights.w_voi * r.r_voi +
            weights.w_dr * r.r_dr + weights.w_dp * r.r_dp +
            weights.w_cs * r.r_cs;
  return r;
}

double episode_objective(std::span<const EpisodeTotals> totals,
                         const ObjectiveWeights& weights) {
  double data = 0.0, cap = 0.0, v = 0.0, energy = 0.0;
  for (const EpisodeTotals& t : totals) {
    data += t.data_mbit;
    cap += t.capacity_mbit_s;
    v += t.voi;
    energy += t.energy_kj;
  }
  return weights.data * data + weights.capacity * cap + weights.voi * v -
         weights.energy * energy;
}

}  // namespace iout
