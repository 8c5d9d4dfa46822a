#pragma once

#include <optional>

#include "iout/ocean_env.hpp"
#include "iout/vec2.hpp"

namespace iout {

struct PriorityParams {
  double xi = 0.005;       // distance penalty, 1/m
  double epsilon = 1e-6;   // guards the zero-capacity division
  double c_max_bits = 2.0e6;
  double n_max_bps = 1.0e6;
};

struct VoiParams {
  double beta = 0.7;   // importance/timeliness split, [0,1]
  double sigma = 10.0; // decay scale, s
};

struct RewardWeights {
  double w_ec = -0.001;  // energy, enters negatively
  double w_voi = 1.0;
  double w_dr = 2e-6;    // per bit
  double w_dp = 1.0;
  double w_cs = -5.0;    // collision proximity, enters negatively
  double d_r = 20.0;     // proximity-reward range, m
  double o = 0.1;        // guards the zero-distance division
  double d_s = 5.0;      // crash distance for the r_cs shaping
};

struct ObjectiveWeights {
  double data = 0.5;      // on collected data, Mbit
  double capacity = 0.5;  // on hover-event channel capacity, Mbit/s
  double voi = 0.5;
  double energy = 0.5;    // on energy, kJ, subtracted
};

struct RewardParts {
  double total = 0.0;
  double r_ec = 0.0;   // J this step (unweighted)
  double r_voi = 0.0;
  double r_dr = 0.0;   // bits this step
  double r_dp = 0.0;
  double r_cs = 0.0;
};

// Per-AUV episode aggregates feeding the scalar objective.
struct EpisodeTotals {
  double data_mbit = 0.0;
  double capacity_mbit_s = 0.0;  // summed over hover events
  double voi = 0.0;
  double energy_kj = 0.0;
};

// Occupancy view over the world's target/occupancy fields: chi(j,i) = 1 iff
// AUV j has claimed node i. Claims are stored on the states themselves, so
// the one-AUV-per-node and one-node-per-AUV constraints hold by
// construction; consistent() verifies both directions.
struct AssignmentMatrix {
  const WorldState* world;
  bool chi(int auv, int node) const;
  int column_sum(int node) const;
  int row_count(int auv) const;
  bool consistent() const;
};

// Data-urgency priority of a needing node as seen from auv_pos. Capacity is
// normalized to the [0,1] fraction of n_max so the ratio is dimensionless.
double node_priority(const NodeState& node, Vec2 auv_pos,
                     const PriorityParams& params);

// Claims the best unoccupied needing node for the AUV (ties to the lowest
// index); releases any previous claim. Returns nullopt when nothing is
// available (idle signal).
std::optional<int> select_target(WorldState& world, int auv_index,
                                 const PriorityParams& params);

// Releases the AUV's claim, if any.
void release_target(WorldState& world, int auv_index);

// VoI of a node at time t: zero before collection starts, then
// beta*V + (1-beta)*V*exp(-(t-T_h)/sigma).
double voi(const NodeState& node, double t, const VoiParams& params);

// VoI after one collection (t_c) plus travel (t_m), Eq. identity with
// voi() evaluated at T_h + t_c + t_m.
double voi_update(const NodeState& node, double t_c, double t_m,
                  const VoiParams& params);

// Remaining collection time K/N; throws on zero capacity.
double collection_time(const NodeState& node);

// Per-step reward for one AUV from the last step_world events.
RewardParts step_reward(const WorldState& world, int auv_index,
                        const RewardWeights& weights, const VoiParams& voi_p);

// Episode scalar objective from accumulated per-AUV totals.
double episode_objective(std::span<const EpisodeTotals> totals,
                         const ObjectiveWeights& weights);

}  // namespace iout
