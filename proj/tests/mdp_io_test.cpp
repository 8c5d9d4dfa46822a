#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "iout/mdp_io.hpp"

using namespace iout;

namespace {

TrainConfig small_cfg(int num_auvs) {
  TrainConfig cfg;
  cfg.world.num_auvs = num_auvs;
  cfg.world.num_devices = 8;
  cfg.sync_derived();
  return cfg;
}

}  // namespace

TEST_CASE("observation dimension formula") {
  for (int n : {1, 2, 3}) {
    const TrainConfig cfg = small_cfg(n);
    const ObsSpec spec = make_obs_spec(cfg);
    CHECK(spec.dim() == 6 + 7 * spec.node_slots + 6 * (n - 1) + 5);
    WorldState w = make_world(cfg.world, cfg.acoustics, 3);
    const auto obs = build_observation(w, 0, spec);
    CHECK(static_cast<int>(obs.size()) == spec.dim());
    for (double v : obs) CHECK(std::isfinite(v));
  }
}

TEST_CASE("single-AUV world has zero peer blocks") {
  const TrainConfig cfg = small_cfg(1);
  const ObsSpec spec = make_obs_spec(cfg);
  CHECK(spec.dim() == 6 + 7 * spec.node_slots + 5);
}

TEST_CASE("padding slots are exactly zero") {
  TrainConfig cfg = small_cfg(1);
  const ObsSpec spec = make_obs_spec(cfg);
  WorldState w = make_world(cfg.world, cfg.acoustics, 3);
  for (NodeState& n : w.nodes) n.needs_collection = false;
  w.nodes[2].needs_collection = true;  // one needing node, K-1 padded slots
  const auto obs = build_observation(w, 0, spec);
  for (int s = 1; s < spec.node_slots; ++s)
    for (int k = 0; k < 7; ++k) CHECK(obs[6 + 7 * s + k] == 0.0);
}

TEST_CASE("peer gating by communication range") {
  TrainConfig cfg = small_cfg(2);
  cfg.mdp.comm_range_auv = 30.0;
  const ObsSpec spec = make_obs_spec(cfg);
  CHECK(spec.comm_range_auv == 30.0);

  WorldState w = make_world(cfg.world, cfg.acoustics, 3);
  w.auvs[0].position = {10.0, 10.0};
  w.auvs[1].position = {15.0, 10.0};
  w.auvs[1].speed_cmd = 1.0;

  const auto near = build_observation(w, 0, spec);
  const std::size_t base = 6 + 7 * spec.node_slots;
  bool any_nonzero = false;
  for (int k = 0; k < 6; ++k) any_nonzero |= near[base + k] != 0.0;
  CHECK(any_nonzero);

  // out of range: the whole block is zeroed
  w.auvs[1].position = {90.0, 90.0};
  const auto far = build_observation(w, 0, spec);
  for (int k = 0; k < 6; ++k) CHECK(far[base + k] == 0.0);

  // gate set to the field diagonal recovers a fully shared observation
  TrainConfig shared = cfg;
  shared.mdp.comm_range_auv = shared.world.field_diagonal();
  const ObsSpec shared_spec = make_obs_spec(shared);
  const auto shared_obs = build_observation(w, 0, shared_spec);
  any_nonzero = false;
  for (int k = 0; k < 6; ++k) any_nonzero |= shared_obs[base + k] != 0.0;
  CHECK(any_nonzero);

  // vanishing gate recovers fully independent execution
  TrainConfig indep = cfg;
  indep.mdp.comm_range_auv = 1e-9;
  const ObsSpec indep_spec = make_obs_spec(indep);
  w.auvs[1].position = {11.0, 10.0};
  const auto indep_obs = build_observation(w, 0, indep_spec);
  for (int k = 0; k < 6; ++k) CHECK(indep_obs[base + k] == 0.0);
}

TEST_CASE("auto comm range comes from the sonar detection range") {
  TrainConfig cfg = small_cfg(2);
  cfg.mdp.comm_range_auv = 0.0;
  const ObsSpec spec = make_obs_spec(cfg);
  CHECK(spec.comm_range_auv > 0.0);
  CHECK(spec.comm_range_auv <= cfg.world.field_diagonal());
}

TEST_CASE("observations are deterministic") {
  const TrainConfig cfg = small_cfg(2);
  const ObsSpec spec = make_obs_spec(cfg);
  WorldState w = make_world(cfg.world, cfg.acoustics, 11);
  const auto a = build_observation(w, 1, spec);
  const auto b = build_observation(w, 1, spec);
  CHECK(a == b);
}

TEST_CASE("decode_action") {
  TrainConfig cfg = small_cfg(1);
  const double raw0[] = {0.0, 0.0};
  WorldState w = make_world(cfg.world, cfg.acoustics, 3);
  for (NodeState& n : w.nodes) n.needs_collection = true;

  AgentAction a = decode_action(raw0, w, 0, cfg.world, cfg.priority);
  CHECK(a.accel == 0.0);
  CHECK(a.ang_vel == 0.0);
  CHECK(a.target.has_value());
  CHECK_FALSE(a.nonfinite_input);

  // saturation at the physical bounds
  const double big[] = {1e9, -1e9};
  a = decode_action(big, w, 0, cfg.world, cfg.priority);
  CHECK(a.accel == doctest::Approx(cfg.world.accel_max));
  CHECK(a.ang_vel == doctest::Approx(-cfg.world.ang_vel_max));

  // non-finite inputs decode to the zero action with the flag set
  const double bad[] = {std::nan(""), 0.0};
  a = decode_action(bad, w, 0, cfg.world, cfg.priority);
  CHECK(a.accel == 0.0);
  CHECK(a.ang_vel == 0.0);
  CHECK(a.nonfinite_input);

  // target persists while the node still needs collection
  const auto first = *w.auvs[0].target_node;
  a = decode_action(raw0, w, 0, cfg.world, cfg.priority);
  CHECK(*a.target == first);

  // drained target triggers reselection
  w.nodes[first].needs_collection = false;
  w.nodes[first].occupied_by.reset();
  a = decode_action(raw0, w, 0, cfg.world, cfg.priority);
  REQUIRE(a.target.has_value());
  CHECK(*a.target != first);
}
