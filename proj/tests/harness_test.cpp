#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "iout/harness.hpp"

using namespace iout;
namespace fs = std::filesystem;

namespace {

TrainConfig desk_cfg() {
  TrainConfig cfg;
  cfg.world.episode_duration = 60.0;
  cfg.world.num_devices = 10;
  cfg.world.num_auvs = 2;
  cfg.sync_derived();
  return cfg;
}

std::string temp_path(const char* name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("zero policy, no turbulence: stationary AUVs on hover power") {
  TrainConfig cfg = desk_cfg();
  cfg.world.turbulence = false;
  cfg.world.comm_distance = 0.0;  // nothing in hover range, ever
  cfg.sync_derived();
  const ObsSpec spec = make_obs_spec(cfg);

  ZeroPolicy z0, z1;
  std::vector<ControlPolicy*> ptrs{&z0, &z1};
  Rng rng(1);
  EpisodeOptions opts;
  opts.world_seed = 42;
  const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);

  CHECK(res.metrics.sum_data_mbit == 0.0);
  // hover/stationary power for every step and AUV
  const double expect =
      cfg.hover_power_w * cfg.world.dt;
  CHECK(res.metrics.avg_energy == doctest::Approx(expect));
  // positions unchanged (no flow, zero commanded speed)
  const WorldState fresh = make_world(cfg.world, cfg.acoustics, 42);
  for (int j = 0; j < 2; ++j) {
    CHECK(res.final_world.auvs[j].position.x ==
          doctest::Approx(fresh.auvs[j].position.x));
    CHECK(res.final_world.auvs[j].position.y ==
          doctest::Approx(fresh.auvs[j].position.y));
  }
}

TEST_CASE("scripted pilot collects data") {
  TrainConfig cfg = desk_cfg();
  cfg.world.episode_duration = 400.0;
  cfg.sync_derived();
  const ObsSpec spec = make_obs_spec(cfg);

  ScriptedPilot p0(cfg.world), p1(cfg.world);
  std::vector<ControlPolicy*> ptrs{&p0, &p1};
  Rng rng(2);
  EpisodeOptions opts;
  opts.world_seed = 7;
  opts.record_trajectory = true;
  const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
  CHECK(res.metrics.sum_data_mbit > 0.0);
  CHECK(res.metrics.sum_voi > 0.0);
  CHECK_FALSE(res.trajectory.empty());
}

TEST_CASE("forced co-location counts crashes") {
  TrainConfig cfg = desk_cfg();
  cfg.world.episode_duration = 5.0;
  cfg.sync_derived();
  const ObsSpec spec = make_obs_spec(cfg);

  ZeroPolicy z0, z1;
  std::vector<ControlPolicy*> ptrs{&z0, &z1};
  Rng rng(3);
  EpisodeOptions opts;
  opts.world_seed = 5;
  // run once to learn the spawn, then pick a seed... instead, directly test
  // detect_collisions semantics through a seeded world with forced overlap:
  WorldState w = make_world(cfg.world, cfg.acoustics, 5);
  w.auvs[0].position = {50.0, 50.0};
  w.auvs[1].position = {51.0, 50.0};
  CHECK(detect_collisions(w.auvs, cfg.world.crash_distance).size() == 1);

  const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
  CHECK(res.metrics.crash_count >= 0.0);
}

TEST_CASE("episode ends early when all nodes drain") {
  TrainConfig cfg = desk_cfg();
  cfg.world.num_devices = 2;
  cfg.world.needing_fraction = 0.5;  // one needing node
  cfg.world.episode_duration = 500.0;
  cfg.sync_derived();
  const ObsSpec spec = make_obs_spec(cfg);

  ScriptedPilot p0(cfg.world), p1(cfg.world);
  std::vector<ControlPolicy*> ptrs{&p0, &p1};
  Rng rng(4);
  EpisodeOptions opts;
  opts.world_seed = 11;
  const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
  CHECK(all_drained(res.final_world));
  CHECK(res.metrics.steps < cfg.world.episode_steps());
}

TEST_CASE("metrics and trajectory CSV round trip") {
  std::vector<EpochMetrics> rows(2);
  rows[0].epoch = 0;
  rows[0].cum_reward = -12.345678901234567;
  rows[0].sum_data_mbit = 1.25;
  rows[0].steps = 60;
  rows[1].epoch = 1;
  rows[1].cum_reward = 3.25;
  rows[1].steps = 60;

  const std::string mpath = temp_path("iout_metrics.csv");
  emit_metrics(rows, mpath);

  std::ifstream in(mpath);
  std::string header, line;
  std::getline(in, header);
  CHECK(header ==
        "epoch,cum_reward,sum_data_rate_mbit,sum_capacity_mbit_s,sum_voi,"
        "avg_energy_j,crash_count,objective,steps");
  std::getline(in, line);
  std::stringstream ss(line);
  std::string field;
  std::getline(ss, field, ',');
  CHECK(field == "0");
  std::getline(ss, field, ',');
  CHECK(std::abs(std::stod(field) - rows[0].cum_reward) <= 1e-9);

  // header-only file for an empty run
  emit_metrics({}, mpath);
  std::ifstream in2(mpath);
  std::getline(in2, header);
  CHECK_FALSE(header.empty());
  CHECK_FALSE(std::getline(in2, line));
  fs::remove(mpath);

  const std::string tpath = temp_path("iout_traj.csv");
  std::vector<TrajectoryRow> traj(1);
  traj[0] = {1.0, 0, 10.123456789012345, 20.0, 0.5, 1.0, 137.3, 4};
  emit_trajectory(traj, tpath);
  std::ifstream tin(tpath);
  std::getline(tin, header);
  CHECK(header == "time,auv_id,x,y,heading,speed,energy,target");
  std::getline(tin, line);
  std::stringstream ts(line);
  std::getline(ts, field, ',');
  std::getline(ts, field, ',');
  std::getline(ts, field, ',');
  CHECK(std::abs(std::stod(field) - traj[0].x) <= 1e-9);
  fs::remove(tpath);
}

TEST_CASE("run_episode is deterministic given seed and config") {
  TrainConfig cfg = desk_cfg();
  const ObsSpec spec = make_obs_spec(cfg);
  auto once = [&](std::uint64_t seed) {
    ScriptedPilot p0(cfg.world), p1(cfg.world);
    std::vector<ControlPolicy*> ptrs{&p0, &p1};
    Rng rng(seed);
    EpisodeOptions opts;
    opts.world_seed = seed + 1;
    opts.record_transitions = true;
    return run_episode(cfg, spec, ptrs, rng, opts);
  };
  const EpisodeResult a = once(9);
  const EpisodeResult b = once(9);
  CHECK(a.metrics.cum_reward == b.metrics.cum_reward);
  CHECK(a.metrics.sum_data_mbit == b.metrics.sum_data_mbit);
  REQUIRE(a.transitions.size() == b.transitions.size());
  bool same = true;
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    same &= a.transitions[i].obs == b.transitions[i].obs;
    same &= a.transitions[i].act == b.transitions[i].act;
    same &= a.transitions[i].rew == b.transitions[i].rew;
  }
  CHECK(same);
}

TEST_CASE("expert dataset generation: episode and determinism accounting") {
  TrainConfig cfg = desk_cfg();
  cfg.world.episode_duration = 30.0;
  cfg.train.hidden1 = 8;
  cfg.train.hidden2 = 8;
  cfg.sync_derived();
  const ObsSpec spec = make_obs_spec(cfg);

  Rng rng(12);
  const std::size_t hidden[] = {8, 8};
  std::vector<GaussianPolicy> ps;
  for (int j = 0; j < cfg.world.num_auvs; ++j)
    ps.push_back(GaussianPolicy::make(spec.dim(), kActionDim, hidden, rng));

  const Dataset d1 = gen_expert_dataset(ps, cfg, 3);
  CHECK(d1.header.episode_count == 3);
  CHECK(d1.header.obs_dim == static_cast<std::uint32_t>(spec.dim()));
  CHECK(d1.transitions.size() <= 3 * 30);
  CHECK(d1.transitions.size() > 0);

  // byte-identical on a second run with the same seed
  const Dataset d2 = gen_expert_dataset(ps, cfg, 3);
  REQUIRE(d1.transitions.size() == d2.transitions.size());
  bool same = true;
  for (std::size_t i = 0; i < d1.transitions.size(); ++i) {
    same &= d1.transitions[i].obs == d2.transitions[i].obs;
    same &= d1.transitions[i].act == d2.transitions[i].act;
  }
  CHECK(same);

  // incompatible checkpoint width is refused
  std::vector<GaussianPolicy> bad;
  for (int j = 0; j < cfg.world.num_auvs; ++j)
    bad.push_back(GaussianPolicy::make(7, kActionDim, hidden, rng));
  CHECK_THROWS(gen_expert_dataset(bad, cfg, 1));
}

TEST_CASE("checkpoint save/load round trip") {
  Rng rng(13);
  const std::size_t hidden[] = {8, 8};
  std::vector<GaussianPolicy> ps;
  ps.push_back(GaussianPolicy::make(10, 2, hidden, rng));
  ps.push_back(GaussianPolicy::make(10, 2, hidden, rng));
  CheckpointMeta meta{kObservationLayoutVersion, 0xabcdef, 99};

  const std::string path = temp_path("iout_ck.bin");
  save_policies(path, ps, meta);
  const LoadedPolicies lp = load_policies(path);
  CHECK(lp.meta.obs_layout_version == kObservationLayoutVersion);
  CHECK(lp.meta.config_fingerprint == 0xabcdef);
  CHECK(lp.meta.seed == 99);
  REQUIRE(lp.policies.size() == 2);
  for (int j = 0; j < 2; ++j) {
    CHECK(lp.policies[j].action_dim == 2);
    REQUIRE(lp.policies[j].net.layers.size() == ps[j].net.layers.size());
    for (std::size_t l = 0; l < ps[j].net.layers.size(); ++l) {
      CHECK(lp.policies[j].net.layers[l].w == ps[j].net.layers[l].w);
      CHECK(lp.policies[j].net.layers[l].b == ps[j].net.layers[l].b);
    }
  }
  fs::remove(path);

  CHECK_THROWS_AS(load_policies("/nonexistent/ck.bin"), CheckpointError);
}
