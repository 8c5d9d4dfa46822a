#include "iout/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace iout {

namespace {

// Stable per-(seed, index) stream derivation.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

double safe_atanh(double u) {
  return std::atanh(std::clamp(u, -0.999999, 0.999999));
}

}  // namespace

std::array<double, 2> RandomPolicy::act(std::span<const double>,
                                        const WorldState&, int, Rng& rng,
                                        bool) {
  // Uniform physical action: pre-squash via atanh so tanh recovers it.
  return {safe_atanh(rng.uniform(-1.0, 1.0)),
          safe_atanh(rng.uniform(-1.0, 1.0))};
}

std::array<double, 2> ScriptedPilot::act(std::span<const double>,
                                         const WorldState& world, int auv,
                                         Rng&, bool) {
  const AuvState& me = world.auvs[auv];
  if (!me.target_node) return {safe_atanh(-1.0), 0.0};
  const NodeState& tgt = world.nodes[*me.target_node];
  const Vec2 d = tgt.position - me.position;
  const double dist = d.norm();
  const double bearing = std::atan2(d.y, d.x);
  const double err = wrap_angle(bearing - me.heading);

  const double ang = std::clamp(1.5 * err, -cfg_.ang_vel_max,
                                cfg_.ang_vel_max);
  // Brake inside twice the hover range, cruise otherwise.
  const double v_des =
      dist < 2.0 * cfg_.comm_distance ? 0.5 : 0.9 * cfg_.v_max;
  const double accel =
      std::clamp((v_des - me.speed_cmd) / cfg_.dt, -cfg_.accel_max,
                 cfg_.accel_max);
  return {safe_atanh(accel / cfg_.accel_max),
          safe_atanh(ang / cfg_.ang_vel_max)};
}

std::array<double, 2> NetPolicy::act(std::span<const double> obs,
                                     const WorldState&, int, Rng& rng,
                                     bool deterministic) {
  if (deterministic) {
    std::vector<double> out;
    policy_->net.forward(obs, out);
    return {out[0], out[1]};  // decode_action applies the tanh squash
  }
  const PolicySample s = policy_->sample(obs, rng);
  return {s.pre_tanh[0], s.pre_tanh[1]};
}

EpisodeResult run_episode(const TrainConfig& cfg, const ObsSpec& spec,
                          std::vector<ControlPolicy*> policies, Rng& rng,
                          const EpisodeOptions& opts) {
  const int n = cfg.world.num_auvs;
  if (static_cast<int>(policies.size()) != n)
    throw std::invalid_argument("run_episode: one policy per AUV required");

  EpisodeResult res;
  WorldState& world = res.final_world;
  world = make_world(cfg.world, cfg.acoustics, opts.world_seed);
  const EnergyConfig ecfg = cfg.energy_config();
  res.per_auv.assign(n, EpisodeTotals{});

  std::vector<std::vector<double>> obs(n), next_obs(n);
  for (int j = 0; j < n; ++j) obs[j] = build_observation(world, j, spec);

  if (opts.record_trajectory) {
    for (int j = 0; j < n; ++j) {
      const AuvState& a = world.auvs[j];
      res.trajectory.push_back({world.time, j, a.position.x, a.position.y,
                                a.heading, a.speed_cmd, a.energy_spent,
                                a.target_node ? *a.target_node : -1});
    }
  }

  std::vector<ControlInput> controls(n);
  std::vector<AgentAction> actions(n);
  double total_energy = 0.0;
  const int max_steps = cfg.world.episode_steps();
  int steps_done = 0;

  for (int step = 0; step < max_steps; ++step) {
    for (int j = 0; j < n; ++j) {
      const auto raw =
          policies[j]->act(obs[j], world, j, rng, opts.deterministic);
      actions[j] = decode_action(raw, world, j, cfg.world, cfg.priority);
      controls[j] = {actions[j].accel, actions[j].ang_vel};
    }

    step_world(world, controls, cfg.world, cfg.acoustics, ecfg);
    ++steps_done;

    double step_reward_sum = 0.0;
    std::vector<float> rew(n);
    for (int j = 0; j < n; ++j) {
      const RewardParts parts = step_reward(world, j, cfg.reward, cfg.voi);
      rew[j] = static_cast<float>(parts.total);
      step_reward_sum += parts.total;

      const StepEvents& ev = world.step_events[j];
      EpisodeTotals& tot = res.per_auv[j];
      tot.data_mbit += ev.bits_collected / 1e6;
      tot.voi += parts.r_voi;
      tot.energy_kj += ev.energy_j / 1e3;
      for (double cap : ev.hover_start_capacity)
        tot.capacity_mbit_s += cap / 1e6;
      total_energy += ev.energy_j;
    }
    res.metrics.cum_reward += step_reward_sum;
    res.metrics.crash_count += static_cast<double>(world.crash_pairs.size());

    for (int j = 0; j < n; ++j) next_obs[j] = build_observation(world, j, spec);

    const bool done = (step + 1 == max_steps) || all_drained(world);

    if (opts.record_transitions) {
      Transition t;
      t.obs.reserve(n * spec.dim());
      t.next_obs.reserve(n * spec.dim());
      t.act.reserve(n * kActionDim);
      for (int j = 0; j < n; ++j)
        for (double v : obs[j]) t.obs.push_back(static_cast<float>(v));
      for (int j = 0; j < n; ++j) {
        t.act.push_back(static_cast<float>(actions[j].accel));
        t.act.push_back(static_cast<float>(actions[j].ang_vel));
      }
      t.rew = rew;
      for (int j = 0; j < n; ++j)
        for (double v : next_obs[j]) t.next_obs.push_back(static_cast<float>(v));
      t.done = done ? 1 : 0;
      res.transitions.push_back(std::move(t));
    }

    if (opts.record_trajectory) {
      for (int j = 0; j < n; ++j) {
        const AuvState& a = world.auvs[j];
        res.trajectory.push_back({world.time, j, a.position.x, a.position.y,
                                  a.heading, a.speed_cmd, a.energy_spent,
                                  a.target_node ? *a.target_node : -1});
      }
    }

    if (opts.on_step)
      opts.on_step(step, res.transitions.empty() ? nullptr
                                                 : &res.transitions.back());
    obs.swap(next_obs);
    if (done) break;
  }

  res.metrics.epoch = opts.epoch_index;
  res.metrics.steps = steps_done;
  for (const EpisodeTotals& t : res.per_auv) {
    res.metrics.sum_data_mbit += t.data_mbit;
    res.metrics.sum_capacity_mbit_s += t.capacity_mbit_s;
    res.metrics.sum_voi += t.voi;
  }
  res.metrics.avg_energy =
      total_energy / (static_cast<double>(steps_done) * n);
  res.metrics.objective = episode_objective(res.per_auv, cfg.objective);
  return res;
}

EvalSummary summarize(const EpochMetrics& m) {
  EvalSummary s;
  s.cum_reward = m.cum_reward;
  s.sum_data_mbit = m.sum_data_mbit;
  s.sum_voi = m.sum_voi;
  s.avg_energy = m.avg_energy;
  s.crashes = m.crash_count;
  return s;
}

namespace {

void open_or_throw(std::ofstream& out, const std::string& path) {
  out.open(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
}

void put_num(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void emit_metrics(const std::vector<EpochMetrics>& rows,
                  const std::string& path) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "epoch,cum_reward,sum_data_rate_mbit,sum_capacity_mbit_s,sum_voi,"
         "avg_energy_j,crash_count,objective,steps\n";
  for (const EpochMetrics& m : rows) {
    out << m.epoch << ',';
    put_num(out, m.cum_reward);
    out << ',';
    put_num(out, m.sum_data_mbit);
    out << ',';
    put_num(out, m.sum_capacity_mbit_s);
    out << ',';
    put_num(out, m.sum_voi);
    out << ',';
    put_num(out, m.avg_energy);
    out << ',';
    put_num(out, m.crash_count);
    out << ',';
    put_num(out, m.objective);
    out << ',' << m.steps << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_trajectory(const std::vector<TrajectoryRow>& rows,
                     const std::string& path) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "time,auv_id,x,y,heading,speed,energy,target\n";
  for (const TrajectoryRow& r : rows) {
    put_num(out, r.time);
    out << ',' << r.auv_id << ',';
    put_num(out, r.x);
    out << ',';
    put_num(out, r.y);
    out << ',';
    put_num(out, r.heading);
    out << ',';
    put_num(out, r.speed);
    out << ',';
    put_num(out, r.energy);
    out << ',' << r.target << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_world_layout(const WorldState& world, const std::string& path) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "kind,id,x,y,a,b\n";
  for (std::size_t i = 0; i < world.nodes.size(); ++i) {
    const NodeState& n = world.nodes[i];
    out << "node," << i << ',';
    put_num(out, n.position.x);
    out << ',';
    put_num(out, n.position.y);
    out << ',';
    put_num(out, n.stored_data);
    out << ',' << (n.needs_collection ? 1 : 0) << '\n';
  }
  for (std::size_t i = 0; i < world.vortices.size(); ++i) {
    const Vortex& v = world.vortices[i];
    out << "vortex," << i << ',';
    put_num(out, v.center.x);
    out << ',';
    put_num(out, v.center.y);
    out << ',';
    put_num(out, v.intensity_gamma);
    out << ',';
    put_num(out, v.radius_delta);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_training_log(const std::vector<TrainLogRow>& rows,
                       const std::string& path) {
  std::ofstream out;
  open_or_throw(out, path);
  const std::size_t agents = rows.empty() ? 0 : rows.front().alpha.size();
  out << "epoch";
  for (std::size_t j = 0; j < agents; ++j)
    out << ",critic_loss_" << j << ",policy_loss_" << j << ",alpha_" << j;
  out << ",eval_cum_reward,eval_sum_data_rate,eval_sum_voi,eval_crashes,"
         "eval_avg_energy\n";
  for (const TrainLogRow& r : rows) {
    out << r.epoch;
    for (std::size_t j = 0; j < agents; ++j) {
      out << ',';
      put_num(out, r.critic_loss[j]);
      out << ',';
      put_num(out, r.policy_loss[j]);
      out << ',';
      put_num(out, r.alpha[j]);
    }
    const double nan = std::nan("");
    out << ',';
    put_num(out, r.has_eval ? r.eval.cum_reward : nan);
    out << ',';
    put_num(out, r.has_eval ? r.eval.sum_data_mbit : nan);
    out << ',';
    put_num(out, r.has_eval ? r.eval.sum_voi : nan);
    out << ',';
    put_num(out, r.has_eval ? r.eval.crashes : nan);
    out << ',';
    put_num(out, r.has_eval ? r.eval.avg_energy : nan);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Rollout policy for online training: uniform-random warmup, then
// stochastic sampling from the learner's current policy.
class OnlineRolloutPolicy : public ControlPolicy {
 public:
  OnlineRolloutPolicy(const GaussianPolicy* p, const long* global_step,
                      int start_steps)
      : policy_(p), global_step_(global_step), start_steps_(start_steps) {}

  std::array<double, 2> act(std::span<const double> obs, const WorldState&,
                            int, Rng& rng, bool) override {
    if (*global_step_ < start_steps_)
      return {safe_atanh(rng.uniform(-1.0, 1.0)),
              safe_atanh(rng.uniform(-1.0, 1.0))};
    const PolicySample s = policy_->sample(obs, rng);
    return {s.pre_tanh[0], s.pre_tanh[1]};
  }

 private:
  const GaussianPolicy* policy_;
  const long* global_step_;
  int start_steps_;
};

}  // namespace

std::vector<AgentLearner> sac_train_online(const TrainConfig& cfg,
                                           std::vector<TrainLogRow>& log) {
  const ObsSpec spec = make_obs_spec(cfg);
  const std::size_t obs_dim = spec.dim();
  const int n = cfg.world.num_auvs;
  const std::size_t hidden[] = {static_cast<std::size_t>(cfg.train.hidden1),
                                static_cast<std::size_t>(cfg.train.hidden2)};
  const double action_scale[] = {cfg.world.accel_max, cfg.world.ang_vel_max};

  Rng init_rng(mix64(cfg.seed, 0x5ac0));
  std::vector<AgentLearner> learners;
  for (int j = 0; j < n; ++j)
    learners.push_back(make_learner(obs_dim, kActionDim, hidden, cfg.train.lr,
                                    cfg.train.lr_alpha, cfg.train.alpha_init,
                                    init_rng));

  ReplayBuffer buffer(cfg.train.buffer_capacity);
  const AlgoHyper hyper{cfg.train.gamma, cfg.train.tau,
                        cfg.train.target_entropy()};
  long global_step = 0;
  Rng update_rng(mix64(cfg.seed, 0x5ac1));

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    Rng rollout_rng(mix64(cfg.seed, 0x100000 + epoch));
    std::vector<OnlineRolloutPolicy> pols;
    std::vector<ControlPolicy*> ptrs;
    pols.reserve(n);
    for (int j = 0; j < n; ++j)
      pols.emplace_back(&learners[j].policy, &global_step,
                        cfg.online.start_steps);
    for (auto& p : pols) ptrs.push_back(&p);

    EpisodeOptions opts;
    opts.deterministic = false;
    opts.record_transitions = true;
    opts.world_seed = mix64(cfg.seed, 0x200000 + epoch);
    opts.epoch_index = epoch;

    std::vector<UpdateLosses> last(n);
    opts.on_step = [&](int, const Transition* t) {
      if (!t) return;
      buffer.push(*t);
      ++global_step;
      if (static_cast<int>(buffer.size()) < cfg.online.update_after) return;
      for (int u = 0; u < cfg.online.updates_per_step; ++u) {
        for (int j = 0; j < n; ++j) {
          const auto sample =
              buffer.sample(cfg.train.batch_size, update_rng);
          const AgentBatch batch = make_agent_batch(
              sample, j, obs_dim, kActionDim, action_scale);
          last[j] = sac_update(learners[j], batch, hyper, update_rng);
        }
      }
    };

    const EpisodeResult res = run_episode(cfg, spec, ptrs, rollout_rng, opts);

    TrainLogRow row;
    row.epoch = epoch;
    for (int j = 0; j < n; ++j) {
      row.critic_loss.push_back(0.5 * (last[j].critic1 + last[j].critic2));
      row.policy_loss.push_back(last[j].policy);
      row.alpha.push_back(learners[j].alpha());
    }
    row.has_eval = true;
    row.eval = summarize(res.metrics);
    log.push_back(std::move(row));
  }
  return learners;
}

Dataset gen_expert_dataset(const std::vector<GaussianPolicy>& policies,
                           const TrainConfig& cfg, int num_epochs) {
  const ObsSpec spec = make_obs_spec(cfg);
  const int n = cfg.world.num_auvs;
  if (static_cast<int>(policies.size()) != n)
    throw std::runtime_error(
        "gen_expert_dataset: checkpoint has " +
        std::to_string(policies.size()) + " policies but config expects " +
        std::to_string(n));
  for (const GaussianPolicy& p : policies)
    if (p.net.input_size() != static_cast<std::size_t>(spec.dim()))
      throw std::runtime_error(
          "gen_expert_dataset: checkpoint observation size " +
          std::to_string(p.net.input_size()) +
          " does not match config layout " + std::to_string(spec.dim()));

  Dataset ds;
  ds.header.obs_layout_version = kObservationLayoutVersion;
  ds.header.num_agents = n;
  ds.header.obs_dim = spec.dim();
  ds.header.act_dim = kActionDim;
  ds.header.episode_count = num_epochs;
  ds.header.config_fingerprint = config_fingerprint(cfg);
  ds.header.seed = cfg.seed;

  for (int epoch = 0; epoch < num_epochs; ++epoch) {
    Rng rng(mix64(cfg.seed, 0x300000 + epoch));
    std::vector<NetPolicy> pols;
    std::vector<ControlPolicy*> ptrs;
    pols.reserve(n);
    for (int j = 0; j < n; ++j) pols.emplace_back(&policies[j]);
    for (auto& p : pols) ptrs.push_back(&p);

    EpisodeOptions opts;
    opts.deterministic = false;  // stochastic expert rollouts
    opts.record_transitions = true;
    opts.world_seed = mix64(cfg.seed, 0x400000 + epoch);
    opts.epoch_index = epoch;
    EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
    for (Transition& t : res.transitions)
      ds.transitions.push_back(std::move(t));
  }
  ds.header.transition_count = ds.transitions.size();
  return ds;
}

namespace {

EvalSummary mean_of(const std::vector<EvalSummary>& v) {
  EvalSummary m;
  if (v.empty()) return m;
  for (const EvalSummary& s : v) {
    m.cum_reward += s.cum_reward;
    m.sum_data_mbit += s.sum_data_mbit;
    m.sum_voi += s.sum_voi;
    m.avg_energy += s.avg_energy;
    m.crashes += s.crashes;
  }
  const double k = static_cast<double>(v.size());
  m.cum_reward /= k;
  m.sum_data_mbit /= k;
  m.sum_voi /= k;
  m.avg_energy /= k;
  m.crashes /= k;
  return m;
}

template <typename MakePolicies>
EvalSummary evaluate_with(const TrainConfig& cfg, int n_episodes,
                          std::uint64_t seed_base, bool deterministic,
                          MakePolicies make) {
  const ObsSpec spec = make_obs_spec(cfg);
  std::vector<EvalSummary> out;
  for (int e = 0; e < n_episodes; ++e) {
    Rng rng(mix64(seed_base, 0x500000 + e));
    auto holder = make();  // vector of owned policies
    std::vector<ControlPolicy*> ptrs;
    for (auto& p : holder) ptrs.push_back(p.get());
    EpisodeOptions opts;
    opts.deterministic = deterministic;
    opts.world_seed = mix64(seed_base, 0x600000 + e);
    opts.epoch_index = e;
    const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
    out.push_back(summarize(res.metrics));
  }
  return mean_of(out);
}

}  // namespace

EvalSummary evaluate_policies(const std::vector<const GaussianPolicy*>& ps,
                              const TrainConfig& cfg, int n_episodes,
                              std::uint64_t seed_base) {
  return evaluate_with(cfg, n_episodes, seed_base, true, [&] {
    std::vector<std::unique_ptr<ControlPolicy>> v;
    for (const GaussianPolicy* p : ps)
      v.push_back(std::make_unique<NetPolicy>(p));
    return v;
  });
}

EvalSummary evaluate_random(const TrainConfig& cfg, int n_episodes,
                            std::uint64_t seed_base) {
  return evaluate_with(cfg, n_episodes, seed_base, false, [&] {
    std::vector<std::unique_ptr<ControlPolicy>> v;
    for (int j = 0; j < cfg.world.num_auvs; ++j)
      v.push_back(std::make_unique<RandomPolicy>());
    return v;
  });
}

EvalSummary evaluate_scripted(const TrainConfig& cfg, int n_episodes,
                              std::uint64_t seed_base) {
  return evaluate_with(cfg, n_episodes, seed_base, true, [&] {
    std::vector<std::unique_ptr<ControlPolicy>> v;
    for (int j = 0; j < cfg.world.num_auvs; ++j)
      v.push_back(std::make_unique<ScriptedPilot>(cfg.world));
    return v;
  });
}

}  // namespace iout
