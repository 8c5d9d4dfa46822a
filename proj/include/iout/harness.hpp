#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iout/algos.hpp"
#include "iout/checkpoint.hpp"
#include "iout/config.hpp"
#include "iout/datasets.hpp"
#include "iout/mdp_io.hpp"
#include "iout/mission.hpp"
#include "iout/ocean_env.hpp"

namespace iout {

// Per-episode metrics row; mirrors the metrics CSV columns.
struct EpochMetrics {
  int epoch = 0;
  double cum_reward = 0.0;      // summed over agents and steps
  double sum_data_mbit = 0.0;   // collected data
  double sum_capacity_mbit_s = 0.0;  // hover-event channel capacities
  double sum_voi = 0.0;
  double avg_energy = 0.0;      // J per step per AUV
  double crash_count = 0.0;     // colliding pairs, step-counted
  double objective = 0.0;
  int steps = 0;
};

struct TrajectoryRow {
  double time = 0.0;
  int auv_id = 0;
  double x = 0.0, y = 0.0;
  double heading = 0.0, speed = 0.0, energy = 0.0;
  int target = -1;
};

// Raw 2-vector control source; outputs are pre-squash (decode_action
// applies tanh and the physical scaling).
class ControlPolicy {
 public:
  virtual ~ControlPolicy() = default;
  virtual std::array<double, 2> act(std::span<const double> obs,
                                    const WorldState& world, int auv,
                                    Rng& rng, bool deterministic) = 0;
};

// Always-zero raw output (drifts to zero accel / zero turn rate).
class ZeroPolicy : public ControlPolicy {
 public:
  std::array<double, 2> act(std::span<const double>, const WorldState&, int,
                            Rng&, bool) override {
    return {0.0, 0.0};
  }
};

// Uniform-random physical actions.
class RandomPolicy : public ControlPolicy {
 public:
  std::array<double, 2> act(std::span<const double>, const WorldState&, int,
                            Rng& rng, bool) override;
};

// Proportional navigator toward the current target: turns to the bearing,
// cruises, brakes near the node. Used for scripted rollouts and sweeps.
class ScriptedPilot : public ControlPolicy {
 public:
  explicit ScriptedPilot(const WorldConfig& cfg) : cfg_(cfg) {}
  std::array<double, 2> act(std::span<const double> obs,
                            const WorldState& world, int auv, Rng& rng,
                            bool deterministic) override;

 private:
  WorldConfig cfg_;
};

// Wraps a trained squashed-Gaussian policy (samples or mean head).
class NetPolicy : public ControlPolicy {
 public:
  explicit NetPolicy(const GaussianPolicy* p) : policy_(p) {}
  std::array<double, 2> act(std::span<const double> obs, const WorldState&,
                            int, Rng& rng, bool deterministic) override;

 private:
  const GaussianPolicy* policy_;
};

struct EpisodeOptions {
  bool deterministic = true;
  bool record_transitions = false;
  bool record_trajectory = false;
  std::uint64_t world_seed = 0;
  int epoch_index = 0;
  // Optional per-step hook (used by the online trainer to interleave
  // gradient updates); receives the just-recorded transition, or null when
  // transitions are not being recorded.
  std::function<void(int step, const Transition* t)> on_step;
};

struct EpisodeResult {
  EpochMetrics metrics;
  std::vector<EpisodeTotals> per_auv;
  std::vector<Transition> transitions;
  std::vector<TrajectoryRow> trajectory;
  WorldState final_world;
};

// Resets a world from the config and runs one episode: observations,
// action decode (targets via the priority rule), world stepping, rewards
// and metric accrual. Terminates at T/dt steps or when every needing node
// is drained.
EpisodeResult run_episode(const TrainConfig& cfg, const ObsSpec& spec,
                          std::vector<ControlPolicy*> policies, Rng& rng,
                          const EpisodeOptions& opts);

EvalSummary summarize(const EpochMetrics& m);

// CSV writers. Headers are fixed per format; round-trip precision.
void emit_metrics(const std::vector<EpochMetrics>& rows,
                  const std::string& path);
void emit_trajectory(const std::vector<TrajectoryRow>& rows,
                     const std::string& path);
// Static layout (nodes and vortices) backing trajectory plots.
void emit_world_layout(const WorldState& world, const std::string& path);
void emit_training_log(const std::vector<TrainLogRow>& rows,
                       const std::string& path);

// Online SAC over the simulator; returns per-agent learners and fills the
// per-epoch log (one eval rollout row per epoch).
std::vector<AgentLearner> sac_train_online(const TrainConfig& cfg,
                                           std::vector<TrainLogRow>& log);

// Rolls out checkpointed policies (stochastic heads) and records every
// transition; one episode per epoch, deterministic under the config seed.
Dataset gen_expert_dataset(const std::vector<GaussianPolicy>& policies,
                           const TrainConfig& cfg, int num_epochs);

// Deterministic evaluation over n_episodes; returns the mean summary.
EvalSummary evaluate_policies(const std::vector<const GaussianPolicy*>& ps,
                              const TrainConfig& cfg, int n_episodes,
                              std::uint64_t seed_base);
EvalSummary evaluate_random(const TrainConfig& cfg, int n_episodes,
                            std::uint64_t seed_base);
EvalSummary evaluate_scripted(const TrainConfig& cfg, int n_episodes,
                              std::uint64_t seed_base);

}  // namespace iout
