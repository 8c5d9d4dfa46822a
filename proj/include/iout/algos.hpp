#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "iout/config.hpp"
#include "iout/datasets.hpp"
#include "iout/nets.hpp"
#include "iout/rng.hpp"

namespace iout {

// One agent's full learner state: stochastic policy, twin critics with
// target copies, log-parameterized entropy coefficient, optimizer moments.
struct AgentLearner {
  GaussianPolicy policy;
  Mlp q1, q2, q1_target, q2_target;
  double log_alpha = 0.0;
  Adam opt_policy, opt_q1, opt_q2;
  ScalarAdam opt_alpha;

  double alpha() const;
};

AgentLearner make_learner(std::size_t obs_dim, std::size_t act_dim,
                          std::span<const std::size_t> hidden, double lr,
                          double lr_alpha, double alpha_init, Rng& rng);

// Per-agent training batch, row-major [n][dim]; actions normalized to
// [-1,1] (the squashed policy range).
struct AgentBatch {
  std::size_t n = 0;
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::vector<double> obs;
  std::vector<double> act;
  std::vector<double> rew;
  std::vector<double> done;
  std::vector<double> next_obs;

  std::span<const double> obs_row(std::size_t i) const {
    return {obs.data() + i * obs_dim, obs_dim};
  }
  std::span<const double> act_row(std::size_t i) const {
    return {act.data() + i * act_dim, act_dim};
  }
  std::span<const double> next_obs_row(std::size_t i) const {
    return {next_obs.data() + i * obs_dim, obs_dim};
  }
};

struct AlgoHyper {
  double gamma = 0.99;
  double tau = 0.01;
  double target_entropy = -2.0;
};

struct UpdateLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double policy = 0.0;
  double alpha = 0.0;         // coefficient value after the update
  double entropy = 0.0;       // -mean log pi of fresh samples
  double cql_penalty = 0.0;   // conservative term (mean, unscaled by alpha_cql)
};

// One SAC step over the batch: entropy-coefficient update, twin-critic
// regression to r + gamma (min target Q - alpha log pi), reparameterized
// policy ascent on min-critic minus entropy, target soft updates.
UpdateLosses sac_update(AgentLearner& learner, const AgentBatch& batch,
                        const AlgoHyper& hyper, Rng& rng);

// Candidate actions used to estimate logsumexp_a Q(s,a):
//   lse = logsumexp_k(Q(s, a_k) + offset_k) - log_normalizer.
// The default sampler draws num_action_samples uniform actions plus
// num_action_samples current-policy actions with importance offsets
// -log density and normalizer log(2 num_action_samples). An exact finite
// action set uses zero offsets and zero normalizer.
struct CqlCandidates {
  std::size_t count = 0;
  std::size_t act_dim = 0;
  std::vector<double> actions;  // count x act_dim
  std::vector<double> offsets;  // count
  double log_normalizer = 0.0;
};
using CandidateFn = std::function<void(std::span<const double> obs_row,
                                       Rng& rng, CqlCandidates& out)>;

CandidateFn default_cql_candidates(const GaussianPolicy& policy,
                                   int num_action_samples);

// Conservative critic loss (both critics) and its parameter gradients:
//   alpha_cql (E_s[logsumexp_a Q(s,a)] - E_D[Q(s,a)])
//   + 1/2 E[(Q(s,a) - (r + gamma (min targets - alpha log pi')))^2].
// Gradients are accumulated into g1/g2 (pre-zeroed here). Returns losses
// with cql_penalty filled.
UpdateLosses cql_critic_loss(AgentLearner& learner, const AgentBatch& batch,
                             const AlgoHyper& hyper, const CqlParams& cql,
                             Rng& rng, MlpGrads& g1, MlpGrads& g2,
                             const CandidateFn& candidates = nullptr);

// Full MAICQL step: entropy coefficient, conservative critic update,
// target soft updates, policy update.
UpdateLosses cql_update(AgentLearner& learner, const AgentBatch& batch,
                        const AlgoHyper& hyper, const CqlParams& cql,
                        Rng& rng, const CandidateFn& candidates = nullptr);

// Behavioral cloning: maximize log-likelihood of the batch actions under
// the squashed-Gaussian policy. Returns the negative log-likelihood.
double bc_update(GaussianPolicy& policy, Adam& opt, const AgentBatch& batch);

// --- offline trainers -----------------------------------------------------

struct EvalSummary {
  double cum_reward = 0.0;
  double sum_data_mbit = 0.0;
  double sum_voi = 0.0;
  double avg_energy = 0.0;
  double crashes = 0.0;
};

struct TrainLogRow {
  int epoch = 0;
  std::vector<double> critic_loss;  // per agent
  std::vector<double> policy_loss;
  std::vector<double> alpha;
  bool has_eval = false;
  EvalSummary eval;
};

// Rolls out the current policies (deterministic heads) and summarizes.
using EvalFn = std::function<EvalSummary(
    const std::vector<const GaussianPolicy*>& policies, int epoch)>;

// Throws on dataset/config layout mismatch. eval_fn may be null; when set
// it runs every online.eval_every epochs and on the final epoch.
std::vector<AgentLearner> maicql_train(const Dataset& dataset,
                                       const TrainConfig& cfg,
                                       std::uint32_t expected_layout,
                                       const EvalFn& eval_fn,
                                       std::vector<TrainLogRow>& log);

std::vector<GaussianPolicy> bc_train(const Dataset& dataset,
                                     const TrainConfig& cfg,
                                     std::uint32_t expected_layout,
                                     std::vector<TrainLogRow>& log);

// Uniform batch extraction for one agent; actions normalized by the given
// physical scales.
AgentBatch make_agent_batch(std::span<const Transition* const> sample,
                            int agent, std::size_t obs_dim,
                            std::size_t act_dim,
                            std::span<const double> action_scale);

}  // namespace iout
