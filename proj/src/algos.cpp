#include "iout/algos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iout {

double AgentLearner::alpha() const { return std::exp(log_alpha); }

AgentLearner make_learner(std::size_t obs_dim, std::size_t act_dim,
                          std::span<const std::size_t> hidden, double lr,
                          double lr_alpha, double alpha_init, Rng& rng) {
  AgentLearner l;
  l.policy = GaussianPolicy::make(obs_dim, act_dim, hidden, rng);

  std::vector<std::size_t> critic_sizes;
  critic_sizes.push_back(obs_dim + act_dim);
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);
  l.q1 = Mlp::make(critic_sizes, Activation::softplus, rng);
  l.q2 = Mlp::make(critic_sizes, Activation::softplus, rng);
  l.q1_target = l.q1;  // targets start as exact copies
  l.q2_target = l.q2;

  l.log_alpha = std::log(alpha_init);
  l.opt_policy.lr = lr;
  l.opt_q1.lr = lr;
  l.opt_q2.lr = lr;
  l.opt_alpha.lr = lr_alpha;
  l.opt_policy.init(l.policy.net);
  l.opt_q1.init(l.q1);
  l.opt_q2.init(l.q2);
  return l;
}

namespace {

// TD targets y = r + gamma (1-done) (min target Q(s',a') - alpha log pi').
// gamma == 0 never touches the policy or targets.
void compute_td_targets(const AgentLearner& learner, const AgentBatch& batch,
                        const AlgoHyper& hyper, Rng& rng,
                        std::vector<double>& y) {
  const std::size_t n = batch.n;
  y.resize(n);
  const double alpha = learner.alpha();
  std::vector<double> q1v, q2v, input;
  for (std::size_t i = 0; i < n; ++i) {
    double boot = 0.0;
    if (hyper.gamma != 0.0 && batch.done[i] == 0.0) {
      const auto next = batch.next_obs_row(i);
      const PolicySample s = learner.policy.sample(next, rng);
      input.assign(next.begin(), next.end());
      input.insert(input.end(), s.action.begin(), s.action.end());
      learner.q1_target.forward(input, q1v);
      learner.q2_target.forward(input, q2v);
      boot = std::min(q1v[0], q2v[0]) - alpha * s.log_prob;
    }
    y[i] = batch.rew[i] + hyper.gamma * (batch.done[i] == 0.0 ? boot : 0.0);
  }
}

// Entropy-coefficient gradient step; returns -mean log pi of fresh samples.
double alpha_step(AgentLearner& learner, const AgentBatch& batch, Rng& rng,
                  double target_entropy) {
  double sum_logp = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i)
    sum_logp += learner.policy.sample(batch.obs_row(i), rng).log_prob;
  const double mean_logp = sum_logp / static_cast<double>(batch.n);
  // L = E[-alpha log pi - alpha H0]; d/d log_alpha = -alpha (mean_logp + H0)
  const double grad =
      -learner.alpha() * (mean_logp + target_entropy);
  learner.opt_alpha.step(learner.log_alpha, grad);
  return -mean_logp;
}

// Policy ascent on min-critic minus entropy: L = E[alpha log pi - min Q].
double policy_step(AgentLearner& learner, const AgentBatch& batch, Rng& rng) {
  const std::size_t n = batch.n;
  const double alpha = learner.alpha();
  MlpGrads grads = learner.policy.net.make_grads();
  MlpCache pi_cache, q_cache;
  std::vector<double> input, d_input, d_out(2 * learner.policy.action_dim);
  std::vector<double> coeff_action(learner.policy.action_dim);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto obs = batch.obs_row(i);
    const std::vector<double>& out =
        learner.policy.net.forward_cached(obs, pi_cache);
    // Reparameterized sample from the cached outputs.
    PolicySample s;
    const std::size_t d = learner.policy.action_dim;
    s.mean.resize(d);
    s.log_std.resize(d);
    s.noise.resize(d);
    s.pre_tanh.resize(d);
    s.action.resize(d);
    s.log_std_saturated.resize(d);
    constexpr double half_log_2pi = 0.9189385332046727;
    for (std::size_t k = 0; k < d; ++k) {
      s.mean[k] = out[k];
      s.log_std[k] = std::clamp(out[d + k], GaussianPolicy::kLogStdMin,
                                GaussianPolicy::kLogStdMax);
      s.log_std_saturated[k] = (out[d + k] < GaussianPolicy::kLogStdMin ||
                                out[d + k] > GaussianPolicy::kLogStdMax)
                                   ? 1
                                   : 0;
      s.noise[k] = rng.normal();
      s.pre_tanh[k] = s.mean[k] + std::exp(s.log_std[k]) * s.noise[k];
      s.action[k] = std::tanh(s.pre_tanh[k]);
      s.log_prob += -0.5 * s.noise[k] * s.noise[k] - s.log_std[k] -
                    half_log_2pi -
                    std::log(1.0 - s.action[k] * s.action[k] +
                             GaussianPolicy::kSquashEps);
    }

    input.assign(obs.begin(), obs.end());
    input.insert(input.end(), s.action.begin(), s.action.end());
    MlpCache q1_cache, q2_cache;
    const double q1 = learner.q1.forward_cached(input, q1_cache)[0];
    const double q2 = learner.q2.forward_cached(input, q2_cache)[0];
    const bool use_q1 = q1 <= q2;
    const double qmin = use_q1 ? q1 : q2;
    loss += (alpha * s.log_prob - qmin) * inv_n;

    // dQ/da through the selected critic, parameters frozen.
    const double one = 1.0;
    (use_q1 ? learner.q1 : learner.q2)
        .backward(use_q1 ? q1_cache : q2_cache, std::span(&one, 1), nullptr,
                  &d_input);
    for (std::size_t k = 0; k < d; ++k)
      coeff_action[k] = -d_input[obs.size() + k] * inv_n;
    policy_output_grad(s, alpha * inv_n, coeff_action, d_out);
    learner.policy.net.backward(pi_cache, d_out, grads);
  }
  learner.opt_policy.step(learner.policy.net, grads);
  return loss;
}

void critic_regression(Mlp& critic, Adam& opt, const AgentBatch& batch,
                       std::span<const double> y, double& loss_out) {
  const std::size_t n = batch.n;
  MlpGrads grads = critic.make_grads();
  MlpCache cache;
  std::vector<double> input;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto obs = batch.obs_row(i);
    const auto act = batch.act_row(i);
    input.assign(obs.begin(), obs.end());
    input.insert(input.end(), act.begin(), act.end());
    const double q = critic.forward_cached(input, cache)[0];
    const double err = q - y[i];
    loss += 0.5 * err * err * inv_n;
    const double upstream = err * inv_n;
    critic.backward(cache, std::span(&upstream, 1), grads);
  }
  opt.step(critic, grads);
  loss_out = loss;
}

}  // namespace

UpdateLosses sac_update(AgentLearner& learner, const AgentBatch& batch,
                        const AlgoHyper& hyper, Rng& rng) {
  UpdateLosses out;
  if (batch.n == 0) return out;  // no-op on an empty batch

  out.entropy = alpha_step(learner, batch, rng, hyper.target_entropy);
  out.alpha = learner.alpha();

  std::vector<double> y;
  compute_td_targets(learner, batch, hyper, rng, y);
  critic_regression(learner.q1, learner.opt_q1, batch, y, out.critic1);
  critic_regression(learner.q2, learner.opt_q2, batch, y, out.critic2);

  out.policy = policy_step(learner, batch, rng);

  soft_update(learner.q1_target, learner.q1, hyper.tau);
  soft_update(learner.q2_target, learner.q2, hyper.tau);
  return out;
}

CandidateFn default_cql_candidates(const GaussianPolicy& policy,
                                   int num_action_samples) {
  const int m = num_action_samples;
  return [&policy, m](std::span<const double> obs, Rng& rng,
                      CqlCandidates& out) {
    const std::size_t d = policy.action_dim;
    out.act_dim = d;
    out.count = static_cast<std::size_t>(2 * m);
    out.actions.resize(out.count * d);
    out.offsets.resize(out.count);
    // Uniform proposals on the action box: density (1/2)^d.
    const double log_unif = -static_cast<double>(d) * std::log(2.0);
    for (int k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < d; ++j)
        out.actions[k * d + j] = rng.uniform(-1.0, 1.0);
      out.offsets[k] = -log_unif;
    }
    // Current-policy proposals with their densities.
    for (int k = 0; k < m; ++k) {
      const PolicySample s = policy.sample(obs, rng);
      std::copy(s.action.begin(), s.action.end(),
                out.actions.begin() + (m + k) * d);
      out.offsets[m + k] = -s.log_prob;
    }
    out.log_normalizer = std::log(static_cast<double>(out.count));
  };
}

UpdateLosses cql_critic_loss(AgentLearner& learner, const AgentBatch& batch,
                             const AlgoHyper& hyper, const CqlParams& cql,
                             Rng& rng, MlpGrads& g1, MlpGrads& g2,
                             const CandidateFn& candidates) {
  UpdateLosses out;
  if (batch.n == 0) return out;
  const std::size_t n = batch.n;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> y;
  compute_td_targets(learner, batch, hyper, rng, y);

  CandidateFn cand = candidates;
  if (!cand && cql.alpha_cql != 0.0)
    cand = default_cql_candidates(learner.policy, cql.num_action_samples);

  struct CriticCtx {
    Mlp* q;
    MlpGrads* g;
    double td_loss = 0.0;
    double penalty = 0.0;
  };
  CriticCtx ctx[2] = {{&learner.q1, &g1}, {&learner.q2, &g2}};
  g1 = learner.q1.make_grads();
  g2 = learner.q2.make_grads();

  std::vector<double> input;
  MlpCache data_cache;
  std::vector<MlpCache> cand_caches;
  std::vector<double> values;
  CqlCandidates cands;

  for (std::size_t i = 0; i < n; ++i) {
    const auto obs = batch.obs_row(i);
    const auto act = batch.act_row(i);

    // One candidate draw per state, shared by both critics so they see the
    // same logsumexp sample set.
    if (cand) cand(obs, rng, cands);

    for (CriticCtx& c : ctx) {
      input.assign(obs.begin(), obs.end());
      input.insert(input.end(), act.begin(), act.end());
      const double q_data = c.q->forward_cached(input, data_cache)[0];
      const double err = q_data - y[i];
      c.td_loss += 0.5 * err * err * inv_n;
      double data_upstream = err * inv_n;

      if (cand) {
        const std::size_t m = cands.count;
        cand_caches.resize(m);
        values.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
          input.assign(obs.begin(), obs.end());
          input.insert(input.end(), cands.actions.begin() + k * cands.act_dim,
                       cands.actions.begin() + (k + 1) * cands.act_dim);
          values[k] =
              c.q->forward_cached(input, cand_caches[k])[0] + cands.offsets[k];
        }
        const double vmax = *std::max_element(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += std::exp(v - vmax);
        const double lse = vmax + std::log(sum) - cands.log_normalizer;
        c.penalty += (lse - q_data) * inv_n;
        // d lse / d Q(s,a_k) = softmax weight of candidate k
        for (std::size_t k = 0; k < m; ++k) {
          const double w = std::exp(values[k] - vmax) / sum;
          const double upstream = cql.alpha_cql * w * inv_n;
          c.q->backward(cand_caches[k], std::span(&upstream, 1), *c.g);
        }
        data_upstream -= cql.alpha_cql * inv_n;
      }
      c.q->backward(data_cache, std::span(&data_upstream, 1), *c.g);
    }
  }

  out.critic1 = ctx[0].td_loss + cql.alpha_cql * ctx[0].penalty;
  out.critic2 = ctx[1].td_loss + cql.alpha_cql * ctx[1].penalty;
  out.cql_penalty = 0.5 * (ctx[0].penalty + ctx[1].penalty);
  out.alpha = learner.alpha();
  return out;
}

UpdateLosses cql_update(AgentLearner& learner, const AgentBatch& batch,
                        const AlgoHyper& hyper, const CqlParams& cql,
                        Rng& rng, const CandidateFn& candidates) {
  UpdateLosses out;
  if (batch.n == 0) return out;

  out.entropy = alpha_step(learner, batch, rng, hyper.target_entropy);

  MlpGrads g1, g2;
  const UpdateLosses closs =
      cql_critic_loss(learner, batch, hyper, cql, rng, g1, g2, candidates);
  out.critic1 = closs.critic1;
  out.critic2 = closs.critic2;
  out.cql_penalty = closs.cql_penalty;
  learner.opt_q1.step(learner.q1, g1);
  learner.opt_q2.step(learner.q2, g2);

  soft_update(learner.q1_target, learner.q1, hyper.tau);
  soft_update(learner.q2_target, learner.q2, hyper.tau);

  out.policy = policy_step(learner, batch, rng);
  out.alpha = learner.alpha();
  return out;
}

double bc_update(GaussianPolicy& policy, Adam& opt, const AgentBatch& batch) {
  if (batch.n == 0)
    throw std::invalid_argument("bc_update: empty batch");
  const std::size_t n = batch.n;
  const std::size_t d = policy.action_dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  MlpGrads grads = policy.net.make_grads();
  MlpCache cache;
  std::vector<double> d_out(2 * d);
  double nll = 0.0;
  constexpr double half_log_2pi = 0.9189385332046727;

  for (std::size_t i = 0; i < n; ++i) {
    const auto obs = batch.obs_row(i);
    const auto act = batch.act_row(i);
    const std::vector<double>& out = policy.net.forward_cached(obs, cache);
    for (std::size_t k = 0; k < d; ++k) {
      const double a = std::clamp(act[k], -1.0 + 1e-7, 1.0 - 1e-7);
      const double z = std::atanh(a);
      const double raw_ls = out[d + k];
      const bool saturated = raw_ls < GaussianPolicy::kLogStdMin ||
                             raw_ls > GaussianPolicy::kLogStdMax;
      const double log_std = std::clamp(raw_ls, GaussianPolicy::kLogStdMin,
                                        GaussianPolicy::kLogStdMax);
      const double u = (z - out[k]) * std::exp(-log_std);
      nll += (0.5 * u * u + log_std + half_log_2pi +
              std::log(1.0 - a * a + GaussianPolicy::kSquashEps)) *
             inv_n;
      d_out[k] = -u * std::exp(-log_std) * inv_n;  // d nll / d mean
      d_out[d + k] = saturated ? 0.0 : (1.0 - u * u) * inv_n;
    }
    policy.net.backward(cache, d_out, grads);
  }
  opt.step(policy.net, grads);
  return nll;
}

namespace {

void check_dataset_layout(const Dataset& ds, const TrainConfig& cfg,
                          std::uint32_t expected_layout) {
  const DatasetHeader& h = ds.header;
  if (h.obs_layout_version != expected_layout)
    throw std::runtime_error(
        "dataset observation layout version " +
        std::to_string(h.obs_layout_version) + " does not match expected " +
        std::to_string(expected_layout));
  if (static_cast<int>(h.num_agents) != cfg.world.num_auvs)
    throw std::runtime_error(
        "dataset has " + std::to_string(h.num_agents) +
        " agents but config expects " + std::to_string(cfg.world.num_auvs));
  if (ds.transitions.empty())
    throw std::runtime_error("dataset is empty");
}

std::vector<const Transition*> draw_sample(const Dataset& ds,
                                           std::size_t batch_size, Rng& rng) {
  std::vector<const Transition*> out(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    out[i] = &ds.transitions[rng.uniform_int(ds.transitions.size())];
  return out;
}

}  // namespace

AgentBatch make_agent_batch(std::span<const Transition* const> sample,
                            int agent, std::size_t obs_dim,
                            std::size_t act_dim,
                            std::span<const double> action_scale) {
  AgentBatch b;
  b.n = sample.size();
  b.obs_dim = obs_dim;
  b.act_dim = act_dim;
  b.obs.resize(b.n * obs_dim);
  b.act.resize(b.n * act_dim);
  b.rew.resize(b.n);
  b.done.resize(b.n);
  b.next_obs.resize(b.n * obs_dim);
  for (std::size_t i = 0; i < b.n; ++i) {
    const Transition& t = *sample[i];
    const std::size_t ob = agent * obs_dim;
    for (std::size_t k = 0; k < obs_dim; ++k) {
      b.obs[i * obs_dim + k] = t.obs[ob + k];
      b.next_obs[i * obs_dim + k] = t.next_obs[ob + k];
    }
    for (std::size_t k = 0; k < act_dim; ++k) {
      const double phys = t.act[agent * act_dim + k];
      b.act[i * act_dim + k] =
          std::clamp(phys / action_scale[k], -1.0, 1.0);
    }
    b.rew[i] = t.rew[agent];
    b.done[i] = t.done ? 1.0 : 0.0;
  }
  return b;
}

std::vector<AgentLearner> maicql_train(const Dataset& dataset,
                                       const TrainConfig& cfg,
                                       std::uint32_t expected_layout,
                                       const EvalFn& eval_fn,
                                       std::vector<TrainLogRow>& log) {
  check_dataset_layout(dataset, cfg, expected_layout);
  const std::size_t obs_dim = dataset.header.obs_dim;
  const std::size_t act_dim = dataset.header.act_dim;
  const int num_agents = static_cast<int>(dataset.header.num_agents);
  const std::size_t hidden[] = {static_cast<std::size_t>(cfg.train.hidden1),
                                static_cast<std::size_t>(cfg.train.hidden2)};
  const double action_scale[] = {cfg.world.accel_max, cfg.world.ang_vel_max};

  Rng rng(cfg.seed ^ 0x6d61696371ULL);  // offline-training stream
  std::vector<AgentLearner> learners;
  learners.reserve(num_agents);
  for (int j = 0; j < num_agents; ++j)
    learners.push_back(make_learner(obs_dim, act_dim, hidden, cfg.train.lr,
                                    cfg.train.lr_alpha, cfg.train.alpha_init,
                                    rng));

  const AlgoHyper hyper{cfg.train.gamma, cfg.train.tau,
                        cfg.train.target_entropy()};

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    TrainLogRow row;
    row.epoch = epoch;
    row.critic_loss.resize(num_agents, 0.0);
    row.policy_loss.resize(num_agents, 0.0);
    row.alpha.resize(num_agents, 0.0);
    for (int j = 0; j < num_agents; ++j) {
      UpdateLosses last{};
      for (int u = 0; u < cfg.train.updates_per_epoch; ++u) {
        const auto sample =
            draw_sample(dataset, cfg.train.batch_size, rng);
        const AgentBatch batch =
            make_agent_batch(sample, j, obs_dim, act_dim, action_scale);
        last = cql_update(learners[j], batch, hyper, cfg.cql, rng);
      }
      row.critic_loss[j] = 0.5 * (last.critic1 + last.critic2);
      row.policy_loss[j] = last.policy;
      row.alpha[j] = last.alpha;
    }
    if (eval_fn && (epoch % std::max(1, cfg.online.eval_every) == 0 ||
                    epoch + 1 == cfg.train.epochs)) {
      std::vector<const GaussianPolicy*> policies;
      for (const AgentLearner& l : learners) policies.push_back(&l.policy);
      row.eval = eval_fn(policies, epoch);
      row.has_eval = true;
    }
    log.push_back(std::move(row));
  }
  return learners;
}

std::vector<GaussianPolicy> bc_train(const Dataset& dataset,
                                     const TrainConfig& cfg,
                                     std::uint32_t expected_layout,
                                     std::vector<TrainLogRow>& log) {
  check_dataset_layout(dataset, cfg, expected_layout);
  const std::size_t obs_dim = dataset.header.obs_dim;
  const std::size_t act_dim = dataset.header.act_dim;
  const int num_agents = static_cast<int>(dataset.header.num_agents);
  const std::size_t hidden[] = {static_cast<std::size_t>(cfg.train.hidden1),
                                static_cast<std::size_t>(cfg.train.hidden2)};
  const double action_scale[] = {cfg.world.accel_max, cfg.world.ang_vel_max};

  Rng rng(cfg.seed ^ 0x6263ULL);  // bc-training stream
  std::vector<GaussianPolicy> policies;
  std::vector<Adam> opts(num_agents);
  for (int j = 0; j < num_agents; ++j) {
    policies.push_back(GaussianPolicy::make(obs_dim, act_dim, hidden, rng));
    opts[j].lr = cfg.train.lr;
    opts[j].init(policies[j].net);
  }

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    TrainLogRow row;
    row.epoch = epoch;
    row.critic_loss.assign(num_agents, 0.0);
    row.policy_loss.resize(num_agents, 0.0);
    row.alpha.assign(num_agents, 0.0);
    for (int j = 0; j < num_agents; ++j) {
      double loss = 0.0;
      for (int u = 0; u < cfg.train.updates_per_epoch; ++u) {
        const auto sample = draw_sample(dataset, cfg.train.batch_size, rng);
        const AgentBatch batch =
            make_agent_batch(sample, j, obs_dim, act_dim, action_scale);
        loss = bc_update(policies[j], opts[j], batch);
      }
      row.policy_loss[j] = loss;
    }
    log.push_back(std::move(row));
  }
  return policies;
}

}  // namespace iout
