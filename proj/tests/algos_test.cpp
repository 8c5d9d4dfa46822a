#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "iout/algos.hpp"
#include "oracles.hpp"

using namespace iout;

namespace {

// Fixed tiny batch over a 2-dim observation, 2-dim action space.
AgentBatch fixed_batch(std::size_t n, Rng& rng) {
  AgentBatch b;
  b.n = n;
  b.obs_dim = 2;
  b.act_dim = 2;
  b.obs.resize(n * 2);
  b.act.resize(n * 2);
  b.rew.resize(n);
  b.done.resize(n);
  b.next_obs.resize(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    b.obs[2 * i] = rng.uniform(-1.0, 1.0);
    b.obs[2 * i + 1] = rng.uniform(-1.0, 1.0);
    b.act[2 * i] = rng.uniform(-0.9, 0.9);
    b.act[2 * i + 1] = rng.uniform(-0.9, 0.9);
    b.rew[i] = rng.uniform(-1.0, 1.0);
    b.done[i] = 0.0;
    b.next_obs[2 * i] = rng.uniform(-1.0, 1.0);
    b.next_obs[2 * i + 1] = rng.uniform(-1.0, 1.0);
  }
  return b;
}

AgentLearner tiny_learner(Rng& rng) {
  const std::size_t hidden[] = {8, 8};
  return make_learner(2, 2, hidden, 3e-4, 3e-4, 0.01, rng);
}

}  // namespace

TEST_CASE("learner construction invariants") {
  Rng rng(1);
  AgentLearner l = tiny_learner(rng);
  CHECK(l.alpha() == doctest::Approx(0.01));
  // targets start as exact copies of the critics
  for (std::size_t li = 0; li < l.q1.layers.size(); ++li) {
    CHECK(l.q1_target.layers[li].w == l.q1.layers[li].w);
    CHECK(l.q2_target.layers[li].w == l.q2.layers[li].w);
  }
}

TEST_CASE("sac_update on an empty batch is a no-op") {
  Rng rng(2);
  AgentLearner l = tiny_learner(rng);
  const auto w0 = l.policy.net.layers[0].w;
  AgentBatch empty;
  const AlgoHyper hyper{0.9, 0.01, -2.0};
  sac_update(l, empty, hyper, rng);
  CHECK(l.policy.net.layers[0].w == w0);
}

TEST_CASE("alpha moves toward the entropy target in the right direction") {
  Rng rng(3);
  AgentLearner l = tiny_learner(rng);
  AgentBatch batch = fixed_batch(32, rng);
  // An impossible high target entropy: alpha must grow.
  const AlgoHyper hyper{0.0, 0.01, 50.0};
  const double a0 = l.alpha();
  double prev_log = l.log_alpha;
  for (int i = 0; i < 50; ++i) {
    sac_update(l, batch, hyper, rng);
    CHECK(l.log_alpha >= prev_log - 1e-12);
    prev_log = l.log_alpha;
  }
  CHECK(l.alpha() > a0);
  CHECK(std::isfinite(l.log_alpha));  // log-parameterization keeps alpha > 0
}

TEST_CASE("gamma=0 critic fixed point is the reward") {
  Rng rng(4);
  AgentLearner l = tiny_learner(rng);
  l.opt_q1.lr = 3e-3;
  l.opt_q2.lr = 3e-3;
  // single deterministic transition, alpha ~ 0
  AgentBatch batch;
  batch.n = 1;
  batch.obs_dim = 2;
  batch.act_dim = 2;
  batch.obs = {0.3, -0.4};
  batch.act = {0.5, -0.5};
  batch.rew = {0.75};
  batch.done = {0.0};
  batch.next_obs = {0.0, 0.0};
  l.log_alpha = std::log(1e-8);
  const AlgoHyper hyper{0.0, 0.01, -2.0};
  for (int i = 0; i < 3000; ++i) sac_update(l, batch, hyper, rng);
  std::vector<double> q;
  const std::vector<double> input{0.3, -0.4, 0.5, -0.5};
  l.q1.forward(input, q);
  CHECK(q[0] == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("cql loss with alpha_cql=0 reduces to the TD term") {
  Rng rng(5);
  AgentLearner l = tiny_learner(rng);
  AgentBatch batch = fixed_batch(16, rng);
  CqlParams cql;
  cql.alpha_cql = 0.0;
  const AlgoHyper hyper{0.0, 0.01, -2.0};  // gamma 0: deterministic targets

  MlpGrads g1, g2;
  const UpdateLosses a =
      cql_critic_loss(l, batch, hyper, cql, rng, g1, g2);
  CHECK(a.cql_penalty == 0.0);

  // reference TD-only gradients computed directly
  MlpGrads ref = l.q1.make_grads();
  MlpCache cache;
  std::vector<double> input;
  double td = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i) {
    const auto obs = batch.obs_row(i);
    const auto act = batch.act_row(i);
    input.assign(obs.begin(), obs.end());
    input.insert(input.end(), act.begin(), act.end());
    const double q = l.q1.forward_cached(input, cache)[0];
    const double err = q - batch.rew[i];
    td += 0.5 * err * err / batch.n;
    const double up = err / batch.n;
    l.q1.backward(cache, std::span(&up, 1), ref);
  }
  CHECK(a.critic1 == doctest::Approx(td).epsilon(1e-12));
  CHECK(oracles::max_rel_error(g1, ref) <= 1e-12);
}

TEST_CASE("constant critic has zero conservative-penalty gradient") {
  Rng rng(6);
  AgentLearner l = tiny_learner(rng);
  // Make q1 constant in its inputs: zero all weights, bias c on the output.
  for (auto& layer : l.q1.layers) {
    std::fill(layer.w.begin(), layer.w.end(), 0.0);
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
  l.q1.layers.back().b[0] = 1.7;

  AgentBatch batch = fixed_batch(8, rng);
  // Kill the TD term by setting rewards to the constant critic value.
  for (std::size_t i = 0; i < batch.n; ++i) batch.rew[i] = 1.7;
  CqlParams cql;
  cql.alpha_cql = 1.0;
  cql.num_action_samples = 6;
  const AlgoHyper hyper{0.0, 0.01, -2.0};

  MlpGrads g1, g2;
  cql_critic_loss(l, batch, hyper, cql, rng, g1, g2);
  // gradient of a uniform level shift cancels between the logsumexp and
  // the dataset term: the output bias gradient must vanish
  CHECK(std::abs(g1.db.back()[0]) <= 1e-9);
}

TEST_CASE("dataset-covered action ends above the uncovered one") {
  // one state, two actions embedded at -0.5 / +0.5 in the continuous box;
  // dataset covers only action 0. Run full artifact updates.
  Rng rng(7);
  const std::size_t hidden[] = {16, 16};
  AgentLearner l = make_learner(1, 1, hidden, 1e-3, 1e-3, 0.01, rng);

  AgentBatch batch;
  batch.n = 8;
  batch.obs_dim = 1;
  batch.act_dim = 1;
  for (int i = 0; i < 8; ++i) {
    batch.obs.push_back(0.0);
    batch.act.push_back(-0.5);
    batch.rew.push_back(1.0);
    batch.done.push_back(1.0);
    batch.next_obs.push_back(0.0);
  }
  CqlParams cql;
  cql.alpha_cql = 2.0;
  cql.num_action_samples = 8;
  const AlgoHyper hyper{0.99, 0.01, -1.0};
  for (int i = 0; i < 400; ++i) cql_update(l, batch, hyper, cql, rng);

  std::vector<double> q_cov, q_unc;
  l.q1.forward(std::vector<double>{0.0, -0.5}, q_cov);
  l.q1.forward(std::vector<double>{0.0, 0.5}, q_unc);
  CHECK(q_cov[0] > q_unc[0]);
}

TEST_CASE("bc descends on a fixed batch") {
  Rng rng(8);
  const std::size_t hidden[] = {16, 16};
  GaussianPolicy p = GaussianPolicy::make(2, 2, hidden, rng);
  Adam opt;
  opt.lr = 1e-3;
  opt.init(p.net);
  AgentBatch batch = fixed_batch(32, rng);

  const double first = bc_update(p, opt, batch);
  double last = first;
  for (int i = 0; i < 99; ++i) {
    const double cur = bc_update(p, opt, batch);
    last = cur;
  }
  CHECK(last < first);

  AgentBatch empty;
  CHECK_THROWS_AS(bc_update(p, opt, empty), std::invalid_argument);
}

TEST_CASE("maicql_train smoke: runs end-to-end and refuses bad layouts") {
  // tiny synthetic dataset matching a 1-agent config
  TrainConfig cfg;
  cfg.world.num_auvs = 1;
  cfg.train.epochs = 2;
  cfg.train.updates_per_epoch = 2;
  cfg.train.batch_size = 8;
  cfg.train.hidden1 = 8;
  cfg.train.hidden2 = 8;
  cfg.sync_derived();

  Dataset ds;
  ds.header.obs_layout_version = 1;
  ds.header.num_agents = 1;
  ds.header.obs_dim = 4;
  ds.header.act_dim = 2;
  Rng rng(9);
  for (int i = 0; i < 64; ++i) {
    Transition t;
    for (int k = 0; k < 4; ++k)
      t.obs.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
    t.act = {static_cast<float>(rng.uniform(-0.4, 0.4)),
             static_cast<float>(rng.uniform(-0.7, 0.7))};
    t.rew = {static_cast<float>(rng.uniform(-1.0, 1.0))};
    for (int k = 0; k < 4; ++k)
      t.next_obs.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
    t.done = i == 63;
    ds.transitions.push_back(std::move(t));
  }

  std::vector<TrainLogRow> log;
  const auto learners = maicql_train(ds, cfg, 1, nullptr, log);
  CHECK(learners.size() == 1);
  CHECK(log.size() == 2);
  CHECK(std::isfinite(log.back().critic_loss[0]));

  // layout refusal names both versions
  try {
    std::vector<TrainLogRow> log2;
    maicql_train(ds, cfg, 7, nullptr, log2);
    FAIL("expected layout mismatch");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
}

TEST_CASE("independently trained agents diverge") {
  TrainConfig cfg;
  cfg.world.num_auvs = 2;
  cfg.train.epochs = 3;
  cfg.train.updates_per_epoch = 3;
  cfg.train.batch_size = 8;
  cfg.train.hidden1 = 8;
  cfg.train.hidden2 = 8;
  cfg.sync_derived();

  Dataset ds;
  ds.header.obs_layout_version = 1;
  ds.header.num_agents = 2;
  ds.header.obs_dim = 3;
  ds.header.act_dim = 2;
  Rng rng(10);
  for (int i = 0; i < 64; ++i) {
    Transition t;
    for (int k = 0; k < 6; ++k)
      t.obs.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
    for (int k = 0; k < 4; ++k)
      t.act.push_back(static_cast<float>(rng.uniform(-0.4, 0.4)));
    t.rew = {static_cast<float>(rng.normal()),
             static_cast<float>(rng.normal())};
    for (int k = 0; k < 6; ++k)
      t.next_obs.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
    t.done = 0;
    ds.transitions.push_back(std::move(t));
  }

  std::vector<TrainLogRow> log;
  const auto learners = maicql_train(ds, cfg, 1, nullptr, log);
  REQUIRE(learners.size() == 2);
  CHECK(learners[0].policy.net.layers[0].w !=
        learners[1].policy.net.layers[0].w);
}

TEST_CASE("target networks lag with exact geometric decay when frozen") {
  Rng rng(11);
  AgentLearner l = tiny_learner(rng);
  // push the target away from the online critic
  for (auto& layer : l.q1_target.layers)
    for (double& w : layer.w) w += 1.0;
  double gap0 = 0.0;
  for (std::size_t li = 0; li < l.q1.layers.size(); ++li)
    for (std::size_t i = 0; i < l.q1.layers[li].w.size(); ++i)
      gap0 = std::max(gap0, std::abs(l.q1_target.layers[li].w[i] -
                                     l.q1.layers[li].w[i]));
  const double tau = 0.01;
  for (int k = 1; k <= 100; ++k) {
    soft_update(l.q1_target, l.q1, tau);
    double gap = 0.0;
    for (std::size_t li = 0; li < l.q1.layers.size(); ++li)
      for (std::size_t i = 0; i < l.q1.layers[li].w.size(); ++i)
        gap = std::max(gap, std::abs(l.q1_target.layers[li].w[i] -
                                     l.q1.layers[li].w[i]));
    CHECK(gap <= std::pow(1.0 - tau, k) * gap0 * (1.0 + 1e-9));
  }
}
