#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iout/harness.hpp"

namespace fs = std::filesystem;
using namespace iout;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> epochs;
  std::string turbulence;  // "", "on", "off"
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file path");
  cmd->add_option("--seed", o.seed, "Global RNG seed (overrides config)");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--epochs", o.epochs, "Epoch count (overrides config)");
  cmd->add_option("--turbulence", o.turbulence, "on|off flow-field toggle")
      ->check(CLI::IsMember({"on", "off"}));
}

TrainConfig resolve_config(const CommonOpts& o) {
  TrainConfig cfg;
  if (!o.config_path.empty()) {
    cfg = parse_config_file(o.config_path);
  } else {
    cfg.sync_derived();
    cfg.validate();
  }
  if (o.seed) {
    cfg.seed = *o.seed;
  } else if (o.config_path.empty()) {
    if (const char* env = std::getenv("IOUT_SEED"))
      cfg.seed = std::strtoull(env, nullptr, 10);
  }
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.turbulence == "on") cfg.world.turbulence = true;
  if (o.turbulence == "off") cfg.world.turbulence = false;
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

EvalFn make_eval_fn(const TrainConfig& cfg) {
  return [cfg](const std::vector<const GaussianPolicy*>& ps, int epoch) {
    return evaluate_policies(ps, cfg, 1,
                             cfg.seed ^ (0xe7a1ULL + epoch * 0ULL));
  };
}

int cmd_train_online(const CommonOpts& o) {
  TrainConfig cfg = resolve_config(o);
  ensure_dir(o.out_dir);
  std::vector<TrainLogRow> log;
  const auto learners = sac_train_online(cfg, log);
  std::vector<GaussianPolicy> policies;
  for (const AgentLearner& l : learners) policies.push_back(l.policy);
  CheckpointMeta meta{kObservationLayoutVersion, config_fingerprint(cfg),
                      cfg.seed};
  save_policies(join(o.out_dir, "sac_policies.ckpt"), policies, meta);
  emit_training_log(log, join(o.out_dir, "train_online_log.csv"));
  std::printf("wrote %s and %s\n",
              join(o.out_dir, "sac_policies.ckpt").c_str(),
              join(o.out_dir, "train_online_log.csv").c_str());
  return 0;
}

int cmd_gen_dataset(const CommonOpts& o, const std::string& ckpt_path) {
  TrainConfig cfg = resolve_config(o);
  ensure_dir(o.out_dir);
  const LoadedPolicies lp = load_policies(ckpt_path);
  const int epochs = o.epochs ? *o.epochs : cfg.train.epochs;
  Dataset ds = gen_expert_dataset(lp.policies, cfg, epochs);
  const std::string path = join(o.out_dir, "dataset.bin");
  save_dataset(ds, path);
  std::printf("wrote %s (%llu transitions, %d episodes)\n", path.c_str(),
              static_cast<unsigned long long>(ds.transitions.size()), epochs);
  return 0;
}

int cmd_train_offline(const CommonOpts& o, const std::string& algo,
                      const std::string& data_path, double noise_sigma) {
  TrainConfig cfg = resolve_config(o);
  ensure_dir(o.out_dir);
  if (!fs::exists(data_path))
    throw ConfigError("dataset file does not exist: " + data_path);
  Dataset ds = load_dataset(data_path, kObservationLayoutVersion);
  if (noise_sigma > 0.0)
    inject_gaussian_noise(ds, noise_sigma, cfg.seed ^ 0x401deULL);

  std::vector<TrainLogRow> log;
  std::vector<GaussianPolicy> policies;
  if (algo == "maicql") {
    const auto learners = maicql_train(ds, cfg, kObservationLayoutVersion,
                                       make_eval_fn(cfg), log);
    for (const AgentLearner& l : learners) policies.push_back(l.policy);
  } else {
    policies = bc_train(ds, cfg, kObservationLayoutVersion, log);
  }
  CheckpointMeta meta{kObservationLayoutVersion, config_fingerprint(cfg),
                      cfg.seed};
  const std::string ckpt = join(o.out_dir, algo + "_policies.ckpt");
  save_policies(ckpt, policies, meta);
  emit_training_log(log, join(o.out_dir, "train_offline_log.csv"));
  std::printf("wrote %s\n", ckpt.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& ckpt_path,
             int episodes) {
  TrainConfig cfg = resolve_config(o);
  ensure_dir(o.out_dir);
  const LoadedPolicies lp = load_policies(ckpt_path);
  const ObsSpec spec = make_obs_spec(cfg);

  std::vector<EpochMetrics> rows;
  for (int e = 0; e < episodes; ++e) {
    std::vector<NetPolicy> pols;
    std::vector<ControlPolicy*> ptrs;
    pols.reserve(lp.policies.size());
    for (const GaussianPolicy& p : lp.policies) pols.emplace_back(&p);
    for (auto& p : pols) ptrs.push_back(&p);

    Rng rng(cfg.seed ^ (0x9000ULL + e));
    EpisodeOptions opts;
    opts.deterministic = true;
    opts.record_trajectory = true;
    opts.world_seed = cfg.seed ^ (0xA000ULL + e);
    opts.epoch_index = e;
    const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
    rows.push_back(res.metrics);

    char name[64];
    std::snprintf(name, sizeof name, "traj_%03d.csv", e);
    emit_trajectory(res.trajectory, join(o.out_dir, name));
    std::snprintf(name, sizeof name, "world_%03d.csv", e);
    emit_world_layout(res.final_world, join(o.out_dir, name));
  }
  emit_metrics(rows, join(o.out_dir, "metrics.csv"));
  std::printf("wrote %s\n", join(o.out_dir, "metrics.csv").c_str());
  return 0;
}

int cmd_sweep_auvs(const CommonOpts& o, const std::string& ckpt_path,
                   int episodes) {
  TrainConfig base = resolve_config(o);
  ensure_dir(o.out_dir);
  std::vector<EpochMetrics> rows;
  for (int n = 1; n <= 3; ++n) {
    TrainConfig cfg = base;
    cfg.world.num_auvs = n;
    EvalSummary s;
    if (!ckpt_path.empty() && n == base.world.num_auvs) {
      const LoadedPolicies lp = load_policies(ckpt_path);
      std::vector<const GaussianPolicy*> ps;
      for (const GaussianPolicy& p : lp.policies) ps.push_back(&p);
      s = evaluate_policies(ps, cfg, episodes, cfg.seed);
    } else {
      // Observation width depends on the AUV count, so checkpoints only fit
      // their own N; the scripted pilot covers the sweep uniformly.
      s = evaluate_scripted(cfg, episodes, cfg.seed);
    }
    EpochMetrics m;
    m.epoch = n;  // row per AUV count
    m.cum_reward = s.cum_reward;
    m.sum_data_mbit = s.sum_data_mbit;
    m.sum_voi = s.sum_voi;
    m.avg_energy = s.avg_energy;
    m.crash_count = s.crashes;
    m.steps = episodes;
    rows.push_back(m);
    std::printf("N=%d  sum_data=%.3f Mbit  avg_energy=%.2f J  crashes=%.2f\n",
                n, s.sum_data_mbit, s.avg_energy, s.crashes);
  }
  emit_metrics(rows, join(o.out_dir, "sweep_auvs.csv"));
  std::printf("wrote %s\n", join(o.out_dir, "sweep_auvs.csv").c_str());
  return 0;
}

int cmd_export_traj(const CommonOpts& o, const std::string& ckpt_path) {
  TrainConfig cfg = resolve_config(o);
  ensure_dir(o.out_dir);
  const ObsSpec spec = make_obs_spec(cfg);

  std::vector<std::unique_ptr<ControlPolicy>> holder;
  LoadedPolicies lp;
  if (!ckpt_path.empty()) {
    lp = load_policies(ckpt_path);
    for (const GaussianPolicy& p : lp.policies)
      holder.push_back(std::make_unique<NetPolicy>(&p));
  } else {
    for (int j = 0; j < cfg.world.num_auvs; ++j)
      holder.push_back(std::make_unique<ScriptedPilot>(cfg.world));
  }
  std::vector<ControlPolicy*> ptrs;
  for (auto& p : holder) ptrs.push_back(p.get());

  Rng rng(cfg.seed ^ 0xB000ULL);
  EpisodeOptions opts;
  opts.deterministic = true;
  opts.record_trajectory = true;
  opts.world_seed = cfg.seed ^ 0xC000ULL;
  const EpisodeResult res = run_episode(cfg, spec, ptrs, rng, opts);
  emit_trajectory(res.trajectory, join(o.out_dir, "trajectory.csv"));
  emit_world_layout(res.final_world, join(o.out_dir, "world.csv"));
  std::printf(
      "episode: %d steps, %.3f Mbit collected, reward %.3f; wrote %s\n",
      res.metrics.steps, res.metrics.sum_data_mbit, res.metrics.cum_reward,
      join(o.out_dir, "trajectory.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-AUV underwater data-collection simulator and offline "
               "RL trainer"};
  app.require_subcommand(1);

  CommonOpts o_train, o_gen, o_off, o_eval, o_sweep, o_traj;
  std::string ckpt_gen, ckpt_eval, ckpt_sweep, ckpt_traj;
  std::string data_path;
  std::string algo = "maicql";
  double noise_sigma = 0.0;
  int eval_episodes = 1;
  int sweep_episodes = 5;

  CLI::App* train_online =
      app.add_subcommand("train-online", "Train SAC experts in the simulator");
  add_common(train_online, o_train);

  CLI::App* gen = app.add_subcommand(
      "gen-dataset", "Roll out SAC checkpoints into an offline dataset");
  add_common(gen, o_gen);
  gen->add_option("--ckpt", ckpt_gen, "SAC policy checkpoint")->required();

  CLI::App* off = app.add_subcommand("train-offline",
                                     "Train MAICQL or BC from a dataset");
  add_common(off, o_off);
  off->add_option("--algo", algo, "maicql|bc")
      ->check(CLI::IsMember({"maicql", "bc"}));
  off->add_option("--data", data_path, "Dataset file")->required();
  off->add_option("--noise-sigma", noise_sigma,
                  "Observation noise std injected into the dataset");

  CLI::App* ev = app.add_subcommand("eval",
                                    "Roll out checkpointed policies");
  add_common(ev, o_eval);
  ev->add_option("--ckpt", ckpt_eval, "Policy checkpoint")->required();
  ev->add_option("--episodes", eval_episodes, "Episodes to evaluate");

  CLI::App* sweep = app.add_subcommand(
      "sweep-auvs", "System metrics for AUV counts 1..3");
  add_common(sweep, o_sweep);
  sweep->add_option("--ckpt", ckpt_sweep,
                    "Optional checkpoint (used where the AUV count matches)");
  sweep->add_option("--episodes", sweep_episodes, "Episodes per AUV count");

  CLI::App* traj = app.add_subcommand(
      "export-traj", "Export one episode trajectory and world layout");
  add_common(traj, o_traj);
  traj->add_option("--ckpt", ckpt_traj,
                   "Optional checkpoint (scripted pilot otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors -> exit 1
  }

  try {
    if (train_online->parsed()) return cmd_train_online(o_train);
    if (gen->parsed()) return cmd_gen_dataset(o_gen, ckpt_gen);
    if (off->parsed())
      return cmd_train_offline(o_off, algo, data_path, noise_sigma);
    if (ev->parsed()) return cmd_eval(o_eval, ckpt_eval, eval_episodes);
    if (sweep->parsed())
      return cmd_sweep_auvs(o_sweep, ckpt_sweep, sweep_episodes);
    if (traj->parsed()) return cmd_export_traj(o_traj, ckpt_traj);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
