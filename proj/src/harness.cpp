#include "lanegnn/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "lanegnn/util.hpp"

namespace lanegnn {

namespace {

void logln(std::ostream* log, const std::string& line) {
  if (log) *log << line << "\n" << std::flush;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << text;
}

std::map<std::string, std::string> checkpoint_meta(const ExperimentConfig& cfg,
                                                   int update) {
  return {
      {"backbone", backbone_to_string(cfg.network.backbone)},
      {"config_hash", hex64(config_hash(cfg))},
      {"seed", std::to_string(cfg.train.seed)},
      {"update", std::to_string(update)},
  };
}

// Builds the store/network pair for a config and loads the checkpoint into
// it, cross-checking the backbone recorded in the file.
struct LoadedPolicy {
  ParameterStore store;
  ActorCritic net;
};

LoadedPolicy load_policy(const ExperimentConfig& cfg, const std::string& path) {
  const auto meta = read_checkpoint_meta(path);
  const auto it = meta.find("backbone");
  if (it != meta.end() && it->second != backbone_to_string(cfg.network.backbone))
    throw ConfigError("checkpoint " + path + " holds a " + it->second +
                      " network but the config selects " +
                      backbone_to_string(cfg.network.backbone));
  LoadedPolicy lp;
  Rng init_rng(derive_seed(cfg.train.seed, "init"));
  lp.net = build_actor_critic(lp.store, cfg.network, cfg.observer,
                              cfg.sim.bounds, init_rng);
  lp.store.load(path);
  return lp;
}

}  // namespace

TrainResult run_train(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/resolved_config.json", resolved_config_json(cfg));

  ParameterStore store;
  Rng init_rng(derive_seed(cfg.train.seed, "init"));
  ActorCritic net = build_actor_critic(store, cfg.network, cfg.observer,
                                       cfg.sim.bounds, init_rng);
  AdamOptimizer opt(store);
  RolloutCollector collector(cfg.env_config(), cfg.train);
  Rng shuffle_rng(derive_seed(cfg.train.seed, "shuffle"));
  MetricsWriter metrics(cfg.out_dir + "/metrics.csv");

  const std::string latest_path = cfg.out_dir + "/checkpoint_latest.txt";
  const std::string final_path = cfg.out_dir + "/checkpoint_final.txt";
  const std::string curve_path = cfg.out_dir + "/eval_curve.csv";
  store.save(latest_path, checkpoint_meta(cfg, 0));

  logln(log, "training " + backbone_to_string(cfg.network.backbone) +
                 " | parameters " + std::to_string(store.total_parameters()) +
                 " | seed " + std::to_string(cfg.train.seed));

  TrainResult result;
  int evals_written = 0;
  bool have_final_eval = false;

  for (int update = 1; update <= cfg.train.total_updates; ++update) {
    RolloutCollector::Result rollout = collector.collect(net, store);
    compute_advantages(rollout.buffer, cfg.train.gamma, cfg.train.gae_lambda,
                       cfg.train.normalize_advantages);
    const UpdateStats us = ppo_update(rollout.buffer, net, store, opt, cfg.train,
                                      shuffle_rng);
    metrics.add(update, rollout.stats, us);
    result.updates_run = update;

    {
      char line[256];
      std::snprintf(line, sizeof(line),
                    "update %3d | return %8.3f | success %4.0f%% | collision "
                    "%4.0f%% | sigma %.3f | grad %.3f",
                    update, rollout.stats.mean_return,
                    100.0 * rollout.stats.success_rate(),
                    100.0 * rollout.stats.collision_rate(), us.mean_sigma,
                    us.grad_norm);
      logln(log, line);
    }

    if (cfg.train.checkpoint_every > 0 && update % cfg.train.checkpoint_every == 0)
      store.save(latest_path, checkpoint_meta(cfg, update));

    const bool eval_now =
        cfg.train.eval_every > 0 && update % cfg.train.eval_every == 0;
    if (eval_now) {
      const EvalReport report =
          evaluate_policy(net, store, cfg.env_config(), cfg.train.eval_scenarios,
                          cfg.eval.seed);
      append_eval_curve_row(curve_path, update, report, evals_written == 0);
      evals_written += 1;
      logln(log, "  eval: " + format_eval_report(report));

      if (cfg.train.early_stop_success_rate > 0.0 &&
          report.success_rate >= cfg.train.early_stop_success_rate &&
          report.collision_rate <= cfg.train.early_stop_max_collision_rate) {
        result.early_stopped = true;
        result.final_eval = report;
        have_final_eval = true;
        logln(log, "  early stop: thresholds reached at update " +
                       std::to_string(update));
        break;
      }
      if (update == cfg.train.total_updates) {
        result.final_eval = report;
        have_final_eval = true;
      }
    }
  }

  if (!have_final_eval) {
    result.final_eval = evaluate_policy(net, store, cfg.env_config(),
                                        cfg.train.eval_scenarios, cfg.eval.seed);
  }
  write_eval_report_csv(cfg.out_dir + "/eval_final.csv", result.final_eval);
  store.save(final_path, checkpoint_meta(cfg, result.updates_run));
  store.save(latest_path, checkpoint_meta(cfg, result.updates_run));
  result.checkpoint_path = final_path;
  logln(log, "final: " + format_eval_report(result.final_eval));
  return result;
}

EvalReport run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    const std::string& trajectory_path,
                    const std::string& episode_path, std::ostream* log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  LoadedPolicy lp = load_policy(cfg, checkpoint_path);

  const EvalReport report = evaluate_policy(lp.net, lp.store, cfg.env_config(),
                                            cfg.eval.n_scenarios, cfg.eval.seed);
  write_eval_report_csv(cfg.out_dir + "/eval_report.csv", report);
  logln(log, format_eval_report(report));

  if (!trajectory_path.empty() || !episode_path.empty()) {
    const EpisodeDumpResult ep = run_episode_dump(
        lp.net, lp.store, cfg.env_config(),
        derive_seed(cfg.eval.seed, "eval-scenario", 0),
        derive_seed(cfg.eval.seed, "eval-noise", 0));
    if (!trajectory_path.empty()) write_trajectory_csv(trajectory_path, ep.dump);
    if (!episode_path.empty()) write_episode_csv(episode_path, ep.dump);
    logln(log, std::string("dumped scenario 0 (") + to_string(ep.status) + ", " +
                   std::to_string(ep.dump.rows.size()) + " steps)");
  }
  return report;
}

std::vector<ComparisonRow> run_ablate(const ExperimentConfig& cfg,
                                      const std::string& checkpoint_a,
                                      const std::string& checkpoint_b,
                                      std::ostream* log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  // Sort the two checkpoints into (gnn, flat) by their recorded backbone.
  auto backbone_of = [](const std::string& path) {
    const auto meta = read_checkpoint_meta(path);
    const auto it = meta.find("backbone");
    if (it == meta.end())
      throw ConfigError("checkpoint " + path + " lacks backbone metadata");
    return backbone_from_string(it->second);
  };
  const BackboneKind kind_a = backbone_of(checkpoint_a);
  const BackboneKind kind_b = backbone_of(checkpoint_b);
  if (kind_a == kind_b)
    throw ConfigError("ablation needs one graph-backbone and one flat-backbone "
                      "checkpoint; both files hold " + backbone_to_string(kind_a));
  const std::string& gnn_path = kind_a == BackboneKind::gnn ? checkpoint_a : checkpoint_b;
  const std::string& flat_path = kind_a == BackboneKind::gnn ? checkpoint_b : checkpoint_a;

  struct Entry {
    std::string label;  // Table-style network label
    BackboneKind kind;
    std::string path;
  };
  const std::vector<Entry> entries = {
      {"GNN", BackboneKind::gnn, gnn_path},
      {"NN", BackboneKind::flat, flat_path},
  };

  std::vector<ComparisonRow> rows;
  std::vector<EvalReport> nominal(entries.size());

  for (std::size_t i = 0; i < entries.size(); ++i) {
    ExperimentConfig net_cfg = cfg;
    net_cfg.network.backbone = entries[i].kind;
    LoadedPolicy lp = load_policy(net_cfg, entries[i].path);
    nominal[i] = evaluate_policy(lp.net, lp.store, net_cfg.env_config(0.0),
                                 cfg.eval.n_scenarios, cfg.eval.seed);
    ComparisonRow row;
    row.scenario = "Nominal";
    row.network = entries[i].label;
    row.noise_stddev = 0.0;
    row.report = nominal[i];
    rows.push_back(row);
  }

  for (double noise : cfg.ablation.noise_stddev) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      ExperimentConfig net_cfg = cfg;
      net_cfg.network.backbone = entries[i].kind;
      LoadedPolicy lp = load_policy(net_cfg, entries[i].path);
      ComparisonRow row;
      row.scenario = "Ablation";
      row.network = entries[i].label;
      row.noise_stddev = noise;
      row.report = evaluate_policy(lp.net, lp.store, net_cfg.env_config(noise),
                                   cfg.eval.n_scenarios, cfg.eval.seed);
      row.delta_success = nominal[i].success_rate - row.report.success_rate;
      row.delta_collision = row.report.collision_rate - nominal[i].collision_rate;
      rows.push_back(row);
    }
  }

  write_comparison_csv(cfg.out_dir + "/comparison.csv", rows, cfg.eval.seed,
                       config_hash(cfg));
  logln(log, format_comparison_table(rows));
  return rows;
}

ReplayResult run_replay(const ExperimentConfig& cfg,
                        const std::string& trajectory_path,
                        const std::string& episode_path, std::ostream* log) {
  cfg.validate();
  const ReplayResult result =
      replay_episode(trajectory_path, episode_path, cfg.env_config());
  if (result.ok) {
    logln(log, "replay ok: " + std::to_string(result.steps) + " steps, final status " +
                   to_string(result.final_status));
  } else {
    logln(log, "replay mismatch: " + result.message);
  }
  return result;
}

EpisodeDumpResult run_episode_dump(const ActorCritic& net, ParameterStore& store,
                                   const EnvConfig& env_cfg,
                                   std::uint64_t scenario_seed,
                                   std::uint64_t noise_seed) {
  Environment env(env_cfg);
  env.reset(scenario_seed, noise_seed);

  EpisodeDumpResult result;
  result.dump.worlds.push_back(env.world());

  int guard = env_cfg.episode.max_steps + 4;
  while (env.active()) {
    if (--guard < 0) throw std::logic_error("run_episode_dump: episode failed to end");
    Observation obs = env.observe(net.cfg.backbone);
    GradTape tape(store);
    ActorForward af = actor_forward(tape, net, obs);
    const Control executed =
        clamp_control(action_to_control(af.dist.mean), env_cfg.sim.bounds);
    const Environment::StepOutcome out = env.step(executed);
    result.episode_return += out.reward;
    result.status = out.status;

    EpisodeRow row;
    row.step = env.world().step_count;
    row.control = executed;
    row.reward = out.reward;
    row.status = out.status;
    result.dump.rows.push_back(row);
    result.dump.worlds.push_back(env.world());
  }
  return result;
}

}  // namespace lanegnn
