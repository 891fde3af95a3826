#include "lanegnn/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lanegnn/util.hpp"

namespace lanegnn {

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("train.gamma must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw ConfigError("train.gae_lambda must be in [0, 1]");
  if (!(clip_eps > 0.0)) throw ConfigError("train.clip_eps must be positive");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (epochs_per_update < 1) throw ConfigError("train.epochs_per_update must be >= 1");
  if (minibatch_size < 1) throw ConfigError("train.minibatch_size must be >= 1");
  if (steps_per_update < 1) throw ConfigError("train.steps_per_update must be >= 1");
  if (!(value_coef >= 0.0)) throw ConfigError("train.value_coef must be >= 0");
  if (!(entropy_coef >= 0.0)) throw ConfigError("train.entropy_coef must be >= 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("train.max_grad_norm must be positive");
  if (total_updates < 1) throw ConfigError("train.total_updates must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  if (eval_every < 0) throw ConfigError("train.eval_every must be >= 0");
  if (eval_scenarios < 1) throw ConfigError("train.eval_scenarios must be >= 1");
  if (!(early_stop_success_rate >= 0.0 && early_stop_success_rate <= 1.0))
    throw ConfigError("train.early_stop_success_rate must be in [0, 1]");
  if (!(early_stop_max_collision_rate >= 0.0 && early_stop_max_collision_rate <= 1.0))
    throw ConfigError("train.early_stop_max_collision_rate must be in [0, 1]");
}

double td_residual(double reward, double gamma, double v_next, double v_now,
                   bool terminal) {
  const double bootstrap = terminal ? 0.0 : gamma * v_next;
  return reward + bootstrap - v_now;
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda,
                        bool normalize) {
  const std::size_t n = buffer.steps.size();
  buffer.advantages.assign(n, 0.0);
  buffer.value_targets.assign(n, 0.0);
  if (n == 0) return;

  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const Transition& tr = buffer.steps[i];
    double v_next;
    if (tr.terminal) {
      v_next = 0.0;  // masked inside td_residual anyway
    } else if (i + 1 == n) {
      v_next = buffer.truncated_tail ? buffer.bootstrap_value : 0.0;
    } else {
      v_next = buffer.steps[i + 1].value_old;
    }
    const double delta = td_residual(tr.reward, gamma, v_next, tr.value_old, tr.terminal);
    const double mask = tr.terminal ? 0.0 : 1.0;
    running = delta + gamma * lambda * mask * running;
    buffer.advantages[i] = running;
  }

  // Regression targets for the critic come from the raw advantages; the
  // normalization below only rescales the actor's weighting of samples.
  for (std::size_t i = 0; i < n; ++i)
    buffer.value_targets[i] = buffer.advantages[i] + buffer.steps[i].value_old;

  if (normalize) {
    double mean = 0.0;
    for (double a : buffer.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : buffer.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    // max() rather than an additive epsilon so non-degenerate batches come
    // out with variance exactly 1 (a constant batch maps to all zeros).
    const double denom = std::max(std::sqrt(var), 1e-8);
    for (double& a : buffer.advantages) a = (a - mean) / denom;
  }
  require_finite(buffer.advantages, "advantages");
  require_finite(buffer.value_targets, "value targets");
}

RolloutCollector::RolloutCollector(EnvConfig env_cfg, TrainConfig cfg)
    : env_cfg_(std::move(env_cfg)), cfg_(std::move(cfg)), env_(env_cfg_) {}

void RolloutCollector::begin_episode() {
  const std::uint64_t scenario = derive_seed(cfg_.seed, "train-scenario", episode_counter_);
  const std::uint64_t noise = derive_seed(cfg_.seed, "train-noise", episode_counter_);
  action_rng_ = Rng(derive_seed(cfg_.seed, "train-action", episode_counter_));
  env_.reset(scenario, noise);
  episode_counter_ += 1;
  episode_return_ = 0.0;
}

RolloutCollector::Result RolloutCollector::collect(const ActorCritic& net,
                                                   ParameterStore& store) {
  Result result;
  result.buffer.steps.reserve(static_cast<std::size_t>(cfg_.steps_per_update));
  double return_sum = 0.0;

  if (!env_.active()) begin_episode();

  for (int step = 0; step < cfg_.steps_per_update; ++step) {
    Transition tr;
    tr.obs = env_.observe(net.cfg.backbone);
    {
      GradTape tape(store);
      ActorForward af = actor_forward(tape, net, tr.obs);
      tr.action = af.dist.sample(action_rng_);
      tr.log_prob_old = af.dist.log_prob(tr.action);
      tr.value_old = critic_forward(tape, net, tr.obs).value;
    }

    const Environment::StepOutcome out = env_.step(action_to_control(tr.action));
    tr.reward = out.reward;
    tr.terminal = out.status != TerminalStatus::running;
    episode_return_ += out.reward;
    result.buffer.steps.push_back(std::move(tr));

    if (out.status != TerminalStatus::running) {
      result.stats.episodes += 1;
      switch (out.status) {
        case TerminalStatus::goal_reached: result.stats.successes += 1; break;
        case TerminalStatus::collision: result.stats.collisions += 1; break;
        case TerminalStatus::timeout: result.stats.timeouts += 1; break;
        case TerminalStatus::running: break;
      }
      return_sum += episode_return_;
      begin_episode();
    }
  }

  if (!result.buffer.steps.back().terminal) {
    // Episode cut mid-flight: bootstrap the tail from the critic.
    Observation obs = env_.observe(net.cfg.backbone);
    GradTape tape(store);
    result.buffer.bootstrap_value = critic_forward(tape, net, obs).value;
    result.buffer.truncated_tail = true;
  }

  if (result.stats.episodes > 0)
    result.stats.mean_return = return_sum / result.stats.episodes;
  return result;
}

namespace {

struct SampleTerms {
  double surrogate = 0.0;
  double value_error = 0.0;
  double entropy = 0.0;
  double ratio = 0.0;
  double sigma_mean = 0.0;
};

// Forward both networks on one transition; with_grads additionally seeds
// both tapes so parameter gradients accumulate into the store.
SampleTerms sample_forward(const ActorCritic& net, ParameterStore& store,
                           const Transition& tr, double advantage,
                           double value_target, const TrainConfig& cfg,
                           bool with_grads, double inv_batch) {
  SampleTerms terms;

  GradTape actor_tape(store);
  ActorForward af = actor_forward(actor_tape, net, tr.obs);
  const double log_prob_new = af.dist.log_prob(tr.action);
  const double ratio = std::exp(log_prob_new - tr.log_prob_old);
  const double unclipped = ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantage;
  terms.surrogate = std::min(unclipped, clipped);
  terms.entropy = af.dist.entropy();
  terms.ratio = ratio;
  for (double s : af.dist.stddev) terms.sigma_mean += s;
  terms.sigma_mean /= af.dist.dim();

  GradTape critic_tape(store);
  CriticForward cf = critic_forward(critic_tape, net, tr.obs);
  terms.value_error = cf.value - value_target;

  if (with_grads) {
    // d loss / d log_prob_new: the surrogate only passes gradient when the
    // unclipped branch attains the min (d(ratio * A)/d log_prob = ratio * A).
    const double active = unclipped <= clipped ? unclipped : 0.0;
    const double dloss_dlogp = -active * inv_batch;
    std::vector<double> dmean(af.dist.dim(), 0.0);
    std::vector<double> dstddev(af.dist.dim(), 0.0);
    af.dist.log_prob_grad(tr.action, dloss_dlogp, dmean, dstddev);
    if (cfg.entropy_coef != 0.0)
      af.dist.entropy_grad(-cfg.entropy_coef * inv_batch, dstddev);
    actor_tape.backward(af.projection, af.dist.chain_to_raw(dmean, dstddev));

    const double dloss_dvalue = cfg.value_coef * 2.0 * terms.value_error * inv_batch;
    critic_tape.backward(cf.value_node, {dloss_dvalue});
  }
  return terms;
}

}  // namespace

double ppo_loss(const ActorCritic& net, ParameterStore& store,
                const RolloutBuffer& buffer, const TrainConfig& cfg) {
  if (buffer.steps.empty()) throw std::logic_error("ppo_loss: empty buffer");
  double surrogate = 0.0, value_sq = 0.0, entropy = 0.0;
  for (std::size_t i = 0; i < buffer.steps.size(); ++i) {
    SampleTerms t = sample_forward(net, store, buffer.steps[i], buffer.advantages[i],
                                   buffer.value_targets[i], cfg,
                                   /*with_grads=*/false, 0.0);
    surrogate += t.surrogate;
    value_sq += t.value_error * t.value_error;
    entropy += t.entropy;
  }
  const double n = static_cast<double>(buffer.steps.size());
  return -surrogate / n + cfg.value_coef * value_sq / n - cfg.entropy_coef * entropy / n;
}

UpdateStats ppo_update(const RolloutBuffer& buffer, const ActorCritic& net,
                       ParameterStore& store, AdamOptimizer& opt,
                       const TrainConfig& cfg, Rng& shuffle_rng) {
  const std::size_t n = buffer.steps.size();
  if (n == 0) throw std::logic_error("ppo_update: empty buffer");
  if (buffer.advantages.size() != n || buffer.value_targets.size() != n)
    throw std::logic_error("ppo_update: advantages not computed");

  UpdateStats stats;
  std::size_t visits = 0;
  std::size_t clipped_visits = 0;
  std::size_t minibatches = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += cfg.minibatch_size) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::size_t mb_n = end - start;
      const double inv_batch = 1.0 / static_cast<double>(mb_n);

      store.zero_grads();
      double surrogate = 0.0, value_sq = 0.0, entropy = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        SampleTerms t = sample_forward(net, store, buffer.steps[idx],
                                       buffer.advantages[idx], buffer.value_targets[idx],
                                       cfg, /*with_grads=*/true, inv_batch);
        surrogate += t.surrogate;
        value_sq += t.value_error * t.value_error;
        entropy += t.entropy;
        stats.mean_sigma += t.sigma_mean;
        if (std::abs(t.ratio - 1.0) > cfg.clip_eps) clipped_visits += 1;
        visits += 1;
      }

      const double actor_loss = -surrogate * inv_batch;
      const double critic_loss = value_sq * inv_batch;
      const double loss = actor_loss + cfg.value_coef * critic_loss -
                          cfg.entropy_coef * entropy * inv_batch;
      if (!std::isfinite(loss))
        throw TrainingDivergedError("non-finite loss in policy update");
      stats.actor_loss += actor_loss;
      stats.critic_loss += critic_loss;
      stats.entropy += entropy * inv_batch;

      const double grad_norm = store.grad_norm();
      if (!std::isfinite(grad_norm))
        throw TrainingDivergedError("non-finite gradient in policy update");
      stats.grad_norm += grad_norm;
      minibatches += 1;

      store.clip_grad_norm(cfg.max_grad_norm);
      opt.step(store, cfg.lr);
    }
  }
  // Gradients of the last minibatch are left in the store (callers zero
  // before accumulating); tests inspect them directly.

  stats.actor_loss /= static_cast<double>(minibatches);
  stats.critic_loss /= static_cast<double>(minibatches);
  stats.entropy /= static_cast<double>(minibatches);
  stats.grad_norm /= static_cast<double>(minibatches);
  stats.mean_sigma /= static_cast<double>(visits);
  stats.clip_fraction = static_cast<double>(clipped_visits) / static_cast<double>(visits);
  return stats;
}

EvalReport evaluate_policy(const ActorCritic& net, ParameterStore& store,
                           const EnvConfig& env_cfg, int n_scenarios,
                           std::uint64_t seed, bool sample_actions) {
  if (n_scenarios < 1) throw ConfigError("evaluate_policy: n_scenarios must be >= 1");
  EvalReport rep;
  rep.episodes = n_scenarios;
  double return_sum = 0.0;

  for (int i = 0; i < n_scenarios; ++i) {
    Environment env(env_cfg);
    env.reset(derive_seed(seed, "eval-scenario", static_cast<std::uint64_t>(i)),
              derive_seed(seed, "eval-noise", static_cast<std::uint64_t>(i)));
    Rng action_rng(derive_seed(seed, "eval-action", static_cast<std::uint64_t>(i)));

    double episode_return = 0.0;
    TerminalStatus status = TerminalStatus::running;
    int guard = env_cfg.episode.max_steps + 4;
    while (env.active()) {
      if (--guard < 0) throw std::logic_error("evaluate_policy: episode failed to end");
      Observation obs = env.observe(net.cfg.backbone);
      GradTape tape(store);
      ActorForward af = actor_forward(tape, net, obs);
      const std::vector<double> action =
          sample_actions ? af.dist.sample(action_rng) : af.dist.mean;
      const Environment::StepOutcome out = env.step(action_to_control(action));
      episode_return += out.reward;
      status = out.status;
    }
    return_sum += episode_return;
    switch (status) {
      case TerminalStatus::goal_reached: rep.successes += 1; break;
      case TerminalStatus::collision: rep.collisions += 1; break;
      case TerminalStatus::timeout: rep.timeouts += 1; break;
      case TerminalStatus::running: break;
    }
  }

  rep.success_rate = static_cast<double>(rep.successes) / n_scenarios;
  rep.collision_rate = static_cast<double>(rep.collisions) / n_scenarios;
  rep.timeout_rate = static_cast<double>(rep.timeouts) / n_scenarios;
  rep.mean_return = return_sum / n_scenarios;
  return rep;
}

}  // namespace lanegnn
