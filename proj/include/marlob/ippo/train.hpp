#pragma once

#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "marlob/ippo/checkpoint.hpp"
#include "marlob/ippo/rollout.hpp"

namespace marlob::ippo {

struct TrainConfig {
  int n_envs = 64;
  int rollout_len = 64;
  int updates = 100;
  int hidden = 32;
  double discount = 0.99;
  double gae_lambda = 0.95;
  PpoConfig ppo;
  std::uint64_t seed = 0;
  int workers = 1;  // 0 = hardware concurrency
  double eval_fraction = 0.2;
  int eval_every = 5;
  int max_eval_episodes = 16;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.n_envs < 1) throw std::invalid_argument("train.n_envs must be >= 1");
  if (cfg.rollout_len < 1) throw std::invalid_argument("train.rollout_len must be >= 1");
  if (cfg.updates < 1) throw std::invalid_argument("train.updates must be >= 1");
  if (cfg.hidden < 1) throw std::invalid_argument("train.hidden must be >= 1");
  if (!(cfg.ppo.clip_eps > 0.0 && cfg.ppo.clip_eps < 1.0))
    throw std::invalid_argument("train.clip_eps must lie in (0, 1)");
  if (!(cfg.discount > 0.0 && cfg.discount <= 1.0))
    throw std::invalid_argument("train.discount must lie in (0, 1]");
  if (!(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0))
    throw std::invalid_argument("train.gae_lambda must lie in [0, 1]");
  if (cfg.ppo.epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
  if (cfg.ppo.minibatches < 1) throw std::invalid_argument("train.minibatches must be >= 1");
  if (cfg.ppo.lr <= 0.0) throw std::invalid_argument("train.lr must be > 0");
  if (cfg.eval_fraction < 0.0 || cfg.eval_fraction >= 1.0)
    throw std::invalid_argument("train.eval_fraction must lie in [0, 1)");
}

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Last max_eval_episodes * eval_fraction of the index is held out for proxy
// metrics; the remainder is the training pool.
struct EpisodeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

inline EpisodeSplit split_episodes(std::size_t n_episodes, double eval_fraction,
                                   int max_eval_episodes) {
  if (n_episodes == 0) throw std::invalid_argument("split_episodes: no episodes");
  std::size_t n_eval = static_cast<std::size_t>(
      static_cast<double>(n_episodes) * eval_fraction);
  n_eval = std::min<std::size_t>({n_eval, n_episodes - 1,
                                  static_cast<std::size_t>(std::max(0, max_eval_episodes))});
  EpisodeSplit split;
  for (std::size_t i = 0; i < n_episodes - n_eval; ++i) split.train.push_back(i);
  for (std::size_t i = n_episodes - n_eval; i < n_episodes; ++i) split.eval.push_back(i);
  return split;
}

struct EvalTypeStats {
  double mean_pv = 0.0;
  double mean_slippage = 0.0;
  double mean_completion = 0.0;
  double mean_terminal_inv_sq = 0.0;
  std::int64_t episodes = 0;
};

// Greedy (argmax) evaluation of the per-type policies over a fixed episode
// set; sequential and fully deterministic.
inline std::vector<EvalTypeStats> evaluate_policies(const data::MessageStore& store,
                                                    const data::EpisodeIndex& index,
                                                    const env::EnvConfig& env_cfg,
                                                    std::span<const std::size_t> episodes,
                                                    std::vector<PolicyNet>& nets,
                                                    std::uint64_t seed) {
  std::vector<EvalTypeStats> stats(env_cfg.specs.size());
  if (episodes.empty()) return stats;
  env::MarketEnv environment(&store, &index, env_cfg, seed, 0);
  const std::size_t n_agents = environment.n_agents();
  std::vector<std::vector<double>> hidden(n_agents);
  std::vector<std::vector<double>> hidden_next(n_agents);
  std::vector<double> logits;
  std::vector<int> actions(n_agents, 0);
  for (const std::size_t ep : episodes) {
    environment.reset(ep);
    for (std::size_t a = 0; a < n_agents; ++a) {
      const auto tau = environment.spec_index_of(a);
      hidden[a].assign(static_cast<std::size_t>(nets[tau].hidden), 0.0);
      hidden_next[a].assign(static_cast<std::size_t>(nets[tau].hidden), 0.0);
    }
    while (!environment.terminal()) {
      for (std::size_t a = 0; a < n_agents; ++a) {
        const auto tau = environment.spec_index_of(a);
        PolicyNet& net = nets[tau];
        logits.assign(static_cast<std::size_t>(net.n_actions), 0.0);
        double value = 0.0;
        const std::uint8_t reset_flag = 0;
        policy_forward(net, environment.output().obs[a], hidden[a],
                       std::span(&reset_flag, 1), 1, logits, std::span(&value, 1),
                       hidden_next[a]);
        std::swap(hidden[a], hidden_next[a]);
        actions[a] = argmax_action(logits);
      }
      environment.step_ids(actions);
    }
    for (std::size_t a = 0; a < n_agents; ++a) {
      const auto tau = environment.spec_index_of(a);
      const auto& info = environment.output().infos[a];
      stats[tau].mean_pv += info.portfolio_value;
      stats[tau].mean_slippage += info.slippage_total;
      const auto& spec = env_cfg.specs[tau];
      if (spec.type == env::AgentType::Executor)
        stats[tau].mean_completion += 1.0 - static_cast<double>(info.task_remaining) /
                                                static_cast<double>(spec.params.task_size);
      stats[tau].mean_terminal_inv_sq +=
          static_cast<double>(info.inventory) * static_cast<double>(info.inventory);
    }
  }
  for (std::size_t tau = 0; tau < stats.size(); ++tau) {
    const double samples = static_cast<double>(episodes.size()) *
                           static_cast<double>(env_cfg.specs[tau].count);
    stats[tau].mean_pv /= samples;
    stats[tau].mean_slippage /= samples;
    stats[tau].mean_completion /= samples;
    stats[tau].mean_terminal_inv_sq /= samples;
    stats[tau].episodes = static_cast<std::int64_t>(episodes.size());
  }
  return stats;
}

struct TrainResult {
  std::vector<PolicyNet> nets;
  std::vector<std::string> type_names;
  EpisodeSplit split;
  int updates_done = 0;
};

// Full IPPO training run over the market environment. Metrics are emitted as
// one JSON line per update; the stream contains no wall-clock values, so a
// fixed (seed, config) pair reproduces it byte-for-byte at any worker count.
inline TrainResult train(const data::MessageStore& store, const env::EnvConfig& env_cfg,
                         const TrainConfig& cfg, std::ostream* metrics,
                         std::uint64_t config_hash = 0,
                         const std::string& checkpoint_path = "") {
  env::validate(env_cfg);
  validate(cfg);
  const auto index = data::build_episode_index(store, env_cfg.steps_per_episode,
                                               env_cfg.messages_per_step,
                                               env_cfg.start_stride_steps);
  if (index.episode_count() == 0)
    throw std::runtime_error("train: store too short for a single episode");
  const auto split = split_episodes(index.episode_count(), cfg.eval_fraction,
                                    cfg.max_eval_episodes);

  util::ThreadPool pool(resolve_workers(cfg.workers));
  MarketVecEnv venv(&store, &index, env_cfg, split.train, cfg.seed, cfg.n_envs, &pool);

  TrainResult result;
  for (std::size_t tau = 0; tau < env_cfg.specs.size(); ++tau) {
    result.nets.push_back(make_policy_net(
        static_cast<int>(venv.obs_dim(static_cast<int>(tau))), cfg.hidden,
        venv.n_actions(static_cast<int>(tau)), make_key(cfg.seed, 0x6e657473ull, tau)));
    result.type_names.push_back(std::string(to_string(env_cfg.specs[tau].type)) + "_" +
                                std::to_string(tau));
  }
  result.split = split;
  std::vector<AdamState> adams(result.nets.size());

  TrainLoopConfig lcfg;
  lcfg.updates = cfg.updates;
  lcfg.rollout_len = cfg.rollout_len;
  lcfg.discount = cfg.discount;
  lcfg.gae_lambda = cfg.gae_lambda;
  lcfg.seed = cfg.seed;
  lcfg.ppo = cfg.ppo;

  train_loop(venv, result.nets, adams, lcfg, [&](int update,
                                                 std::span<const UpdateMetrics> m) {
    result.updates_done = update;
    if (metrics == nullptr) {
      venv.clear_episode_stats();
      return;
    }
    nlohmann::json line;
    line["update"] = update;
    nlohmann::json types = nlohmann::json::array();
    for (std::size_t tau = 0; tau < m.size(); ++tau) {
      const auto roll = venv.episode_stats(static_cast<int>(tau));
      const double samples = std::max(1.0, static_cast<double>(roll.episodes) *
                                               env_cfg.specs[tau].count);
      nlohmann::json t;
      t["name"] = result.type_names[tau];
      t["pg_loss"] = m[tau].pg_loss;
      t["v_loss"] = m[tau].v_loss;
      t["entropy"] = m[tau].entropy;
      t["approx_kl"] = m[tau].approx_kl;
      t["clip_frac"] = m[tau].clip_frac;
      t["grad_norm"] = m[tau].grad_norm;
      t["mean_reward"] = m[tau].mean_reward;
      t["rollout_pv"] = roll.pv_sum / samples;
      t["rollout_slippage"] = roll.slippage_sum / samples;
      t["rollout_completion"] = roll.completion_sum / samples;
      t["rollout_episodes"] = roll.episodes;
      types.push_back(t);
    }
    line["types"] = types;
    venv.clear_episode_stats();
    if (!split.eval.empty() &&
        (update % cfg.eval_every == 0 || update == cfg.updates)) {
      const auto eval = evaluate_policies(store, index, env_cfg, split.eval, result.nets,
                                          cfg.seed);
      nlohmann::json ev = nlohmann::json::array();
      for (std::size_t tau = 0; tau < eval.size(); ++tau) {
        nlohmann::json t;
        t["name"] = result.type_names[tau];
        t["pv"] = eval[tau].mean_pv;
        t["slippage"] = eval[tau].mean_slippage;
        t["completion"] = eval[tau].mean_completion;
        t["terminal_inv_sq"] = eval[tau].mean_terminal_inv_sq;
        t["episodes"] = eval[tau].episodes;
        ev.push_back(t);
      }
      line["eval"] = ev;
    }
    (*metrics) << line.dump() << '\n';
  });

  if (!checkpoint_path.empty())
    save_checkpoint(checkpoint_path, result.nets, result.type_names, config_hash);
  return result;
}

}  // namespace marlob::ippo
