#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "marlob/core/rng.hpp"
#include "marlob/env/env.hpp"
#include "marlob/ippo/gae.hpp"
#include "marlob/ippo/ppo.hpp"
#include "marlob/util/thread_pool.hpp"

namespace marlob::ippo {

// The rollout engine is generic over a vectorized environment exposing:
//   int n_types();
//   std::size_t n_streams(int type);
//   std::size_t obs_dim(int type);
//   int n_actions(int type);
//   void reset_all();
//   void gather(int type, double* obs_out, std::uint8_t* reset_out);
//   void set_action(int type, std::size_t stream, int action);
//   void step_all();
//   double reward(int type, std::size_t stream) const;
//   bool done(int type, std::size_t stream) const;
// The market adapter below implements it; tests plug in toy environments
// (e.g. a bandit) to drive the identical collection/update path.

struct TrainLoopConfig {
  int updates = 10;
  int rollout_len = 64;
  double discount = 0.99;
  double gae_lambda = 0.95;
  std::uint64_t seed = 0;
  PpoConfig ppo;
};

// Collects one T-step rollout for every type. Hidden states persist across
// rollouts and are zeroed at episode boundaries via the reset flags.
template <class VecEnv>
void collect_rollout(VecEnv& env, std::vector<PolicyNet>& nets,
                     std::vector<std::vector<double>>& hidden,
                     std::vector<RolloutBatch>& batches, const TrainLoopConfig& cfg,
                     std::uint64_t update_index) {
  const int n_types = env.n_types();
  const std::size_t T = static_cast<std::size_t>(cfg.rollout_len);
  std::vector<std::vector<double>> logits(static_cast<std::size_t>(n_types));
  std::vector<std::vector<double>> hidden_next(static_cast<std::size_t>(n_types));
  for (int tau = 0; tau < n_types; ++tau) {
    const std::size_t B = env.n_streams(tau);
    const std::size_t H = static_cast<std::size_t>(nets[static_cast<std::size_t>(tau)].hidden);
    auto& batch = batches[static_cast<std::size_t>(tau)];
    if (batch.T != T || batch.B != B)
      batch.resize(T, B, env.obs_dim(tau), env.n_actions(tau),
                   nets[static_cast<std::size_t>(tau)].hidden);
    logits[static_cast<std::size_t>(tau)].assign(
        B * static_cast<std::size_t>(env.n_actions(tau)), 0.0);
    hidden_next[static_cast<std::size_t>(tau)].assign(B * H, 0.0);
    std::copy(hidden[static_cast<std::size_t>(tau)].begin(),
              hidden[static_cast<std::size_t>(tau)].end(), batch.h0.begin());
  }

  for (std::size_t t = 0; t < T; ++t) {
    for (int tau = 0; tau < n_types; ++tau) {
      auto& batch = batches[static_cast<std::size_t>(tau)];
      auto& net = nets[static_cast<std::size_t>(tau)];
      const std::size_t B = batch.B;
      const std::size_t D = batch.obs_dim;
      const std::size_t A = static_cast<std::size_t>(batch.n_actions);
      const std::size_t H = static_cast<std::size_t>(net.hidden);
      env.gather(tau, batch.obs.data() + t * B * D, batch.resets.data() + t * B);
      policy_forward(net, std::span(batch.obs.data() + t * B * D, B * D),
                     hidden[static_cast<std::size_t>(tau)],
                     std::span(batch.resets.data() + t * B, B), B,
                     logits[static_cast<std::size_t>(tau)],
                     std::span(batch.values.data() + t * B, B),
                     hidden_next[static_cast<std::size_t>(tau)]);
      std::swap(hidden[static_cast<std::size_t>(tau)], hidden_next[static_cast<std::size_t>(tau)]);
      for (std::size_t s = 0; s < B; ++s) {
        CounterRng rng(make_key(cfg.seed, static_cast<std::uint64_t>(RngStream::ActionSample),
                                static_cast<std::uint64_t>(tau), update_index, t, s));
        double logp = 0.0;
        const int action = sample_categorical(
            std::span(logits[static_cast<std::size_t>(tau)].data() + s * A, A),
            rng.uniform(), &logp);
        batch.actions[t * B + s] = action;
        batch.log_probs[t * B + s] = logp;
        env.set_action(tau, s, action);
      }
    }
    env.step_all();
    for (int tau = 0; tau < n_types; ++tau) {
      auto& batch = batches[static_cast<std::size_t>(tau)];
      const std::size_t B = batch.B;
      for (std::size_t s = 0; s < B; ++s) {
        batch.rewards[t * B + s] = env.reward(tau, s);
        batch.dones[t * B + s] = env.done(tau, s) ? 1 : 0;
      }
    }
  }

  // Bootstrap values from the post-rollout observations; the hidden state is
  // left untouched so the next rollout re-runs this forward identically.
  for (int tau = 0; tau < n_types; ++tau) {
    auto& batch = batches[static_cast<std::size_t>(tau)];
    auto& net = nets[static_cast<std::size_t>(tau)];
    const std::size_t B = batch.B;
    const std::size_t D = batch.obs_dim;
    std::vector<double> boot_obs(B * D);
    std::vector<std::uint8_t> boot_reset(B);
    env.gather(tau, boot_obs.data(), boot_reset.data());
    std::vector<double> scratch_hidden(hidden[static_cast<std::size_t>(tau)].size());
    policy_forward(net, boot_obs, hidden[static_cast<std::size_t>(tau)], boot_reset, B,
                   logits[static_cast<std::size_t>(tau)],
                   std::span(batch.values.data() + T * B, B), scratch_hidden);
    compute_gae(batch.rewards, batch.values, batch.dones, T, B, cfg.discount,
                cfg.gae_lambda, batch.advantages, batch.returns);
  }
}

// Full training loop: collect, then update each type in an outer sequential
// loop. per_update(update_index, metrics) runs after every update.
template <class VecEnv, class PerUpdate>
void train_loop(VecEnv& env, std::vector<PolicyNet>& nets, std::vector<AdamState>& adams,
                const TrainLoopConfig& cfg, PerUpdate&& per_update) {
  const int n_types = env.n_types();
  std::vector<RolloutBatch> batches(static_cast<std::size_t>(n_types));
  std::vector<std::vector<double>> hidden(static_cast<std::size_t>(n_types));
  for (int tau = 0; tau < n_types; ++tau)
    hidden[static_cast<std::size_t>(tau)].assign(
        env.n_streams(tau) * static_cast<std::size_t>(nets[static_cast<std::size_t>(tau)].hidden),
        0.0);
  env.reset_all();
  std::vector<UpdateMetrics> metrics(static_cast<std::size_t>(n_types));
  for (int update = 1; update <= cfg.updates; ++update) {
    collect_rollout(env, nets, hidden, batches, cfg, static_cast<std::uint64_t>(update));
    for (int tau = 0; tau < n_types; ++tau)
      metrics[static_cast<std::size_t>(tau)] =
          ppo_update(nets[static_cast<std::size_t>(tau)], adams[static_cast<std::size_t>(tau)],
                     batches[static_cast<std::size_t>(tau)], cfg.ppo, cfg.seed,
                     static_cast<std::uint64_t>(update), static_cast<std::uint64_t>(tau));
    per_update(update, std::span<const UpdateMetrics>(metrics.data(), metrics.size()));
  }
}

// Vectorized market environment: one MarketEnv per parallel instance,
// stepped by a worker pool, auto-resetting with round-robin episode ids per
// env index. Streams of type tau are ordered env-major:
// stream = env_index * count(tau) + agent_within_type.
class MarketVecEnv {
 public:
  MarketVecEnv(const data::MessageStore* store, const data::EpisodeIndex* index,
               const env::EnvConfig& cfg, std::span<const std::size_t> episode_pool,
               std::uint64_t seed, int n_envs, util::ThreadPool* pool)
      : cfg_(cfg), episode_pool_(episode_pool.begin(), episode_pool.end()), pool_(pool) {
    if (n_envs < 1) throw std::invalid_argument("MarketVecEnv: n_envs >= 1");
    if (episode_pool_.empty()) throw std::invalid_argument("MarketVecEnv: empty episode pool");
    envs_.reserve(static_cast<std::size_t>(n_envs));
    for (int e = 0; e < n_envs; ++e) envs_.emplace_back(store, index, cfg, seed, e);
    episode_cursor_.assign(static_cast<std::size_t>(n_envs), 0);
    type_offsets_.assign(cfg.specs.size(), 0);
    std::size_t off = 0;
    for (std::size_t s = 0; s < cfg.specs.size(); ++s) {
      type_offsets_[s] = off;
      off += static_cast<std::size_t>(cfg.specs[s].count);
    }
    agents_per_env_ = off;
    actions_.assign(envs_.size() * agents_per_env_, env::AgentAction{});
    just_reset_.assign(envs_.size(), 1);
    rewards_cache_.assign(envs_.size() * agents_per_env_, 0.0);
    dones_cache_.assign(envs_.size() * agents_per_env_, 0);
    episodes_finished_.assign(envs_.size(), 0);
    terminal_pv_.assign(envs_.size() * agents_per_env_, 0.0);
    terminal_slip_.assign(envs_.size() * agents_per_env_, 0.0);
    terminal_completion_.assign(envs_.size() * agents_per_env_, 0.0);
    terminal_inventory_.assign(envs_.size() * agents_per_env_, 0.0);
  }

  int n_types() const { return static_cast<int>(cfg_.specs.size()); }
  std::size_t n_envs() const { return envs_.size(); }
  std::size_t n_streams(int type) const {
    return envs_.size() * static_cast<std::size_t>(cfg_.specs[static_cast<std::size_t>(type)].count);
  }
  std::size_t obs_dim(int type) const {
    const auto& spec = cfg_.specs[static_cast<std::size_t>(type)];
    return agents::observation_size(spec.obs_space, cfg_.obs_depth);
  }
  int n_actions(int type) const {
    return env::action_arity(cfg_.specs[static_cast<std::size_t>(type)]);
  }
  const env::MarketEnv& instance(std::size_t e) const { return envs_[e]; }

  void reset_all() {
    for (std::size_t e = 0; e < envs_.size(); ++e) {
      envs_[e].reset(episode_for(e, 0));
      episode_cursor_[e] = 1;
      just_reset_[e] = 1;
    }
  }

  void gather(int type, double* obs_out, std::uint8_t* reset_out) {
    const auto count = static_cast<std::size_t>(cfg_.specs[static_cast<std::size_t>(type)].count);
    const std::size_t offset = type_offsets_[static_cast<std::size_t>(type)];
    const std::size_t dim = obs_dim(type);
    for (std::size_t e = 0; e < envs_.size(); ++e) {
      for (std::size_t k = 0; k < count; ++k) {
        const auto& obs = envs_[e].output().obs[offset + k];
        std::copy(obs.begin(), obs.end(), obs_out + (e * count + k) * dim);
        reset_out[e * count + k] = just_reset_[e];
      }
    }
  }

  void set_action(int type, std::size_t stream, int action) {
    const auto count = static_cast<std::size_t>(cfg_.specs[static_cast<std::size_t>(type)].count);
    const std::size_t e = stream / count;
    const std::size_t k = stream % count;
    auto& slot = actions_[e * agents_per_env_ + type_offsets_[static_cast<std::size_t>(type)] + k];
    slot = env::AgentAction{};
    slot.id = action;
  }

  void step_all() {
    struct Ctx {
      MarketVecEnv* self;
    } ctx{this};
    pool_->run(
        [](void* raw, int item) {
          auto* self = static_cast<Ctx*>(raw)->self;
          self->step_one(static_cast<std::size_t>(item));
        },
        &ctx, static_cast<int>(envs_.size()));
  }

  double reward(int type, std::size_t stream) const {
    const auto [e, a] = locate(type, stream);
    return rewards_cache_[e * agents_per_env_ + a];
  }
  bool done(int type, std::size_t stream) const {
    const auto [e, a] = locate(type, stream);
    return dones_cache_[e * agents_per_env_ + a] != 0;
  }

  // Terminal-episode statistics per type, accumulated since the last
  // clear_episode_stats(). Sums are env-ordered, per-agent-episode samples;
  // `episodes` counts finished env-episodes.
  struct EpisodeStats {
    double pv_sum = 0.0;
    double slippage_sum = 0.0;
    double completion_sum = 0.0;
    double inventory_sq_sum = 0.0;
    std::int64_t episodes = 0;
  };
  EpisodeStats episode_stats(int type) const {
    EpisodeStats out;
    const auto count = static_cast<std::size_t>(cfg_.specs[static_cast<std::size_t>(type)].count);
    const std::size_t offset = type_offsets_[static_cast<std::size_t>(type)];
    for (std::size_t e = 0; e < envs_.size(); ++e) {
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t slot = e * agents_per_env_ + offset + k;
        out.pv_sum += terminal_pv_[slot];
        out.slippage_sum += terminal_slip_[slot];
        out.completion_sum += terminal_completion_[slot];
        out.inventory_sq_sum += terminal_inventory_[slot];
      }
      out.episodes += episodes_finished_[e];
    }
    return out;
  }

  void clear_episode_stats() {
    std::fill(terminal_pv_.begin(), terminal_pv_.end(), 0.0);
    std::fill(terminal_slip_.begin(), terminal_slip_.end(), 0.0);
    std::fill(terminal_completion_.begin(), terminal_completion_.end(), 0.0);
    std::fill(terminal_inventory_.begin(), terminal_inventory_.end(), 0.0);
    std::fill(episodes_finished_.begin(), episodes_finished_.end(), 0);
  }

 private:
  std::pair<std::size_t, std::size_t> locate(int type, std::size_t stream) const {
    const auto count = static_cast<std::size_t>(cfg_.specs[static_cast<std::size_t>(type)].count);
    return {stream / count, type_offsets_[static_cast<std::size_t>(type)] + stream % count};
  }

  std::size_t episode_for(std::size_t e, std::size_t k) const {
    return episode_pool_[(e + k * envs_.size()) % episode_pool_.size()];
  }

  void step_one(std::size_t e) {
    auto& environment = envs_[e];
    environment.step(std::span<const env::AgentAction>(
        actions_.data() + e * agents_per_env_, agents_per_env_));
    for (std::size_t a = 0; a < agents_per_env_; ++a) {
      rewards_cache_[e * agents_per_env_ + a] = environment.output().rewards[a];
      dones_cache_[e * agents_per_env_ + a] = environment.output().dones[a];
    }
    just_reset_[e] = 0;
    if (environment.terminal()) {
      for (std::size_t a = 0; a < agents_per_env_; ++a) {
        const auto& info = environment.output().infos[a];
        const std::size_t slot = e * agents_per_env_ + a;
        terminal_pv_[slot] += info.portfolio_value;
        terminal_slip_[slot] += info.slippage_total;
        const auto& spec = environment.spec_of(a);
        terminal_completion_[slot] +=
            spec.type == env::AgentType::Executor
                ? 1.0 - static_cast<double>(info.task_remaining) /
                            static_cast<double>(spec.params.task_size)
                : 0.0;
        terminal_inventory_[slot] +=
            static_cast<double>(info.inventory) * static_cast<double>(info.inventory);
      }
      ++episodes_finished_[e];
      environment.reset(episode_for(e, episode_cursor_[e]++));
      just_reset_[e] = 1;
    }
  }

  env::EnvConfig cfg_;
  std::vector<std::size_t> episode_pool_;
  util::ThreadPool* pool_;
  std::vector<env::MarketEnv> envs_;
  std::vector<std::size_t> episode_cursor_;
  std::vector<std::size_t> type_offsets_;
  std::size_t agents_per_env_ = 0;
  std::vector<env::AgentAction> actions_;
  std::vector<std::uint8_t> just_reset_;
  std::vector<double> rewards_cache_;
  std::vector<std::uint8_t> dones_cache_;
  std::vector<std::int64_t> episodes_finished_;
  std::vector<double> terminal_pv_;
  std::vector<double> terminal_slip_;
  std::vector<double> terminal_completion_;
  std::vector<double> terminal_inventory_;
};

}  // namespace marlob::ippo
