#pragma once

#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "marlob/core/rng.hpp"
#include "marlob/data/store.hpp"
#include "marlob/env/env.hpp"
#include "marlob/ippo/rollout.hpp"
#include "marlob/util/thread_pool.hpp"

namespace marlob::bench {

struct BenchConfig {
  int n_envs = 256;
  int n_steps = 50;
  int warmup_steps = 5;
  std::vector<int> messages_grid = {1, 100};
  std::vector<int> agents_grid = {1, 5, 10};
  int workers = 1;
  std::uint64_t seed = 0;
};

struct BenchRow {
  int messages_per_step = 0;
  int agents_per_type = 0;
  int workers = 1;
  std::uint64_t env_steps = 0;
  std::uint64_t messages = 0;
  double wall_seconds = 0.0;
  double steps_per_sec = 0.0;
  double messages_per_sec = 0.0;
  double worker_utilization = 0.0;  // busy env-step time / (workers * wall)
};

namespace detail {

// Random-policy stepping harness: one slot of preallocated state per env,
// auto-reset with round-robin episodes, no learning machinery on the path.
struct RandomStepHarness {
  std::vector<env::MarketEnv>* envs;
  std::vector<std::vector<int>>* action_ids;
  std::vector<std::size_t>* episode_cursor;
  std::vector<double>* busy_ns;
  const std::vector<int>* arity;
  std::size_t n_episodes;
  std::uint64_t seed;
  std::uint64_t global_step;

  void step_env(std::size_t e) const {
    const auto t0 = std::chrono::steady_clock::now();
    auto& environment = (*envs)[e];
    auto& ids = (*action_ids)[e];
    CounterRng rng(make_key(seed, static_cast<std::uint64_t>(RngStream::BenchAction), e,
                            global_step));
    for (std::size_t a = 0; a < ids.size(); ++a)
      ids[a] = static_cast<int>(rng.below(static_cast<std::uint64_t>((*arity)[a])));
    environment.step_ids(ids);
    if (environment.terminal()) {
      auto& cursor = (*episode_cursor)[e];
      environment.reset((e + cursor * envs->size()) % n_episodes);
      ++cursor;
    }
    (*busy_ns)[e] += std::chrono::duration<double, std::nano>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  }
};

inline void run_steps(util::ThreadPool& pool, RandomStepHarness& harness, int n_steps) {
  for (int s = 0; s < n_steps; ++s) {
    pool.run(
        [](void* ctx, int item) {
          static_cast<RandomStepHarness*>(ctx)->step_env(static_cast<std::size_t>(item));
        },
        &harness, static_cast<int>(harness.envs->size()));
    ++harness.global_step;
  }
}

inline env::EnvConfig bench_env_config(const env::EnvConfig& base, int messages_per_step,
                                       int agents_per_type) {
  env::EnvConfig cfg = base;
  cfg.messages_per_step = messages_per_step;
  for (auto& spec : cfg.specs) spec.count = agents_per_type;
  return cfg;
}

}  // namespace detail

// Random-policy environment throughput over the (messages/step, agents/type)
// grid. Warm-up steps are excluded from the timed region. The store must
// carry book states at every grid cell's episode starts; sampling at
// steps_per_episode * min(messages_grid) covers the whole grid.
inline std::vector<BenchRow> run_throughput(const data::MessageStore& store,
                                            const env::EnvConfig& base_cfg,
                                            const BenchConfig& bench) {
  std::vector<BenchRow> rows;
  util::ThreadPool pool(bench.workers);
  for (const int messages : bench.messages_grid) {
    for (const int agents : bench.agents_grid) {
      const env::EnvConfig cfg = detail::bench_env_config(base_cfg, messages, agents);
      const auto index = data::build_episode_index(store, cfg.steps_per_episode,
                                                   cfg.messages_per_step,
                                                   cfg.start_stride_steps);
      if (index.episode_count() == 0)
        throw std::runtime_error("run_throughput: store too short for the episode shape");

      std::vector<env::MarketEnv> envs;
      envs.reserve(static_cast<std::size_t>(bench.n_envs));
      for (int e = 0; e < bench.n_envs; ++e) envs.emplace_back(&store, &index, cfg,
                                                               bench.seed, e);
      std::vector<std::vector<int>> action_ids(envs.size());
      std::vector<int> arity;
      for (std::size_t a = 0; a < envs[0].n_agents(); ++a)
        arity.push_back(env::action_arity(envs[0].spec_of(a)));
      for (auto& ids : action_ids) ids.assign(envs[0].n_agents(), 0);
      std::vector<std::size_t> episode_cursor(envs.size());
      std::vector<double> busy_ns(envs.size(), 0.0);
      for (std::size_t e = 0; e < envs.size(); ++e) {
        envs[e].reset(e % index.episode_count());
        episode_cursor[e] = 1;
      }

      detail::RandomStepHarness harness{&envs,          &action_ids, &episode_cursor,
                                        &busy_ns,       &arity,      index.episode_count(),
                                        bench.seed,     0};
      detail::run_steps(pool, harness, bench.warmup_steps);

      std::uint64_t messages_before = 0;
      for (const auto& e : envs) messages_before += e.messages_processed();
      std::fill(busy_ns.begin(), busy_ns.end(), 0.0);
      const auto t0 = std::chrono::steady_clock::now();
      detail::run_steps(pool, harness, bench.n_steps);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::uint64_t messages_after = 0;
      for (const auto& e : envs) messages_after += e.messages_processed();
      double busy_total = 0.0;
      for (const double b : busy_ns) busy_total += b;

      BenchRow row;
      row.messages_per_step = messages;
      row.agents_per_type = agents;
      row.workers = pool.size();
      row.env_steps = static_cast<std::uint64_t>(bench.n_envs) *
                      static_cast<std::uint64_t>(bench.n_steps);
      row.messages = messages_after - messages_before;
      row.wall_seconds = wall;
      row.steps_per_sec = static_cast<double>(row.env_steps) / wall;
      row.messages_per_sec = static_cast<double>(row.messages) / wall;
      row.worker_utilization = busy_total * 1e-9 / (wall * pool.size());
      rows.push_back(row);
    }
  }
  return rows;
}

struct RlBenchRow {
  int messages_per_step = 0;
  int agents_per_type = 0;
  int workers = 1;
  std::uint64_t env_steps = 0;
  double random_steps_per_sec = 0.0;  // stepping only, random actions
  double rl_steps_per_sec = 0.0;      // inference + stepping + updates
};

// Training-pipeline throughput: the same grid, timed over full IPPO updates
// (policy inference, environment stepping and gradient updates), next to a
// random-policy stepping baseline for inference-cost attribution.
inline std::vector<RlBenchRow> run_rl_throughput(const data::MessageStore& store,
                                                 const env::EnvConfig& base_cfg,
                                                 const BenchConfig& bench, int rollout_len,
                                                 int updates, int hidden) {
  std::vector<RlBenchRow> rows;
  util::ThreadPool pool(bench.workers);
  for (const int messages : bench.messages_grid) {
    for (const int agents : bench.agents_grid) {
      const env::EnvConfig cfg = detail::bench_env_config(base_cfg, messages, agents);
      const auto index = data::build_episode_index(store, cfg.steps_per_episode,
                                                   cfg.messages_per_step,
                                                   cfg.start_stride_steps);
      std::vector<std::size_t> pool_eps(index.episode_count());
      for (std::size_t i = 0; i < pool_eps.size(); ++i) pool_eps[i] = i;

      ippo::MarketVecEnv venv(&store, &index, cfg, pool_eps, bench.seed, bench.n_envs,
                              &pool);
      std::vector<ippo::PolicyNet> nets;
      std::vector<ippo::AdamState> adams(cfg.specs.size());
      for (int tau = 0; tau < venv.n_types(); ++tau)
        nets.push_back(ippo::make_policy_net(static_cast<int>(venv.obs_dim(tau)), hidden,
                                             venv.n_actions(tau), make_key(bench.seed, tau)));
      ippo::TrainLoopConfig lcfg;
      lcfg.updates = updates;
      lcfg.rollout_len = rollout_len;
      lcfg.seed = bench.seed;

      const auto t0 = std::chrono::steady_clock::now();
      ippo::train_loop(venv, nets, adams, lcfg,
                       [](int, std::span<const ippo::UpdateMetrics>) {});
      const double rl_wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      BenchConfig random_bench = bench;
      random_bench.messages_grid = {messages};
      random_bench.agents_grid = {agents};
      random_bench.n_steps = rollout_len * updates;
      random_bench.warmup_steps = std::min(bench.warmup_steps, rollout_len);
      const auto random_rows = run_throughput(store, base_cfg, random_bench);

      RlBenchRow row;
      row.messages_per_step = messages;
      row.agents_per_type = agents;
      row.workers = pool.size();
      row.env_steps = static_cast<std::uint64_t>(bench.n_envs) *
                      static_cast<std::uint64_t>(rollout_len) *
                      static_cast<std::uint64_t>(updates);
      row.rl_steps_per_sec = static_cast<double>(row.env_steps) / rl_wall;
      row.random_steps_per_sec = random_rows[0].steps_per_sec;
      rows.push_back(row);
    }
  }
  return rows;
}

// Machine-readable CSV plus a human summary.
inline void write_report(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "messages_per_step,agents_per_type,workers,env_steps,messages,wall_seconds,"
         "steps_per_sec,messages_per_sec,worker_utilization\n";
  for (const auto& r : rows)
    out << r.messages_per_step << ',' << r.agents_per_type << ',' << r.workers << ','
        << r.env_steps << ',' << r.messages << ',' << r.wall_seconds << ','
        << r.steps_per_sec << ',' << r.messages_per_sec << ',' << r.worker_utilization
        << '\n';
}

inline void write_rl_report(std::ostream& out, const std::vector<RlBenchRow>& rows) {
  out << "messages_per_step,agents_per_type,workers,env_steps,random_steps_per_sec,"
         "rl_steps_per_sec\n";
  for (const auto& r : rows)
    out << r.messages_per_step << ',' << r.agents_per_type << ',' << r.workers << ','
        << r.env_steps << ',' << r.random_steps_per_sec << ',' << r.rl_steps_per_sec << '\n';
}

}  // namespace marlob::bench
