// marlob command-line driver: train / evaluate / bench / replay / inspect.
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "marlob/bench/bench.hpp"
#include "marlob/ippo/evaluate.hpp"
#include "marlob/ippo/train.hpp"
#include "marlob/util/config.hpp"
#include "marlob/util/replay_format.hpp"

namespace {

using marlob::util::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--seed", args.seed, "global seed");
  cmd->add_option("--out", args.out_dir, "output directory (or file for replay)");
  cmd->add_option("--workers", args.workers, "worker threads (0 = all cores)");
  cmd->add_option("--override", args.overrides,
                  "dotted-key config override, e.g. train.updates=10 (repeatable)");
}

json resolve_config(const CommonArgs& args) {
  json cfg = marlob::util::default_config();
  if (!args.config_path.empty())
    marlob::util::merge_config(cfg, marlob::util::load_config_file(args.config_path));
  for (const std::string& o : args.overrides) marlob::util::apply_override(cfg, o);
  return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

std::uint64_t echo_hash(const json& cfg) {
  const std::uint64_t hash = marlob::util::config_hash(cfg);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  std::cout << "config_hash=" << buf << "\n";
  return hash;
}

int cmd_train(const CommonArgs& args) {
  const json cfg = resolve_config(args);
  const std::uint64_t hash = echo_hash(cfg);
  const auto env_cfg = marlob::util::parse_env_config(cfg);
  const auto train_cfg = marlob::util::parse_train_config(cfg, args.seed, args.workers);
  const auto store = marlob::util::build_store(cfg);

  std::filesystem::create_directories(args.out_dir);
  write_text_file(args.out_dir + "/resolved_config.json", cfg.dump(2) + "\n");
  std::ofstream metrics(args.out_dir + "/metrics.jsonl", std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot open metrics file");

  const auto result = marlob::ippo::train(store, env_cfg, train_cfg, &metrics, hash,
                                          args.out_dir + "/checkpoint.bin");
  std::cout << "updates=" << result.updates_done
            << " checkpoint=" << args.out_dir + "/checkpoint.bin"
            << " metrics=" << args.out_dir + "/metrics.jsonl" << "\n";
  return 0;
}

marlob::ippo::PolicyChoice resolve_policy(const std::string& name, std::size_t type_index,
                                          const marlob::env::EnvConfig& env_cfg,
                                          std::vector<marlob::ippo::Checkpoint>& keep_alive,
                                          int avst_gamma_index) {
  marlob::ippo::PolicyChoice choice;
  choice.label = name;
  if (name == "twap") {
    choice.kind = marlob::ippo::PolicyKind::Twap;
  } else if (name == "avst") {
    choice.kind = marlob::ippo::PolicyKind::AvSt;
    choice.avst.params = env_cfg.specs[type_index].params.avst;
    choice.avst.gamma_index = avst_gamma_index;
  } else if (name == "random") {
    choice.kind = marlob::ippo::PolicyKind::Random;
  } else if (name == "noop") {
    choice.kind = marlob::ippo::PolicyKind::NoOp;
  } else if (name.rfind("learned:", 0) == 0) {
    const std::string path = name.substr(8);
    keep_alive.push_back(marlob::ippo::load_checkpoint(path));
    const auto& ckpt = keep_alive.back();
    if (ckpt.nets.size() != env_cfg.specs.size())
      throw std::runtime_error("checkpoint " + path + " holds " +
                               std::to_string(ckpt.nets.size()) + " agent types, config has " +
                               std::to_string(env_cfg.specs.size()));
    const auto& net = ckpt.nets[type_index];
    const auto expected_obs = marlob::agents::observation_size(
        env_cfg.specs[type_index].obs_space, env_cfg.obs_depth);
    const int expected_actions = marlob::env::action_arity(env_cfg.specs[type_index]);
    if (net.obs_dim != static_cast<int>(expected_obs) || net.n_actions != expected_actions)
      throw std::runtime_error(
          "checkpoint " + path + " type " + std::to_string(type_index) +
          " does not match the configured agent (obs " + std::to_string(net.obs_dim) +
          " vs " + std::to_string(expected_obs) + ", actions " +
          std::to_string(net.n_actions) + " vs " + std::to_string(expected_actions) + ")");
    choice.kind = marlob::ippo::PolicyKind::Learned;
    choice.net = &ckpt.nets[type_index];
    choice.label = "learned";
  } else {
    throw std::invalid_argument("config: evaluate policies: unknown policy '" + name +
                                "' (twap|avst|random|noop|learned:<path>)");
  }
  return choice;
}

int cmd_evaluate(const CommonArgs& args) {
  const json cfg = resolve_config(args);
  echo_hash(cfg);
  const auto env_cfg = marlob::util::parse_env_config(cfg);
  if (env_cfg.specs.size() != 2)
    throw std::invalid_argument(
        "config: env.agents: evaluate requires exactly two agent types");
  const auto store = marlob::util::build_store(cfg);
  const auto index = marlob::data::build_episode_index(store, env_cfg.steps_per_episode,
                                                       env_cfg.messages_per_step,
                                                       env_cfg.start_stride_steps);
  const auto n_episodes = marlob::util::detail::get<std::size_t>(cfg, "evaluate.episodes");
  if (index.episode_count() == 0) throw std::runtime_error("no episodes in the data");
  const std::size_t use = std::min(n_episodes, index.episode_count());
  std::vector<std::size_t> episodes;
  for (std::size_t i = index.episode_count() - use; i < index.episode_count(); ++i)
    episodes.push_back(i);

  const int gamma_index = marlob::util::detail::get<int>(cfg, "evaluate.avst_gamma_index");
  std::vector<marlob::ippo::Checkpoint> keep_alive;
  keep_alive.reserve(8);
  std::vector<marlob::ippo::PolicyChoice> type0, type1;
  for (const auto& name :
       marlob::util::detail::get<std::vector<std::string>>(cfg, "evaluate.type0"))
    type0.push_back(resolve_policy(name, 0, env_cfg, keep_alive, gamma_index));
  for (const auto& name :
       marlob::util::detail::get<std::vector<std::string>>(cfg, "evaluate.type1"))
    type1.push_back(resolve_policy(name, 1, env_cfg, keep_alive, gamma_index));

  const auto result = marlob::ippo::evaluate_matrix(store, index, env_cfg, episodes, type0,
                                                    type1, args.seed);
  json out;
  out["row_labels"] = result.row_labels;
  out["col_labels"] = result.col_labels;
  out["episodes"] = episodes;
  json cells = json::array();
  for (const auto& cell : result.cells) {
    json c;
    c["row"] = cell.row_label;
    c["col"] = cell.col_label;
    c["episodes"] = cell.episodes;
    for (int tau = 0; tau < 2; ++tau) {
      json t;
      t["pv_mean"] = cell.per_type[tau].pv_mean;
      t["pv_stderr"] = cell.per_type[tau].pv_stderr;
      t["slippage_mean"] = cell.per_type[tau].slippage_mean;
      t["slippage_stderr"] = cell.per_type[tau].slippage_stderr;
      t["completion_mean"] = cell.per_type[tau].completion_mean;
      t["filled_total"] = cell.per_type[tau].filled_total;
      t["no_fills"] = cell.per_type[tau].no_fills;
      c["type" + std::to_string(tau)] = t;
    }
    cells.push_back(c);
  }
  out["cells"] = cells;
  std::filesystem::create_directories(args.out_dir);
  write_text_file(args.out_dir + "/crossplay.json", out.dump(2) + "\n");
  std::cout << "cells=" << result.cells.size()
            << " file=" << args.out_dir + "/crossplay.json" << "\n";
  return 0;
}

int cmd_bench(const CommonArgs& args, bool rl) {
  const json cfg = resolve_config(args);
  echo_hash(cfg);
  const auto env_cfg = marlob::util::parse_env_config(cfg);
  auto bench_cfg = marlob::util::parse_bench_config(cfg, args.seed, args.workers);
  int min_messages = bench_cfg.messages_grid[0];
  for (const int m : bench_cfg.messages_grid) min_messages = std::min(min_messages, m);
  const std::size_t stride = static_cast<std::size_t>(env_cfg.steps_per_episode) *
                             static_cast<std::size_t>(std::max(1, min_messages));
  const auto store = marlob::util::build_store(cfg, stride);

  std::filesystem::create_directories(args.out_dir);
  const auto rows = marlob::bench::run_throughput(store, env_cfg, bench_cfg);
  std::ostringstream report;
  marlob::bench::write_report(report, rows);
  write_text_file(args.out_dir + "/throughput.csv", report.str());
  std::cout << report.str();
  for (const auto& row : rows)
    std::cout << "msgs/step=" << row.messages_per_step
              << " agents/type=" << row.agents_per_type
              << " steps/s=" << static_cast<std::int64_t>(row.steps_per_sec) << "\n";
  if (rl) {
    const int rollout = marlob::util::detail::get<int>(cfg, "bench.rollout_len");
    const int updates = marlob::util::detail::get<int>(cfg, "bench.updates");
    const int hidden = marlob::util::detail::get<int>(cfg, "train.hidden");
    const auto rl_rows =
        marlob::bench::run_rl_throughput(store, env_cfg, bench_cfg, rollout, updates, hidden);
    std::ostringstream rl_report;
    marlob::bench::write_rl_report(rl_report, rl_rows);
    write_text_file(args.out_dir + "/rl_throughput.csv", rl_report.str());
    std::cout << rl_report.str();
  }
  return 0;
}

int cmd_replay(const CommonArgs& args, std::size_t episode) {
  json cfg = resolve_config(args);
  echo_hash(cfg);
  auto env_cfg = marlob::util::parse_env_config(cfg);
  env_cfg.specs.clear();  // replay runs with zero agents
  const auto store = marlob::util::build_store(cfg);
  const auto index = marlob::data::build_episode_index(store, env_cfg.steps_per_episode,
                                                       env_cfg.messages_per_step,
                                                       env_cfg.start_stride_steps);
  if (episode >= index.episode_count())
    throw std::runtime_error("episode " + std::to_string(episode) + " out of range (count " +
                             std::to_string(index.episode_count()) + ")");

  marlob::env::MarketEnv market(&store, &index, env_cfg, args.seed, 0);
  market.reset(episode);
  std::ostringstream out;
  marlob::util::format_replay_header(out, episode, index.starts[episode],
                                     env_cfg.steps_per_episode, env_cfg.book_capacity);
  std::uint64_t trades_total = 0;
  while (!market.terminal()) {
    market.step(std::span<const marlob::env::AgentAction>{});
    marlob::util::format_step_header(out, market.step_count(), market.mid_half(),
                                     market.step_trades().size());
    for (const auto& t : market.step_trades()) marlob::util::format_trade(out, t);
    marlob::util::format_l2(out, market.book().l2_snapshot(env_cfg.obs_depth));
    trades_total += market.step_trades().size();
  }
  out << "end trades_total=" << trades_total << '\n';
  if (args.out_dir == "-" || args.out_dir.empty())
    std::cout << out.str();
  else
    write_text_file(args.out_dir, out.str());
  return 0;
}

int cmd_inspect(const CommonArgs& args) {
  const json cfg = resolve_config(args);
  echo_hash(cfg);
  const auto env_cfg = marlob::util::parse_env_config(cfg);
  for (std::size_t tau = 0; tau < env_cfg.specs.size(); ++tau) {
    const auto& spec = env_cfg.specs[tau];
    std::cout << "agent_type " << tau << " " << marlob::env::to_string(spec.type)
              << " count=" << spec.count << " actions=" << marlob::env::action_arity(spec)
              << "\n";
    const auto layout = marlob::agents::observation_layout(spec.obs_space, env_cfg.obs_depth);
    for (std::size_t i = 0; i < layout.size(); ++i)
      std::cout << "  obs[" << i << "] = " << layout[i] << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marlob: multi-agent limit-order-book trading simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  std::size_t episode = 0;
  bool rl_bench = false;

  auto* train = app.add_subcommand("train", "train policies with independent PPO");
  add_common(train, args);
  auto* evaluate = app.add_subcommand("evaluate", "cross-play policy evaluation matrix");
  add_common(evaluate, args);
  auto* bench = app.add_subcommand("bench", "environment throughput benchmark");
  add_common(bench, args);
  bench->add_flag("--rl", rl_bench, "also benchmark the full training pipeline");
  auto* replay = app.add_subcommand("replay", "replay one episode with zero agents");
  add_common(replay, args);
  replay->add_option("--episode", episode, "episode id to replay");
  auto* inspect = app.add_subcommand("inspect", "print observation layouts and action spaces");
  add_common(inspect, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (bench->parsed()) return cmd_bench(args, rl_bench);
    if (replay->parsed()) return cmd_replay(args, episode);
    if (inspect->parsed()) return cmd_inspect(args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
