#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "marlob/bench/bench.hpp"
#include "marlob/data/lobster.hpp"
#include "marlob/data/synth.hpp"
#include "marlob/env/config.hpp"
#include "marlob/ippo/train.hpp"

// JSON configuration: shipped defaults, file merge, dotted-key overrides and
// a stable hash of the resolved document. Errors name the offending field.
namespace marlob::util {

using json = nlohmann::json;

// Defaults for a two-agent (market maker + executor) session on synthetic
// data; every field can be overridden by the config file or --override.
inline json default_config() {
  return json{
      {"data",
       {{"source", "synthetic"},
        {"sample_stride_messages", 0},  // 0 = derive from the episode shape
        {"synthetic",
         {{"seed", 0},
          {"n_messages", 409600},
          {"initial_mid", 1000},
          {"volatility", 0.02},
          {"p_new_passive", 0.44},
          {"p_new_cross", 0.14},
          {"p_cancel", 0.08},
          {"p_delete", 0.18},
          {"p_execute", 0.14},
          {"band", 8},
          {"max_qty", 20},
          {"seed_levels", 5},
          {"seed_qty", 10},
          {"state_depth", 10}}},
        {"lobster", {{"messages", ""}, {"orderbook", ""}, {"tick_size", 0.01}}}}},
      {"env",
       {{"steps_per_episode", 64},
        {"messages_per_step", 100},
        {"start_stride_steps", 64},
        {"book_capacity", 100},
        {"obs_depth", 5},
        {"agents",
         {{{"type", "market_maker"},
           {"count", 1},
           {"action_space", "fixed_quant"},
           {"obs_space", "mm_basic"},
           {"reward", "spooner"},
           {"order_size", 10},
           {"inventory_cap", 30},
           {"rho", 50.0},
           {"quadratic_penalty", true},
           {"lambda", 0.5},
           {"ref_price", "mid"},
           {"reward_scale", 0.01},
           {"default_half_spread", 2}},
          {{"type", "executor"},
           {"count", 1},
           {"action_space", "complex"},
           {"obs_space", "exec"},
           {"reward", "exec"},
           {"order_size", 10},
           {"task_size", 600},
           {"unfilled_penalty_coef", 0.1},
           {"lambda_exec", 0.0},
           {"reward_scale", 0.001},
           {"default_half_spread", 2}}}}}},
      {"train",
       {{"n_envs", 64},
        {"rollout_len", 64},
        {"updates", 100},
        {"hidden", 32},
        {"discount", 0.99},
        {"gae_lambda", 0.95},
        {"clip_eps", 0.2},
        {"epochs", 4},
        {"minibatches", 4},
        {"vf_coef", 0.5},
        {"ent_coef", 0.01},
        {"lr", 3e-4},
        {"max_grad_norm", 0.5},
        {"eval_fraction", 0.2},
        {"eval_every", 5},
        {"max_eval_episodes", 16}}},
      {"bench",
       {{"n_envs", 256},
        {"n_steps", 50},
        {"warmup_steps", 5},
        {"messages_grid", {1, 100}},
        {"agents_grid", {1, 5, 10}},
        {"rollout_len", 16},
        {"updates", 2}}},
      {"evaluate",
       {{"episodes", 8},
        {"type0", {"avst"}},
        {"type1", {"twap"}},
        {"avst_gamma_index", 1}}}};
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

inline const json* find(const json& root, const std::string& dotted) {
  const json* node = &root;
  std::size_t begin = 0;
  while (begin <= dotted.size()) {
    const std::size_t dot = dotted.find('.', begin);
    const std::string key = dotted.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    begin = dot + 1;
  }
  return nullptr;
}

template <class T>
T get(const json& root, const std::string& dotted) {
  const json* node = find(root, dotted);
  if (node == nullptr) config_error(dotted, "missing required field");
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    config_error(dotted, "has the wrong type (value " + node->dump() + ")");
  }
}

}  // namespace detail

// Deep-merges `overlay` into `base` (objects merge recursively, everything
// else replaces).
inline void merge_config(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object())
      merge_config(base[key], value);
    else
      base[key] = value;
  }
}

// "a.b.c=value" with the value parsed as JSON when possible, else a string.
// Numeric segments index into arrays: env.agents.1.task_size=40.
inline void apply_override(json& root, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    detail::config_error(spec, "override must look like key.path=value");
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  auto descend = [&spec](json* node, const std::string& key) -> json* {
    if (node->is_array()) {
      if (key.find_first_not_of("0123456789") != std::string::npos)
        detail::config_error(spec, "'" + key + "' does not index an array");
      const std::size_t idx = std::stoul(key);
      if (idx >= node->size())
        detail::config_error(spec, "array index " + key + " out of range");
      return &(*node)[idx];
    }
    return &(*node)[key];
  };
  json* node = &root;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (key.empty()) detail::config_error(spec, "empty key segment");
    if (dot == std::string::npos) {
      *descend(node, key) = value;
      return;
    }
    node = descend(node, key);
    begin = dot + 1;
  }
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
}

// FNV-1a over the canonical dump of the resolved config.
inline std::uint64_t config_hash(const json& cfg) {
  const std::string dump = cfg.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline env::AgentType parse_agent_type(const std::string& s, const std::string& where) {
  if (s == "market_maker") return env::AgentType::MarketMaker;
  if (s == "executor") return env::AgentType::Executor;
  if (s == "directional") return env::AgentType::Directional;
  detail::config_error(where, "unknown agent type '" + s + "'");
}

inline env::EnvConfig parse_env_config(const json& root) {
  env::EnvConfig cfg;
  cfg.steps_per_episode = detail::get<int>(root, "env.steps_per_episode");
  cfg.messages_per_step = detail::get<int>(root, "env.messages_per_step");
  cfg.start_stride_steps = detail::get<int>(root, "env.start_stride_steps");
  cfg.book_capacity = detail::get<std::size_t>(root, "env.book_capacity");
  cfg.obs_depth = detail::get<std::size_t>(root, "env.obs_depth");
  const json* agents = detail::find(root, "env.agents");
  if (agents == nullptr || !agents->is_array() || agents->empty())
    detail::config_error("env.agents", "at least one agent spec required");
  for (std::size_t i = 0; i < agents->size(); ++i) {
    const json& a = (*agents)[i];
    const std::string where = "env.agents[" + std::to_string(i) + "]";
    env::AgentSpec spec;
    spec.type = parse_agent_type(a.value("type", std::string{}), where + ".type");
    spec.count = a.value("count", 1);
    auto& p = spec.params;
    p.order_size = a.value("order_size", static_cast<std::int64_t>(10));
    p.inventory_cap = a.value("inventory_cap", static_cast<std::int64_t>(30));
    p.rho = a.value("rho", 50.0);
    p.quadratic_penalty = a.value("quadratic_penalty", spec.type != env::AgentType::Executor);
    p.lambda = a.value("lambda", 0.5);
    p.unfilled_penalty_coef = a.value("unfilled_penalty_coef", 0.1);
    p.lambda_exec = a.value("lambda_exec", 0.0);
    p.task_size = a.value("task_size", static_cast<std::int64_t>(600));
    p.reward_scale = a.value("reward_scale", 1.0);
    p.default_half_spread = a.value("default_half_spread", 2);
    p.fixed_quant_from_mid = a.value("fixed_quant_from_mid", false);
    const std::string ref = a.value("ref_price", "mid");
    if (ref == "mid")
      p.ref_price = env::RefPriceMode::Mid;
    else if (ref == "far_touch")
      p.ref_price = env::RefPriceMode::FarTouch;
    else
      detail::config_error(where + ".ref_price", "expected 'mid' or 'far_touch'");
    if (a.contains("avst")) {
      const json& av = a["avst"];
      p.avst.gamma_grid = av.value("gamma_grid", p.avst.gamma_grid);
      p.avst.kappa = av.value("kappa", p.avst.kappa);
      p.avst.sigma = av.value("sigma", p.avst.sigma);
      p.avst.horizon = av.value("horizon", static_cast<double>(cfg.steps_per_episode));
    } else {
      p.avst.horizon = static_cast<double>(cfg.steps_per_episode);
    }
    const std::string space = a.value("action_space", spec.type == env::AgentType::Executor
                                                          ? "complex"
                                                          : "fixed_quant");
    if (spec.type == env::AgentType::Executor) {
      if (space == "complex")
        p.exec_complex = true;
      else if (space == "simple")
        p.exec_complex = false;
      else
        detail::config_error(where + ".action_space", "expected 'simple' or 'complex'");
    } else {
      if (space == "fixed_quant")
        spec.mm_space = env::MMActionSpace::FixedQuant;
      else if (space == "spread_skew")
        spec.mm_space = env::MMActionSpace::SpreadSkew;
      else if (space == "avst")
        spec.mm_space = env::MMActionSpace::AvSt;
      else
        detail::config_error(where + ".action_space",
                             "expected 'fixed_quant', 'spread_skew' or 'avst'");
    }
    const std::string obs = a.value("obs_space", spec.type == env::AgentType::Executor
                                                     ? "exec"
                                                     : "mm_basic");
    if (obs == "mm_basic")
      spec.obs_space = agents::ObsSpaceId::MMBasic;
    else if (obs == "mm_full")
      spec.obs_space = agents::ObsSpaceId::MMFull;
    else if (obs == "exec")
      spec.obs_space = agents::ObsSpaceId::Exec;
    else
      detail::config_error(where + ".obs_space", "expected 'mm_basic', 'mm_full' or 'exec'");
    const std::string reward = a.value("reward", spec.type == env::AgentType::Executor
                                                     ? "exec"
                                                     : "spooner");
    if (reward == "spooner")
      spec.reward = env::RewardId::Spooner;
    else if (reward == "buysell")
      spec.reward = env::RewardId::BuySell;
    else if (reward == "exec")
      spec.reward = env::RewardId::Exec;
    else
      detail::config_error(where + ".reward", "expected 'spooner', 'buysell' or 'exec'");
    if (spec.type == env::AgentType::Executor && spec.reward != env::RewardId::Exec)
      detail::config_error(where + ".reward", "executors use the 'exec' reward");
    cfg.specs.push_back(std::move(spec));
  }
  env::validate(cfg);
  return cfg;
}

inline ippo::TrainConfig parse_train_config(const json& root, std::uint64_t seed,
                                            int workers) {
  ippo::TrainConfig cfg;
  cfg.n_envs = detail::get<int>(root, "train.n_envs");
  cfg.rollout_len = detail::get<int>(root, "train.rollout_len");
  cfg.updates = detail::get<int>(root, "train.updates");
  cfg.hidden = detail::get<int>(root, "train.hidden");
  cfg.discount = detail::get<double>(root, "train.discount");
  cfg.gae_lambda = detail::get<double>(root, "train.gae_lambda");
  cfg.ppo.clip_eps = detail::get<double>(root, "train.clip_eps");
  cfg.ppo.epochs = detail::get<int>(root, "train.epochs");
  cfg.ppo.minibatches = detail::get<int>(root, "train.minibatches");
  cfg.ppo.vf_coef = detail::get<double>(root, "train.vf_coef");
  cfg.ppo.ent_coef = detail::get<double>(root, "train.ent_coef");
  cfg.ppo.lr = detail::get<double>(root, "train.lr");
  cfg.ppo.max_grad_norm = detail::get<double>(root, "train.max_grad_norm");
  cfg.eval_fraction = detail::get<double>(root, "train.eval_fraction");
  cfg.eval_every = detail::get<int>(root, "train.eval_every");
  cfg.max_eval_episodes = detail::get<int>(root, "train.max_eval_episodes");
  cfg.seed = seed;
  cfg.workers = workers;
  ippo::validate(cfg);
  return cfg;
}

inline data::SynthConfig parse_synth_config(const json& root) {
  data::SynthConfig cfg;
  const std::string base = "data.synthetic.";
  cfg.n_messages = detail::get<std::size_t>(root, base + "n_messages");
  cfg.initial_mid = detail::get<std::int64_t>(root, base + "initial_mid");
  cfg.volatility = detail::get<double>(root, base + "volatility");
  cfg.p_new_passive = detail::get<double>(root, base + "p_new_passive");
  cfg.p_new_cross = detail::get<double>(root, base + "p_new_cross");
  cfg.p_cancel = detail::get<double>(root, base + "p_cancel");
  cfg.p_delete = detail::get<double>(root, base + "p_delete");
  cfg.p_execute = detail::get<double>(root, base + "p_execute");
  cfg.band = detail::get<int>(root, base + "band");
  cfg.max_qty = detail::get<std::int64_t>(root, base + "max_qty");
  cfg.seed_levels = detail::get<int>(root, base + "seed_levels");
  cfg.seed_qty = detail::get<std::int64_t>(root, base + "seed_qty");
  cfg.state_depth = detail::get<std::size_t>(root, base + "state_depth");
  return cfg;
}

inline bench::BenchConfig parse_bench_config(const json& root, std::uint64_t seed,
                                             int workers) {
  bench::BenchConfig cfg;
  cfg.n_envs = detail::get<int>(root, "bench.n_envs");
  cfg.n_steps = detail::get<int>(root, "bench.n_steps");
  cfg.warmup_steps = detail::get<int>(root, "bench.warmup_steps");
  cfg.messages_grid = detail::get<std::vector<int>>(root, "bench.messages_grid");
  cfg.agents_grid = detail::get<std::vector<int>>(root, "bench.agents_grid");
  cfg.seed = seed;
  cfg.workers = workers;
  if (cfg.messages_grid.empty() || cfg.agents_grid.empty())
    detail::config_error("bench.messages_grid", "grids must be non-empty");
  return cfg;
}

// Message-store construction from the data section. Episode-start book
// states are sampled every `sample_stride` messages (0 = start stride from
// the env section). MARLOB_DATA_DIR, when set, prefixes relative LOBSTER
// paths (the only environment-variable override).
inline data::MessageStore build_store(const json& root, std::size_t sample_stride = 0) {
  const std::string source = detail::get<std::string>(root, "data.source");
  if (sample_stride == 0) {
    const auto configured =
        detail::get<std::int64_t>(root, "data.sample_stride_messages");
    if (configured > 0) {
      sample_stride = static_cast<std::size_t>(configured);
    } else {
      sample_stride = static_cast<std::size_t>(detail::get<int>(root, "env.start_stride_steps")) *
                      static_cast<std::size_t>(detail::get<int>(root, "env.messages_per_step"));
      if (sample_stride == 0) sample_stride = 1;
    }
  }
  if (source == "synthetic") {
    data::SynthConfig cfg = parse_synth_config(root);
    cfg.state_sample_every = sample_stride;
    const auto seed = detail::get<std::uint64_t>(root, "data.synthetic.seed");
    return data::synth_generate(cfg, seed);
  }
  if (source == "lobster") {
    std::string messages = detail::get<std::string>(root, "data.lobster.messages");
    std::string orderbook = detail::get<std::string>(root, "data.lobster.orderbook");
    if (messages.empty()) detail::config_error("data.lobster.messages", "path required");
    if (orderbook.empty()) detail::config_error("data.lobster.orderbook", "path required");
    if (const char* dir = std::getenv("MARLOB_DATA_DIR")) {
      const auto prefix = [&](std::string& p) {
        if (!p.empty() && p.front() != '/') p = std::string(dir) + "/" + p;
      };
      prefix(messages);
      prefix(orderbook);
    }
    const double tick = detail::get<double>(root, "data.lobster.tick_size");
    const auto units = static_cast<std::int64_t>(tick * data::kLobsterUnitsPerDollar + 0.5);
    if (units < 1) detail::config_error("data.lobster.tick_size", "too small");
    return data::load_lobster(messages, orderbook, units, sample_stride);
  }
  detail::config_error("data.source", "expected 'synthetic' or 'lobster'");
}

}  // namespace marlob::util
