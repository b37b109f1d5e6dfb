#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlob/agents/actions.hpp"
#include "marlob/agents/observations.hpp"

namespace marlob::env {

enum class AgentType { MarketMaker = 0, Executor = 1, Directional = 2 };

enum class MMActionSpace { SpreadSkew = 0, FixedQuant = 1, AvSt = 2 };

enum class RewardId { BuySell = 0, Spooner = 1, Exec = 2 };

enum class RefPriceMode { Mid = 0, FarTouch = 1 };

inline const char* to_string(AgentType t) {
  switch (t) {
    case AgentType::MarketMaker: return "market_maker";
    case AgentType::Executor: return "executor";
    case AgentType::Directional: return "directional";
  }
  return "?";
}

// Per-type parameter block: order sizes, task sizes, reward weights and the
// action-space tables.
struct AgentParams {
  std::int64_t order_size = 10;
  std::int64_t inventory_cap = 30;
  double rho = 50.0;
  bool quadratic_penalty = true;
  double lambda = 0.5;  // positive-inventory-PnL weight
  RefPriceMode ref_price = RefPriceMode::Mid;
  double unfilled_penalty_coef = 0.1;
  double lambda_exec = 0.0;
  std::int64_t task_size = 600;
  bool exec_complex = true;
  double reward_scale = 1.0;
  int default_half_spread = 2;  // fallback quoting distance on an empty side
  bool fixed_quant_from_mid = false;
  agents::SpreadSkewTable spread_skew = agents::SpreadSkewTable::standard();
  agents::AvStParams avst;
};

struct AgentSpec {
  AgentType type = AgentType::MarketMaker;
  int count = 1;
  MMActionSpace mm_space = MMActionSpace::FixedQuant;
  agents::ObsSpaceId obs_space = agents::ObsSpaceId::MMBasic;
  RewardId reward = RewardId::Spooner;
  AgentParams params;
};

struct EnvConfig {
  std::vector<AgentSpec> specs;
  int steps_per_episode = 64;
  int messages_per_step = 100;
  int start_stride_steps = 64;
  std::size_t book_capacity = 100;
  std::size_t obs_depth = 5;
  std::int64_t fallback_mid_half = 2000;  // only used if the initial book is empty
  std::uint64_t synthetic_init_id_base = 1ull << 36;
  std::uint64_t agent_id_base = 1ull << 40;
  std::uint64_t agent_id_range = 1ull << 20;
  std::size_t fill_reserve = 512;  // per-agent per-step fill buffer
};

inline int action_arity(const AgentSpec& spec) {
  switch (spec.type) {
    case AgentType::Executor:
      return agents::exec_arity(spec.params.exec_complex);
    case AgentType::Directional:
      return agents::kDirectionalArity;
    case AgentType::MarketMaker:
      switch (spec.mm_space) {
        case MMActionSpace::SpreadSkew:
          return static_cast<int>(spec.params.spread_skew.rows.size());
        case MMActionSpace::FixedQuant:
          return agents::kFixedQuantArity;
        case MMActionSpace::AvSt:
          return static_cast<int>(spec.params.avst.gamma_grid.size());
      }
  }
  throw std::invalid_argument("action_arity: unknown agent spec");
}

inline agents::ObsSpaceId default_obs_space(AgentType t) {
  return t == AgentType::Executor ? agents::ObsSpaceId::Exec : agents::ObsSpaceId::MMBasic;
}

inline void validate(const EnvConfig& cfg) {
  if (cfg.steps_per_episode < 1)
    throw std::invalid_argument("env.steps_per_episode must be >= 1");
  if (cfg.messages_per_step < 0)
    throw std::invalid_argument("env.messages_per_step must be >= 0");
  if (cfg.start_stride_steps < 1)
    throw std::invalid_argument("env.start_stride_steps must be >= 1");
  if (cfg.book_capacity < 1) throw std::invalid_argument("env.book_capacity must be >= 1");
  if (cfg.obs_depth < 1) throw std::invalid_argument("env.obs_depth must be >= 1");
  for (std::size_t i = 0; i < cfg.specs.size(); ++i) {
    const AgentSpec& spec = cfg.specs[i];
    const std::string where = "env.agents[" + std::to_string(i) + "]";
    if (spec.count < 1) throw std::invalid_argument(where + ".count must be >= 1");
    if (spec.params.order_size < 1)
      throw std::invalid_argument(where + ".order_size must be >= 1");
    if (spec.params.inventory_cap < 1)
      throw std::invalid_argument(where + ".inventory_cap must be >= 1");
    if (spec.params.lambda < 0.0 || spec.params.lambda > 1.0)
      throw std::invalid_argument(where + ".lambda must lie in [0, 1]");
    if (spec.params.rho < 0.0) throw std::invalid_argument(where + ".rho must be >= 0");
    if (spec.type == AgentType::Executor && spec.params.task_size < 1)
      throw std::invalid_argument(where + ".task_size must be >= 1");
    if (action_arity(spec) < 1) throw std::invalid_argument(where + ": empty action space");
  }
}

}  // namespace marlob::env
