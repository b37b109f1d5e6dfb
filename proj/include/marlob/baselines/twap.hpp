#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "marlob/env/env.hpp"

namespace marlob::baselines {

enum class TwapPriceMode { Aggressive, Passive };

// Per-step target quantities: a fair division of the task over the episode
// (entries differ by at most one lot and sum exactly to the task size).
struct TwapPlan {
  std::vector<std::int64_t> schedule;
  TwapPriceMode mode = TwapPriceMode::Aggressive;
};

inline TwapPlan make_twap_plan(std::int64_t task_size, int steps,
                               TwapPriceMode mode = TwapPriceMode::Aggressive) {
  if (steps < 1) throw std::invalid_argument("make_twap_plan: steps >= 1");
  if (task_size < 0) throw std::invalid_argument("make_twap_plan: task_size >= 0");
  TwapPlan plan;
  plan.mode = mode;
  plan.schedule.resize(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s)
    plan.schedule[static_cast<std::size_t>(s)] =
        (static_cast<std::int64_t>(s + 1) * task_size) / steps -
        (static_cast<std::int64_t>(s) * task_size) / steps;
  return plan;
}

// Submits the scheduled quantity at the far touch (Aggressive) or near touch
// (Passive), clamped to the remaining task; the last step clears any backlog
// left by missed fills.
inline env::AgentAction twap_policy(const env::MarketEnv& environment, std::size_t agent,
                                    const TwapPlan& plan, int step) {
  if (step < 0 || static_cast<std::size_t>(step) >= plan.schedule.size())
    throw std::out_of_range("twap_policy: step out of range");
  const env::AgentState& st = environment.agent_state(agent);
  const bool last = static_cast<std::size_t>(step) + 1 == plan.schedule.size();
  std::int64_t qty = last ? st.task_remaining
                          : std::min(plan.schedule[static_cast<std::size_t>(step)],
                                     st.task_remaining);
  env::AgentAction action;
  action.direct = true;
  if (qty <= 0) return action;
  const auto [bid, ask] = environment.effective_tops(agent);
  const bool buy = st.task_dir == agents::TaskDir::Buy;
  std::int64_t price = 0;
  if (plan.mode == TwapPriceMode::Aggressive)
    price = buy ? ask : bid;
  else
    price = buy ? bid : ask;
  action.quotes.push(buy ? lob::Side::Bid : lob::Side::Ask, price, qty);
  return action;
}

}  // namespace marlob::baselines
