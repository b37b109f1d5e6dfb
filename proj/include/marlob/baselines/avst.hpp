#pragma once

#include <cstdint>
#include <stdexcept>

#include "marlob/agents/actions.hpp"
#include "marlob/env/env.hpp"

namespace marlob::baselines {

// Fixed (non-learned) reservation-price market making. Reuses the learned
// action space's decoder, so quotes are identical to the matching gamma-grid
// entry by construction.
struct AvStBaseline {
  agents::AvStParams params;
  int gamma_index = 1;
};

inline env::AgentAction avst_policy(const env::MarketEnv& environment, std::size_t agent,
                                    const AvStBaseline& baseline) {
  if (baseline.gamma_index < 0 ||
      static_cast<std::size_t>(baseline.gamma_index) >= baseline.params.gamma_grid.size())
    throw std::out_of_range("avst_policy: gamma_index out of range");
  const env::AgentState& st = environment.agent_state(agent);
  const std::int64_t order_size = environment.spec_of(agent).params.order_size;
  env::AgentAction action;
  action.direct = true;
  action.quotes = agents::decode_avst(baseline.gamma_index, environment.mid_half(),
                                      st.inventory, environment.step_count(),
                                      baseline.params, order_size);
  return action;
}

}  // namespace marlob::baselines
