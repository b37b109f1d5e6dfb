#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "marlob/agents/actions.hpp"
#include "marlob/lob/types.hpp"

namespace marlob::agents {

// One fill from the agent's perspective. `side` is the side the agent traded
// on: Bid means the agent bought. Prices are in ticks.
struct AgentFill {
  double price = 0.0;
  std::int64_t quantity = 0;
  lob::Side side = lob::Side::Bid;
};

// Trading PnL terms against the step-average mid price.
inline double psi_buy(std::span<const AgentFill> fills, double mean_mid) {
  double total = 0.0;
  for (const auto& f : fills)
    if (f.side == lob::Side::Bid)
      total += (mean_mid - f.price) * static_cast<double>(f.quantity);
  return total;
}

inline double psi_sell(std::span<const AgentFill> fills, double mean_mid) {
  double total = 0.0;
  for (const auto& f : fills)
    if (f.side == lob::Side::Ask)
      total += (f.price - mean_mid) * static_cast<double>(f.quantity);
  return total;
}

inline double reward_buysell(std::span<const AgentFill> fills, double mean_mid) {
  return psi_buy(fills, mean_mid) + psi_sell(fills, mean_mid);
}

// Trading PnL plus inventory PnL with asymmetric clipping of the positive
// inventory term: lambda = 1 keeps it in full, lambda = 0 removes all
// positive inventory PnL while negative PnL always counts.
inline double reward_spooner(std::span<const AgentFill> fills, double mean_mid,
                             std::int64_t inventory, double mid, double prev_mid,
                             double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("reward_spooner: lambda must lie in [0, 1]");
  const double psi_inv = static_cast<double>(inventory) * (mid - prev_mid);
  return psi_buy(fills, mean_mid) + psi_sell(fills, mean_mid) + psi_inv -
         (1.0 - lambda) * std::max(0.0, psi_inv);
}

inline double quadratic_inventory_penalty(std::int64_t inventory, double rho,
                                          std::int64_t inventory_cap) {
  if (inventory_cap < 1)
    throw std::invalid_argument("quadratic_inventory_penalty: inventory_cap >= 1");
  const double frac = static_cast<double>(inventory) / static_cast<double>(inventory_cap);
  return rho * frac * frac;
}

inline double portfolio_value(std::int64_t inventory, double cash, double reference_price) {
  return static_cast<double>(inventory) * reference_price + cash;
}

// Direction-adjusted execution cost versus the arrival price; positive means
// worse than arrival on the task's side.
inline double slippage(std::span<const AgentFill> fills, double p_init, TaskDir dir) {
  const double sign = dir == TaskDir::Buy ? 1.0 : -1.0;
  double total = 0.0;
  for (const auto& f : fills)
    total += sign * static_cast<double>(f.quantity) * (f.price - p_init);
  return total;
}

// Per-step execution reward: negative slippage of this step's fills, plus at
// the terminal step a penalty proportional to the unexecuted quantity at
// arrival-price scale. lambda_exec is reserved for a drift term and unused
// at its default of zero.
inline double reward_exec(std::span<const AgentFill> step_fills, double p_init, TaskDir dir,
                          double lambda_exec, bool terminal, std::int64_t task_remaining,
                          double unfilled_penalty_coef) {
  (void)lambda_exec;
  double r = -slippage(step_fills, p_init, dir);
  if (terminal && task_remaining > 0)
    r -= unfilled_penalty_coef * static_cast<double>(task_remaining) * p_init;
  return r;
}

}  // namespace marlob::agents
