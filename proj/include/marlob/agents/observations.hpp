#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlob/lob/types.hpp"

namespace marlob::agents {

enum class ObsSpaceId { MMBasic = 0, MMFull = 1, Exec = 2 };

// Market-wide inputs shared by all observation builders. Mids are half-tick
// integers; `l2` is the current top-of-book snapshot at the configured depth.
struct MarketView {
  std::int64_t best_bid = -1;  // -1 when the side is empty
  std::int64_t best_ask = -1;
  std::int64_t mid_half = 0;
  std::int64_t prev_mid_half = 0;
  const lob::L2Snapshot* l2 = nullptr;
  double time_frac = 0.0;
};

// Per-agent inputs. own_bid / own_ask are active order prices (-1 if none).
struct AgentView {
  std::int64_t inventory = 0;
  std::int64_t cash = 0;
  std::int64_t inventory_cap = 1;
  std::int64_t order_size = 1;
  std::int64_t cash_scale = 1;
  std::int64_t own_bid = -1;
  std::int64_t own_ask = -1;
  double p_init = 0.0;
  std::int64_t task_remaining = 0;
  std::int64_t task_size = 1;
  int direction = 1;  // +1 buy task, -1 sell task
};

namespace detail {

inline double imbalance(const lob::L2Snapshot& l2) {
  std::int64_t bid_q = 0, ask_q = 0;
  for (const auto& lvl : l2.bids) bid_q += lvl.quantity;
  for (const auto& lvl : l2.asks) ask_q += lvl.quantity;
  if (bid_q + ask_q == 0) return 0.0;
  return static_cast<double>(bid_q - ask_q) / static_cast<double>(bid_q + ask_q);
}

inline double spread_ticks(const MarketView& mkt) {
  if (mkt.best_bid < 0 || mkt.best_ask < 0) return 0.0;
  return std::min<double>(32.0, static_cast<double>(mkt.best_ask - mkt.best_bid));
}

inline double qty_feature(std::int64_t qty, std::int64_t order_size) {
  return static_cast<double>(qty) / static_cast<double>(qty + std::max<std::int64_t>(1, order_size));
}

inline double offset_feature(std::int64_t own_price, std::int64_t touch, bool bid_side) {
  if (own_price < 0 || touch < 0) return -1.0;
  const std::int64_t off = bid_side ? touch - own_price : own_price - touch;
  return std::min<double>(16.0, std::max<double>(-16.0, static_cast<double>(off)));
}

}  // namespace detail

inline std::size_t observation_size(ObsSpaceId id, std::size_t depth) {
  switch (id) {
    case ObsSpaceId::MMBasic: return 8;
    case ObsSpaceId::MMFull: return 8 + 4 * depth;
    case ObsSpaceId::Exec: return 10;
  }
  throw std::invalid_argument("observation_size: unknown space");
}

// Feature name per index; the layout contract for downstream consumers.
inline std::vector<std::string> observation_layout(ObsSpaceId id, std::size_t depth) {
  std::vector<std::string> names;
  switch (id) {
    case ObsSpaceId::MMFull:
    case ObsSpaceId::MMBasic:
      names = {"inventory_frac",  "cash_norm",      "spread_ticks", "mid_return_ticks",
               "imbalance_topD",  "time_frac",      "own_bid_offset", "own_ask_offset"};
      if (id == ObsSpaceId::MMFull) {
        for (std::size_t d = 0; d < depth; ++d) {
          names.push_back("bid_off_L" + std::to_string(d));
          names.push_back("bid_qty_L" + std::to_string(d));
          names.push_back("ask_off_L" + std::to_string(d));
          names.push_back("ask_qty_L" + std::to_string(d));
        }
      }
      break;
    case ObsSpaceId::Exec:
      names = {"task_remaining_frac", "time_frac",      "direction",
               "spread_ticks",        "mid_return_ticks", "mid_dist_from_arrival",
               "imbalance_topD",      "best_bid_qty",   "best_ask_qty",
               "own_order_offset"};
      break;
  }
  return names;
}

inline void build_mm_observation(ObsSpaceId id, const MarketView& mkt, const AgentView& agent,
                                 std::span<double> out) {
  out[0] = static_cast<double>(agent.inventory) / static_cast<double>(agent.inventory_cap);
  out[1] = static_cast<double>(agent.cash) / static_cast<double>(std::max<std::int64_t>(1, agent.cash_scale));
  out[2] = detail::spread_ticks(mkt);
  out[3] = static_cast<double>(mkt.mid_half - mkt.prev_mid_half) / 2.0;
  out[4] = mkt.l2 ? detail::imbalance(*mkt.l2) : 0.0;
  out[5] = mkt.time_frac;
  out[6] = detail::offset_feature(agent.own_bid, mkt.best_bid, true);
  out[7] = detail::offset_feature(agent.own_ask, mkt.best_ask, false);
  if (id == ObsSpaceId::MMBasic) return;
  // Full preset: per-level offsets from the touch and bounded quantities.
  std::size_t k = 8;
  const std::size_t levels = (out.size() - 8) / 4;
  for (std::size_t d = 0; d < levels; ++d) {
    const bool has_bid = mkt.l2 && d < mkt.l2->bids.size();
    const bool has_ask = mkt.l2 && d < mkt.l2->asks.size();
    out[k++] = has_bid ? std::min<double>(32.0, static_cast<double>(
                             mkt.best_bid - mkt.l2->bids[d].price)) : -1.0;
    out[k++] = has_bid ? detail::qty_feature(mkt.l2->bids[d].quantity, agent.order_size) : 0.0;
    out[k++] = has_ask ? std::min<double>(32.0, static_cast<double>(
                             mkt.l2->asks[d].price - mkt.best_ask)) : -1.0;
    out[k++] = has_ask ? detail::qty_feature(mkt.l2->asks[d].quantity, agent.order_size) : 0.0;
  }
}

inline void build_exec_observation(const MarketView& mkt, const AgentView& agent,
                                   std::span<double> out) {
  out[0] = static_cast<double>(agent.task_remaining) /
           static_cast<double>(std::max<std::int64_t>(1, agent.task_size));
  out[1] = mkt.time_frac;
  out[2] = static_cast<double>(agent.direction);
  out[3] = detail::spread_ticks(mkt);
  out[4] = static_cast<double>(mkt.mid_half - mkt.prev_mid_half) / 2.0;
  out[5] = static_cast<double>(mkt.mid_half) / 2.0 - agent.p_init;
  out[6] = mkt.l2 ? detail::imbalance(*mkt.l2) : 0.0;
  out[7] = mkt.l2 && !mkt.l2->bids.empty()
               ? detail::qty_feature(mkt.l2->bids[0].quantity, agent.order_size) : 0.0;
  out[8] = mkt.l2 && !mkt.l2->asks.empty()
               ? detail::qty_feature(mkt.l2->asks[0].quantity, agent.order_size) : 0.0;
  const bool buy = agent.direction > 0;
  out[9] = detail::offset_feature(buy ? agent.own_bid : agent.own_ask,
                                  buy ? mkt.best_bid : mkt.best_ask, buy);
}

}  // namespace marlob::agents
