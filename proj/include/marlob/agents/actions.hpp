#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "marlob/lob/types.hpp"

namespace marlob::agents {

enum class TaskDir : std::uint8_t { Buy = 0, Sell = 1 };

struct Quote {
  lob::Side side = lob::Side::Bid;
  std::int64_t price = 0;
  std::int64_t quantity = 0;

  friend bool operator==(const Quote&, const Quote&) = default;
};

// At most two quotes per agent per step (one per side).
struct QuoteList {
  std::array<Quote, 2> items{};
  int count = 0;

  void push(lob::Side side, std::int64_t price, std::int64_t quantity) {
    items[static_cast<std::size_t>(count++)] = Quote{side, price, quantity};
  }
  const Quote* begin() const { return items.data(); }
  const Quote* end() const { return items.data() + count; }
  bool empty() const { return count == 0; }

  friend bool operator==(const QuoteList& a, const QuoteList& b) {
    if (a.count != b.count) return false;
    for (int i = 0; i < a.count; ++i) if (!(a.items[i] == b.items[i])) return false;
    return true;
  }
};

namespace detail {

inline std::int64_t clamp_price(std::int64_t p) { return p < 1 ? 1 : p; }

// Keeps bid < ask whenever both sides are posted.
inline void finish_two_sided(QuoteList& quotes) {
  for (int i = 0; i < quotes.count; ++i)
    quotes.items[static_cast<std::size_t>(i)].price =
        clamp_price(quotes.items[static_cast<std::size_t>(i)].price);
  if (quotes.count == 2) {
    auto& bid = quotes.items[0].side == lob::Side::Bid ? quotes.items[0] : quotes.items[1];
    auto& ask = quotes.items[0].side == lob::Side::Ask ? quotes.items[0] : quotes.items[1];
    if (bid.price >= ask.price) ask.price = bid.price + 1;
  }
}

}  // namespace detail

inline constexpr int kFixedQuantArity = 8;
inline constexpr int kDirectionalArity = 3;

// The eight fixed-quantity market-making options. Offsets for the
// "away from the touch" options are measured from the best prices; set
// away_from_mid to measure them from the spread midpoint instead.
inline QuoteList decode_fixed_quant(int action_id, std::int64_t best_bid,
                                    std::int64_t best_ask, std::int64_t order_size,
                                    bool away_from_mid = false) {
  if (action_id < 0 || action_id >= kFixedQuantArity)
    throw std::out_of_range("decode_fixed_quant: action id " + std::to_string(action_id));
  const std::int64_t bid_ref = away_from_mid ? (best_bid + best_ask) / 2 : best_bid;
  const std::int64_t ask_ref = away_from_mid ? (best_bid + best_ask + 1) / 2 : best_ask;
  QuoteList q;
  switch (action_id) {
    case 0:
      break;  // no quotes
    case 1:
      q.push(lob::Side::Bid, bid_ref - 2, order_size);
      q.push(lob::Side::Ask, ask_ref + 2, order_size);
      break;
    case 2:
      q.push(lob::Side::Bid, bid_ref - 4, order_size);
      q.push(lob::Side::Ask, ask_ref + 4, order_size);
      break;
    case 3:  // one tick into the spread on both sides
      q.push(lob::Side::Bid, best_bid + 1, order_size);
      q.push(lob::Side::Ask, best_ask - 1, order_size);
      break;
    case 4:
      q.push(lob::Side::Bid, bid_ref - 2, order_size);
      q.push(lob::Side::Ask, best_ask, order_size);
      break;
    case 5:
      q.push(lob::Side::Bid, best_bid, order_size);
      q.push(lob::Side::Ask, ask_ref + 2, order_size);
      break;
    case 6:
      q.push(lob::Side::Bid, best_bid - 5, order_size);
      q.push(lob::Side::Ask, best_ask - 1, order_size);
      break;
    case 7:
      q.push(lob::Side::Bid, best_bid + 1, order_size);
      q.push(lob::Side::Ask, best_ask + 5, order_size);
      break;
  }
  detail::finish_two_sided(q);
  return q;
}

// Tabular half-spread / skew rows, both in ticks.
struct SpreadSkewTable {
  struct Row {
    int half_spread = 1;
    int skew = 0;
  };
  std::vector<Row> rows;

  static SpreadSkewTable standard() {
    SpreadSkewTable t;
    for (int s : {1, 2, 3})
      for (int k : {-1, 0, 1}) t.rows.push_back({s, k});
    return t;
  }
};

// Quotes bid = mid - s + k and ask = mid + s + k around a half-tick mid,
// rounded outward to whole ticks.
inline QuoteList decode_spread_skew(int action_id, std::int64_t mid_half_ticks,
                                    const SpreadSkewTable& table, std::int64_t order_size) {
  if (action_id < 0 || static_cast<std::size_t>(action_id) >= table.rows.size())
    throw std::out_of_range("decode_spread_skew: action id " + std::to_string(action_id));
  const auto row = table.rows[static_cast<std::size_t>(action_id)];
  const std::int64_t bid_half = mid_half_ticks - 2 * row.half_spread + 2 * row.skew;
  const std::int64_t ask_half = mid_half_ticks + 2 * row.half_spread + 2 * row.skew;
  QuoteList q;
  q.push(lob::Side::Bid, bid_half >= 0 ? bid_half / 2 : (bid_half - 1) / 2, order_size);
  q.push(lob::Side::Ask, (ask_half + 1) / 2, order_size);
  detail::finish_two_sided(q);
  return q;
}

struct AvStParams {
  std::vector<double> gamma_grid = {0.05, 0.1, 0.5, 1.0};
  double kappa = 1.5;
  double sigma = 2.0;
  double horizon = 64.0;  // T, in steps
};

// Closed-form reservation-price quotes; shared by the learned action space
// and the fixed baseline policy.
inline std::pair<std::int64_t, std::int64_t> avst_quotes(double gamma, double sigma,
                                                         double kappa, double time_to_go,
                                                         double mid_ticks,
                                                         std::int64_t inventory) {
  const double reservation =
      mid_ticks - static_cast<double>(inventory) * gamma * sigma * sigma * time_to_go;
  const double half_spread =
      0.5 * (gamma * sigma * sigma * time_to_go + (2.0 / gamma) * std::log1p(gamma / kappa));
  const auto bid = static_cast<std::int64_t>(std::floor(reservation - half_spread));
  const auto ask = static_cast<std::int64_t>(std::ceil(reservation + half_spread));
  return {bid, ask};
}

inline QuoteList decode_avst(int action_id, std::int64_t mid_half_ticks,
                             std::int64_t inventory, int step, const AvStParams& params,
                             std::int64_t order_size) {
  if (action_id < 0 || static_cast<std::size_t>(action_id) >= params.gamma_grid.size())
    throw std::out_of_range("decode_avst: action id " + std::to_string(action_id));
  const double gamma = params.gamma_grid[static_cast<std::size_t>(action_id)];
  const double ttg = std::max(0.0, params.horizon - static_cast<double>(step));
  const auto [bid, ask] = avst_quotes(gamma, params.sigma, params.kappa, ttg,
                                      static_cast<double>(mid_half_ticks) / 2.0, inventory);
  QuoteList q;
  q.push(lob::Side::Bid, bid, order_size);
  q.push(lob::Side::Ask, ask, order_size);
  detail::finish_two_sided(q);
  return q;
}

inline constexpr int kExecPriceChoices = 4;
inline constexpr std::array<std::int64_t, 3> kExecMultipliers = {1, 2, 5};

inline int exec_arity(bool complex_space) {
  return complex_space ? kExecPriceChoices * static_cast<int>(kExecMultipliers.size())
                       : kExecPriceChoices;
}

// Execution order at one of four reference prices: far touch, near touch,
// one tick behind the near touch, and the passive side of the spread
// midpoint. The complex variant multiplies the base quantity by 1, 2 or 5
// (action id = multiplier_index * 4 + price_index). Quantity is clamped to
// the remaining task.
inline QuoteList decode_exec(int action_id, std::int64_t best_bid, std::int64_t best_ask,
                             std::int64_t base_size, bool complex_space, TaskDir dir,
                             std::int64_t task_remaining) {
  if (action_id < 0 || action_id >= exec_arity(complex_space))
    throw std::out_of_range("decode_exec: action id " + std::to_string(action_id));
  const int price_idx = action_id % kExecPriceChoices;
  const int mult_idx = action_id / kExecPriceChoices;
  const std::int64_t spread = best_ask - best_bid;
  std::int64_t price = 0;
  if (dir == TaskDir::Buy) {
    switch (price_idx) {
      case 0: price = best_ask; break;             // far touch: crosses
      case 1: price = best_bid; break;             // near touch
      case 2: price = best_bid - 1; break;         // one tick more passive
      case 3: price = best_bid + spread / 2; break;  // passive side of the mid
    }
  } else {
    switch (price_idx) {
      case 0: price = best_bid; break;
      case 1: price = best_ask; break;
      case 2: price = best_ask + 1; break;
      case 3: price = best_ask - spread / 2; break;
    }
  }
  std::int64_t qty = base_size * kExecMultipliers[static_cast<std::size_t>(mult_idx)];
  if (qty > task_remaining) qty = task_remaining;
  QuoteList q;
  if (qty > 0)
    q.push(dir == TaskDir::Buy ? lob::Side::Bid : lob::Side::Ask, detail::clamp_price(price),
           qty);
  return q;
}

// Hit the touch on either side, or do nothing.
inline QuoteList decode_directional(int action_id, std::int64_t best_bid,
                                    std::int64_t best_ask, std::int64_t order_size) {
  if (action_id < 0 || action_id >= kDirectionalArity)
    throw std::out_of_range("decode_directional: action id " + std::to_string(action_id));
  QuoteList q;
  if (action_id == 1) q.push(lob::Side::Bid, detail::clamp_price(best_bid), order_size);
  if (action_id == 2) q.push(lob::Side::Ask, detail::clamp_price(best_ask), order_size);
  return q;
}

}  // namespace marlob::agents
