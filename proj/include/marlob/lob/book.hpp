#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "marlob/lob/types.hpp"

namespace marlob::lob {

// Fixed-capacity limit order book with price-time priority matching.
//
// Each side is a vector ordered worst-to-best, so the best order is at the
// back: matching pops from the back, insertion is a binary search, and the
// eviction candidate lives near the front. Among equal prices the earliest
// arrival_seq has priority (sits closest to the back).
//
// Pure value semantics: copying a book yields an independent book; a single
// instance is single-writer.
class OrderBook {
 public:
  explicit OrderBook(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("OrderBook: capacity must be >= 1");
    bids_.reserve(capacity);
    asks_.reserve(capacity);
  }

  // Drops all resting orders and restarts the arrival sequence; keeps the
  // reserved storage so episode resets stay allocation-free.
  void clear() {
    bids_.clear();
    asks_.clear();
    next_seq_ = 0;
  }

  // Populates an empty book with one synthetic background order per L2 level,
  // assigning arrival_seq best-price-first so snapshot priority is preserved.
  void init_from_l2(const L2Snapshot& snap, std::uint64_t synthetic_id_base) {
    if (snap.bids.size() > capacity_ || snap.asks.size() > capacity_)
      throw std::invalid_argument("OrderBook: snapshot deeper than book capacity");
    bids_.clear();
    asks_.clear();
    // Snapshot levels are best-first; storage is worst-to-best.
    for (std::size_t i = snap.bids.size(); i-- > 0;) {
      const L2Level& lvl = snap.bids[i];
      bids_.push_back(RestingOrder{lvl.price, lvl.quantity, synthetic_id_base + i,
                                   next_seq_ + i, kBackgroundTrader});
    }
    next_seq_ += snap.bids.size();
    const std::uint64_t ask_id_base = synthetic_id_base + snap.bids.size();
    for (std::size_t i = snap.asks.size(); i-- > 0;) {
      const L2Level& lvl = snap.asks[i];
      asks_.push_back(RestingOrder{lvl.price, lvl.quantity, ask_id_base + i, next_seq_ + i,
                                   kBackgroundTrader});
    }
    next_seq_ += snap.asks.size();
  }

  // Applies one message; fills are appended to `trades`. Cancels, deletes and
  // visible executions referencing an absent order id are silent no-ops
  // (replay streams legitimately reference pre-session orders).
  void process(const Message& msg, std::vector<TradeRecord>& trades) {
    switch (msg.kind) {
      case MsgKind::NewLimit:
        process_new_limit(msg, trades);
        break;
      case MsgKind::CancelPartial:
        reduce_order(msg.side, msg.order_id, msg.quantity);
        break;
      case MsgKind::Delete:
        remove_order(msg.side, msg.order_id);
        break;
      case MsgKind::ExecuteVisible:
        // Replay execution: consumes quantity from the identified resting
        // order without agent-visible aggression, so no TradeRecord.
        reduce_order(msg.side, msg.order_id, msg.quantity);
        break;
      case MsgKind::ExecuteHidden:
      case MsgKind::Cross:
      case MsgKind::Halt:
        break;
    }
  }

  std::optional<std::int64_t> best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.back().price;
  }

  std::optional<std::int64_t> best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.back().price;
  }

  // Mid price in half-tick units: (bid+ask) when two-sided, 2*best when
  // one-sided, `fallback_half_ticks` (the last valid mid) when empty.
  std::int64_t mid_half_ticks(std::int64_t fallback_half_ticks) const {
    const bool hb = !bids_.empty(), ha = !asks_.empty();
    if (hb && ha) return bids_.back().price + asks_.back().price;
    if (hb) return 2 * bids_.back().price;
    if (ha) return 2 * asks_.back().price;
    return fallback_half_ticks;
  }

  // Top-`depth` aggregated levels per side, best-first.
  void l2_snapshot(std::size_t depth, L2Snapshot& out) const {
    out.bids.clear();
    out.asks.clear();
    aggregate_levels(bids_, depth, out.bids);
    aggregate_levels(asks_, depth, out.asks);
  }

  L2Snapshot l2_snapshot(std::size_t depth) const {
    L2Snapshot snap;
    l2_snapshot(depth, snap);
    return snap;
  }

  std::size_t capacity() const { return capacity_; }
  std::uint64_t next_seq() const { return next_seq_; }
  std::size_t live_orders(Side s) const { return side_of(s).size(); }

  // Worst-to-best resting orders; read-only view for snapshots and tests.
  std::span<const RestingOrder> orders(Side s) const {
    const auto& v = side_of(s);
    return {v.data(), v.size()};
  }

  friend bool operator==(const OrderBook&, const OrderBook&) = default;

 private:
  // "a strictly before b" in worst-to-best storage order.
  static bool bid_before(const RestingOrder& a, const RestingOrder& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.arrival_seq > b.arrival_seq;
  }
  static bool ask_before(const RestingOrder& a, const RestingOrder& b) {
    if (a.price != b.price) return a.price > b.price;
    return a.arrival_seq > b.arrival_seq;
  }

  std::vector<RestingOrder>& side_of(Side s) { return s == Side::Bid ? bids_ : asks_; }
  const std::vector<RestingOrder>& side_of(Side s) const {
    return s == Side::Bid ? bids_ : asks_;
  }

  void process_new_limit(const Message& msg, std::vector<TradeRecord>& trades) {
    if (msg.quantity <= 0) return;
    std::int64_t remaining = msg.quantity;
    auto& opp = side_of(opposite(msg.side));
    while (remaining > 0 && !opp.empty()) {
      RestingOrder& best = opp.back();
      const bool crosses = msg.side == Side::Bid ? best.price <= msg.price
                                                 : best.price >= msg.price;
      if (!crosses) break;
      const std::int64_t qty = std::min(remaining, best.quantity);
      trades.push_back(TradeRecord{best.price, qty, msg.time, best.order_id, msg.order_id,
                                   best.trader_id, msg.trader_id, msg.side});
      best.quantity -= qty;
      remaining -= qty;
      if (best.quantity == 0) opp.pop_back();
    }
    if (remaining > 0) rest_order(msg, remaining);
  }

  void rest_order(const Message& msg, std::int64_t quantity) {
    auto& side = side_of(msg.side);
    RestingOrder incoming{msg.price, quantity, msg.order_id, next_seq_, msg.trader_id};
    if (side.size() == capacity_) {
      // Full side: evict the worst-priced order (ties: oldest arrival_seq)
      // if the newcomer improves on it, else drop the newcomer.
      const std::int64_t worst_price = side.front().price;
      const bool better = msg.side == Side::Bid ? msg.price > worst_price
                                                : msg.price < worst_price;
      if (!better) return;
      std::size_t evict = 0;
      while (evict + 1 < side.size() && side[evict + 1].price == worst_price) ++evict;
      side.erase(side.begin() + static_cast<std::ptrdiff_t>(evict));
    }
    ++next_seq_;
    auto cmp = msg.side == Side::Bid ? bid_before : ask_before;
    auto pos = std::upper_bound(side.begin(), side.end(), incoming, cmp);
    side.insert(pos, incoming);
  }

  void reduce_order(Side s, std::uint64_t order_id, std::int64_t by) {
    auto& side = side_of(s);
    for (auto it = side.begin(); it != side.end(); ++it) {
      if (it->order_id != order_id) continue;
      it->quantity -= std::min(it->quantity, by);
      if (it->quantity == 0) side.erase(it);
      return;
    }
  }

  void remove_order(Side s, std::uint64_t order_id) {
    auto& side = side_of(s);
    for (auto it = side.begin(); it != side.end(); ++it) {
      if (it->order_id == order_id) {
        side.erase(it);
        return;
      }
    }
  }

  static void aggregate_levels(const std::vector<RestingOrder>& side, std::size_t depth,
                               std::vector<L2Level>& out) {
    // Side is worst-to-best; walk backwards grouping equal prices.
    for (auto it = side.rbegin(); it != side.rend(); ++it) {
      if (!out.empty() && out.back().price == it->price) {
        out.back().quantity += it->quantity;
      } else {
        if (out.size() == depth) break;
        out.push_back(L2Level{it->price, it->quantity});
      }
    }
  }

  std::vector<RestingOrder> bids_;
  std::vector<RestingOrder> asks_;
  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
};

inline std::pair<std::optional<std::int64_t>, std::optional<std::int64_t>> book_tops(
    const OrderBook& book) {
  return {book.best_bid(), book.best_ask()};
}

}  // namespace marlob::lob
