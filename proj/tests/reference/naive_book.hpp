#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "marlob/lob/types.hpp"

// Naive O(n^2) reference matcher used as the matching-engine oracle. Orders
// live in unbounded unsorted per-side lists and every matching step rescans
// the whole opposite side for the best price-time candidate. No eviction:
// test sequences must stay below the production book's capacity.
namespace marlob::testing {

class NaiveBook {
 public:
  void process(const lob::Message& msg, std::vector<lob::TradeRecord>& trades) {
    using lob::MsgKind;
    switch (msg.kind) {
      case MsgKind::NewLimit: {
        if (msg.quantity <= 0) return;
        std::int64_t remaining = msg.quantity;
        auto& opp = msg.side == lob::Side::Bid ? asks_ : bids_;
        while (remaining > 0) {
          const std::size_t idx = best_index(opp, lob::opposite(msg.side));
          if (idx == kNone) break;
          lob::RestingOrder& best = opp[idx];
          const bool crosses = msg.side == lob::Side::Bid ? best.price <= msg.price
                                                          : best.price >= msg.price;
          if (!crosses) break;
          const std::int64_t qty = std::min(remaining, best.quantity);
          trades.push_back(lob::TradeRecord{best.price, qty, msg.time, best.order_id,
                                            msg.order_id, best.trader_id, msg.trader_id,
                                            msg.side});
          best.quantity -= qty;
          remaining -= qty;
          if (best.quantity == 0) opp.erase(opp.begin() + static_cast<std::ptrdiff_t>(idx));
        }
        if (remaining > 0) {
          auto& own = msg.side == lob::Side::Bid ? bids_ : asks_;
          own.push_back(
              lob::RestingOrder{msg.price, remaining, msg.order_id, seq_++, msg.trader_id});
        }
        break;
      }
      case MsgKind::CancelPartial:
      case MsgKind::ExecuteVisible: {
        auto& own = msg.side == lob::Side::Bid ? bids_ : asks_;
        for (std::size_t i = 0; i < own.size(); ++i) {
          if (own[i].order_id != msg.order_id) continue;
          own[i].quantity -= std::min(own[i].quantity, msg.quantity);
          if (own[i].quantity == 0) own.erase(own.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
        break;
      }
      case MsgKind::Delete: {
        auto& own = msg.side == lob::Side::Bid ? bids_ : asks_;
        for (std::size_t i = 0; i < own.size(); ++i) {
          if (own[i].order_id == msg.order_id) {
            own.erase(own.begin() + static_cast<std::ptrdiff_t>(i));
            break;
          }
        }
        break;
      }
      default:
        break;
    }
  }

  std::optional<std::int64_t> best_bid() const {
    const std::size_t i = best_index(bids_, lob::Side::Bid);
    if (i == kNone) return std::nullopt;
    return bids_[i].price;
  }

  std::optional<std::int64_t> best_ask() const {
    const std::size_t i = best_index(asks_, lob::Side::Ask);
    if (i == kNone) return std::nullopt;
    return asks_[i].price;
  }

  // Full-depth aggregated levels, best-first, computed by sort-and-group.
  lob::L2Snapshot l2_full() const {
    lob::L2Snapshot snap;
    aggregate(bids_, /*bid=*/true, snap.bids);
    aggregate(asks_, /*bid=*/false, snap.asks);
    return snap;
  }

  std::size_t live(lob::Side s) const {
    return (s == lob::Side::Bid ? bids_ : asks_).size();
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  static std::size_t best_index(const std::vector<lob::RestingOrder>& side, lob::Side s) {
    std::size_t best = kNone;
    for (std::size_t i = 0; i < side.size(); ++i) {
      if (best == kNone) {
        best = i;
        continue;
      }
      const auto& a = side[i];
      const auto& b = side[best];
      const bool better_price = s == lob::Side::Bid ? a.price > b.price : a.price < b.price;
      if (better_price || (a.price == b.price && a.arrival_seq < b.arrival_seq)) best = i;
    }
    return best;
  }

  static void aggregate(const std::vector<lob::RestingOrder>& side, bool bid,
                        std::vector<lob::L2Level>& out) {
    std::vector<lob::RestingOrder> sorted = side;
    std::sort(sorted.begin(), sorted.end(),
              [bid](const lob::RestingOrder& a, const lob::RestingOrder& b) {
                return bid ? a.price > b.price : a.price < b.price;
              });
    for (const auto& o : sorted) {
      if (!out.empty() && out.back().price == o.price) {
        out.back().quantity += o.quantity;
      } else {
        out.push_back(lob::L2Level{o.price, o.quantity});
      }
    }
  }

  std::vector<lob::RestingOrder> bids_;
  std::vector<lob::RestingOrder> asks_;
  std::uint64_t seq_ = 0;
};

}  // namespace marlob::testing
