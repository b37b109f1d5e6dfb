#pragma once

#include <ostream>

#include "marlob/lob/types.hpp"

// Text format for replay output and golden-file comparison: integers only,
// fixed field order, one record per line.
namespace marlob::util {

inline void format_replay_header(std::ostream& out, std::size_t episode, std::size_t start,
                                 int steps, std::size_t capacity) {
  out << "replay episode=" << episode << " start=" << start << " steps=" << steps
      << " capacity=" << capacity << '\n';
}

inline void format_step_header(std::ostream& out, int step, std::int64_t mid_half,
                               std::size_t n_trades) {
  out << "step=" << step << " mid_half=" << mid_half << " trades=" << n_trades << '\n';
}

inline void format_trade(std::ostream& out, const lob::TradeRecord& t) {
  out << "trade time=" << t.time << " price=" << t.price << " qty=" << t.quantity
      << " side=" << (t.aggressor_side == lob::Side::Bid ? 'B' : 'A')
      << " passive=" << t.passive_order_id << " aggressor=" << t.aggressor_order_id << '\n';
}

inline void format_l2(std::ostream& out, const lob::L2Snapshot& snap) {
  out << "bids";
  for (const auto& lvl : snap.bids) out << ' ' << lvl.price << 'x' << lvl.quantity;
  out << '\n' << "asks";
  for (const auto& lvl : snap.asks) out << ' ' << lvl.price << 'x' << lvl.quantity;
  out << '\n';
}

}  // namespace marlob::util
