#pragma once

#include <cstdint>
#include <vector>

namespace marlob::lob {

enum class Side : std::uint8_t { Bid = 0, Ask = 1 };

constexpr Side opposite(Side s) { return s == Side::Bid ? Side::Ask : Side::Bid; }

// Order-book event kinds. ExecuteHidden / Cross / Halt are carried through
// the pipeline but never touch the visible book.
enum class MsgKind : std::uint8_t {
  NewLimit = 0,
  CancelPartial = 1,
  Delete = 2,
  ExecuteVisible = 3,
  ExecuteHidden = 4,
  Cross = 5,
  Halt = 6,
};

constexpr bool is_matching_noop(MsgKind k) {
  return k == MsgKind::ExecuteHidden || k == MsgKind::Cross || k == MsgKind::Halt;
}

// trader_id 0 is the background / replay participant; agents are >= 1.
constexpr std::int32_t kBackgroundTrader = 0;

struct Message {
  std::int64_t time = 0;  // nanoseconds since session start
  std::uint64_t order_id = 0;
  std::int64_t price = 0;     // integer ticks
  std::int64_t quantity = 0;  // lots, >= 0
  MsgKind kind = MsgKind::NewLimit;
  Side side = Side::Bid;
  std::int32_t trader_id = kBackgroundTrader;

  friend bool operator==(const Message&, const Message&) = default;
};

struct RestingOrder {
  std::int64_t price = 0;
  std::int64_t quantity = 0;
  std::uint64_t order_id = 0;
  std::uint64_t arrival_seq = 0;
  std::int32_t trader_id = kBackgroundTrader;

  friend bool operator==(const RestingOrder&, const RestingOrder&) = default;
};

// One fill. Price is always the resting (passive) order's price.
struct TradeRecord {
  std::int64_t price = 0;
  std::int64_t quantity = 0;
  std::int64_t time = 0;
  std::uint64_t passive_order_id = 0;
  std::uint64_t aggressor_order_id = 0;
  std::int32_t passive_trader_id = kBackgroundTrader;
  std::int32_t aggressor_trader_id = kBackgroundTrader;
  Side aggressor_side = Side::Bid;

  friend bool operator==(const TradeRecord&, const TradeRecord&) = default;
};

struct L2Level {
  std::int64_t price = 0;
  std::int64_t quantity = 0;

  friend bool operator==(const L2Level&, const L2Level&) = default;
};

// Aggregated top-of-book view, best-first on both sides.
struct L2Snapshot {
  std::vector<L2Level> bids;
  std::vector<L2Level> asks;

  friend bool operator==(const L2Snapshot&, const L2Snapshot&) = default;
};

}  // namespace marlob::lob
