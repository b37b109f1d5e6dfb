#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "marlob/core/rng.hpp"
#include "marlob/lob/types.hpp"

// Randomized message streams for matcher equivalence tests. Event
// probabilities are tuned so the live-order count stays in the low hundreds:
// large enough to exercise deep matching, small enough that the naive
// oracle's rescans stay affordable and no book eviction ever fires.
namespace marlob::testing {

struct RandomStreamConfig {
  std::size_t n_messages = 100000;
  std::int64_t initial_ref = 10000;
  int band = 25;              // max passive distance from the reference price
  std::int64_t max_qty = 50;
  double p_new = 0.40;
  double p_marketable = 0.35;  // fraction of NewLimit that cross
  double p_cancel = 0.16;
  double p_delete = 0.26;
  double p_execute = 0.10;
  double p_absent = 0.05;  // cancel/delete aimed at ids that never rested
  // remainder: ExecuteHidden / Cross / Halt no-ops
};

class RandomMessageGen {
 public:
  RandomMessageGen(const RandomStreamConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(make_key(seed, 0x5eedu)), ref_(cfg.initial_ref) {
    recent_.reserve(kRecent);
  }

  lob::Message next() {
    using lob::MsgKind;
    using lob::Side;
    time_ += 1 + static_cast<std::int64_t>(rng_.below(1000));
    if (rng_.uniform() < 0.02) ref_ += rng_.coin() ? 1 : -1;
    if (ref_ < cfg_.band + 2) ref_ = cfg_.band + 2;

    lob::Message m;
    m.time = time_;
    const double u = rng_.uniform();
    const Side side = rng_.coin() ? Side::Bid : Side::Ask;
    m.side = side;
    if (u < cfg_.p_new) {
      m.kind = MsgKind::NewLimit;
      m.order_id = next_id_++;
      m.quantity = 1 + static_cast<std::int64_t>(rng_.below(
                           static_cast<std::uint64_t>(cfg_.max_qty)));
      const std::int64_t off = static_cast<std::int64_t>(rng_.below(
          static_cast<std::uint64_t>(cfg_.band)));
      if (rng_.uniform() < cfg_.p_marketable) {
        // Price through the far side of the reference so it can cross.
        m.price = side == Side::Bid ? ref_ + 1 + off / 4 : ref_ - off / 4;
      } else {
        m.price = side == Side::Bid ? ref_ - off : ref_ + 1 + off;
      }
      if (m.price < 1) m.price = 1;
      remember(m.order_id, side);
    } else if (u < cfg_.p_new + cfg_.p_cancel) {
      m.kind = MsgKind::CancelPartial;
      m.side = pick_target(m.order_id);
      m.quantity = 1 + static_cast<std::int64_t>(rng_.below(
                           static_cast<std::uint64_t>(cfg_.max_qty)));
    } else if (u < cfg_.p_new + cfg_.p_cancel + cfg_.p_delete) {
      m.kind = MsgKind::Delete;
      m.side = pick_target(m.order_id);
      m.quantity = 0;
    } else if (u < cfg_.p_new + cfg_.p_cancel + cfg_.p_delete + cfg_.p_execute) {
      m.kind = MsgKind::ExecuteVisible;
      m.side = pick_target(m.order_id);
      m.quantity = 1 + static_cast<std::int64_t>(rng_.below(
                           static_cast<std::uint64_t>(cfg_.max_qty)));
    } else {
      const std::uint64_t k = rng_.below(3);
      m.kind = k == 0 ? MsgKind::ExecuteHidden : k == 1 ? MsgKind::Cross : MsgKind::Halt;
      m.order_id = 0;
      m.quantity = 1;
      m.price = ref_;
    }
    return m;
  }

 private:
  static constexpr std::size_t kRecent = 512;

  void remember(std::uint64_t id, lob::Side side) {
    if (recent_.size() < kRecent) {
      recent_.push_back({id, side});
    } else {
      recent_[recent_pos_++ % kRecent] = {id, side};
    }
  }

  // Picks a target order for cancel/delete/execute; writes the id and
  // returns the side the order was submitted on (absent targets get a
  // random side, a guaranteed no-op either way).
  lob::Side pick_target(std::uint64_t& id_out) {
    if (recent_.empty() || rng_.uniform() < cfg_.p_absent) {
      id_out = next_id_ + 1000000;
      return rng_.coin() ? lob::Side::Bid : lob::Side::Ask;
    }
    const auto& t = recent_[rng_.below(recent_.size())];
    id_out = t.first;
    return t.second;
  }

  RandomStreamConfig cfg_;
  CounterRng rng_;
  std::int64_t ref_;
  std::int64_t time_ = 0;
  std::uint64_t next_id_ = 1;
  std::vector<std::pair<std::uint64_t, lob::Side>> recent_;
  std::size_t recent_pos_ = 0;
};

}  // namespace marlob::testing
