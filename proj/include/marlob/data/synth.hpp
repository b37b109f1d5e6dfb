#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "marlob/core/rng.hpp"
#include "marlob/data/store.hpp"
#include "marlob/lob/book.hpp"

namespace marlob::data {

// Synthetic market-by-order stream configuration. The generator quotes
// around a random-walk reference price and emits every action as a message,
// starting from an empty book, so any prefix replay reproduces the sampled
// book states exactly and all cancel/delete/execute targets are live
// synthetic ids.
struct SynthConfig {
  std::size_t n_messages = 100000;
  std::int64_t initial_mid = 1000;  // ticks; best bid starts here, best ask one tick above
  double volatility = 0.02;         // per-message probability of a 1-tick reference move
  double p_new_passive = 0.44;
  double p_new_cross = 0.14;
  double p_cancel = 0.08;
  double p_delete = 0.18;
  double p_execute = 0.14;
  // remaining probability: ExecuteHidden / Cross / Halt pass-through events
  int band = 8;                // max passive distance from the touch
  std::int64_t max_qty = 20;
  int seed_levels = 5;         // initial ladder depth per side
  std::int64_t seed_qty = 10;
  std::size_t state_sample_every = 1600;
  std::size_t state_depth = 10;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Deterministic-per-seed synthetic MessageStore.
inline MessageStore synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_messages == 0) throw std::invalid_argument("synth_generate: n_messages >= 1");
  if (cfg.initial_mid <= cfg.band + 1)
    throw std::invalid_argument("synth_generate: initial_mid must exceed band + 1");

  MessageStore store;
  store.messages.reserve(cfg.n_messages);

  lob::OrderBook book(1 << 15);
  std::vector<lob::TradeRecord> trades;
  CounterRng rng(make_key(seed, static_cast<std::uint64_t>(RngStream::Synth)));

  std::int64_t ref = cfg.initial_mid;  // target best bid; best ask targets ref + 1
  std::int64_t time = 0;
  std::uint64_t next_id = 1;

  auto emit = [&](lob::Message m) {
    if (store.messages.size() % cfg.state_sample_every == 0)
      store.book_states.push_back(
          BookState{store.messages.size(), book.l2_snapshot(cfg.state_depth)});
    trades.clear();
    book.process(m, trades);
    store.messages.push_back(m);
  };

  auto passive_quote = [&](lob::Side side) {
    const double u = rng.uniform();
    const std::int64_t off =
        static_cast<std::int64_t>(u * u * cfg.band);  // biased toward the touch
    lob::Message m;
    m.time = time;
    m.kind = lob::MsgKind::NewLimit;
    m.side = side;
    m.order_id = next_id++;
    m.quantity = 1 + static_cast<std::int64_t>(rng.below(
                         static_cast<std::uint64_t>(cfg.max_qty)));
    m.price = side == lob::Side::Bid ? ref - off : ref + 1 + off;
    emit(m);
  };

  // Initial ladder, emitted as ordinary messages.
  for (int level = 0; level < cfg.seed_levels && store.messages.size() < cfg.n_messages;
       ++level) {
    for (lob::Side side : {lob::Side::Bid, lob::Side::Ask}) {
      if (store.messages.size() >= cfg.n_messages) break;
      time += 1000;
      lob::Message m;
      m.time = time;
      m.kind = lob::MsgKind::NewLimit;
      m.side = side;
      m.order_id = next_id++;
      m.quantity = cfg.seed_qty;
      m.price = side == lob::Side::Bid ? ref - level : ref + 1 + level;
      emit(m);
    }
  }

  while (store.messages.size() < cfg.n_messages) {
    time += 1 + static_cast<std::int64_t>(rng.below(2000));
    if (rng.uniform() < cfg.volatility) {
      ref += rng.coin() ? 1 : -1;
      if (ref <= cfg.band + 1) ref = cfg.band + 2;
    }

    // Keep the touch populated so the stream never empties a side.
    if (!book.best_bid().has_value()) {
      passive_quote(lob::Side::Bid);
      continue;
    }
    if (!book.best_ask().has_value()) {
      passive_quote(lob::Side::Ask);
      continue;
    }

    const double u = rng.uniform();
    const lob::Side side = rng.coin() ? lob::Side::Bid : lob::Side::Ask;
    if (u < cfg.p_new_passive) {
      passive_quote(side);
    } else if (u < cfg.p_new_passive + cfg.p_new_cross) {
      // Marketable order against the current touch.
      const std::int64_t px = side == lob::Side::Bid ? *book.best_ask() : *book.best_bid();
      lob::Message m;
      m.time = time;
      m.kind = lob::MsgKind::NewLimit;
      m.side = side;
      m.order_id = next_id++;
      m.quantity = 1 + static_cast<std::int64_t>(rng.below(
                           static_cast<std::uint64_t>(cfg.max_qty)));
      m.price = px;
      emit(m);
    } else if (u < cfg.p_new_passive + cfg.p_new_cross + cfg.p_cancel + cfg.p_delete) {
      const bool partial = u < cfg.p_new_passive + cfg.p_new_cross + cfg.p_cancel;
      const auto bids = book.orders(lob::Side::Bid);
      const auto asks = book.orders(lob::Side::Ask);
      const std::size_t total = bids.size() + asks.size();
      if (total == 0) continue;
      const std::size_t pick = static_cast<std::size_t>(rng.below(total));
      const lob::RestingOrder& target = pick < bids.size() ? bids[pick] : asks[pick - bids.size()];
      lob::Message m;
      m.time = time;
      m.kind = partial ? lob::MsgKind::CancelPartial : lob::MsgKind::Delete;
      m.side = pick < bids.size() ? lob::Side::Bid : lob::Side::Ask;
      m.order_id = target.order_id;
      m.price = target.price;
      m.quantity = partial ? 1 + static_cast<std::int64_t>(rng.below(
                                     static_cast<std::uint64_t>(target.quantity)))
                           : target.quantity;
      emit(m);
    } else if (u < cfg.p_new_passive + cfg.p_new_cross + cfg.p_cancel + cfg.p_delete +
                       cfg.p_execute) {
      // Historical execution consuming the touch on one side.
      const auto orders = book.orders(side);
      if (orders.empty()) continue;
      const lob::RestingOrder& best = orders.back();
      lob::Message m;
      m.time = time;
      m.kind = lob::MsgKind::ExecuteVisible;
      m.side = side;
      m.order_id = best.order_id;
      m.price = best.price;
      m.quantity = 1 + static_cast<std::int64_t>(rng.below(
                           static_cast<std::uint64_t>(best.quantity)));
      emit(m);
    } else {
      const std::uint64_t k = rng.below(3);
      lob::Message m;
      m.time = time;
      m.kind = k == 0   ? lob::MsgKind::ExecuteHidden
               : k == 1 ? lob::MsgKind::Cross
                        : lob::MsgKind::Halt;
      m.side = side;
      m.order_id = 0;
      m.price = ref;
      m.quantity = 1;
      emit(m);
    }
  }
  return store;
}

}  // namespace marlob::data
