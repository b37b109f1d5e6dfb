#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "marlob/data/synth.hpp"
#include "marlob/env/env.hpp"

using namespace marlob;
using env::AgentAction;
using env::AgentSpec;
using env::AgentType;
using env::EnvConfig;
using env::MarketEnv;

namespace {

data::MessageStore shared_store() {
  data::SynthConfig cfg;
  cfg.n_messages = 16000;
  cfg.state_sample_every = 800;
  return data::synth_generate(cfg, 42);
}

// Store with one dummy message and an empty initial state; used with
// messages_per_step = 0 for replay-free stepping.
data::MessageStore empty_market_store() {
  data::MessageStore store;
  lob::Message m;
  m.kind = lob::MsgKind::Halt;
  store.messages.push_back(m);
  store.book_states.push_back(data::BookState{0, {}});
  return store;
}

EnvConfig small_config(int steps, int msgs_per_step) {
  EnvConfig cfg;
  cfg.steps_per_episode = steps;
  cfg.messages_per_step = msgs_per_step;
  cfg.start_stride_steps = steps;
  cfg.obs_depth = 3;
  return cfg;
}

AgentSpec mm_spec() {
  AgentSpec spec;
  spec.type = AgentType::MarketMaker;
  spec.mm_space = env::MMActionSpace::FixedQuant;
  spec.reward = env::RewardId::Spooner;
  return spec;
}

AgentSpec exec_spec() {
  AgentSpec spec;
  spec.type = AgentType::Executor;
  spec.obs_space = agents::ObsSpaceId::Exec;
  spec.reward = env::RewardId::Exec;
  spec.params.task_size = 120;
  return spec;
}

AgentAction direct_quote(lob::Side side, std::int64_t price, std::int64_t qty) {
  AgentAction a;
  a.direct = true;
  a.quotes.push(side, price, qty);
  return a;
}

}  // namespace

TEST_CASE("reset is deterministic and zeroes agent state") {
  const auto store = shared_store();
  auto cfg = small_config(16, 100);
  cfg.specs = {mm_spec(), exec_spec()};
  const auto index = data::build_episode_index(store, 16, 100, 16);
  REQUIRE(index.episode_count() >= 2);

  MarketEnv a(&store, &index, cfg, 7, 0);
  MarketEnv b(&store, &index, cfg, 7, 0);
  a.reset(1);
  b.reset(1);
  CHECK(a.state_equals(b));
  CHECK(a.agent_state(0).inventory == 0);
  CHECK(a.agent_state(0).cash == 0);
  CHECK(a.agent_state(1).task_remaining == 120);
  CHECK(a.output().obs[0][0] == 0.0);  // inventory feature
  CHECK(a.output().obs[0][1] == 0.0);  // cash feature
  CHECK(a.output().obs[1][0] == 1.0);  // task_remaining fraction

  CHECK_THROWS_AS(a.reset(index.episode_count()), std::out_of_range);
}

TEST_CASE("executor task direction is uniformly sampled across seeds") {
  const auto store = empty_market_store();
  data::EpisodeIndex index;
  index.starts = {0};
  index.steps_per_episode = 4;
  index.messages_per_step = 0;
  auto cfg = small_config(4, 0);
  cfg.specs = {exec_spec()};

  int buys = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    MarketEnv env(&store, &index, cfg, static_cast<std::uint64_t>(seed), 0);
    env.reset(0);
    if (env.agent_state(0).task_dir == agents::TaskDir::Buy) ++buys;
  }
  const double frac = static_cast<double>(buys) / n;
  CHECK(frac > 0.48);
  CHECK(frac < 0.52);
}

TEST_CASE("replay-only steps evolve the book as pure replay") {
  const auto store = shared_store();
  auto cfg = small_config(16, 100);
  cfg.specs = {mm_spec(), mm_spec()};
  const auto index = data::build_episode_index(store, 16, 100, 16);

  MarketEnv env(&store, &index, cfg, 3, 0);
  env.reset(0);
  const std::vector<int> noop = {0, 0};
  for (int s = 0; s < 16; ++s) {
    env.step_ids(noop);
    CHECK(env.output().rewards[0] == 0.0);
    CHECK(env.output().rewards[1] == 0.0);
    CHECK(env.output().infos[0].step_filled == 0);
  }
  CHECK(env.terminal());

  // Straight replay of the same window.
  lob::OrderBook replay(cfg.book_capacity);
  replay.init_from_l2(*store.state_before(index.starts[0]), cfg.synthetic_init_id_base);
  std::vector<lob::TradeRecord> trades;
  for (std::size_t i = index.starts[0]; i < index.starts[0] + 1600; ++i) {
    trades.clear();
    replay.process(store.messages[i], trades);
  }
  CHECK(env.book() == replay);
}

TEST_CASE("zero-agent environments are pure replay") {
  const auto store = shared_store();
  auto cfg = small_config(16, 100);
  const auto index = data::build_episode_index(store, 16, 100, 16);

  MarketEnv env(&store, &index, cfg, 3, 0);
  env.reset(1);
  while (!env.terminal()) env.step(std::span<const AgentAction>{});

  lob::OrderBook replay(cfg.book_capacity);
  replay.init_from_l2(*store.state_before(index.starts[1]), cfg.synthetic_init_id_base);
  std::vector<lob::TradeRecord> trades;
  for (std::size_t i = index.starts[1]; i < index.starts[1] + 1600; ++i) {
    trades.clear();
    replay.process(store.messages[i], trades);
  }
  CHECK(env.book() == replay);
}

TEST_CASE("two crossing agents produce one trade with shuffle-fair aggression") {
  const auto store = empty_market_store();
  data::EpisodeIndex index;
  index.starts = {0};
  index.steps_per_episode = 4;
  index.messages_per_step = 0;
  auto cfg = small_config(4, 0);
  cfg.specs = {mm_spec(), mm_spec()};

  int agent0_aggressor = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    MarketEnv env(&store, &index, cfg, static_cast<std::uint64_t>(seed), 0);
    env.reset(0);
    const AgentAction actions[2] = {direct_quote(lob::Side::Bid, 1000, 10),
                                    direct_quote(lob::Side::Ask, 1000, 10)};
    env.step(actions);
    REQUIRE(env.step_trades().size() == 1);
    const auto& t = env.step_trades()[0];
    CHECK(t.quantity == 10);
    CHECK(t.price == 1000);
    if (t.aggressor_trader_id == 1) ++agent0_aggressor;
    // Both sides booked the fill.
    CHECK(env.agent_state(0).inventory == 10);
    CHECK(env.agent_state(1).inventory == -10);
    CHECK(env.agent_state(0).cash == -10000);
    CHECK(env.agent_state(1).cash == 10000);
  }
  const double frac = static_cast<double>(agent0_aggressor) / n;
  CHECK(frac > 0.485);
  CHECK(frac < 0.515);
}

TEST_CASE("episode length and terminal handling") {
  const auto store = shared_store();
  auto cfg = small_config(64, 100);
  cfg.specs = {mm_spec()};
  const auto index = data::build_episode_index(store, 64, 100, 64);

  MarketEnv env(&store, &index, cfg, 1, 0);
  env.reset(0);
  const std::vector<int> noop = {0};
  for (int s = 0; s < 64; ++s) {
    CHECK(!env.terminal());
    env.step_ids(noop);
    const bool done = env.output().dones[0] != 0;
    CHECK(done == (s == 63));
  }
  CHECK(env.terminal());
  CHECK_THROWS_AS(env.step_ids(noop), std::logic_error);
}

TEST_CASE("out-of-range action ids are rejected") {
  const auto store = shared_store();
  auto cfg = small_config(16, 100);
  cfg.specs = {mm_spec()};
  const auto index = data::build_episode_index(store, 16, 100, 16);
  MarketEnv env(&store, &index, cfg, 1, 0);
  env.reset(0);
  const std::vector<int> bad = {8};
  CHECK_THROWS_AS(env.step_ids(bad), std::out_of_range);
}

TEST_CASE("auto-cancel prepares deletes for unmatched price levels") {
  std::vector<env::ActiveOrder> active;

  SECTION("no active orders") {
    agents::QuoteList quotes;
    CHECK(env::auto_cancel_messages(active, quotes).empty());
  }

  SECTION("reused level is preserved") {
    active.push_back({101, 1000, 10, lob::Side::Bid});
    agents::QuoteList quotes;
    quotes.push(lob::Side::Bid, 1000, 10);
    CHECK(env::auto_cancel_messages(active, quotes).empty());
  }

  SECTION("stale levels are cancelled") {
    active.push_back({101, 1000, 10, lob::Side::Bid});
    active.push_back({102, 1005, 10, lob::Side::Ask});
    agents::QuoteList quotes;
    quotes.push(lob::Side::Bid, 999, 10);
    const auto cancels = env::auto_cancel_messages(active, quotes);
    REQUIRE(cancels.size() == 2);
    CHECK(cancels[0].kind == lob::MsgKind::Delete);
    CHECK(cancels[0].order_id == 101);
    CHECK(cancels[1].order_id == 102);
  }
}

TEST_CASE("requoting the same level keeps the resting order and its priority") {
  const auto store = empty_market_store();
  data::EpisodeIndex index;
  index.starts = {0};
  index.steps_per_episode = 8;
  index.messages_per_step = 0;
  auto cfg = small_config(8, 0);
  cfg.specs = {mm_spec()};

  MarketEnv env(&store, &index, cfg, 5, 0);
  env.reset(0);
  const AgentAction quote[1] = {direct_quote(lob::Side::Bid, 990, 10)};
  env.step(quote);
  REQUIRE(env.agent_state(0).active.size() == 1);
  const auto id_first = env.agent_state(0).active[0].order_id;
  env.step(quote);
  REQUIRE(env.agent_state(0).active.size() == 1);
  CHECK(env.agent_state(0).active[0].order_id == id_first);
  CHECK(env.book().live_orders(lob::Side::Bid) == 1);

  // A different price cancels the old order and posts a new one.
  const AgentAction requote[1] = {direct_quote(lob::Side::Bid, 991, 10)};
  env.step(requote);
  REQUIRE(env.agent_state(0).active.size() == 1);
  CHECK(env.agent_state(0).active[0].order_id != id_first);
  CHECK(env.agent_state(0).active[0].price == 991);
  CHECK(env.book().live_orders(lob::Side::Bid) == 1);
}

TEST_CASE("cash-inventory accounting matches the trade log") {
  const auto store = shared_store();
  auto cfg = small_config(32, 100);
  cfg.specs = {mm_spec(), mm_spec(), exec_spec()};
  const auto index = data::build_episode_index(store, 32, 100, 32);

  MarketEnv env(&store, &index, cfg, 11, 0);
  CounterRng rng(make_key(123, 0xAC71u));
  for (std::size_t ep = 0; ep < std::min<std::size_t>(3, index.episode_count()); ++ep) {
    env.reset(ep);
    std::vector<std::int64_t> inv(3, 0), cash(3, 0);
    while (!env.terminal()) {
      std::vector<int> ids = {static_cast<int>(rng.below(8)), static_cast<int>(rng.below(8)),
                              static_cast<int>(rng.below(12))};
      env.step_ids(ids);
      std::int64_t agent_buys = 0, agent_sells = 0;
      for (const auto& t : env.step_trades()) {
        if (t.aggressor_trader_id > 0) {
          const auto a = static_cast<std::size_t>(t.aggressor_trader_id - 1);
          const bool buy = t.aggressor_side == lob::Side::Bid;
          inv[a] += buy ? t.quantity : -t.quantity;
          cash[a] += buy ? -t.price * t.quantity : t.price * t.quantity;
          (buy ? agent_buys : agent_sells) += t.quantity;
        }
        if (t.passive_trader_id > 0) {
          const auto a = static_cast<std::size_t>(t.passive_trader_id - 1);
          const bool buy = t.aggressor_side == lob::Side::Ask;
          inv[a] += buy ? t.quantity : -t.quantity;
          cash[a] += buy ? -t.price * t.quantity : t.price * t.quantity;
          (buy ? agent_buys : agent_sells) += t.quantity;
        }
      }
      for (std::size_t a = 0; a < 3; ++a) {
        REQUIRE(env.agent_state(a).inventory == inv[a]);
        REQUIRE(env.agent_state(a).cash == cash[a]);
      }
    }
  }
}

TEST_CASE("stepping is deterministic for a fixed seed") {
  const auto store = shared_store();
  auto cfg = small_config(16, 100);
  cfg.specs = {mm_spec(), exec_spec()};
  const auto index = data::build_episode_index(store, 16, 100, 16);

  MarketEnv a(&store, &index, cfg, 77, 4);
  MarketEnv b(&store, &index, cfg, 77, 4);
  a.reset(0);
  b.reset(0);
  CounterRng rng(make_key(9, 0x9u));
  while (!a.terminal()) {
    std::vector<int> ids = {static_cast<int>(rng.below(8)), static_cast<int>(rng.below(12))};
    a.step_ids(ids);
    b.step_ids(ids);
    REQUIRE(a.state_equals(b));
    for (std::size_t i = 0; i < a.output().obs.size(); ++i)
      REQUIRE(a.output().obs[i] == b.output().obs[i]);
    REQUIRE(a.output().rewards == b.output().rewards);
  }
}

TEST_CASE("executor fills reduce the task and report slippage") {
  const auto store = shared_store();
  auto cfg = small_config(32, 100);
  auto exec = exec_spec();
  exec.params.task_size = 40;
  cfg.specs = {exec};
  const auto index = data::build_episode_index(store, 32, 100, 32);

  MarketEnv env(&store, &index, cfg, 2, 0);
  env.reset(0);
  // Always hit the far touch with the x5 multiplier: completes quickly.
  const std::vector<int> aggressive = {8};
  std::int64_t last_remaining = 40;
  while (!env.terminal()) {
    env.step_ids(aggressive);
    const auto& info = env.output().infos[0];
    CHECK(info.task_remaining <= last_remaining);
    last_remaining = info.task_remaining;
  }
  CHECK(env.agent_state(0).task_remaining == 0);
  CHECK(std::llabs(env.agent_state(0).inventory) == 40);
  // Slippage reported and finite.
  CHECK(std::isfinite(env.output().infos[0].slippage_total));
}
