#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "marlob/agents/actions.hpp"
#include "marlob/agents/observations.hpp"
#include "marlob/agents/rewards.hpp"
#include "marlob/core/rng.hpp"
#include "marlob/data/store.hpp"
#include "marlob/env/config.hpp"
#include "marlob/lob/book.hpp"

namespace marlob::env {

struct ActiveOrder {
  std::uint64_t order_id = 0;
  std::int64_t price = 0;
  std::int64_t quantity = 0;
  lob::Side side = lob::Side::Bid;

  friend bool operator==(const ActiveOrder&, const ActiveOrder&) = default;
};

struct AgentState {
  std::int64_t inventory = 0;
  std::int64_t cash = 0;  // tick-lots
  std::vector<ActiveOrder> active;
  std::int64_t task_remaining = 0;
  agents::TaskDir task_dir = agents::TaskDir::Buy;
  double p_init = 0.0;  // arrival mid in ticks
  std::uint64_t order_nonce = 0;
  std::int64_t filled_total = 0;
  double slippage_total = 0.0;

  friend bool operator==(const AgentState& a, const AgentState& b) {
    return a.inventory == b.inventory && a.cash == b.cash && a.active == b.active &&
           a.task_remaining == b.task_remaining && a.task_dir == b.task_dir &&
           a.p_init == b.p_init && a.order_nonce == b.order_nonce &&
           a.filled_total == b.filled_total && a.slippage_total == b.slippage_total;
  }
};

struct AgentInfo {
  std::int64_t inventory = 0;
  std::int64_t cash = 0;
  double portfolio_value = 0.0;
  double slippage_step = 0.0;
  double slippage_total = 0.0;
  std::int64_t task_remaining = 0;
  std::int64_t step_filled = 0;
  int step_fill_count = 0;
};

struct StepOutput {
  std::vector<std::vector<double>> obs;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<AgentInfo> infos;
};

// Either a discrete action id or, for scripted baseline policies, explicit
// quotes that bypass the action space.
struct AgentAction {
  int id = 0;
  bool direct = false;
  agents::QuoteList quotes;
};

// One Delete per active order whose (side, price) is not reused by a new
// quote; orders at reused levels are preserved with their time priority.
inline std::vector<lob::Message> auto_cancel_messages(const std::vector<ActiveOrder>& active,
                                                      const agents::QuoteList& new_quotes) {
  std::vector<lob::Message> cancels;
  for (const ActiveOrder& order : active) {
    bool reused = false;
    for (const auto& q : new_quotes)
      if (q.side == order.side && q.price == order.price) reused = true;
    if (reused) continue;
    lob::Message m;
    m.kind = lob::MsgKind::Delete;
    m.side = order.side;
    m.order_id = order.order_id;
    cancels.push_back(m);
  }
  return cancels;
}

// Multi-agent market environment: one order book per instance, driven by a
// shared immutable MessageStore. Instances are independent state machines;
// all randomness is counter-based on (seed, env index, episode, step), so
// any number of instances may step concurrently without perturbing
// determinism.
class MarketEnv {
 public:
  MarketEnv(const data::MessageStore* store, const data::EpisodeIndex* index, EnvConfig cfg,
            std::uint64_t global_seed, int env_index)
      : store_(store), index_(index), cfg_(std::move(cfg)), seed_(global_seed),
        env_index_(env_index), book_(cfg_.book_capacity) {
    validate(cfg_);
    for (std::size_t s = 0; s < cfg_.specs.size(); ++s)
      for (int k = 0; k < cfg_.specs[s].count; ++k) flat_spec_.push_back(s);
    agents_.resize(flat_spec_.size());
    fills_.resize(flat_spec_.size());
    out_.obs.resize(flat_spec_.size());
    out_.rewards.assign(flat_spec_.size(), 0.0);
    out_.dones.assign(flat_spec_.size(), 0);
    out_.infos.assign(flat_spec_.size(), AgentInfo{});
    for (std::size_t a = 0; a < flat_spec_.size(); ++a) {
      const AgentSpec& sp = spec_of(a);
      out_.obs[a].assign(agents::observation_size(sp.obs_space, cfg_.obs_depth), 0.0);
      agents_[a].active.reserve(16);
      fills_[a].reserve(cfg_.fill_reserve);
    }
    agent_msgs_.reserve(flat_spec_.size() * 20 + 4);
    trades_.reserve(4096);
    step_trades_.reserve(8192);
  }

  std::size_t n_agents() const { return flat_spec_.size(); }
  const AgentSpec& spec_of(std::size_t agent) const { return cfg_.specs[flat_spec_[agent]]; }
  std::size_t spec_index_of(std::size_t agent) const { return flat_spec_[agent]; }
  const EnvConfig& config() const { return cfg_; }
  const lob::OrderBook& book() const { return book_; }
  const AgentState& agent_state(std::size_t agent) const { return agents_[agent]; }
  const StepOutput& output() const { return out_; }
  int step_count() const { return step_; }
  std::size_t episode() const { return episode_; }
  bool terminal() const { return terminal_; }
  std::int64_t mid_half() const { return mid_half_; }
  std::int64_t prev_mid_half() const { return prev_mid_half_; }
  double mean_mid_ticks() const { return mbar_ticks_; }
  std::uint64_t messages_processed() const { return messages_processed_; }
  // Fills generated during the last step, in processing order.
  std::span<const lob::TradeRecord> step_trades() const {
    return {step_trades_.data(), step_trades_.size()};
  }

  void reset(std::size_t episode_id) {
    if (episode_id >= index_->episode_count())
      throw std::out_of_range("MarketEnv::reset: episode " + std::to_string(episode_id) +
                              " out of range (count " +
                              std::to_string(index_->episode_count()) + ")");
    const std::size_t start = index_->starts[episode_id];
    const lob::L2Snapshot* snap = store_->state_before(start);
    if (snap == nullptr)
      throw std::runtime_error(
          "MarketEnv::reset: no book state sampled at episode start offset " +
          std::to_string(start) + "; reload the data with a matching sample stride");
    episode_ = episode_id;
    book_.clear();
    book_.init_from_l2(*snap, cfg_.synthetic_init_id_base);
    mid_half_ = book_.mid_half_ticks(cfg_.fallback_mid_half);
    prev_mid_half_ = mid_half_;
    mbar_ticks_ = static_cast<double>(mid_half_) / 2.0;
    last_bid_ = book_.best_bid().value_or(mid_half_ / 2 - 1);
    last_ask_ = book_.best_ask().value_or((mid_half_ + 1) / 2 + 1);
    step_ = 0;
    terminal_ = false;

    for (std::size_t a = 0; a < agents_.size(); ++a) {
      AgentState& st = agents_[a];
      st.inventory = 0;
      st.cash = 0;
      st.active.clear();
      st.order_nonce = 0;
      st.filled_total = 0;
      st.slippage_total = 0.0;
      st.p_init = static_cast<double>(mid_half_) / 2.0;
      const AgentSpec& sp = spec_of(a);
      if (sp.type == AgentType::Executor) {
        CounterRng rng(make_key(seed_, env_index_, episode_id, 0,
                                static_cast<std::uint64_t>(RngStream::TaskDir), a));
        st.task_dir = rng.coin() ? agents::TaskDir::Buy : agents::TaskDir::Sell;
        st.task_remaining = sp.params.task_size;
      } else {
        st.task_remaining = 0;
      }
      fills_[a].clear();
    }
    step_trades_.clear();
    for (std::size_t a = 0; a < agents_.size(); ++a) {
      out_.rewards[a] = 0.0;
      out_.dones[a] = 0;
      fill_info(a);
      build_observation(a);
    }
  }

  void step(std::span<const AgentAction> actions) {
    if (terminal_) throw std::logic_error("MarketEnv::step: episode is terminal; reset first");
    if (actions.size() != agents_.size())
      throw std::invalid_argument("MarketEnv::step: expected " +
                                  std::to_string(agents_.size()) + " actions, got " +
                                  std::to_string(actions.size()));

    const auto slice = index_->messages_per_step > 0
                           ? data::slice_for_step(*store_, *index_,
                                                  episode_, static_cast<std::size_t>(step_))
                           : std::span<const lob::Message>{};
    const std::int64_t step_time = slice.empty() ? last_time_ + 1 : slice.front().time;

    // (1) Action conversion plus auto-cancels for stale quotes.
    agent_msgs_.clear();
    for (std::size_t a = 0; a < agents_.size(); ++a)
      convert_action(a, actions[a], step_time);

    // (2) Uniform shuffle of all agent messages.
    CounterRng shuffle_rng(make_key(seed_, env_index_, episode_, step_,
                                    static_cast<std::uint64_t>(RngStream::Shuffle)));
    fisher_yates_shuffle(agent_msgs_, shuffle_rng);

    // (3) + (4) Agent messages first, then the replay slice, through the book.
    prev_mid_half_ = mid_half_;
    std::int64_t mid_sum = 0;
    std::int64_t mid_count = 0;
    step_trades_.clear();
    for (std::size_t a = 0; a < agents_.size(); ++a) fills_[a].clear();
    auto run_message = [&](const lob::Message& m) {
      trades_.clear();
      book_.process(m, trades_);
      for (const lob::TradeRecord& t : trades_) {
        step_trades_.push_back(t);
        attribute_trade(t);
      }
      mid_half_ = book_.mid_half_ticks(mid_half_);
      mid_sum += mid_half_;
      ++mid_count;
      ++messages_processed_;
      last_time_ = m.time;
    };
    for (const lob::Message& m : agent_msgs_) run_message(m);
    for (const lob::Message& m : slice) run_message(m);
    if (const auto bb = book_.best_bid()) last_bid_ = *bb;
    if (const auto ba = book_.best_ask()) last_ask_ = *ba;

    // (5) Step outcomes.
    mbar_ticks_ = mid_count > 0
                      ? static_cast<double>(mid_sum) / (2.0 * static_cast<double>(mid_count))
                      : static_cast<double>(prev_mid_half_) / 2.0;
    rebuild_active_orders();
    ++step_;
    terminal_ = step_ >= cfg_.steps_per_episode;
    for (std::size_t a = 0; a < agents_.size(); ++a) {
      out_.rewards[a] = compute_reward(a);
      out_.dones[a] = terminal_ ? 1 : 0;
      fill_info(a);
      build_observation(a);
    }
  }

  void step_ids(std::span<const int> ids) {
    scratch_actions_.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      scratch_actions_[i] = AgentAction{};
      scratch_actions_[i].id = ids[i];
    }
    step(scratch_actions_);
  }

  // Effective tops with the configured fallbacks for one-sided/empty books.
  std::pair<std::int64_t, std::int64_t> effective_tops(std::size_t agent) const {
    const AgentParams& p = spec_of(agent).params;
    const std::int64_t mid_floor = mid_half_ >= 0 ? mid_half_ / 2 : (mid_half_ - 1) / 2;
    const std::int64_t mid_ceil = (mid_half_ + 1) / 2;
    std::int64_t bid = book_.best_bid().value_or(mid_floor - p.default_half_spread);
    std::int64_t ask = book_.best_ask().value_or(mid_ceil + p.default_half_spread);
    if (bid < 1) bid = 1;
    if (ask <= bid) ask = bid + 1;
    return {bid, ask};
  }

  bool state_equals(const MarketEnv& other) const {
    return book_ == other.book_ && agents_ == other.agents_ && step_ == other.step_ &&
           episode_ == other.episode_ && mid_half_ == other.mid_half_ &&
           prev_mid_half_ == other.prev_mid_half_ && mbar_ticks_ == other.mbar_ticks_ &&
           terminal_ == other.terminal_;
  }

 private:
  void convert_action(std::size_t a, const AgentAction& action, std::int64_t step_time) {
    const AgentSpec& sp = spec_of(a);
    const AgentParams& p = sp.params;
    AgentState& st = agents_[a];
    agents::QuoteList quotes;
    if (action.direct) {
      quotes = action.quotes;
      if (sp.type == AgentType::Executor) {
        for (int i = 0; i < quotes.count; ++i) {
          auto& q = quotes.items[static_cast<std::size_t>(i)];
          q.quantity = std::min(q.quantity, st.task_remaining);
        }
        if (quotes.count == 1 && quotes.items[0].quantity <= 0) quotes.count = 0;
      }
    } else {
      const auto [bid, ask] = effective_tops(a);
      switch (sp.type) {
        case AgentType::Executor: {
          // Far-touch fallback: one tick beyond the last valid opposite top.
          std::int64_t eb = bid, ea = ask;
          if (st.task_dir == agents::TaskDir::Buy && !book_.best_ask().has_value())
            ea = std::max<std::int64_t>(2, last_ask_ + 1);
          if (st.task_dir == agents::TaskDir::Sell && !book_.best_bid().has_value())
            eb = std::max<std::int64_t>(1, last_bid_ - 1);
          quotes = agents::decode_exec(action.id, eb, ea, p.order_size, p.exec_complex,
                                       st.task_dir, st.task_remaining);
          break;
        }
        case AgentType::Directional:
          quotes = agents::decode_directional(action.id, bid, ask, p.order_size);
          break;
        case AgentType::MarketMaker:
          switch (sp.mm_space) {
            case MMActionSpace::FixedQuant:
              quotes = agents::decode_fixed_quant(action.id, bid, ask, p.order_size,
                                                  p.fixed_quant_from_mid);
              break;
            case MMActionSpace::SpreadSkew:
              quotes = agents::decode_spread_skew(action.id, mid_half_, p.spread_skew,
                                                  p.order_size);
              break;
            case MMActionSpace::AvSt:
              quotes = agents::decode_avst(action.id, mid_half_, st.inventory, step_,
                                           p.avst, p.order_size);
              break;
          }
          break;
      }
    }

    // Keep resting orders whose price level is requoted (and drop the
    // duplicate new quote); cancel the rest.
    bool quote_kept[2] = {false, false};
    for (const ActiveOrder& order : st.active) {
      bool reused = false;
      for (int i = 0; i < quotes.count; ++i) {
        const auto& q = quotes.items[static_cast<std::size_t>(i)];
        if (q.side == order.side && q.price == order.price) {
          reused = true;
          quote_kept[i] = true;
        }
      }
      if (reused) continue;
      lob::Message m;
      m.time = step_time;
      m.kind = lob::MsgKind::Delete;
      m.side = order.side;
      m.order_id = order.order_id;
      m.trader_id = static_cast<std::int32_t>(a) + 1;
      agent_msgs_.push_back(m);
    }
    for (int i = 0; i < quotes.count; ++i) {
      if (quote_kept[i]) continue;
      const auto& q = quotes.items[static_cast<std::size_t>(i)];
      lob::Message m;
      m.time = step_time;
      m.kind = lob::MsgKind::NewLimit;
      m.side = q.side;
      m.price = q.price;
      m.quantity = q.quantity;
      m.order_id = cfg_.agent_id_base + static_cast<std::uint64_t>(a) * cfg_.agent_id_range +
                   st.order_nonce++;
      m.trader_id = static_cast<std::int32_t>(a) + 1;
      agent_msgs_.push_back(m);
    }
  }

  void attribute_trade(const lob::TradeRecord& t) {
    if (t.passive_trader_id > 0)
      apply_fill(static_cast<std::size_t>(t.passive_trader_id - 1), t.price, t.quantity,
                 lob::opposite(t.aggressor_side));
    if (t.aggressor_trader_id > 0)
      apply_fill(static_cast<std::size_t>(t.aggressor_trader_id - 1), t.price, t.quantity,
                 t.aggressor_side);
  }

  void apply_fill(std::size_t a, std::int64_t price, std::int64_t qty, lob::Side side) {
    AgentState& st = agents_[a];
    if (side == lob::Side::Bid) {
      st.inventory += qty;
      st.cash -= price * qty;
    } else {
      st.inventory -= qty;
      st.cash += price * qty;
    }
    fills_[a].push_back(agents::AgentFill{static_cast<double>(price), qty, side});
    st.filled_total += qty;
    if (spec_of(a).type == AgentType::Executor) {
      const bool task_side = (st.task_dir == agents::TaskDir::Buy) == (side == lob::Side::Bid);
      if (task_side) st.task_remaining = std::max<std::int64_t>(0, st.task_remaining - qty);
    }
  }

  void rebuild_active_orders() {
    for (AgentState& st : agents_) st.active.clear();
    for (lob::Side side : {lob::Side::Bid, lob::Side::Ask}) {
      for (const lob::RestingOrder& o : book_.orders(side)) {
        if (o.trader_id <= 0) continue;
        agents_[static_cast<std::size_t>(o.trader_id - 1)].active.push_back(
            ActiveOrder{o.order_id, o.price, o.quantity, side});
      }
    }
  }

  double compute_reward(std::size_t a) {
    const AgentSpec& sp = spec_of(a);
    const AgentParams& p = sp.params;
    const AgentState& st = agents_[a];
    const std::span<const agents::AgentFill> fills{fills_[a].data(), fills_[a].size()};
    const double mid_ticks = static_cast<double>(mid_half_) / 2.0;
    const double prev_ticks = static_cast<double>(prev_mid_half_) / 2.0;
    double r = 0.0;
    switch (sp.reward) {
      case RewardId::BuySell:
        r = agents::reward_buysell(fills, mbar_ticks_);
        break;
      case RewardId::Spooner:
        r = agents::reward_spooner(fills, mbar_ticks_, st.inventory, mid_ticks, prev_ticks,
                                   p.lambda);
        break;
      case RewardId::Exec:
        r = agents::reward_exec(fills, st.p_init, st.task_dir, p.lambda_exec, terminal_,
                                st.task_remaining, p.unfilled_penalty_coef);
        break;
    }
    if (sp.reward != RewardId::Exec && p.quadratic_penalty)
      r -= agents::quadratic_inventory_penalty(st.inventory, p.rho, p.inventory_cap);
    return r * p.reward_scale;
  }

  double reference_price(std::size_t a) const {
    const AgentParams& p = spec_of(a).params;
    const AgentState& st = agents_[a];
    if (p.ref_price == RefPriceMode::Mid || st.inventory == 0)
      return static_cast<double>(mid_half_) / 2.0;
    // Far touch of the liquidation side: bid for longs, ask for shorts.
    if (st.inventory > 0) return static_cast<double>(book_.best_bid().value_or(last_bid_));
    return static_cast<double>(book_.best_ask().value_or(last_ask_));
  }

  void fill_info(std::size_t a) {
    const AgentState& st = agents_[a];
    AgentInfo& info = out_.infos[a];
    info.inventory = st.inventory;
    info.cash = st.cash;
    info.portfolio_value =
        agents::portfolio_value(st.inventory, static_cast<double>(st.cash),
                                reference_price(a));
    const std::span<const agents::AgentFill> fills{fills_[a].data(), fills_[a].size()};
    info.slippage_step = spec_of(a).type == AgentType::Executor
                             ? agents::slippage(fills, st.p_init, st.task_dir)
                             : 0.0;
    agents_[a].slippage_total += info.slippage_step;
    info.slippage_total = agents_[a].slippage_total;
    info.task_remaining = st.task_remaining;
    std::int64_t filled = 0;
    for (const auto& f : fills) filled += f.quantity;
    info.step_filled = filled;
    info.step_fill_count = static_cast<int>(fills.size());
  }

  void build_observation(std::size_t a) {
    const AgentSpec& sp = spec_of(a);
    const AgentParams& p = sp.params;
    const AgentState& st = agents_[a];
    book_.l2_snapshot(cfg_.obs_depth, l2_scratch_);

    agents::MarketView mkt;
    mkt.best_bid = book_.best_bid().value_or(-1);
    mkt.best_ask = book_.best_ask().value_or(-1);
    mkt.mid_half = mid_half_;
    mkt.prev_mid_half = prev_mid_half_;
    mkt.l2 = &l2_scratch_;
    mkt.time_frac = static_cast<double>(step_) / static_cast<double>(cfg_.steps_per_episode);

    agents::AgentView view;
    view.inventory = st.inventory;
    view.cash = st.cash;
    view.inventory_cap = p.inventory_cap;
    view.order_size = p.order_size;
    view.cash_scale =
        std::max<std::int64_t>(1, p.inventory_cap * static_cast<std::int64_t>(st.p_init));
    view.p_init = st.p_init;
    view.task_remaining = st.task_remaining;
    view.task_size = p.task_size;
    view.direction = st.task_dir == agents::TaskDir::Buy ? 1 : -1;
    for (const ActiveOrder& o : st.active) {
      if (o.side == lob::Side::Bid)
        view.own_bid = view.own_bid < 0 ? o.price : std::max(view.own_bid, o.price);
      else
        view.own_ask = view.own_ask < 0 ? o.price : std::min(view.own_ask, o.price);
    }

    std::span<double> out{out_.obs[a].data(), out_.obs[a].size()};
    if (sp.type == AgentType::Executor)
      agents::build_exec_observation(mkt, view, out);
    else
      agents::build_mm_observation(sp.obs_space, mkt, view, out);
  }

  const data::MessageStore* store_;
  const data::EpisodeIndex* index_;
  EnvConfig cfg_;
  std::uint64_t seed_;
  int env_index_;

  lob::OrderBook book_;
  std::vector<std::size_t> flat_spec_;
  std::vector<AgentState> agents_;
  std::vector<std::vector<agents::AgentFill>> fills_;
  StepOutput out_;
  std::size_t episode_ = 0;
  int step_ = 0;
  bool terminal_ = true;
  std::int64_t mid_half_ = 0;
  std::int64_t prev_mid_half_ = 0;
  double mbar_ticks_ = 0.0;
  std::int64_t last_bid_ = 0;
  std::int64_t last_ask_ = 0;
  std::int64_t last_time_ = 0;
  std::uint64_t messages_processed_ = 0;

  std::vector<lob::Message> agent_msgs_;
  std::vector<lob::TradeRecord> trades_;
  std::vector<lob::TradeRecord> step_trades_;
  std::vector<AgentAction> scratch_actions_;
  lob::L2Snapshot l2_scratch_;
};

}  // namespace marlob::env
