#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "marlob/baselines/avst.hpp"
#include "marlob/baselines/twap.hpp"
#include "marlob/data/synth.hpp"

using namespace marlob;
using baselines::make_twap_plan;
using baselines::TwapPriceMode;

namespace {

struct Fixture {
  data::MessageStore store;
  data::EpisodeIndex index;
  env::EnvConfig cfg;

  Fixture(std::int64_t task_size, int steps) {
    data::SynthConfig synth;
    synth.n_messages = static_cast<std::size_t>(steps) * 100 * 2;
    synth.state_sample_every = static_cast<std::size_t>(steps) * 100;
    store = data::synth_generate(synth, 31);
    index = data::build_episode_index(store, steps, 100, steps);
    env::AgentSpec exec;
    exec.type = env::AgentType::Executor;
    exec.obs_space = agents::ObsSpaceId::Exec;
    exec.reward = env::RewardId::Exec;
    exec.params.task_size = task_size;
    cfg.specs = {exec};
    cfg.steps_per_episode = steps;
    cfg.messages_per_step = 100;
  }
};

}  // namespace

TEST_CASE("twap schedule is a fair division") {
  SECTION("600 lots over 64 steps") {
    const auto plan = make_twap_plan(600, 64);
    CHECK(plan.schedule.size() == 64);
    CHECK(std::accumulate(plan.schedule.begin(), plan.schedule.end(), 0ll) == 600);
    const auto [lo, hi] = std::minmax_element(plan.schedule.begin(), plan.schedule.end());
    CHECK(*lo == 9);
    CHECK(*hi == 10);
    CHECK(std::count(plan.schedule.begin(), plan.schedule.end(), 10) == 24);
  }

  SECTION("zero task gives an all-zero schedule") {
    const auto plan = make_twap_plan(0, 64);
    CHECK(std::accumulate(plan.schedule.begin(), plan.schedule.end(), 0ll) == 0);
    CHECK(*std::max_element(plan.schedule.begin(), plan.schedule.end()) == 0);
  }

  SECTION("fair-division properties over many shapes") {
    for (std::int64_t task : {1, 7, 64, 100, 600, 601, 6399}) {
      for (int steps : {1, 2, 7, 64, 100}) {
        const auto plan = make_twap_plan(task, steps);
        CHECK(std::accumulate(plan.schedule.begin(), plan.schedule.end(), 0ll) == task);
        const auto [lo, hi] = std::minmax_element(plan.schedule.begin(), plan.schedule.end());
        CHECK(*lo >= 0);
        CHECK(*hi - *lo <= 1);
      }
    }
  }
}

TEST_CASE("aggressive twap executes the full task on a liquid market") {
  Fixture fx(600, 64);
  env::MarketEnv market(&fx.store, &fx.index, fx.cfg, 5, 0);
  market.reset(0);
  const auto plan = make_twap_plan(600, 64);
  int step = 0;
  while (!market.terminal()) {
    const env::AgentAction action = baselines::twap_policy(market, 0, plan, step);
    const env::AgentAction actions[1] = {action};
    market.step(actions);
    ++step;
  }
  CHECK(market.agent_state(0).task_remaining == 0);
  CHECK(market.agent_state(0).filled_total == 600);
}

TEST_CASE("twap clears backlog on the final step") {
  Fixture fx(40, 8);
  env::MarketEnv market(&fx.store, &fx.index, fx.cfg, 5, 0);
  market.reset(0);
  const auto plan = make_twap_plan(40, 8);
  // Skip the first six steps entirely (no orders posted), then let the
  // policy catch up.
  for (int step = 0; step < 6; ++step) {
    const env::AgentAction noop[1] = {env::AgentAction{0, true, {}}};
    market.step(noop);
  }
  const env::AgentAction seventh[1] = {baselines::twap_policy(market, 0, plan, 6)};
  market.step(seventh);
  const std::int64_t remaining = market.agent_state(0).task_remaining;
  const env::AgentAction last[1] = {baselines::twap_policy(market, 0, plan, 7)};
  CHECK(last[0].quotes.count == 1);
  CHECK(last[0].quotes.items[0].quantity == remaining);
  market.step(last);
  CHECK(market.agent_state(0).task_remaining == 0);
}

TEST_CASE("avst baseline equals the learned decoder on the matching grid entry") {
  Fixture fx(600, 16);
  env::AgentSpec mm;
  mm.type = env::AgentType::MarketMaker;
  mm.mm_space = env::MMActionSpace::AvSt;
  fx.cfg.specs = {mm};
  env::MarketEnv market(&fx.store, &fx.index, fx.cfg, 5, 0);
  market.reset(0);

  baselines::AvStBaseline baseline;
  baseline.gamma_index = 2;
  CounterRng rng(make_key(4, 0x7u));
  while (!market.terminal()) {
    const env::AgentAction action = baselines::avst_policy(market, 0, baseline);
    const auto expected =
        agents::decode_avst(2, market.mid_half(), market.agent_state(0).inventory,
                            market.step_count(), baseline.params,
                            market.spec_of(0).params.order_size);
    CHECK(action.quotes == expected);
    // Swap between the baseline and the id-driven path; they must coincide.
    if (rng.coin()) {
      const env::AgentAction actions[1] = {action};
      market.step(actions);
    } else {
      market.step_ids(std::vector<int>{2});
    }
  }
  CHECK_THROWS_AS(
      baselines::avst_policy(market, 0, baselines::AvStBaseline{{}, 99}),
      std::out_of_range);
}
