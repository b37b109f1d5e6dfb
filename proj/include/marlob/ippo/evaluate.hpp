#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlob/baselines/avst.hpp"
#include "marlob/baselines/twap.hpp"
#include "marlob/ippo/net.hpp"
#include "marlob/ippo/ppo.hpp"

namespace marlob::ippo {

enum class PolicyKind { Learned, Twap, AvSt, Random, NoOp };

struct PolicyChoice {
  PolicyKind kind = PolicyKind::NoOp;
  std::string label = "noop";
  const PolicyNet* net = nullptr;  // Learned
  baselines::AvStBaseline avst;
  baselines::TwapPriceMode twap_mode = baselines::TwapPriceMode::Aggressive;
};

struct TypeCellStats {
  double pv_mean = 0.0;
  double pv_stderr = 0.0;
  double slippage_mean = 0.0;
  double slippage_stderr = 0.0;
  double completion_mean = 0.0;
  std::int64_t filled_total = 0;
  bool no_fills = true;
};

struct CellStats {
  std::string row_label;
  std::string col_label;
  TypeCellStats per_type[2];
  std::int64_t episodes = 0;
};

struct CrossPlayResult {
  std::vector<std::string> row_labels;  // options for type 0
  std::vector<std::string> col_labels;  // options for type 1
  std::vector<CellStats> cells;         // row-major

  const CellStats& cell(std::size_t row, std::size_t col) const {
    return cells[row * col_labels.size() + col];
  }
};

namespace detail {

inline env::AgentAction choose_action(const PolicyChoice& policy, const env::MarketEnv& market,
                                      std::size_t agent, int step,
                                      const baselines::TwapPlan& plan,
                                      std::vector<double>& hidden,
                                      std::vector<double>& hidden_scratch,
                                      std::vector<double>& logits, std::uint64_t seed,
                                      std::uint64_t cell_id, std::size_t episode) {
  env::AgentAction action;
  switch (policy.kind) {
    case PolicyKind::NoOp:
      action.direct = true;
      break;
    case PolicyKind::Twap:
      action = baselines::twap_policy(market, agent, plan, step);
      break;
    case PolicyKind::AvSt:
      action = baselines::avst_policy(market, agent, policy.avst);
      break;
    case PolicyKind::Random: {
      CounterRng rng(make_key(seed, static_cast<std::uint64_t>(RngStream::EpisodeDraw),
                              cell_id, episode, static_cast<std::uint64_t>(step), agent));
      action.id = static_cast<int>(rng.below(static_cast<std::uint64_t>(
          env::action_arity(market.spec_of(agent)))));
      break;
    }
    case PolicyKind::Learned: {
      const PolicyNet& net = *policy.net;
      logits.assign(static_cast<std::size_t>(net.n_actions), 0.0);
      double value = 0.0;
      const std::uint8_t reset = 0;
      policy_forward(net, market.output().obs[agent], hidden, std::span(&reset, 1), 1,
                     logits, std::span(&value, 1), hidden_scratch);
      std::swap(hidden, hidden_scratch);
      action.id = argmax_action(logits);
      break;
    }
  }
  return action;
}

}  // namespace detail

// Cross-play grid over per-type policy options for a two-type configuration.
// Every cell runs the identical episode set, so cell statistics are paired.
inline CrossPlayResult evaluate_matrix(const data::MessageStore& store,
                                       const data::EpisodeIndex& index,
                                       const env::EnvConfig& env_cfg,
                                       std::span<const std::size_t> episodes,
                                       std::span<const PolicyChoice> type0_options,
                                       std::span<const PolicyChoice> type1_options,
                                       std::uint64_t seed) {
  if (env_cfg.specs.size() != 2)
    throw std::invalid_argument("evaluate_matrix: exactly two agent types required");
  if (episodes.empty()) throw std::invalid_argument("evaluate_matrix: empty episode set");
  for (const auto& opts : {type0_options, type1_options})
    for (const auto& p : opts)
      if (p.kind == PolicyKind::Learned && p.net == nullptr)
        throw std::invalid_argument("evaluate_matrix: learned policy without a network");

  CrossPlayResult result;
  for (const auto& p : type0_options) result.row_labels.push_back(p.label);
  for (const auto& p : type1_options) result.col_labels.push_back(p.label);

  env::MarketEnv market(&store, &index, env_cfg, seed, 0);
  const std::size_t n_agents = market.n_agents();
  std::vector<std::vector<double>> hidden(n_agents), hidden_scratch(n_agents);
  std::vector<double> logits;
  std::vector<env::AgentAction> actions(n_agents);

  for (std::size_t row = 0; row < type0_options.size(); ++row) {
    for (std::size_t col = 0; col < type1_options.size(); ++col) {
      const PolicyChoice* choice_of[2] = {&type0_options[row], &type1_options[col]};
      const std::uint64_t cell_id = row * 1000 + col;
      // Per-episode samples per type: portfolio value and slippage.
      std::vector<double> pv[2], slip[2];
      double completion_sum[2] = {0.0, 0.0};
      std::int64_t filled[2] = {0, 0};

      for (const std::size_t ep : episodes) {
        market.reset(ep);
        std::vector<baselines::TwapPlan> plans(n_agents);
        for (std::size_t a = 0; a < n_agents; ++a) {
          const auto tau = market.spec_index_of(a);
          const PolicyChoice& p = *choice_of[tau];
          if (p.kind == PolicyKind::Twap)
            plans[a] = baselines::make_twap_plan(market.spec_of(a).params.task_size,
                                                 env_cfg.steps_per_episode, p.twap_mode);
          if (p.kind == PolicyKind::Learned) {
            hidden[a].assign(static_cast<std::size_t>(p.net->hidden), 0.0);
            hidden_scratch[a].assign(static_cast<std::size_t>(p.net->hidden), 0.0);
          }
        }
        int step = 0;
        while (!market.terminal()) {
          for (std::size_t a = 0; a < n_agents; ++a) {
            const auto tau = market.spec_index_of(a);
            actions[a] = detail::choose_action(*choice_of[tau], market, a, step, plans[a],
                                               hidden[a], hidden_scratch[a], logits, seed,
                                               cell_id, ep);
          }
          market.step(actions);
          ++step;
        }
        double ep_pv[2] = {0.0, 0.0};
        double ep_slip[2] = {0.0, 0.0};
        int type_agents[2] = {0, 0};
        for (std::size_t a = 0; a < n_agents; ++a) {
          const auto tau = market.spec_index_of(a);
          const auto& info = market.output().infos[a];
          ep_pv[tau] += info.portfolio_value;
          ep_slip[tau] += info.slippage_total;
          ++type_agents[tau];
          filled[tau] += market.agent_state(a).filled_total;
          const auto& spec = market.spec_of(a);
          if (spec.type == env::AgentType::Executor)
            completion_sum[tau] += 1.0 - static_cast<double>(info.task_remaining) /
                                             static_cast<double>(spec.params.task_size);
          else
            completion_sum[tau] += 0.0;
        }
        for (int tau = 0; tau < 2; ++tau) {
          pv[tau].push_back(ep_pv[tau] / type_agents[tau]);
          slip[tau].push_back(ep_slip[tau] / type_agents[tau]);
        }
      }

      CellStats cell;
      cell.row_label = type0_options[row].label;
      cell.col_label = type1_options[col].label;
      cell.episodes = static_cast<std::int64_t>(episodes.size());
      for (int tau = 0; tau < 2; ++tau) {
        auto mean_stderr = [](const std::vector<double>& xs) {
          const double n = static_cast<double>(xs.size());
          double mean = 0.0;
          for (const double x : xs) mean += x;
          mean /= n;
          double var = 0.0;
          for (const double x : xs) var += (x - mean) * (x - mean);
          const double stderr_v = xs.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
          return std::pair(mean, stderr_v);
        };
        auto& t = cell.per_type[tau];
        std::tie(t.pv_mean, t.pv_stderr) = mean_stderr(pv[tau]);
        t.filled_total = filled[tau];
        t.no_fills = filled[tau] == 0;
        // Slippage is undefined without fills; report zero plus the flag.
        if (t.no_fills) {
          t.slippage_mean = 0.0;
          t.slippage_stderr = 0.0;
        } else {
          std::tie(t.slippage_mean, t.slippage_stderr) = mean_stderr(slip[tau]);
        }
        t.completion_mean =
            completion_sum[tau] / (static_cast<double>(episodes.size()) *
                                   static_cast<double>(env_cfg.specs[static_cast<std::size_t>(
                                       tau)].count));
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace marlob::ippo
