#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "marlob/core/rng.hpp"
#include "marlob/ippo/gae.hpp"
#include "marlob/ippo/net.hpp"

namespace marlob::ippo {

struct PpoConfig {
  int epochs = 4;
  int minibatches = 4;
  double clip_eps = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
  double lr = 3e-4;
  double max_grad_norm = 0.5;
  bool normalize_adv = true;
};

// Time-major rollout storage for one agent type: B recurrent streams over T
// steps. dones[t] marks episodes ending at step t; resets[t] marks streams
// whose hidden state is zeroed before step t. values carries the bootstrap
// row at index T.
struct RolloutBatch {
  std::size_t T = 0, B = 0, obs_dim = 0;
  int n_actions = 0;
  int hidden = 0;
  std::vector<double> obs;           // (T, B, obs_dim)
  std::vector<std::int32_t> actions; // (T, B)
  std::vector<double> log_probs;     // (T, B)
  std::vector<double> values;        // (T+1, B)
  std::vector<double> rewards;       // (T, B)
  std::vector<std::uint8_t> dones;   // (T, B)
  std::vector<std::uint8_t> resets;  // (T, B)
  std::vector<double> h0;            // (B, H)
  std::vector<double> advantages;    // (T, B)
  std::vector<double> returns;       // (T, B)

  void resize(std::size_t t_len, std::size_t b, std::size_t d, int actions_n, int h) {
    T = t_len;
    B = b;
    obs_dim = d;
    n_actions = actions_n;
    hidden = h;
    obs.assign(T * B * obs_dim, 0.0);
    actions.assign(T * B, 0);
    log_probs.assign(T * B, 0.0);
    values.assign((T + 1) * B, 0.0);
    rewards.assign(T * B, 0.0);
    dones.assign(T * B, 0);
    resets.assign(T * B, 0);
    h0.assign(B * static_cast<std::size_t>(h), 0.0);
    advantages.assign(T * B, 0.0);
    returns.assign(T * B, 0.0);
  }

  friend bool operator==(const RolloutBatch&, const RolloutBatch&) = default;
};

struct UpdateMetrics {
  double pg_loss = 0.0;
  double v_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_frac = 0.0;
  double grad_norm = 0.0;
  double mean_reward = 0.0;
};

// Numerically stable categorical sample from logits; u is uniform in [0, 1).
inline int sample_categorical(std::span<const double> logits, double u, double* logp_out) {
  double max_l = logits[0];
  for (const double l : logits) max_l = std::max(max_l, l);
  double z = 0.0;
  for (const double l : logits) z += std::exp(l - max_l);
  const double target = u * z;
  double cum = 0.0;
  int action = static_cast<int>(logits.size()) - 1;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    cum += std::exp(logits[a] - max_l);
    if (cum > target) {
      action = static_cast<int>(a);
      break;
    }
  }
  if (logp_out)
    *logp_out = logits[static_cast<std::size_t>(action)] - max_l - std::log(z);
  return action;
}

inline int argmax_action(std::span<const double> logits) {
  int best = 0;
  for (std::size_t a = 1; a < logits.size(); ++a)
    if (logits[a] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  return best;
}

// In-place normalization to zero mean and exactly unit variance (population
// std); degenerate minibatches with zero spread normalize to all-zeros.
inline void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  double mean = 0.0;
  for (const double a : adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (const double a : adv) var += (a - mean) * (a - mean);
  var /= n;
  const double std_dev = std::sqrt(var);
  if (std_dev > 0.0)
    for (double& a : adv) a = (a - mean) / std_dev;
  else
    for (double& a : adv) a = 0.0;
}

namespace detail {

// Forward + backward over the full sequence for a subset of streams; returns
// the total loss and accumulates parameter gradients.
struct MinibatchResult {
  double loss = 0.0;
  double pg_loss = 0.0;
  double v_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_frac = 0.0;
};

inline MinibatchResult ppo_minibatch_backward(const PolicyNet& net, const RolloutBatch& batch,
                                              std::span<const int> streams,
                                              const PpoConfig& cfg, PolicyGrad& grad) {
  const std::size_t T = batch.T;
  const std::size_t S = streams.size();
  const std::size_t H = static_cast<std::size_t>(net.hidden);
  const std::size_t D = batch.obs_dim;
  const std::size_t A = static_cast<std::size_t>(net.n_actions);
  const double n_elems = static_cast<double>(T * S);

  // Gather the minibatch (time-major over the selected streams).
  std::vector<double> obs(T * S * D);
  std::vector<std::uint8_t> resets(T * S);
  std::vector<double> adv(T * S);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t b = static_cast<std::size_t>(streams[s]);
      std::copy_n(batch.obs.data() + (t * batch.B + b) * D, D, obs.data() + (t * S + s) * D);
      resets[t * S + s] = batch.resets[t * batch.B + b];
      adv[t * S + s] = batch.advantages[t * batch.B + b];
    }
  if (cfg.normalize_adv) normalize_advantages(adv);

  // Forward with caches.
  std::vector<GruStepCache> caches(T);
  std::vector<double> hiddens(T * S * H);
  std::vector<double> logits(T * S * A);
  std::vector<double> values(T * S);
  std::vector<double> h_cur(S * H);
  for (std::size_t s = 0; s < S; ++s)
    std::copy_n(batch.h0.data() + static_cast<std::size_t>(streams[s]) * H, H,
                h_cur.data() + s * H);
  for (std::size_t t = 0; t < T; ++t) {
    policy_forward(net, std::span(obs.data() + t * S * D, S * D), h_cur,
                   std::span(resets.data() + t * S, S), S,
                   std::span(logits.data() + t * S * A, S * A),
                   std::span(values.data() + t * S, S),
                   std::span(hiddens.data() + t * S * H, S * H), &caches[t]);
    std::copy_n(hiddens.data() + t * S * H, S * H, h_cur.data());
  }

  // Loss and output gradients.
  MinibatchResult res;
  std::vector<double> d_logits(T * S * A, 0.0);
  std::vector<double> d_values(T * S, 0.0);
  std::vector<double> probs(A);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t b = static_cast<std::size_t>(streams[s]);
      const std::size_t e = t * S + s;
      const double* l = logits.data() + e * A;
      double max_l = l[0];
      for (std::size_t a = 1; a < A; ++a) max_l = std::max(max_l, l[a]);
      double z = 0.0;
      for (std::size_t a = 0; a < A; ++a) z += std::exp(l[a] - max_l);
      const double log_z = std::log(z);
      double ent = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        probs[a] = std::exp(l[a] - max_l) / z;
        if (probs[a] > 0.0) ent -= probs[a] * (l[a] - max_l - log_z);
      }
      const auto act = static_cast<std::size_t>(batch.actions[t * batch.B + b]);
      const double logp_new = l[act] - max_l - log_z;
      const double logp_old = batch.log_probs[t * batch.B + b];
      const double log_ratio = logp_new - logp_old;
      const double ratio = std::exp(log_ratio);
      const double a_hat = adv[e];

      const double l_unclipped = -a_hat * ratio;
      const double l_clipped =
          -a_hat * std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      const bool unclipped_active = l_unclipped >= l_clipped;
      res.pg_loss += std::max(l_unclipped, l_clipped);
      res.approx_kl += (ratio - 1.0) - log_ratio;
      if (std::abs(ratio - 1.0) > cfg.clip_eps) res.clip_frac += 1.0;
      res.entropy += ent;

      const double ret = batch.returns[t * batch.B + b];
      const double v = values[e];
      res.v_loss += 0.5 * (v - ret) * (v - ret);
      d_values[e] = cfg.vf_coef * (v - ret) / n_elems;

      double dlogp = 0.0;
      if (unclipped_active) dlogp = -a_hat * ratio / n_elems;
      for (std::size_t a = 0; a < A; ++a) {
        double dl = dlogp * ((a == act ? 1.0 : 0.0) - probs[a]);
        // Entropy bonus: d(-ent_coef * H)/dl_a = ent_coef * p_a (log p_a + H)
        dl += cfg.ent_coef * probs[a] * ((l[a] - max_l - log_z) + ent) / n_elems;
        d_logits[e * A + a] = dl;
      }
    }
  }
  res.pg_loss /= n_elems;
  res.v_loss /= n_elems;
  res.entropy /= n_elems;
  res.approx_kl /= n_elems;
  res.clip_frac /= n_elems;
  res.loss = res.pg_loss + cfg.vf_coef * res.v_loss - cfg.ent_coef * res.entropy;
  if (!std::isfinite(res.loss)) {
    std::ostringstream oss;
    oss << "ppo_update: non-finite loss (pg=" << res.pg_loss << " v=" << res.v_loss
        << " ent=" << res.entropy << " kl=" << res.approx_kl << ")";
    throw std::runtime_error(oss.str());
  }

  // Backward through time.
  std::vector<double> d_hidden(S * H, 0.0);
  std::vector<double> d_hidden_prev(S * H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    policy_backward_step(net, caches[t], std::span(obs.data() + t * S * D, S * D),
                         std::span(resets.data() + t * S, S), S,
                         std::span(d_logits.data() + t * S * A, S * A),
                         std::span(d_values.data() + t * S, S),
                         std::span<const double>(d_hidden.data(), S * H),
                         std::span(hiddens.data() + t * S * H, S * H),
                         std::span(d_hidden_prev.data(), S * H), grad);
    std::swap(d_hidden, d_hidden_prev);
  }
  return res;
}

}  // namespace detail

// Clipped-objective update over the batch: `epochs` passes, each visiting a
// deterministic shuffled partition of the streams into minibatches.
inline UpdateMetrics ppo_update(PolicyNet& net, AdamState& adam, const RolloutBatch& batch,
                                const PpoConfig& cfg, std::uint64_t seed,
                                std::uint64_t update_index, std::uint64_t type_index) {
  if (batch.B == 0 || batch.T == 0) throw std::invalid_argument("ppo_update: empty batch");
  const int n_minibatches = std::max(1, std::min<int>(cfg.minibatches,
                                                      static_cast<int>(batch.B)));
  std::vector<int> order(batch.B);
  std::iota(order.begin(), order.end(), 0);

  UpdateMetrics metrics;
  PolicyGrad grad;
  grad.init_like(net);
  int n_updates = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    CounterRng rng(make_key(seed, static_cast<std::uint64_t>(RngStream::Minibatch),
                            update_index, static_cast<std::uint64_t>(epoch), type_index));
    fisher_yates_shuffle(order, rng);
    for (int m = 0; m < n_minibatches; ++m) {
      const std::size_t begin = batch.B * static_cast<std::size_t>(m) /
                                static_cast<std::size_t>(n_minibatches);
      const std::size_t end = batch.B * static_cast<std::size_t>(m + 1) /
                              static_cast<std::size_t>(n_minibatches);
      if (end == begin) continue;
      grad.zero();
      const auto res = detail::ppo_minibatch_backward(
          net, batch, std::span(order.data() + begin, end - begin), cfg, grad);
      metrics.grad_norm += clip_grad_norm(grad, cfg.max_grad_norm);
      adam_step(net, grad, adam, cfg.lr);
      metrics.pg_loss += res.pg_loss;
      metrics.v_loss += res.v_loss;
      metrics.entropy += res.entropy;
      metrics.approx_kl += res.approx_kl;
      metrics.clip_frac += res.clip_frac;
      ++n_updates;
    }
  }
  const double inv = 1.0 / static_cast<double>(std::max(1, n_updates));
  metrics.pg_loss *= inv;
  metrics.v_loss *= inv;
  metrics.entropy *= inv;
  metrics.approx_kl *= inv;
  metrics.clip_frac *= inv;
  metrics.grad_norm *= inv;
  double reward_sum = 0.0;
  for (const double r : batch.rewards) reward_sum += r;
  metrics.mean_reward = reward_sum / static_cast<double>(batch.T * batch.B);
  return metrics;
}

}  // namespace marlob::ippo
