#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlob/core/rng.hpp"

// Recurrent actor-critic: a gated recurrent cell feeding a linear actor head
// (action logits) and a linear critic head (scalar value). Forward and
// reverse passes are hand-written; network sizes stay small enough that
// explicit loops in double precision are both fast and exactly reproducible.
namespace marlob::ippo {

struct PolicyNet {
  int obs_dim = 0;
  int hidden = 0;
  int n_actions = 0;
  // Gate order within the stacked matrices: [reset, update, candidate].
  std::vector<double> w_ih;      // (3H, obs_dim)
  std::vector<double> w_hh;      // (3H, H)
  std::vector<double> b_ih;      // 3H
  std::vector<double> b_hh;      // 3H
  std::vector<double> w_actor;   // (A, H)
  std::vector<double> b_actor;   // A
  std::vector<double> w_critic;  // H
  double b_critic = 0.0;

  std::size_t param_count() const {
    return w_ih.size() + w_hh.size() + b_ih.size() + b_hh.size() + w_actor.size() +
           b_actor.size() + w_critic.size() + 1;
  }

  // Flat parameter view in a fixed order; used by the optimizer, checkpoints
  // and finite-difference tests.
  template <class Fn>
  void for_each_param(Fn&& fn) {
    for (auto* vec : {&w_ih, &w_hh, &b_ih, &b_hh, &w_actor, &b_actor, &w_critic})
      for (double& v : *vec) fn(v);
    fn(b_critic);
  }
};

// Gradients mirror the parameter layout.
struct PolicyGrad {
  std::vector<double> w_ih, w_hh, b_ih, b_hh, w_actor, b_actor, w_critic;
  double b_critic = 0.0;

  void init_like(const PolicyNet& net) {
    w_ih.assign(net.w_ih.size(), 0.0);
    w_hh.assign(net.w_hh.size(), 0.0);
    b_ih.assign(net.b_ih.size(), 0.0);
    b_hh.assign(net.b_hh.size(), 0.0);
    w_actor.assign(net.w_actor.size(), 0.0);
    b_actor.assign(net.b_actor.size(), 0.0);
    w_critic.assign(net.w_critic.size(), 0.0);
    b_critic = 0.0;
  }

  void zero() {
    for (auto* vec : {&w_ih, &w_hh, &b_ih, &b_hh, &w_actor, &b_actor, &w_critic})
      std::fill(vec->begin(), vec->end(), 0.0);
    b_critic = 0.0;
  }

  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto* vec : {&w_ih, &w_hh, &b_ih, &b_hh, &w_actor, &b_actor, &w_critic})
      for (double& v : *vec) fn(v);
    fn(b_critic);
  }
};

inline PolicyNet make_policy_net(int obs_dim, int hidden, int n_actions, std::uint64_t seed) {
  if (obs_dim < 1 || hidden < 1 || n_actions < 1)
    throw std::invalid_argument("make_policy_net: dimensions must be >= 1");
  if (hidden > 512)
    throw std::invalid_argument("make_policy_net: hidden size capped at 512");
  PolicyNet net;
  net.obs_dim = obs_dim;
  net.hidden = hidden;
  net.n_actions = n_actions;
  CounterRng rng(make_key(seed, static_cast<std::uint64_t>(RngStream::ParamInit), obs_dim,
                          hidden, n_actions));
  auto init = [&rng](std::vector<double>& w, std::size_t n, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    w.resize(n);
    for (double& v : w) v = rng.uniform(-bound, bound);
  };
  init(net.w_ih, static_cast<std::size_t>(3 * hidden) * obs_dim, obs_dim, hidden);
  init(net.w_hh, static_cast<std::size_t>(3 * hidden) * hidden, hidden, hidden);
  net.b_ih.assign(static_cast<std::size_t>(3 * hidden), 0.0);
  net.b_hh.assign(static_cast<std::size_t>(3 * hidden), 0.0);
  // Small actor weights keep the initial policy near uniform.
  init(net.w_actor, static_cast<std::size_t>(n_actions) * hidden, hidden, n_actions);
  for (double& v : net.w_actor) v *= 0.01;
  net.b_actor.assign(static_cast<std::size_t>(n_actions), 0.0);
  init(net.w_critic, static_cast<std::size_t>(hidden), hidden, 1);
  net.b_critic = 0.0;
  return net;
}

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}

// Cached intermediates for one GRU step over a batch; required by backward.
struct GruStepCache {
  std::vector<double> h_in;  // post-reset hidden, (B, H)
  std::vector<double> r, z, n, hn;  // gates and the hidden candidate path, (B, H)
};

// One recurrent step over a batch of B streams. Hidden state is zeroed where
// reset_mask is set before the cell runs. Writes logits (B, A), values (B)
// and the next hidden (B, H); `cache` may be null when no backward pass will
// follow.
inline void policy_forward(const PolicyNet& net, std::span<const double> obs,
                           std::span<const double> hidden,
                           std::span<const std::uint8_t> reset_mask, std::size_t batch,
                           std::span<double> logits, std::span<double> values,
                           std::span<double> hidden_out, GruStepCache* cache = nullptr) {
  const std::size_t H = static_cast<std::size_t>(net.hidden);
  const std::size_t D = static_cast<std::size_t>(net.obs_dim);
  const std::size_t A = static_cast<std::size_t>(net.n_actions);
  if (obs.size() != batch * D || hidden.size() != batch * H ||
      reset_mask.size() != batch || logits.size() != batch * A ||
      values.size() != batch || hidden_out.size() != batch * H)
    throw std::invalid_argument("policy_forward: shape mismatch");
  if (cache) {
    cache->h_in.resize(batch * H);
    cache->r.resize(batch * H);
    cache->z.resize(batch * H);
    cache->n.resize(batch * H);
    cache->hn.resize(batch * H);
  }
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = obs.data() + b * D;
    const double* h_prev = hidden.data() + b * H;
    const bool reset = reset_mask[b] != 0;
    for (std::size_t i = 0; i < H; ++i) {
      const double h_i = [&] {
        double acc_r = net.b_ih[i] + net.b_hh[i];
        double acc_z = net.b_ih[H + i] + net.b_hh[H + i];
        double acc_n = net.b_ih[2 * H + i];
        double acc_hn = net.b_hh[2 * H + i];
        for (std::size_t d = 0; d < D; ++d) {
          acc_r += net.w_ih[i * D + d] * x[d];
          acc_z += net.w_ih[(H + i) * D + d] * x[d];
          acc_n += net.w_ih[(2 * H + i) * D + d] * x[d];
        }
        if (!reset) {
          for (std::size_t j = 0; j < H; ++j) {
            const double hj = h_prev[j];
            acc_r += net.w_hh[i * H + j] * hj;
            acc_z += net.w_hh[(H + i) * H + j] * hj;
            acc_hn += net.w_hh[(2 * H + i) * H + j] * hj;
          }
        }
        const double r = detail::sigmoid(acc_r);
        const double z = detail::sigmoid(acc_z);
        const double n = std::tanh(acc_n + r * acc_hn);
        const double h_old = reset ? 0.0 : h_prev[i];
        const double h_new = (1.0 - z) * n + z * h_old;
        if (cache) {
          cache->h_in[b * H + i] = h_old;
          cache->r[b * H + i] = r;
          cache->z[b * H + i] = z;
          cache->n[b * H + i] = n;
          cache->hn[b * H + i] = acc_hn;
        }
        return h_new;
      }();
      hidden_out[b * H + i] = h_i;
    }
    const double* h = hidden_out.data() + b * H;
    for (std::size_t a = 0; a < A; ++a) {
      double acc = net.b_actor[a];
      for (std::size_t j = 0; j < H; ++j) acc += net.w_actor[a * H + j] * h[j];
      logits[b * A + a] = acc;
    }
    double v = net.b_critic;
    for (std::size_t j = 0; j < H; ++j) v += net.w_critic[j] * h[j];
    values[b] = v;
  }
}

// Backward through one cached step. d_logits (B, A), d_values (B) and
// d_hidden_out (B, H) are inputs; d_hidden_in receives the gradient flowing
// into the previous step's hidden state (already masked by reset).
inline void policy_backward_step(const PolicyNet& net, const GruStepCache& cache,
                                 std::span<const double> obs,
                                 std::span<const std::uint8_t> reset_mask, std::size_t batch,
                                 std::span<const double> d_logits,
                                 std::span<const double> d_values,
                                 std::span<const double> d_hidden_out,
                                 std::span<const double> hidden_out,
                                 std::span<double> d_hidden_in, PolicyGrad& grad) {
  const std::size_t H = static_cast<std::size_t>(net.hidden);
  const std::size_t D = static_cast<std::size_t>(net.obs_dim);
  const std::size_t A = static_cast<std::size_t>(net.n_actions);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = obs.data() + b * D;
    const double* h_out = hidden_out.data() + b * H;

    // Head gradients accumulate into dh.
    double dh[512];  // H <= 512 by construction
    for (std::size_t j = 0; j < H; ++j) dh[j] = d_hidden_out[b * H + j];
    for (std::size_t a = 0; a < A; ++a) {
      const double dl = d_logits[b * A + a];
      if (dl == 0.0) continue;
      grad.b_actor[a] += dl;
      for (std::size_t j = 0; j < H; ++j) {
        grad.w_actor[a * H + j] += dl * h_out[j];
        dh[j] += dl * net.w_actor[a * H + j];
      }
    }
    const double dv = d_values[b];
    if (dv != 0.0) {
      grad.b_critic += dv;
      for (std::size_t j = 0; j < H; ++j) {
        grad.w_critic[j] += dv * h_out[j];
        dh[j] += dv * net.w_critic[j];
      }
    }

    // GRU cell backward.
    const bool reset = reset_mask[b] != 0;
    const double* h_in = cache.h_in.data() + b * H;
    double da_r[512], da_z[512], da_n[512], dhn[512];
    for (std::size_t i = 0; i < H; ++i) {
      const double r = cache.r[b * H + i];
      const double z = cache.z[b * H + i];
      const double n = cache.n[b * H + i];
      const double dn = dh[i] * (1.0 - z);
      const double dz = dh[i] * (h_in[i] - n);
      const double dan = dn * (1.0 - n * n);
      da_n[i] = dan;
      dhn[i] = dan * r;
      const double dr = dan * cache.hn[b * H + i];
      da_r[i] = dr * r * (1.0 - r);
      da_z[i] = dz * z * (1.0 - z);
    }
    for (std::size_t i = 0; i < H; ++i) {
      grad.b_ih[i] += da_r[i];
      grad.b_hh[i] += da_r[i];
      grad.b_ih[H + i] += da_z[i];
      grad.b_hh[H + i] += da_z[i];
      grad.b_ih[2 * H + i] += da_n[i];
      grad.b_hh[2 * H + i] += dhn[i];
      for (std::size_t d = 0; d < D; ++d) {
        grad.w_ih[i * D + d] += da_r[i] * x[d];
        grad.w_ih[(H + i) * D + d] += da_z[i] * x[d];
        grad.w_ih[(2 * H + i) * D + d] += da_n[i] * x[d];
      }
    }
    double* dh_prev = d_hidden_in.data() + b * H;
    if (reset) {
      for (std::size_t j = 0; j < H; ++j) dh_prev[j] = 0.0;
      continue;
    }
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < H; ++j) {
        const double hj = h_in[j];
        grad.w_hh[i * H + j] += da_r[i] * hj;
        grad.w_hh[(H + i) * H + j] += da_z[i] * hj;
        grad.w_hh[(2 * H + i) * H + j] += dhn[i] * hj;
      }
    }
    for (std::size_t j = 0; j < H; ++j) {
      double acc = dh[j] * cache.z[b * H + j];  // direct carry through the update gate
      for (std::size_t i = 0; i < H; ++i) {
        acc += da_r[i] * net.w_hh[i * H + j];
        acc += da_z[i] * net.w_hh[(H + i) * H + j];
        acc += dhn[i] * net.w_hh[(2 * H + i) * H + j];
      }
      dh_prev[j] = acc;
    }
  }
}

inline double grad_norm(PolicyGrad& grad) {
  double sq = 0.0;
  grad.for_each([&](double& g) { sq += g * g; });
  return std::sqrt(sq);
}

// Scales the gradient so its global L2 norm is at most max_norm; returns the
// pre-clip norm.
inline double clip_grad_norm(PolicyGrad& grad, double max_norm) {
  const double norm = grad_norm(grad);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grad.for_each([&](double& g) { g *= scale; });
  }
  return norm;
}

// Adam with bias correction; one state per policy.
struct AdamState {
  std::vector<double> m, v;
  std::vector<double> flat;
  std::int64_t t = 0;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
  }
};

inline void adam_step(PolicyNet& net, PolicyGrad& grad, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (state.m.size() != net.param_count()) state.init(net.param_count());
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  state.flat.clear();
  grad.for_each([&](double& g) { state.flat.push_back(g); });
  std::size_t k = 0;
  net.for_each_param([&](double& p) {
    const double g = state.flat[k];
    state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g;
    state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g;
    p -= lr * (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) + eps);
    ++k;
  });
}

}  // namespace marlob::ippo
