#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace marlob::ippo {

// Generalized advantage estimation over (T, B) arrays in time-major layout.
// `values` carries T+1 rows: the extra row is the bootstrap value of the
// post-rollout state. dones[t] marks streams whose episode ended at step t,
// truncating both the bootstrap and the advantage recursion.
inline void compute_gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, std::size_t T, std::size_t B,
                        double discount, double gae_lambda, std::span<double> advantages,
                        std::span<double> returns) {
  if (rewards.size() != T * B || dones.size() != T * B || values.size() != (T + 1) * B ||
      advantages.size() != T * B || returns.size() != T * B)
    throw std::invalid_argument("compute_gae: shape mismatch");
  for (std::size_t b = 0; b < B; ++b) {
    double carry = 0.0;
    for (std::size_t t = T; t-- > 0;) {
      const double not_done = dones[t * B + b] ? 0.0 : 1.0;
      const double delta = rewards[t * B + b] +
                           discount * values[(t + 1) * B + b] * not_done - values[t * B + b];
      carry = delta + discount * gae_lambda * not_done * carry;
      advantages[t * B + b] = carry;
      returns[t * B + b] = carry + values[t * B + b];
    }
  }
}

}  // namespace marlob::ippo
