#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlob/lob/types.hpp"

namespace marlob::data {

// L2 state of the book immediately *before* the message at `message_index`.
// Index 0 therefore maps to an empty book.
struct BookState {
  std::size_t message_index = 0;
  lob::L2Snapshot snapshot;

  friend bool operator==(const BookState&, const BookState&) = default;
};

// One contiguous, time-ordered message array plus sampled book states.
// Immutable after construction; shared read-only across environments.
struct MessageStore {
  std::vector<lob::Message> messages;
  std::vector<BookState> book_states;  // sorted by message_index

  const lob::L2Snapshot* state_before(std::size_t message_index) const {
    auto it = std::lower_bound(book_states.begin(), book_states.end(), message_index,
                               [](const BookState& s, std::size_t idx) {
                                 return s.message_index < idx;
                               });
    if (it == book_states.end() || it->message_index != message_index) return nullptr;
    return &it->snapshot;
  }

  friend bool operator==(const MessageStore&, const MessageStore&) = default;
};

struct EpisodeIndex {
  std::vector<std::size_t> starts;
  int steps_per_episode = 64;
  int messages_per_step = 100;
  int start_stride_steps = 64;

  std::size_t episode_count() const { return starts.size(); }
};

// Maximal set of episode start offsets at the given stride. A store shorter
// than one episode yields an empty index.
inline EpisodeIndex build_episode_index(const MessageStore& store, int steps_per_episode,
                                        int messages_per_step, int start_stride_steps) {
  if (store.messages.empty()) throw std::invalid_argument("build_episode_index: empty store");
  if (steps_per_episode < 1 || messages_per_step < 0 || start_stride_steps < 1)
    throw std::invalid_argument("build_episode_index: invalid episode parameters");
  EpisodeIndex index;
  index.steps_per_episode = steps_per_episode;
  index.messages_per_step = messages_per_step;
  index.start_stride_steps = start_stride_steps;
  const std::size_t length = static_cast<std::size_t>(steps_per_episode) *
                             static_cast<std::size_t>(messages_per_step);
  const std::size_t stride = static_cast<std::size_t>(start_stride_steps) *
                             static_cast<std::size_t>(messages_per_step);
  if (length == 0) {
    index.starts.push_back(0);  // replay-free episodes, used by agent-only setups
    return index;
  }
  for (std::size_t start = 0; start + length <= store.messages.size(); start += stride)
    index.starts.push_back(start);
  return index;
}

// Zero-copy view of the messages consumed by (episode, step).
inline std::span<const lob::Message> slice_for_step(const MessageStore& store,
                                                    const EpisodeIndex& index,
                                                    std::size_t episode, std::size_t step) {
  if (episode >= index.starts.size())
    throw std::out_of_range("slice_for_step: episode " + std::to_string(episode) +
                            " out of range (count " + std::to_string(index.starts.size()) +
                            ")");
  if (step >= static_cast<std::size_t>(index.steps_per_episode))
    throw std::out_of_range("slice_for_step: step " + std::to_string(step) +
                            " out of range (episode length " +
                            std::to_string(index.steps_per_episode) + ")");
  const std::size_t m = static_cast<std::size_t>(index.messages_per_step);
  const std::size_t begin = index.starts[episode] + step * m;
  return {store.messages.data() + begin, m};
}

}  // namespace marlob::data
