#include <stdexcept>

#include "ramplab/rl/qlearning.hpp"

namespace ramplab::rl {

void ReplayBuffer::push(Transition t) {
  if (episodes_.empty() || episodes_.back().front().episode != t.episode) {
    episodes_.emplace_back();
    if (static_cast<int>(episodes_.size()) > capacity_) episodes_.pop_front();
  }
  episodes_.back().push_back(std::move(t));
}

int ReplayBuffer::size() const {
  int n = 0;
  for (const auto& e : episodes_) n += static_cast<int>(e.size());
  return n;
}

int ReplayBuffer::transitions_per_episode() const {
  if (episodes_.empty()) return 0;
  return static_cast<int>(episodes_.back().size());
}

const Transition& ReplayBuffer::at(int i) const {
  for (const auto& e : episodes_) {
    if (i < static_cast<int>(e.size())) return e[i];
    i -= static_cast<int>(e.size());
  }
  throw std::out_of_range("ReplayBuffer::at");
}

}  // namespace ramplab::rl
