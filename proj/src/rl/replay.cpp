#include "qalign/rl/replay.hpp"

#include <algorithm>

#include "qalign/errors.hpp"

namespace qalign::rl {

ReplayBuffer::ReplayBuffer(int obs_dim, long long capacity) : obs_dim_(obs_dim), capacity_(capacity) {
  if (obs_dim <= 0) throw DomainError("ReplayBuffer: obs_dim must be > 0");
  if (capacity <= 0) throw DomainError("ReplayBuffer: capacity must be > 0");
}

void ReplayBuffer::add(std::span<const double> obs, std::span<const double> action, double reward,
                       std::span<const double> next_obs, bool done) {
  if (obs.size() != std::size_t(obs_dim_) || next_obs.size() != std::size_t(obs_dim_) ||
      action.size() != std::size_t(kActionDim)) {
    throw DomainError("ReplayBuffer::add: transition has wrong dimensions");
  }
  if (size_ < capacity_) {
    obs_.insert(obs_.end(), obs.begin(), obs.end());
    action_.insert(action_.end(), action.begin(), action.end());
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
    reward_.push_back(float(reward));
    done_.push_back(done ? 1.0f : 0.0f);
    ++size_;
  } else {
    const auto o = std::size_t(cursor_) * obs_dim_;
    const auto a = std::size_t(cursor_) * kActionDim;
    std::copy(obs.begin(), obs.end(), obs_.begin() + o);
    std::copy(action.begin(), action.end(), action_.begin() + a);
    std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + o);
    reward_[cursor_] = float(reward);
    done_[cursor_] = done ? 1.0f : 0.0f;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

Batch<float> ReplayBuffer::sample(int batch, std::mt19937_64& rng) const {
  if (batch <= 0 || batch > size_) throw DomainError("ReplayBuffer::sample: not enough transitions");
  // Floyd: for j in [n - k, n), pick t in [0, j]; take t unless already
  // chosen, else take j.
  last_indices_.clear();
  for (long long j = size_ - batch; j < size_; ++j) {
    const long long t = std::uniform_int_distribution<long long>(0, j)(rng);
    const bool seen = std::find(last_indices_.begin(), last_indices_.end(), t) != last_indices_.end();
    last_indices_.push_back(seen ? j : t);
  }

  Batch<float> b;
  b.obs.resize(obs_dim_, batch);
  b.action.resize(kActionDim, batch);
  b.reward.resize(1, batch);
  b.next_obs.resize(obs_dim_, batch);
  b.done.resize(1, batch);
  for (int c = 0; c < batch; ++c) {
    const auto i = std::size_t(last_indices_[c]);
    for (int r = 0; r < obs_dim_; ++r) {
      b.obs(r, c) = obs_[i * obs_dim_ + r];
      b.next_obs(r, c) = next_obs_[i * obs_dim_ + r];
    }
    for (int r = 0; r < kActionDim; ++r) b.action(r, c) = action_[i * kActionDim + r];
    b.reward(0, c) = reward_[i];
    b.done(0, c) = done_[i];
  }
  return b;
}

}  // namespace qalign::rl
