#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qalign/rl/sac.hpp"

namespace qalign::rl {

/// Fixed-capacity ring buffer of (obs, action, reward, next_obs, done)
/// transitions stored as float. Storage grows on demand up to the capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(int obs_dim, long long capacity);

  void add(std::span<const double> obs, std::span<const double> action, double reward,
           std::span<const double> next_obs, bool done);

  long long size() const { return size_; }
  long long capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }

  /// Uniform sample of `batch` distinct stored transitions (Floyd's
  /// algorithm). Throws DomainError if fewer than `batch` are stored.
  Batch<float> sample(int batch, std::mt19937_64& rng) const;

  /// Slot indices of the last sample() call, for tests.
  const std::vector<long long>& last_indices() const { return last_indices_; }

 private:
  int obs_dim_;
  long long capacity_;
  long long size_ = 0;
  long long cursor_ = 0;
  std::vector<float> obs_;
  std::vector<float> action_;
  std::vector<float> reward_;
  std::vector<float> next_obs_;
  std::vector<float> done_;
  mutable std::vector<long long> last_indices_;
};

}  // namespace qalign::rl
