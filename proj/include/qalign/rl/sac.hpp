#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "qalign/rl/mlp.hpp"

namespace qalign::rl {

inline constexpr int kActionDim = 3;

struct SacConfig {
  std::vector<int> hidden{256, 256};
  int batch_size = 128;
  double learning_rate = 3e-4;
  /// Nearly myopic on purpose: with a long horizon the improvement bonus
  /// pays more for oscillating around the optimum than for finishing.
  double gamma = 0.0003;
  double tau = 0.005;
  long long replay_capacity = 1'000'000;
  long long warmup_steps = 5'000;
  double entropy_target = -3.0;
  double initial_alpha = 1.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  long long total_steps = 200'000;
  int updates_per_step = 1;
  long long log_interval = 1'000;
  /// 0 disables validation and best-agent retention.
  long long validation_interval = 10'000;
  int validation_trials = 20;
  long long checkpoint_interval = 50'000;

  void validate() const;
  bool operator==(const SacConfig&) const = default;
};

template <class T>
struct Batch {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix obs;       // obs_dim x B
  Matrix action;    // 3 x B
  Matrix reward;    // 1 x B
  Matrix next_obs;  // obs_dim x B
  Matrix done;      // 1 x B, 1 for terminal transitions

  Eigen::Index size() const { return obs.cols(); }
};

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
};

struct ActorLosses {
  double actor = 0.0;
  double alpha = 0.0;
  /// -mean(log pi) over the batch.
  double entropy = 0.0;
};

/// Soft actor-critic learner: squashed-Gaussian actor with 2 * kActionDim
/// outputs (mean, log-std), twin critics over (obs, action), target critics,
/// Adam for every parameter set and a learned entropy temperature.
///
/// The *_loss functions take explicit standard-normal noise so gradients can
/// be checked against finite differences; the *_update functions draw noise
/// from the agent's generator and apply an optimizer step.
template <class T>
class SacAgent {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Rng = std::mt19937_64;

  struct PolicySample {
    Matrix action;    // 3 x B, tanh(u)
    Matrix log_prob;  // 1 x B
    Matrix mean;      // 3 x B
    Matrix log_std;   // 3 x B, clamped
    Matrix pre_tanh;  // 3 x B
  };

  SacAgent() = default;
  SacAgent(int obs_dim, SacConfig config, std::uint64_t seed);

  const SacConfig& config() const { return config_; }
  int obs_dim() const { return obs_dim_; }

  /// Squashed-Gaussian sample with the given noise (3 x B); no caching.
  PolicySample sample_with_noise(const Matrix& obs, const Matrix& noise) const;
  /// Stochastic sample drawing noise from the agent's generator.
  PolicySample sample(const Matrix& obs);
  /// tanh(mean).
  Matrix deterministic_action(const Matrix& obs) const;
  /// Single-observation convenience; throws DomainError on non-finite input.
  std::array<double, kActionDim> act(const std::vector<double>& obs, bool stochastic);

  /// Log-density of a given squashed action (for quadrature checks).
  Matrix log_prob_of(const Matrix& obs, const Matrix& action) const;

  /// TD targets y = r + gamma (1 - done) (min target Q - alpha log pi).
  Matrix td_target(const Batch<T>& batch, const Matrix& next_noise) const;
  /// Mean squared TD error of critic `which` (0/1); fills its grads().
  double critic_loss_and_grad(int which, const Batch<T>& batch, const Matrix& target);
  /// mean(alpha log pi - min Q); fills actor grads(). Optionally returns
  /// d(alpha loss)/d(log alpha) and the batch entropy.
  double actor_loss_and_grad(const Matrix& obs, const Matrix& noise, double* d_log_alpha = nullptr,
                             double* entropy = nullptr);

  CriticLosses critic_update(const Batch<T>& batch);
  CriticLosses critic_update(const Batch<T>& batch, const Matrix& next_noise);
  ActorLosses actor_and_alpha_update(const Batch<T>& batch);
  ActorLosses actor_and_alpha_update(const Batch<T>& batch, const Matrix& noise);

  void soft_update();
  void hard_update();

  double alpha() const { return std::exp(log_alpha_); }
  double log_alpha() const { return log_alpha_; }
  void set_log_alpha(double v) { log_alpha_ = v; }

  Mlp<T>& actor() { return actor_; }
  const Mlp<T>& actor() const { return actor_; }
  Mlp<T>& critic(int i) { return critics_[i]; }
  const Mlp<T>& critic(int i) const { return critics_[i]; }
  Mlp<T>& target(int i) { return targets_[i]; }
  const Mlp<T>& target(int i) const { return targets_[i]; }
  Adam<T>& actor_optimizer() { return actor_opt_; }
  const Adam<T>& actor_optimizer() const { return actor_opt_; }
  Adam<T>& critic_optimizer(int i) { return critic_opts_[i]; }
  const Adam<T>& critic_optimizer(int i) const { return critic_opts_[i]; }
  Adam<double>& alpha_optimizer() { return alpha_opt_; }
  const Adam<double>& alpha_optimizer() const { return alpha_opt_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  Matrix noise(Eigen::Index batch);

 private:
  PolicySample squash(const Matrix& head, const Matrix& noise) const;

  SacConfig config_;
  int obs_dim_ = 0;
  Mlp<T> actor_;
  std::array<Mlp<T>, 2> critics_;
  std::array<Mlp<T>, 2> targets_;
  Adam<T> actor_opt_;
  std::array<Adam<T>, 2> critic_opts_;
  Adam<double> alpha_opt_;
  double log_alpha_ = 0.0;
  Rng rng_;
};

extern template class SacAgent<float>;
extern template class SacAgent<double>;

}  // namespace qalign::rl
