#include "qalign/rl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qalign/errors.hpp"
#include "qalign/seeding.hpp"

namespace qalign::rl {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("SacConfig: ") + what);
}

template <class T>
T softplus(T x) {
  return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2) without cancellation.
template <class T>
T log_one_minus_tanh2(T u) {
  return T(2) * (T(std::numbers::ln2) - u - softplus(T(-2) * u));
}

}  // namespace

void SacConfig::validate() const {
  require(!hidden.empty(), "hidden must list at least one layer");
  for (int h : hidden) require(h > 0, "hidden sizes must be positive");
  require(batch_size > 0, "batch_size must be > 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(replay_capacity >= batch_size, "replay_capacity must be >= batch_size");
  require(warmup_steps >= 0, "warmup_steps must be >= 0");
  require(std::isfinite(entropy_target), "entropy_target must be finite");
  require(initial_alpha > 0.0, "initial_alpha must be > 0");
  require(log_std_min < log_std_max, "log_std_min must be < log_std_max");
  require(total_steps >= 0, "total_steps must be >= 0");
  require(updates_per_step >= 0, "updates_per_step must be >= 0");
  require(log_interval > 0, "log_interval must be > 0");
  require(validation_interval >= 0, "validation_interval must be >= 0");
  require(validation_trials > 0, "validation_trials must be > 0");
  require(checkpoint_interval >= 0, "checkpoint_interval must be >= 0");
}

template <class T>
SacAgent<T>::SacAgent(int obs_dim, SacConfig config, std::uint64_t seed)
    : config_(std::move(config)), obs_dim_(obs_dim), rng_(derive_seed(seed, 1)) {
  config_.validate();
  if (obs_dim <= 0) throw DomainError("SacAgent: obs_dim must be > 0");
  std::vector<int> actor_sizes{obs_dim};
  std::vector<int> critic_sizes{obs_dim + kActionDim};
  for (int h : config_.hidden) {
    actor_sizes.push_back(h);
    critic_sizes.push_back(h);
  }
  actor_sizes.push_back(2 * kActionDim);
  critic_sizes.push_back(1);

  Rng init(derive_seed(seed, 0));
  actor_ = Mlp<T>(actor_sizes);
  actor_.init(init);
  for (int i = 0; i < 2; ++i) {
    critics_[i] = Mlp<T>(critic_sizes);
    critics_[i].init(init);
    critic_opts_[i] = Adam<T>(critics_[i].num_params(), config_.learning_rate);
  }
  hard_update();
  actor_opt_ = Adam<T>(actor_.num_params(), config_.learning_rate);
  alpha_opt_ = Adam<double>(1, config_.learning_rate);
  log_alpha_ = std::log(config_.initial_alpha);
}

template <class T>
typename SacAgent<T>::Matrix SacAgent<T>::noise(Eigen::Index batch) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix out(kActionDim, batch);
  for (Eigen::Index j = 0; j < batch; ++j)
    for (int k = 0; k < kActionDim; ++k) out(k, j) = T(n(rng_));
  return out;
}

template <class T>
typename SacAgent<T>::PolicySample SacAgent<T>::squash(const Matrix& head, const Matrix& noise) const {
  const Eigen::Index b = head.cols();
  if (noise.rows() != kActionDim || noise.cols() != b) throw DomainError("SacAgent: noise has wrong shape");
  PolicySample s;
  s.mean = head.topRows(kActionDim);
  s.log_std = head.bottomRows(kActionDim).cwiseMax(T(config_.log_std_min)).cwiseMin(T(config_.log_std_max));
  s.pre_tanh = s.mean + s.log_std.array().exp().matrix().cwiseProduct(noise);
  s.action = s.pre_tanh.array().tanh().matrix();
  s.log_prob.resize(1, b);
  const T half_log_2pi = T(0.5 * std::log(2.0 * std::numbers::pi));
  for (Eigen::Index j = 0; j < b; ++j) {
    T lp = 0;
    for (int k = 0; k < kActionDim; ++k) {
      lp += T(-0.5) * noise(k, j) * noise(k, j) - s.log_std(k, j) - half_log_2pi -
            log_one_minus_tanh2(s.pre_tanh(k, j));
    }
    s.log_prob(0, j) = lp;
  }
  return s;
}

template <class T>
typename SacAgent<T>::PolicySample SacAgent<T>::sample_with_noise(const Matrix& obs, const Matrix& noise) const {
  return squash(actor_.predict(obs), noise);
}

template <class T>
typename SacAgent<T>::PolicySample SacAgent<T>::sample(const Matrix& obs) {
  const Matrix eps = noise(obs.cols());
  return sample_with_noise(obs, eps);
}

template <class T>
typename SacAgent<T>::Matrix SacAgent<T>::deterministic_action(const Matrix& obs) const {
  return actor_.predict(obs).topRows(kActionDim).array().tanh().matrix();
}

template <class T>
std::array<double, kActionDim> SacAgent<T>::act(const std::vector<double>& obs, bool stochastic) {
  if (int(obs.size()) != obs_dim_) throw DomainError("SacAgent::act: observation has wrong dimension");
  Matrix x(obs_dim_, 1);
  for (int i = 0; i < obs_dim_; ++i) {
    if (!std::isfinite(obs[i])) throw DomainError("SacAgent::act: non-finite observation");
    x(i, 0) = T(obs[i]);
  }
  const Matrix a = stochastic ? sample(x).action : deterministic_action(x);
  return {double(a(0, 0)), double(a(1, 0)), double(a(2, 0))};
}

template <class T>
typename SacAgent<T>::Matrix SacAgent<T>::log_prob_of(const Matrix& obs, const Matrix& action) const {
  const Matrix head = actor_.predict(obs);
  const Eigen::Index b = obs.cols();
  Matrix out(1, b);
  const T half_log_2pi = T(0.5 * std::log(2.0 * std::numbers::pi));
  for (Eigen::Index j = 0; j < b; ++j) {
    T lp = 0;
    for (int k = 0; k < kActionDim; ++k) {
      const T a = action(k, j);
      const T ls = std::clamp(head(kActionDim + k, j), T(config_.log_std_min), T(config_.log_std_max));
      const T eps = (std::atanh(a) - head(k, j)) / std::exp(ls);
      lp += T(-0.5) * eps * eps - ls - half_log_2pi - std::log1p(-a * a);
    }
    out(0, j) = lp;
  }
  return out;
}

template <class T>
typename SacAgent<T>::Matrix SacAgent<T>::td_target(const Batch<T>& batch, const Matrix& next_noise) const {
  const auto next = sample_with_noise(batch.next_obs, next_noise);
  Matrix x(obs_dim_ + kActionDim, batch.size());
  x.topRows(obs_dim_) = batch.next_obs;
  x.bottomRows(kActionDim) = next.action;
  const Matrix q = targets_[0].predict(x).cwiseMin(targets_[1].predict(x));
  const Matrix soft = q - T(alpha()) * next.log_prob;
  const Matrix not_done = (Matrix::Ones(1, batch.size()) - batch.done);
  return batch.reward + T(config_.gamma) * not_done.cwiseProduct(soft);
}

template <class T>
double SacAgent<T>::critic_loss_and_grad(int which, const Batch<T>& batch, const Matrix& target) {
  Mlp<T>& net = critics_[which];
  Matrix x(obs_dim_ + kActionDim, batch.size());
  x.topRows(obs_dim_) = batch.obs;
  x.bottomRows(kActionDim) = batch.action;
  const Matrix diff = net.forward(x) - target;
  const double n = double(batch.size());
  net.zero_grad();
  net.backward(T(2.0 / n) * diff);
  return double(diff.squaredNorm()) / n;
}

template <class T>
double SacAgent<T>::actor_loss_and_grad(const Matrix& obs, const Matrix& noise, double* d_log_alpha,
                                        double* entropy) {
  const Eigen::Index b = obs.cols();
  const Matrix head = actor_.forward(obs);
  const PolicySample s = squash(head, noise);

  Matrix x(obs_dim_ + kActionDim, b);
  x.topRows(obs_dim_) = obs;
  x.bottomRows(kActionDim) = s.action;
  const Matrix q1 = critics_[0].forward(x);
  Matrix mask(1, b);
  Matrix q_min(1, b);
  const Matrix q2 = critics_[1].forward(x);
  for (Eigen::Index j = 0; j < b; ++j) {
    mask(0, j) = q1(0, j) <= q2(0, j) ? T(1) : T(0);
    q_min(0, j) = std::min(q1(0, j), q2(0, j));
  }
  Matrix dq_da = critics_[0].backward(mask, false).bottomRows(kActionDim);
  dq_da += critics_[1].backward(Matrix::Ones(1, b) - mask, false).bottomRows(kActionDim);

  const T a_coef = T(alpha());
  const T inv_b = T(1.0 / double(b));
  Matrix g(2 * kActionDim, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    for (int k = 0; k < kActionDim; ++k) {
      const T a = s.action(k, j);
      const T sech2 = T(1) - a * a;
      const T sig_eps = std::exp(s.log_std(k, j)) * noise(k, j);
      g(k, j) = (a_coef * T(2) * a - dq_da(k, j) * sech2) * inv_b;
      const T raw = head(kActionDim + k, j);
      const bool clamped = raw < T(config_.log_std_min) || raw > T(config_.log_std_max);
      g(kActionDim + k, j) =
          clamped ? T(0) : (a_coef * (T(-1) + T(2) * a * sig_eps) - dq_da(k, j) * sech2 * sig_eps) * inv_b;
    }
  }
  actor_.zero_grad();
  actor_.backward(g);

  const double mean_log_prob = double(s.log_prob.mean());
  if (d_log_alpha) *d_log_alpha = -(mean_log_prob + config_.entropy_target);
  if (entropy) *entropy = -mean_log_prob;
  return double((a_coef * s.log_prob - q_min).mean());
}

template <class T>
CriticLosses SacAgent<T>::critic_update(const Batch<T>& batch, const Matrix& next_noise) {
  const Matrix y = td_target(batch, next_noise);
  CriticLosses out;
  out.q1 = critic_loss_and_grad(0, batch, y);
  critic_opts_[0].step(critics_[0].params(), critics_[0].grads());
  out.q2 = critic_loss_and_grad(1, batch, y);
  critic_opts_[1].step(critics_[1].params(), critics_[1].grads());
  soft_update();
  return out;
}

template <class T>
CriticLosses SacAgent<T>::critic_update(const Batch<T>& batch) {
  const Matrix eps = noise(batch.size());
  return critic_update(batch, eps);
}

template <class T>
ActorLosses SacAgent<T>::actor_and_alpha_update(const Batch<T>& batch, const Matrix& noise) {
  ActorLosses out;
  double d_log_alpha = 0.0;
  out.actor = actor_loss_and_grad(batch.obs, noise, &d_log_alpha, &out.entropy);
  actor_opt_.step(actor_.params(), actor_.grads());
  out.alpha = -log_alpha_ * (config_.entropy_target - out.entropy);
  Eigen::VectorXd la(1), g(1);
  la << log_alpha_;
  g << d_log_alpha;
  alpha_opt_.step(la, g);
  log_alpha_ = la(0);
  return out;
}

template <class T>
ActorLosses SacAgent<T>::actor_and_alpha_update(const Batch<T>& batch) {
  const Matrix eps = noise(batch.size());
  return actor_and_alpha_update(batch, eps);
}

template <class T>
void SacAgent<T>::soft_update() {
  const T tau = T(config_.tau);
  for (int i = 0; i < 2; ++i) {
    targets_[i].params() = (T(1) - tau) * targets_[i].params() + tau * critics_[i].params();
  }
}

template <class T>
void SacAgent<T>::hard_update() {
  for (int i = 0; i < 2; ++i) targets_[i] = critics_[i];
}

template class SacAgent<float>;
template class SacAgent<double>;

}  // namespace qalign::rl
