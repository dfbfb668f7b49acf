#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "qalign/errors.hpp"

namespace qalign::rl {

/// Fully connected ReLU network with a linear output layer. All weights and
/// biases live in one flat parameter vector so optimizers, soft updates and
/// checkpoints treat a network as a single array.
///
/// Batches are column-major: one sample per column.
template <class T>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Mlp() = default;

  /// sizes = {in, hidden..., out}.
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw DomainError("Mlp: need at least input and output sizes");
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw DomainError("Mlp: layer sizes must be positive");
      offsets_.push_back(n);
      n += Eigen::Index(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_ = Vector::Zero(n);
    grads_ = Vector::Zero(n);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  template <class Rng>
  void init(Rng& rng) {
    for (int l = 0; l < layers(); ++l) {
      const double bound = 1.0 / std::sqrt(double(sizes_[l]));
      std::uniform_real_distribution<double> u(-bound, bound);
      auto w = weight(l);
      auto b = bias(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = T(u(rng));
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = T(u(rng));
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int layers() const { return int(sizes_.size()) - 1; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  Eigen::Index num_params() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  Vector& grads() { return grads_; }
  const Vector& grads() const { return grads_; }
  void zero_grad() { grads_.setZero(); }

  /// Forward pass that keeps the activations for backward().
  const Matrix& forward(const Matrix& x) {
    check_input(x);
    inputs_.resize(layers());
    inputs_[0] = x;
    for (int l = 0; l < layers(); ++l) {
      Matrix z = weight(l) * inputs_[l];
      z.colwise() += bias(l);
      if (l + 1 < layers()) {
        inputs_[l + 1] = z.cwiseMax(T(0));
      } else {
        output_ = std::move(z);
      }
    }
    return output_;
  }

  /// Forward pass without caching.
  Matrix predict(const Matrix& x) const {
    check_input(x);
    Matrix h = x;
    for (int l = 0; l < layers(); ++l) {
      Matrix z = weight(l) * h;
      z.colwise() += bias(l);
      h = (l + 1 < layers()) ? Matrix(z.cwiseMax(T(0))) : std::move(z);
    }
    return h;
  }

  /// Back-propagates d(loss)/d(output) through the last forward() call and
  /// returns d(loss)/d(input). Parameter gradients are accumulated into
  /// grads() unless `param_grads` is false.
  Matrix backward(const Matrix& d_out, bool param_grads = true) {
    if (inputs_.size() != std::size_t(layers())) throw StateError("Mlp::backward before forward");
    Matrix dz = d_out;
    for (int l = layers() - 1; l >= 0; --l) {
      if (param_grads) {
        grad_weight(l).noalias() += dz * inputs_[l].transpose();
        grad_bias(l) += dz.rowwise().sum();
      }
      Matrix dh = weight(l).transpose() * dz;
      if (l > 0) dh = dh.cwiseProduct((inputs_[l].array() > T(0)).template cast<T>().matrix());
      dz = std::move(dh);
    }
    return dz;
  }

  auto weight(int l) { return Eigen::Map<Matrix>(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]); }
  auto weight(int l) const {
    return Eigen::Map<const Matrix>(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  auto bias(int l) {
    return Eigen::Map<Vector>(params_.data() + offsets_[l] + Eigen::Index(sizes_[l + 1]) * sizes_[l],
                              sizes_[l + 1]);
  }
  auto bias(int l) const {
    return Eigen::Map<const Vector>(params_.data() + offsets_[l] + Eigen::Index(sizes_[l + 1]) * sizes_[l],
                                    sizes_[l + 1]);
  }

 private:
  auto grad_weight(int l) { return Eigen::Map<Matrix>(grads_.data() + offsets_[l], sizes_[l + 1], sizes_[l]); }
  auto grad_bias(int l) {
    return Eigen::Map<Vector>(grads_.data() + offsets_[l] + Eigen::Index(sizes_[l + 1]) * sizes_[l],
                              sizes_[l + 1]);
  }
  void check_input(const Matrix& x) const {
    if (x.rows() != in_dim()) throw DomainError("Mlp: input has wrong dimension");
  }

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
  Vector grads_;
  std::vector<Matrix> inputs_;
  Matrix output_;
};

/// Adam with bias correction.
template <class T>
class Adam {
 public:
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Adam() = default;
  Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr(lr), beta1(beta1), beta2(beta2), eps(eps), m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  template <class P, class G>
  void step(P&& params, const G& grads) {
    ++t;
    m = T(beta1) * m + T(1 - beta1) * grads;
    v = T(beta2) * v + T(1 - beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, double(t));
    const double c2 = 1.0 - std::pow(beta2, double(t));
    const T step_size = T(lr / c1);
    const T root_c2 = T(std::sqrt(c2));
    params.array() -= step_size * m.array() / (v.array().sqrt() / root_c2 + T(eps));
  }

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  Vector m;
  Vector v;
};

}  // namespace qalign::rl
