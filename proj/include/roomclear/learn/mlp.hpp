#pragma once

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace roomclear {

template <class Scalar>
struct MlpGradients
{
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  Scalar squared_norm() const
  {
    Scalar s(0);
    for (auto const &w : weights) { s += w.squaredNorm(); }
    for (auto const &b : biases) { s += b.squaredNorm(); }
    return s;
  }

  MlpGradients &operator*=(Scalar k)
  {
    for (auto &w : weights) { w *= k; }
    for (auto &b : biases) { b *= k; }
    return *this;
  }
};

/// Fully connected net: rectifier on hidden layers, identity on the output.
/// Batches are stored column-wise (one sample per column).
template <class Scalar>
class Mlp
{
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Gradients = MlpGradients<Scalar>;

  Mlp() = default;

  /// All parameters zero. `dims` = {input, hidden..., output}.
  explicit Mlp(std::vector<int> dims) : dims_(std::move(dims))
  {
    if (dims_.size() < 2) { throw std::invalid_argument("Mlp: need at least input and output sizes"); }
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      if (dims_[l] <= 0 || dims_[l + 1] <= 0) { throw std::invalid_argument("Mlp: layer sizes must be positive"); }
      weights_.push_back(Matrix::Zero(dims_[l + 1], dims_[l]));
      biases_.push_back(Vector::Zero(dims_[l + 1]));
    }
  }

  /// He-normal weights, zero biases.
  template <class Rng>
  static Mlp he_init(std::vector<int> dims, Rng &rng)
  {
    Mlp net(std::move(dims));
    for (auto &w : net.weights_) {
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) { w(i, j) = static_cast<Scalar>(normal(rng)); }
      }
    }
    return net;
  }

  std::vector<int> const &dims() const { return dims_; }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::size_t layers() const { return weights_.size(); }

  std::vector<Matrix> &weights() { return weights_; }
  std::vector<Matrix> const &weights() const { return weights_; }
  std::vector<Vector> &biases() { return biases_; }
  std::vector<Vector> const &biases() const { return biases_; }

  Matrix forward(Eigen::Ref<Matrix const> x) const
  {
    check_input(x);
    Matrix h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (weights_[l] * h).colwise() + biases_[l];
      h = l + 1 < weights_.size() ? Matrix(z.cwiseMax(Scalar(0))) : z;
    }
    return h;
  }

  /// Parameter gradients of sum_ij grad_out(i,j) * out(i,j), i.e. backprop of
  /// an upstream gradient with respect to the outputs.
  Gradients backward(Eigen::Ref<Matrix const> x, Eigen::Ref<Matrix const> grad_out) const
  {
    check_input(x);
    if (grad_out.rows() != output_size() || grad_out.cols() != x.cols()) {
      throw std::invalid_argument("Mlp::backward: output gradient shape mismatch");
    }
    std::vector<Matrix> acts{x};
    std::vector<Matrix> pre;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      pre.push_back((weights_[l] * acts.back()).colwise() + biases_[l]);
      acts.push_back(l + 1 < weights_.size() ? Matrix(pre.back().cwiseMax(Scalar(0))) : pre.back());
    }

    Gradients g;
    g.weights.resize(weights_.size());
    g.biases.resize(weights_.size());
    Matrix delta = grad_out;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      g.weights[l] = delta * acts[l].transpose();
      g.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weights_[l].transpose() * delta;
        delta = back.cwiseProduct((pre[l - 1].array() > Scalar(0)).matrix().template cast<Scalar>());
      }
    }
    return g;
  }

  /// θ ← θ - lr · g
  void apply(Gradients const &g, Scalar lr)
  {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l] -= lr * g.weights[l];
      biases_[l] -= lr * g.biases[l];
    }
  }

  std::size_t parameter_count() const
  {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) { n += weights_[l].size() + biases_[l].size(); }
    return n;
  }

  /// Layer by layer: weights row-major, then biases.
  Vector flatten() const
  {
    Vector out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) {
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) { out(k++) = weights_[l](i, j); }
      }
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) { out(k++) = biases_[l](i); }
    }
    return out;
  }

  void unflatten(Eigen::Ref<Vector const> params)
  {
    if (static_cast<std::size_t>(params.size()) != parameter_count()) {
      throw std::invalid_argument("Mlp::unflatten: parameter count mismatch");
    }
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) {
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) { weights_[l](i, j) = params(k++); }
      }
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) { biases_[l](i) = params(k++); }
    }
  }

  friend bool operator==(Mlp const &a, Mlp const &b)
  {
    if (a.dims_ != b.dims_) { return false; }
    for (std::size_t l = 0; l < a.weights_.size(); ++l) {
      if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) { return false; }
    }
    return true;
  }

private:
  void check_input(Eigen::Ref<Matrix const> x) const
  {
    if (weights_.empty()) { throw std::logic_error("Mlp: network has no layers"); }
    if (x.rows() != input_size()) {
      throw std::invalid_argument("Mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                                  std::to_string(input_size()));
    }
  }

  std::vector<int>    dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

template <class Scalar>
typename Mlp<Scalar>::Matrix mlp_forward(Mlp<Scalar> const &net, Eigen::Ref<typename Mlp<Scalar>::Matrix const> x)
{
  return net.forward(x);
}

template <class Scalar>
MlpGradients<Scalar> mlp_backward(Mlp<Scalar> const &net, Eigen::Ref<typename Mlp<Scalar>::Matrix const> x,
                                  Eigen::Ref<typename Mlp<Scalar>::Matrix const> grad_out)
{
  return net.backward(x, grad_out);
}

} // namespace roomclear
