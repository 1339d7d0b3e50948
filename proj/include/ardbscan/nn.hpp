#pragma once

#include "ardbscan/types.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace ardbscan::nn {

/// A contiguous run of parameters and the matching gradient storage.
template <typename Scalar>
struct ParamBlock {
  Scalar* value = nullptr;
  Scalar* grad = nullptr;
  Index size = 0;
};

/// y = W x + b. Batches are column-major: one sample per column.
template <typename Scalar>
class Linear {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  Linear() = default;
  Linear(Index in, Index out)
      : weight(Matrix::Zero(out, in)),
        bias(Vector::Zero(out)),
        grad_weight(Matrix::Zero(out, in)),
        grad_bias(Vector::Zero(out)) {}

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  template <typename Rng>
  void init_uniform(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(in_dim(), 1)));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index i = 0; i < weight.size(); ++i) weight.data()[i] = static_cast<Scalar>(u(rng));
    for (Index i = 0; i < bias.size(); ++i) bias[i] = static_cast<Scalar>(u(rng));
  }

  Matrix forward(const Matrix& x) const {
    Matrix y = weight * x;
    y.colwise() += bias;
    return y;
  }

  /// Accumulates parameter gradients for dL/dy and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy) {
    grad_weight.noalias() += dy * x.transpose();
    grad_bias += dy.rowwise().sum();
    return weight.transpose() * dy;
  }

  void zero_grad() {
    grad_weight.setZero();
    grad_bias.setZero();
  }

  void collect(std::vector<ParamBlock<Scalar>>& out) {
    out.push_back({weight.data(), grad_weight.data(), weight.size()});
    out.push_back({bias.data(), grad_bias.data(), bias.size()});
  }

  Matrix weight;
  Vector bias;
  Matrix grad_weight;
  Vector grad_bias;
};

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
auto relu_mask(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.unaryExpr([](S v) { return v > S(0) ? S(1) : S(0); });
}

/// Three linear layers with ReLU between them and a linear output.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = MatrixX<Scalar>;

  struct Cache {
    Matrix x, z1, a1, z2, a2;
  };

  Mlp() = default;
  Mlp(Index in, Index hidden, Index out) : l1(in, hidden), l2(hidden, hidden), l3(hidden, out) {}

  Index in_dim() const { return l1.in_dim(); }
  Index out_dim() const { return l3.out_dim(); }

  template <typename Rng>
  void init_uniform(Rng& rng) {
    l1.init_uniform(rng);
    l2.init_uniform(rng);
    l3.init_uniform(rng);
  }

  Matrix forward(const Matrix& x) const {
    return l3.forward(relu(l2.forward(relu(l1.forward(x))).eval()).eval());
  }

  Matrix forward(const Matrix& x, Cache& c) const {
    c.x = x;
    c.z1 = l1.forward(x);
    c.a1 = relu(c.z1);
    c.z2 = l2.forward(c.a1);
    c.a2 = relu(c.z2);
    return l3.forward(c.a2);
  }

  Matrix backward(const Cache& c, const Matrix& dy) {
    Matrix d = l3.backward(c.a2, dy);
    d = d.cwiseProduct(relu_mask(c.z2));
    d = l2.backward(c.a1, d);
    d = d.cwiseProduct(relu_mask(c.z1));
    return l1.backward(c.x, d);
  }

  void zero_grad() {
    l1.zero_grad();
    l2.zero_grad();
    l3.zero_grad();
  }

  void collect(std::vector<ParamBlock<Scalar>>& out) {
    l1.collect(out);
    l2.collect(out);
    l3.collect(out);
  }

  Linear<Scalar> l1, l2, l3;
};

template <typename Module>
auto parameters(Module& m) {
  std::vector<ParamBlock<typename Module::Matrix::Scalar>> out;
  m.collect(out);
  return out;
}

/// Adam over a fixed list of parameter blocks.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::vector<ParamBlock<Scalar>> blocks, double rate = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : blocks_(std::move(blocks)), rate_(rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& b : blocks_) {
      m_.push_back(VectorX<Scalar>::Zero(b.size));
      v_.push_back(VectorX<Scalar>::Zero(b.size));
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      Eigen::Map<VectorX<Scalar>> value(blocks_[i].value, blocks_[i].size);
      Eigen::Map<const VectorX<Scalar>> grad(blocks_[i].grad, blocks_[i].size);
      m_[i] = Scalar(beta1_) * m_[i] + Scalar(1.0 - beta1_) * grad;
      v_[i] = Scalar(beta2_) * v_[i] + Scalar(1.0 - beta2_) * grad.cwiseAbs2();
      value.array() -= Scalar(rate_) * (m_[i].array() / Scalar(c1)) /
                       ((v_[i].array() / Scalar(c2)).sqrt() + Scalar(eps_));
    }
  }

  int steps() const { return t_; }

 private:
  std::vector<ParamBlock<Scalar>> blocks_;
  std::vector<VectorX<Scalar>> m_, v_;
  double rate_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
};

/// target <- tau * source + (1 - tau) * target, block by block.
template <typename Scalar>
void soft_update(const std::vector<ParamBlock<Scalar>>& target,
                 const std::vector<ParamBlock<Scalar>>& source, double tau) {
  for (std::size_t i = 0; i < target.size(); ++i) {
    Eigen::Map<VectorX<Scalar>> t(target[i].value, target[i].size);
    Eigen::Map<const VectorX<Scalar>> s(source[i].value, source[i].size);
    t = Scalar(tau) * s + Scalar(1.0 - tau) * t;
  }
}

template <typename Scalar>
VectorX<Scalar> flatten(const std::vector<ParamBlock<Scalar>>& blocks, bool grads = false) {
  Index total = 0;
  for (const auto& b : blocks) total += b.size;
  VectorX<Scalar> out(total);
  Index at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.size) = Eigen::Map<const VectorX<Scalar>>(grads ? b.grad : b.value, b.size);
    at += b.size;
  }
  return out;
}

/// Reference to one scalar inside a block list, by flat index.
template <typename Scalar>
Scalar& flat_value(const std::vector<ParamBlock<Scalar>>& blocks, Index i, bool grad = false) {
  for (const auto& b : blocks) {
    if (i < b.size) return grad ? b.grad[i] : b.value[i];
    i -= b.size;
  }
  throw ConfigError("parameter index out of range");
}

template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Matrix = MatrixX<typename Derived::Scalar>;
  Matrix out(logits.rows(), logits.cols());
  for (Index c = 0; c < logits.cols(); ++c) {
    const Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> shifted =
        (logits.col(c).array() - logits.col(c).maxCoeff()).exp();
    out.col(c) = shifted / shifted.sum();
  }
  return out;
}

/// Attention state encoder: one global vector and a set of per-cluster local
/// vectors are projected to width h, each cluster is scored against the
/// global projection, and the weighted local sum is concatenated with the
/// global projection. The output has length 2h for any cluster count.
template <typename Scalar>
class StateEncoder {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  struct Cache {
    Vector global;
    Matrix local;
    Vector g;         // F_G output
    Matrix l;         // F_L output, one column per cluster
    Matrix pairs;     // [g; l_n] per cluster
    Matrix z;         // raw scores, 1 x C
    Vector attention; // weights, length C
    Scalar score_sum = Scalar(0);
    Vector pre;       // [g; sum a_n l_n] before the output ReLU
  };

  StateEncoder() = default;
  StateEncoder(Index global_dim, Index local_dim, Index hidden)
      : fg(global_dim, hidden), fl(local_dim, hidden), fs(2 * hidden, 1) {}

  Index hidden() const { return fg.out_dim(); }
  Index out_dim() const { return 2 * hidden(); }

  template <typename Rng>
  void init_uniform(Rng& rng) {
    fg.init_uniform(rng);
    fl.init_uniform(rng);
    fs.init_uniform(rng);
  }

  Vector forward(const Vector& global, const Matrix& local) const {
    Cache c;
    return forward(global, local, c);
  }

  Vector forward(const Vector& global, const Matrix& local, Cache& c) const {
    const Index h = hidden();
    const Index count = local.cols();
    c.global = global;
    c.local = local;
    c.g = fg.forward(global);
    c.pre = Vector::Zero(2 * h);
    c.pre.head(h) = c.g;
    c.attention.resize(count);
    c.score_sum = Scalar(0);
    if (count > 0) {
      c.l = fl.forward(local);
      c.pairs.resize(2 * h, count);
      c.pairs.topRows(h) = c.g.replicate(1, count);
      c.pairs.bottomRows(h) = c.l;
      c.z = fs.forward(c.pairs);
      const Vector scores = relu(c.z.row(0).transpose());
      c.score_sum = scores.sum();
      if (c.score_sum > Scalar(0)) {
        c.attention = scores / c.score_sum;
      } else {
        c.attention.setConstant(Scalar(1) / static_cast<Scalar>(count));
      }
      c.pre.tail(h) = c.l * c.attention;
    } else {
      c.l.resize(h, 0);
      c.pairs.resize(2 * h, 0);
      c.z.resize(1, 0);
    }
    return relu(c.pre);
  }

  /// Accumulates parameter gradients for dL/d(output).
  void backward(const Cache& c, const Vector& dout) {
    const Index h = hidden();
    const Index count = c.local.cols();
    const Vector dpre = dout.cwiseProduct(relu_mask(c.pre));
    Vector dg = dpre.head(h);
    if (count > 0) {
      const Vector dagg = dpre.tail(h);
      Matrix dl = dagg * c.attention.transpose();
      if (c.score_sum > Scalar(0)) {
        const Vector dalpha = c.l.transpose() * dagg;
        const Vector scores = relu(c.z.row(0).transpose());
        const Scalar cross = dalpha.dot(scores);
        const Scalar s = c.score_sum;
        Vector dscore = dalpha / s - Vector::Constant(count, cross / (s * s));
        const Vector mask = relu_mask(c.z.row(0).transpose());
        Matrix dz = dscore.cwiseProduct(mask).transpose();
        const Matrix dpairs = fs.backward(c.pairs, dz);
        dg += dpairs.topRows(h).rowwise().sum();
        dl += dpairs.bottomRows(h);
      }
      fl.backward(c.local, dl);
    }
    fg.backward(c.global, dg);
  }

  void zero_grad() {
    fg.zero_grad();
    fl.zero_grad();
    fs.zero_grad();
  }

  void collect(std::vector<ParamBlock<Scalar>>& out) {
    fg.collect(out);
    fl.collect(out);
    fs.collect(out);
  }

  Linear<Scalar> fg, fl, fs;
};

}  // namespace ardbscan::nn
