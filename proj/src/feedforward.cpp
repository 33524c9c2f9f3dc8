#include "amr/feedforward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "amr/error.hpp"
#include "amr/rng.hpp"

namespace amr {

namespace {

struct AdamState {
  Matrix mW, vW;
  Vector mb, vb;
};

}  // namespace

FeedforwardRegressor FeedforwardRegressor::fit(const Matrix& X, const Vector& y, const FeedforwardConfig& cfg) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (n == 0 || y.size() != n) throw ArgumentError("feedforward fit: empty or mismatched data");
  if (cfg.epochs < 1 || cfg.batch < 1 || !(cfg.step > 0.0)) throw ArgumentError("feedforward fit: bad schedule");
  for (int w : cfg.widths)
    if (w < 1) throw ArgumentError("feedforward fit: hidden widths must be positive");

  FeedforwardRegressor net;
  net.x_mean_ = X.colwise().mean().transpose();
  net.x_scale_ = ((X.rowwise() - net.x_mean_.transpose()).colwise().squaredNorm().transpose() / double(n)).cwiseSqrt();
  for (Index j = 0; j < p; ++j)
    if (!(net.x_scale_[j] > 1e-12)) net.x_scale_[j] = 1.0;
  net.y_mean_ = y.mean();
  net.y_scale_ = std::sqrt((y.array() - net.y_mean_).square().mean());
  if (!(net.y_scale_ > 1e-12)) net.y_scale_ = 1.0;

  // Column-major samples: each column is one standardized unit.
  const Matrix Z = ((X.rowwise() - net.x_mean_.transpose()).array().rowwise() / net.x_scale_.transpose().array())
                       .matrix()
                       .transpose();
  const Vector t = (y.array() - net.y_mean_) / net.y_scale_;

  Engine eng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> sizes{static_cast<int>(p)};
  sizes.insert(sizes.end(), cfg.widths.begin(), cfg.widths.end());
  sizes.push_back(1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer;
    const double sd = std::sqrt(2.0 / std::max(1, sizes[l]));  // He initialization
    layer.W = Matrix(sizes[l + 1], sizes[l]);
    for (Index i = 0; i < layer.W.size(); ++i) layer.W.data()[i] = sd * normal(eng);
    layer.b = Vector::Zero(sizes[l + 1]);
    net.layers_.push_back(std::move(layer));
  }

  const std::size_t L = net.layers_.size();
  std::vector<AdamState> adam(L);
  for (std::size_t l = 0; l < L; ++l) {
    adam[l].mW = Matrix::Zero(net.layers_[l].W.rows(), net.layers_[l].W.cols());
    adam[l].vW = adam[l].mW;
    adam[l].mb = Vector::Zero(net.layers_[l].b.size());
    adam[l].vb = adam[l].mb;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double beta1_pow = 1.0, beta2_pow = 1.0;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<Matrix> act(L + 1);
  std::vector<Matrix> grad_W(L);
  std::vector<Vector> grad_b(L);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), eng);
    double epoch_loss = 0.0;
    for (Index start = 0; start < n; start += cfg.batch) {
      const Index B = std::min<Index>(cfg.batch, n - start);
      Matrix& in = act[0];
      in.resize(p, B);
      Vector target(B);
      for (Index j = 0; j < B; ++j) {
        const Index row = order[static_cast<std::size_t>(start + j)];
        in.col(j) = Z.col(row);
        target[j] = t[row];
      }
      for (std::size_t l = 0; l < L; ++l) {
        act[l + 1].noalias() = net.layers_[l].W * act[l];
        act[l + 1].colwise() += net.layers_[l].b;
        if (l + 1 < L) act[l + 1] = act[l + 1].cwiseMax(0.0);
      }
      const Vector residual = act[L].row(0).transpose() - target;
      const double loss = residual.squaredNorm() / double(B);
      if (!std::isfinite(loss)) {
        throw FitError("feedforward training diverged (non-finite loss) at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * double(B);

      Matrix delta = (2.0 / double(B)) * residual.transpose();  // 1 x B
      for (std::size_t l = L; l-- > 0;) {
        grad_W[l].noalias() = delta * act[l].transpose();
        grad_b[l] = delta.rowwise().sum();
        if (l > 0) {
          Matrix back = net.layers_[l].W.transpose() * delta;
          delta = (act[l].array() > 0.0).select(back.array(), 0.0).matrix();
        }
      }
      beta1_pow *= beta1;
      beta2_pow *= beta2;
      const double lr = cfg.step * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      for (std::size_t l = 0; l < L; ++l) {
        auto& s = adam[l];
        s.mW = beta1 * s.mW + (1.0 - beta1) * grad_W[l];
        s.vW = beta2 * s.vW + (1.0 - beta2) * grad_W[l].cwiseAbs2();
        s.mb = beta1 * s.mb + (1.0 - beta1) * grad_b[l];
        s.vb = beta2 * s.vb + (1.0 - beta2) * grad_b[l].cwiseAbs2();
        net.layers_[l].W.array() -= lr * s.mW.array() / (s.vW.array().sqrt() + eps);
        net.layers_[l].b.array() -= lr * s.mb.array() / (s.vb.array().sqrt() + eps);
      }
    }
    net.final_loss_ = epoch_loss / double(n);
  }
  return net;
}

Vector FeedforwardRegressor::predict(const Matrix& X) const {
  if (X.cols() != x_mean_.size()) throw ArgumentError("feedforward predict: column count mismatch");
  Matrix a = ((X.rowwise() - x_mean_.transpose()).array().rowwise() / x_scale_.transpose().array()).matrix().transpose();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix next = layers_[l].W * a;
    next.colwise() += layers_[l].b;
    if (l + 1 < layers_.size()) next = next.cwiseMax(0.0);
    a = std::move(next);
  }
  return (a.row(0).transpose().array() * y_scale_ + y_mean_).matrix();
}

}  // namespace amr
