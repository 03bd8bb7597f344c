#include "uavtl/network.hpp"

#include <algorithm>
#include <cmath>

#include "uavtl/error.hpp"

namespace uavtl::agent {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutRowMap = Eigen::Map<Eigen::RowVectorXd>;

const char* stream_name(Stream s) {
  switch (s) {
    case Stream::trunk: return "trunk";
    case Stream::value: return "value_head";
    case Stream::advantage: return "advantage_head";
  }
  return "?";
}

}  // namespace

std::string LayerShape::name() const {
  return std::string(stream_name(stream)) + "[" + std::to_string(index) + "]";
}

DuelingNetwork::DuelingNetwork(Architecture arch) : arch_(std::move(arch)) {
  if (arch_.input_dim <= 0) fail(ErrorKind::config, "network input dimension must be positive");
  std::size_t offset = 0;
  auto add = [&](Stream s, int index, int in, int out, bool relu) {
    if (in <= 0 || out <= 0) fail(ErrorKind::config, "network layer sizes must be positive");
    LayerShape l{s, index, in, out, relu, offset, offset + static_cast<std::size_t>(in) * out};
    offset = l.bias_offset + out;
    layers_.push_back(l);
  };
  int width = arch_.input_dim;
  for (std::size_t i = 0; i < arch_.trunk.size(); ++i) {
    add(Stream::trunk, static_cast<int>(i), width, arch_.trunk[i], true);
    width = arch_.trunk[i];
  }
  trunk_end_ = layers_.size();
  const int shared = width;
  auto add_head = [&](Stream s, const std::vector<int>& hidden, int outputs) {
    int w = shared;
    int idx = 0;
    for (int h : hidden) {
      add(s, idx++, w, h, true);
      w = h;
    }
    add(s, idx, w, outputs, false);
  };
  add_head(Stream::value, arch_.value_hidden, 1);
  value_end_ = layers_.size();
  add_head(Stream::advantage, arch_.advantage_hidden, kOutputs);
  params_.assign(offset, 0.0);
}

DuelingNetwork DuelingNetwork::initialized(const Architecture& arch, Rng& rng) {
  DuelingNetwork net(arch);
  for (const LayerShape& l : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    const std::size_t end = l.bias_offset + l.out;
    for (std::size_t i = l.weight_offset; i < end; ++i) net.params_[i] = uniform(rng, -bound, bound);
  }
  return net;
}

Matrix DuelingNetwork::run_layer(const LayerShape& l, const Matrix& in, Cache* cache) const {
  ConstMap w(params_.data() + l.weight_offset, l.out, l.in);
  ConstRowMap b(params_.data() + l.bias_offset, l.out);
  Matrix z = in * w.transpose();
  z.rowwise() += b;
  if (cache) {
    cache->inputs.push_back(in);
    cache->preactivations.push_back(z);
  }
  if (l.relu) z = z.cwiseMax(0.0);
  return z;
}

Matrix DuelingNetwork::run_stream(std::size_t first, std::size_t last, Matrix h, Cache* cache) const {
  for (std::size_t i = first; i < last; ++i) h = run_layer(layers_[i], h, cache);
  return h;
}

Matrix DuelingNetwork::forward_batch(const Matrix& features) const {
  Cache* none = nullptr;
  if (features.cols() != arch_.input_dim) {
    fail(ErrorKind::usage, "feature length " + std::to_string(features.cols()) +
                               " does not match network input " + std::to_string(arch_.input_dim));
  }
  const Matrix h = run_stream(0, trunk_end_, features, none);
  const Matrix v = run_stream(trunk_end_, value_end_, h, none);
  const Matrix a = run_stream(value_end_, layers_.size(), h, none);
  Matrix q = a;
  const Eigen::VectorXd mean = a.rowwise().mean();
  for (Eigen::Index r = 0; r < q.rows(); ++r) q.row(r).array() += v(r, 0) - mean(r);
  return q;
}

Matrix DuelingNetwork::forward_batch(const Matrix& features, Cache& cache) const {
  if (features.cols() != arch_.input_dim) {
    fail(ErrorKind::usage, "feature length " + std::to_string(features.cols()) +
                               " does not match network input " + std::to_string(arch_.input_dim));
  }
  cache = Cache{};
  cache.inputs.reserve(layers_.size());
  cache.preactivations.reserve(layers_.size());
  const Matrix h = run_stream(0, trunk_end_, features, &cache);
  cache.value = run_stream(trunk_end_, value_end_, h, &cache);
  cache.advantage = run_stream(value_end_, layers_.size(), h, &cache);
  Matrix q = cache.advantage;
  const Eigen::VectorXd mean = cache.advantage.rowwise().mean();
  for (Eigen::Index r = 0; r < q.rows(); ++r) q.row(r).array() += cache.value(r, 0) - mean(r);
  return q;
}

QValues DuelingNetwork::forward(std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(arch_.input_dim)) {
    fail(ErrorKind::usage, "feature length " + std::to_string(features.size()) +
                               " does not match network input " + std::to_string(arch_.input_dim));
  }
  Matrix x = Eigen::Map<const Matrix>(features.data(), 1, arch_.input_dim);
  const Matrix q = forward_batch(x);
  QValues out{};
  for (int j = 0; j < kOutputs; ++j) out[j] = q(0, j);
  return out;
}

std::vector<double> DuelingNetwork::backward(const Cache& cache, const Matrix& dq) const {
  if (cache.inputs.size() != layers_.size()) fail(ErrorKind::usage, "backward needs a cached forward pass");
  std::vector<double> grads(params_.size(), 0.0);

  auto back_stream = [&](std::size_t first, std::size_t last, Matrix d_out) {
    for (std::size_t i = last; i-- > first;) {
      const LayerShape& l = layers_[i];
      Matrix dz = std::move(d_out);
      if (l.relu) dz = dz.cwiseProduct((cache.preactivations[i].array() > 0.0).cast<double>().matrix());
      MutMap dw(grads.data() + l.weight_offset, l.out, l.in);
      MutRowMap db(grads.data() + l.bias_offset, l.out);
      dw.noalias() += dz.transpose() * cache.inputs[i];
      db += dz.colwise().sum();
      ConstMap w(params_.data() + l.weight_offset, l.out, l.in);
      d_out = dz * w;
    }
    return d_out;
  };

  const Eigen::VectorXd row_sum = dq.rowwise().sum();
  Matrix d_value = row_sum;
  Matrix d_adv = dq;
  for (Eigen::Index r = 0; r < d_adv.rows(); ++r) d_adv.row(r).array() -= row_sum(r) / kOutputs;

  Matrix d_shared = back_stream(trunk_end_, value_end_, d_value);
  d_shared += back_stream(value_end_, layers_.size(), d_adv);
  back_stream(0, trunk_end_, d_shared);
  return grads;
}

QValues aggregate(double value, const QValues& advantage) {
  double mean = 0.0;
  for (double a : advantage) mean += a;
  mean /= kOutputs;
  QValues q{};
  for (int j = 0; j < kOutputs; ++j) q[j] = value + (advantage[j] - mean);
  return q;
}

double huber(double x, double delta) {
  const double ax = std::abs(x);
  return ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
}

double huber_grad(double x, double delta) { return std::clamp(x, -delta, delta); }

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

void Adam::reset() {
  t_ = 0;
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    fail(ErrorKind::usage, "optimiser state does not match the parameter count");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

}  // namespace uavtl::agent
