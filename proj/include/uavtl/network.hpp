#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uavtl/random.hpp"

namespace uavtl::agent {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kOutputs = 4;
using QValues = std::array<double, kOutputs>;

struct Architecture {
  int input_dim = 29;
  std::vector<int> trunk{128, 128};
  std::vector<int> value_hidden{64};
  std::vector<int> advantage_hidden{64};

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

enum class Stream { trunk, value, advantage };

struct LayerShape {
  Stream stream = Stream::trunk;
  int index = 0;  // position within its stream
  int in = 0;
  int out = 0;
  bool relu = true;
  std::size_t weight_offset = 0;  // out x in, row-major
  std::size_t bias_offset = 0;

  std::string name() const;
};

// Dueling Q-network: a rectified trunk shared by a value head (-> 1) and an
// advantage head (-> 4), combined as Q = V + (A - mean A). Parameters live in
// one flat vector so optimiser state, target copies, and checkpoints are
// plain array operations.
class DuelingNetwork {
 public:
  struct Cache {
    std::vector<Matrix> inputs;       // per layer, the matrix it consumed
    std::vector<Matrix> preactivations;
    Matrix value;      // B x 1
    Matrix advantage;  // B x 4
  };

  DuelingNetwork() = default;
  explicit DuelingNetwork(Architecture arch);

  // Uniform fan-in initialisation: U(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
  static DuelingNetwork initialized(const Architecture& arch, Rng& rng);

  const Architecture& architecture() const { return arch_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  QValues forward(std::span<const double> features) const;
  Matrix forward_batch(const Matrix& features) const;
  Matrix forward_batch(const Matrix& features, Cache& cache) const;

  // Gradient of sum(dq .* Q) with respect to every parameter, in the flat layout.
  std::vector<double> backward(const Cache& cache, const Matrix& dq) const;

  friend bool operator==(const DuelingNetwork& a, const DuelingNetwork& b) {
    return a.arch_ == b.arch_ && a.params_ == b.params_;
  }

 private:
  Matrix run_layer(const LayerShape& l, const Matrix& in, Cache* cache) const;
  Matrix run_stream(std::size_t first, std::size_t last, Matrix h, Cache* cache) const;

  Architecture arch_;
  std::vector<LayerShape> layers_;
  std::size_t trunk_end_ = 0;
  std::size_t value_end_ = 0;
  std::vector<double> params_;
};

// Aggregates the two heads: Q_j = V + A_j - mean(A).
QValues aggregate(double value, const QValues& advantage);

double huber(double x, double delta = 1.0);
double huber_grad(double x, double delta = 1.0);

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grads);
  void reset();
  long steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace uavtl::agent
