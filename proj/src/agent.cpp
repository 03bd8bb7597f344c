#include "uavtl/agent.hpp"

#include <algorithm>
#include <cmath>

#include "uavtl/error.hpp"

namespace uavtl::agent {

double epsilon_at(const ExplorationSchedule& s, long t) {
  return s.eps_end + (s.eps_start - s.eps_end) * std::exp(-static_cast<double>(t) / s.decay_rate);
}

double ExplorationSchedule::epsilon() const { return epsilon_at(*this, t); }

double update_epsilon(ExplorationSchedule& s) {
  const double eps = s.epsilon();
  ++s.t;
  return eps;
}

int greedy_action(const QValues& q) {
  int best = 0;
  for (int j = 1; j < kOutputs; ++j)
    if (q[j] > q[best]) best = j;
  return best;
}

int act_epsilon_greedy(const QValues& q, double eps, Rng& rng) {
  if (uniform01(rng) < eps) return static_cast<int>(uniform_index(rng, kOutputs));
  return greedy_action(q);
}

double n_step_return(std::span<const double> rewards, double gamma, double bootstrap, bool terminated) {
  if (rewards.empty()) fail(ErrorKind::usage, "n-step return needs at least one reward");
  double g = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    g += discount * r;
    discount *= gamma;
  }
  if (!terminated) g += discount * bootstrap;
  return g;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int n_step, double gamma)
    : capacity_(capacity), n_(n_step), gamma_(gamma) {
  if (capacity_ == 0) fail(ErrorKind::config, "replay capacity must be positive");
  if (n_ < 1) fail(ErrorKind::config, "n_step must be at least 1");
  ring_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(std::span<const double> state, int action, double reward,
                        std::span<const double> next_state, bool terminal, bool episode_end) {
  staging_.push_back(Staged{std::vector<double>(state.begin(), state.end()), action, reward});
  if (terminal || episode_end) {
    while (!staging_.empty()) emit(staging_.size(), next_state, terminal);
  } else if (staging_.size() == static_cast<std::size_t>(n_)) {
    emit(staging_.size(), next_state, false);
  }
}

void ReplayBuffer::emit(std::size_t count, std::span<const double> next_state, bool terminal) {
  std::vector<double> rewards(count);
  for (std::size_t j = 0; j < count; ++j) rewards[j] = staging_[j].reward;
  NStepRecord rec;
  rec.state = std::move(staging_.front().state);
  rec.action = staging_.front().action;
  rec.return_sum = n_step_return(rewards, gamma_, 0.0, true);
  rec.steps = static_cast<int>(count);
  rec.terminal = terminal;
  rec.next_state.assign(next_state.begin(), next_state.end());
  staging_.pop_front();

  if (ring_.size() < capacity_) {
    ring_.push_back(std::move(rec));
  } else {
    ring_[head_] = std::move(rec);
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++emitted_;
}

const NStepRecord& ReplayBuffer::record(std::size_t i) const {
  if (i >= size_) fail(ErrorKind::usage, "replay index out of range");
  if (size_ < capacity_) return ring_[i];
  return ring_[(head_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (size_ == 0) fail(ErrorKind::usage, "cannot sample an empty replay buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = static_cast<std::size_t>(uniform_index(rng, size_));
  return idx;
}

namespace {

Matrix stack_rows(std::span<const NStepRecord* const> batch, bool next) {
  const std::size_t dim = next ? batch.front()->next_state.size() : batch.front()->state.size();
  Matrix m(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& v = next ? batch[i]->next_state : batch[i]->state;
    if (v.size() != dim) fail(ErrorKind::usage, "inconsistent feature lengths in batch");
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  return m;
}

}  // namespace

std::vector<double> double_q_target(std::span<const NStepRecord* const> batch,
                                    const DuelingNetwork& online, const DuelingNetwork& target,
                                    double gamma) {
  std::vector<double> y(batch.size());
  if (batch.empty()) return y;
  const Matrix next = stack_rows(batch, true);
  const Matrix q_online = online.forward_batch(next);
  const Matrix q_target = target.forward_batch(next);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const NStepRecord& r = *batch[i];
    if (r.terminal) {
      y[i] = r.return_sum;
      continue;
    }
    const auto row = static_cast<Eigen::Index>(i);
    int best = 0;
    for (int j = 1; j < kOutputs; ++j)
      if (q_online(row, j) > q_online(row, best)) best = j;
    y[i] = r.return_sum + std::pow(gamma, r.steps) * q_target(row, best);
  }
  return y;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorKind::config, "learning_rate must be positive");
  if (batch_size < 1) fail(ErrorKind::config, "batch_size must be positive");
  if (target_sync < 1) fail(ErrorKind::config, "target_sync must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorKind::config, "gamma must lie in (0, 1]");
  if (n_step < 1) fail(ErrorKind::config, "n_step must be positive");
  if (buffer_capacity < 1) fail(ErrorKind::config, "buffer_capacity must be positive");
  if (learning_starts < 1) fail(ErrorKind::config, "learning_starts must be positive");
  if (train_every < 1) fail(ErrorKind::config, "train_every must be positive");
  if (!(huber_delta > 0.0)) fail(ErrorKind::config, "huber_delta must be positive");
  const auto& e = exploration;
  if (!(e.eps_end >= 0.0 && e.eps_end <= e.eps_start && e.eps_start <= 1.0))
    fail(ErrorKind::config, "exploration must satisfy 0 <= eps_end <= eps_start <= 1");
  if (!(e.decay_rate > 0.0)) fail(ErrorKind::config, "exploration decay_rate must be positive");
}

DqnAgent::DqnAgent(const TrainConfig& cfg, std::uint64_t seed)
    : DqnAgent(cfg, [&] {
        Rng init(derive_seed(seed, 0));
        return DuelingNetwork::initialized(cfg.architecture, init);
      }(), seed) {}

DqnAgent::DqnAgent(const TrainConfig& cfg, DuelingNetwork initial, std::uint64_t seed)
    : cfg_(cfg),
      online_(std::move(initial)),
      target_(online_),
      adam_(online_.parameter_count(), cfg.learning_rate),
      replay_(cfg.buffer_capacity, cfg.n_step, cfg.gamma),
      exploration_(cfg.exploration),
      rng_(derive_seed(seed, 1)) {
  cfg_.validate();
  if (!(online_.architecture() == cfg_.architecture))
    fail(ErrorKind::load, "initial network does not match the configured architecture");
}

QValues DqnAgent::q_values(std::span<const double> features) {
  ++work_.forward;
  return online_.forward(features);
}

int DqnAgent::act(std::span<const double> features, double eps) {
  return act_epsilon_greedy(q_values(features), eps, rng_);
}

double batch_loss(const DuelingNetwork& net, const Matrix& states, std::span<const int> actions,
                  std::span<const double> targets, double delta) {
  const Matrix q = net.forward_batch(states);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i) loss += huber(q(i, actions[i]) - targets[i], delta);
  return loss / static_cast<double>(q.rows());
}

std::vector<double> batch_loss_gradient(const DuelingNetwork& net, const Matrix& states,
                                        std::span<const int> actions,
                                        std::span<const double> targets, double delta) {
  DuelingNetwork::Cache cache;
  const Matrix q = net.forward_batch(states, cache);
  Matrix dq = Matrix::Zero(q.rows(), q.cols());
  const double inv = 1.0 / static_cast<double>(q.rows());
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    dq(i, actions[i]) = huber_grad(q(i, actions[i]) - targets[i], delta) * inv;
  return net.backward(cache, dq);
}

double DqnAgent::train_step(std::span<const NStepRecord* const> batch) {
  if (batch.empty()) fail(ErrorKind::usage, "train_step needs a non-empty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const std::vector<double> targets = double_q_target(batch, online_, target_, cfg_.gamma);

  const Matrix states = stack_rows(batch, false);
  DuelingNetwork::Cache cache;
  const Matrix q = online_.forward_batch(states, cache);
  Matrix dq = Matrix::Zero(b, kOutputs);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int a = batch[static_cast<std::size_t>(i)]->action;
    const double delta = q(i, a) - targets[static_cast<std::size_t>(i)];
    loss += huber(delta, cfg_.huber_delta);
    dq(i, a) = huber_grad(delta, cfg_.huber_delta) / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);
  work_.forward += 3 * static_cast<std::uint64_t>(b);
  if (!std::isfinite(loss)) fail(ErrorKind::training, "non-finite loss in train_step");

  const std::vector<double> grads = online_.backward(cache, dq);
  work_.backward += static_cast<std::uint64_t>(b);
  adam_.step(online_.parameters(), grads);
  ++train_steps_;
  if (train_steps_ % cfg_.target_sync == 0) sync_target();
  return loss;
}

double DqnAgent::train_from_replay() {
  const auto idx = replay_.sample_indices(static_cast<std::size_t>(cfg_.batch_size), rng_);
  std::vector<const NStepRecord*> batch;
  batch.reserve(idx.size());
  for (auto i : idx) batch.push_back(&replay_.record(i));
  return train_step(batch);
}

void DqnAgent::sync_target() { target_ = online_; }

void DqnAgent::reset_optimizer() { adam_.reset(); }

}  // namespace uavtl::agent
