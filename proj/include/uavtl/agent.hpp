#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "uavtl/mdp.hpp"
#include "uavtl/network.hpp"
#include "uavtl/random.hpp"

namespace uavtl::agent {

struct ExplorationSchedule {
  double eps_start = 1.0;
  double eps_end = 0.05;
  double decay_rate = 100.0;  // in episodes
  long t = 0;

  double epsilon() const;
};

double epsilon_at(const ExplorationSchedule& s, long t);
// Returns epsilon for the current t and advances the schedule by one.
double update_epsilon(ExplorationSchedule& s);

// Lowest index wins ties.
int greedy_action(const QValues& q);
int act_epsilon_greedy(const QValues& q, double eps, Rng& rng);

// sum_{j<k} gamma^j r_j + (terminated ? 0 : gamma^k * bootstrap)
double n_step_return(std::span<const double> rewards, double gamma, double bootstrap, bool terminated);

struct NStepRecord {
  std::vector<double> state;
  int action = 0;
  double return_sum = 0.0;  // discounted rewards of the k staged steps
  int steps = 0;            // k = min(n, steps to episode end)
  bool terminal = false;    // the episode terminated (not truncated) within k
  std::vector<double> next_state;
};

// Ring buffer of n-step records. Transitions are staged until n rewards are
// known; at episode end the remaining partial records are flushed.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int n_step, double gamma);

  // terminal: the MDP terminated (no bootstrap); episode_end: terminal or truncated.
  void push(std::span<const double> state, int action, double reward,
            std::span<const double> next_state, bool terminal, bool episode_end);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t staged() const { return staging_.size(); }
  std::size_t total_emitted() const { return emitted_; }
  int n_step() const { return n_; }
  double gamma() const { return gamma_; }

  // Most recently emitted record has index size()-1.
  const NStepRecord& record(std::size_t i) const;
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

 private:
  struct Staged {
    std::vector<double> state;
    int action;
    double reward;
  };
  void emit(std::size_t count, std::span<const double> next_state, bool terminal);

  std::size_t capacity_;
  int n_;
  double gamma_;
  std::vector<NStepRecord> ring_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  std::size_t emitted_ = 0;
  std::deque<Staged> staging_;
};

// y = G + gamma^k * Q_target(s', argmax_a Q_online(s', a)), or y = G when terminal.
std::vector<double> double_q_target(std::span<const NStepRecord* const> batch,
                                    const DuelingNetwork& online, const DuelingNetwork& target,
                                    double gamma);

struct TrainConfig {
  Architecture architecture;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int target_sync = 500;
  double gamma = 0.99;
  int n_step = 3;
  std::size_t buffer_capacity = 100000;
  int learning_starts = 64;  // minimum buffered records before updates start
  int train_every = 1;       // environment steps per gradient update
  double huber_delta = 1.0;
  ExplorationSchedule exploration;

  void validate() const;
};

// Work done by the learner, counted per sample.
struct WorkCounters {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
};

class DqnAgent {
 public:
  DqnAgent(const TrainConfig& cfg, std::uint64_t seed);
  // Starts from given online parameters; the target network is a copy.
  DqnAgent(const TrainConfig& cfg, DuelingNetwork initial, std::uint64_t seed);

  const TrainConfig& config() const { return cfg_; }
  const DuelingNetwork& online() const { return online_; }
  const DuelingNetwork& target() const { return target_; }
  DuelingNetwork& mutable_online() { return online_; }
  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  ExplorationSchedule& exploration() { return exploration_; }
  const WorkCounters& work() const { return work_; }
  long train_steps() const { return train_steps_; }
  Rng& rng() { return rng_; }

  QValues q_values(std::span<const double> features);
  int act(std::span<const double> features, double eps);

  // One Huber-loss gradient step on the given records followed by a target
  // sync every target_sync steps. Returns the mean loss of the batch before
  // the update.
  double train_step(std::span<const NStepRecord* const> batch);
  // Samples a batch from the replay buffer and trains on it.
  double train_from_replay();
  void sync_target();
  void reset_optimizer();

 private:
  TrainConfig cfg_;
  DuelingNetwork online_;
  DuelingNetwork target_;
  Adam adam_;
  ReplayBuffer replay_;
  ExplorationSchedule exploration_;
  Rng rng_;
  WorkCounters work_;
  long train_steps_ = 0;
};

// Mean Huber loss of Q(s, a) against fixed targets, used by gradient checks.
double batch_loss(const DuelingNetwork& net, const Matrix& states, std::span<const int> actions,
                  std::span<const double> targets, double delta);
// Analytic gradient of batch_loss.
std::vector<double> batch_loss_gradient(const DuelingNetwork& net, const Matrix& states,
                                        std::span<const int> actions,
                                        std::span<const double> targets, double delta);

}  // namespace uavtl::agent
