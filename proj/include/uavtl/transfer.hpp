#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavtl/agent.hpp"
#include "uavtl/mdp.hpp"
#include "uavtl/propagation.hpp"

namespace uavtl::transfer {

enum class MeterMode { proxy, platform };

struct WorkCount {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
  std::uint64_t env_steps = 0;

  WorkCount operator-(const WorkCount& o) const {
    return {forward - o.forward, backward - o.backward, env_steps - o.env_steps};
  }
  friend bool operator==(const WorkCount&, const WorkCount&) = default;
};

// Per-unit costs. Energy in joules; the time coefficients give the proxy
// duration in seconds used when the meter runs in proxy mode.
struct MeterCoefficients {
  double c_fwd = 2.0e-4;
  double c_bwd = 4.0e-4;
  double c_env = 1.0e-4;
  double t_fwd = 2.0e-6;
  double t_bwd = 4.0e-6;
  double t_env = 1.0e-6;
};

// Training energy meter. Proxy mode prices counted work and is fully
// deterministic; platform mode reads the host's package energy counter
// (Linux powercap) and wall-clock time, and is not reproducible.
class EnergyMeter {
 public:
  struct Snapshot {
    WorkCount work;
    double platform_j = 0.0;
    double wall_s = 0.0;
  };

  explicit EnergyMeter(MeterMode mode = MeterMode::proxy, MeterCoefficients coeffs = {});

  static bool platform_available();

  MeterMode mode() const { return mode_; }
  const MeterCoefficients& coefficients() const { return coeffs_; }
  const WorkCount& counters() const { return counters_; }

  void add(const WorkCount& delta);
  Snapshot snapshot() const;

  double energy_j(const Snapshot& from, const Snapshot& to) const;
  double time_s(const Snapshot& from, const Snapshot& to) const;
  double proxy_energy_j(const WorkCount& w) const;
  double proxy_time_s(const WorkCount& w) const;

 private:
  MeterMode mode_;
  MeterCoefficients coeffs_;
  WorkCount counters_;
  std::string rapl_path_;
};

struct TrainingRecord {
  std::string env_id;
  int episodes_run = 0;
  std::optional<int> episodes_to_convergence;
  std::optional<int> episodes_to_95_success;
  double time_s = 0.0;       // proxy time in proxy mode, wall time in platform mode
  double wall_time_s = 0.0;  // always measured, never part of reproducible reports
  double energy_j = 0.0;
  double area_m2 = 0.0;
  WorkCount work;
  bool failed = false;
  std::string failure;
  std::vector<double> episode_reward;
  std::vector<bool> episode_success;
  std::vector<double> episode_energy_j;
  std::vector<int> episode_steps;
};

// An environment ready for training: a mission template (map, areas and
// reward parameters; users and target are drawn every episode) plus the
// target-selection link model.
struct EnvironmentTask {
  std::string id;
  mdp::MissionSpec mission;
  mdp::TargetSelection selection;
  propagation::ChannelParams channel;
  int user_count = 40;
  double convergence_threshold = 0.0;
  // Per-environment learning rate and exploration overrides.
  std::optional<double> learning_rate;
  std::optional<double> eps_start;
  std::optional<double> eps_start_transfer;

  double area_m2() const { return mission.geometry().width_m() * mission.geometry().height_m(); }
};

struct TrainingSettings {
  int max_episodes = 2000;
  int convergence_window = 100;
  int patience = 200;
  double success_rate = 0.95;
  double eps_start_transfer = 0.3;
};

std::optional<int> convergence_episode(std::span<const double> rewards, int window, double threshold);
std::optional<int> success_episode(const std::vector<bool>& success, int window, double rate);

agent::TrainConfig effective_config(const agent::TrainConfig& base, const EnvironmentTask& task);
TrainingSettings effective_settings(const TrainingSettings& base, const EnvironmentTask& task);

agent::DqnAgent make_scratch_agent(const agent::TrainConfig& cfg, std::uint64_t seed);
// Online and target networks both start from the base parameters; exploration
// restarts at eps_start_transfer and the optimiser moments are fresh.
agent::DqnAgent init_from_base(const agent::DuelingNetwork& base, const agent::TrainConfig& cfg,
                               const TrainingSettings& settings, std::uint64_t seed);

TrainingRecord train_environment(const EnvironmentTask& task, agent::DqnAgent& agent,
                                 const TrainingSettings& settings, EnergyMeter& meter,
                                 std::uint64_t env_seed);

struct Ratios {
  std::vector<double> eta_time;
  std::vector<double> eta_energy;
  std::vector<double> normalized_energy_j;  // energy scaled to a 1000 m x 1000 m area
};

double normalization_factor(double area_m2);
Ratios efficiency_ratios(std::span<const TrainingRecord> records);
Ratios efficiency_ratios(std::span<const double> times, std::span<const double> energies,
                         std::span<const double> areas_m2);
double savings_percent(double scratch, double transfer);

struct TransferReport {
  std::vector<TrainingRecord> records;
  Ratios ratios;
  std::vector<std::vector<std::uint8_t>> initial_checkpoints;
  std::vector<std::vector<std::uint8_t>> final_checkpoints;
  bool aborted = false;
};

struct ContinuousConfig {
  agent::TrainConfig train;
  TrainingSettings settings;
  MeterMode meter_mode = MeterMode::proxy;
  MeterCoefficients coefficients;
  std::uint64_t seed = 1;
};

std::uint64_t agent_seed(std::uint64_t seed, std::size_t env_index, bool transfer_arm);
std::uint64_t environment_seed(std::uint64_t seed, std::size_t env_index);

// Trains the first environment from scratch and every later one from the
// previous environment's final parameters.
TransferReport run_continuous(std::span<const EnvironmentTask> envs, const ContinuousConfig& cfg);

struct ArmRun {
  std::uint64_t seed = 0;
  std::size_t env_index = 0;
  bool transfer = false;
  TrainingRecord record;
};

struct Comparison {
  std::vector<std::string> env_ids;
  std::vector<std::uint64_t> seeds;
  std::vector<ArmRun> runs;  // ordered by seed, then environment, scratch before transfer
  bool partial = false;
};

// For every seed: a continuous transfer chain over all environments, and an
// independent scratch run for each non-base environment with the same
// environment stream.
Comparison run_comparison(std::span<const EnvironmentTask> envs, const ContinuousConfig& cfg,
                          std::span<const std::uint64_t> seeds, int jobs);

}  // namespace uavtl::transfer
