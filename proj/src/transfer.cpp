#include "uavtl/transfer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "uavtl/checkpoint.hpp"
#include "uavtl/error.hpp"

namespace uavtl::transfer {

namespace {

constexpr const char* kRaplCandidates[] = {
    "/sys/class/powercap/intel-rapl:0/energy_uj",
    "/sys/class/powercap/intel-rapl/intel-rapl:0/energy_uj",
};

double read_rapl_j(const std::string& path) {
  std::ifstream in(path);
  double uj = 0.0;
  if (!(in >> uj)) fail(ErrorKind::config, "cannot read platform energy counter '" + path + "'");
  return uj * 1e-6;
}

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

EnergyMeter::EnergyMeter(MeterMode mode, MeterCoefficients coeffs) : mode_(mode), coeffs_(coeffs) {
  if (!(coeffs_.c_fwd >= 0.0 && coeffs_.c_bwd >= 0.0 && coeffs_.c_env >= 0.0 && coeffs_.t_fwd >= 0.0 &&
        coeffs_.t_bwd >= 0.0 && coeffs_.t_env >= 0.0))
    fail(ErrorKind::config, "meter coefficients must be non-negative");
  if (mode_ == MeterMode::platform) {
    for (const char* p : kRaplCandidates) {
      std::ifstream probe(p);
      double v = 0.0;
      if (probe >> v) {
        rapl_path_ = p;
        break;
      }
    }
    if (rapl_path_.empty())
      fail(ErrorKind::config, "platform energy mode requested but no readable powercap counter was found");
  }
}

bool EnergyMeter::platform_available() {
  for (const char* p : kRaplCandidates) {
    std::ifstream probe(p);
    double v = 0.0;
    if (probe >> v) return true;
  }
  return false;
}

void EnergyMeter::add(const WorkCount& delta) {
  counters_.forward += delta.forward;
  counters_.backward += delta.backward;
  counters_.env_steps += delta.env_steps;
}

EnergyMeter::Snapshot EnergyMeter::snapshot() const {
  Snapshot s;
  s.work = counters_;
  if (mode_ == MeterMode::platform) {
    s.platform_j = read_rapl_j(rapl_path_);
    s.wall_s = now_s();
  }
  return s;
}

double EnergyMeter::proxy_energy_j(const WorkCount& w) const {
  return coeffs_.c_fwd * static_cast<double>(w.forward) + coeffs_.c_bwd * static_cast<double>(w.backward) +
         coeffs_.c_env * static_cast<double>(w.env_steps);
}

double EnergyMeter::proxy_time_s(const WorkCount& w) const {
  return coeffs_.t_fwd * static_cast<double>(w.forward) + coeffs_.t_bwd * static_cast<double>(w.backward) +
         coeffs_.t_env * static_cast<double>(w.env_steps);
}

double EnergyMeter::energy_j(const Snapshot& from, const Snapshot& to) const {
  if (mode_ == MeterMode::proxy) return proxy_energy_j(to.work - from.work);
  double d = to.platform_j - from.platform_j;
  return d < 0.0 ? 0.0 : d;  // counter wrapped
}

double EnergyMeter::time_s(const Snapshot& from, const Snapshot& to) const {
  if (mode_ == MeterMode::proxy) return proxy_time_s(to.work - from.work);
  return to.wall_s - from.wall_s;
}

std::optional<int> convergence_episode(std::span<const double> rewards, int window, double threshold) {
  if (window < 1) fail(ErrorKind::usage, "convergence window must be at least 1");
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t end = w; end <= rewards.size(); ++end) {
    double sum = 0.0;
    for (std::size_t j = end - w; j < end; ++j) sum += rewards[j];
    if (sum / window >= threshold) return static_cast<int>(end);
  }
  return std::nullopt;
}

std::optional<int> success_episode(const std::vector<bool>& success, int window, double rate) {
  if (window < 1) fail(ErrorKind::usage, "success window must be at least 1");
  const auto w = static_cast<std::size_t>(window);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < success.size(); ++i) {
    if (success[i]) ++hits;
    if (i >= w && success[i - w]) --hits;
    if (i + 1 >= w && static_cast<double>(hits) >= rate * window) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

agent::TrainConfig effective_config(const agent::TrainConfig& base, const EnvironmentTask& task) {
  agent::TrainConfig cfg = base;
  if (task.learning_rate) cfg.learning_rate = *task.learning_rate;
  if (task.eps_start) cfg.exploration.eps_start = *task.eps_start;
  return cfg;
}

TrainingSettings effective_settings(const TrainingSettings& base, const EnvironmentTask& task) {
  TrainingSettings s = base;
  if (task.eps_start_transfer) s.eps_start_transfer = *task.eps_start_transfer;
  return s;
}

agent::DqnAgent make_scratch_agent(const agent::TrainConfig& cfg, std::uint64_t seed) {
  return agent::DqnAgent(cfg, seed);
}

agent::DqnAgent init_from_base(const agent::DuelingNetwork& base, const agent::TrainConfig& cfg,
                               const TrainingSettings& settings, std::uint64_t seed) {
  agent::require_architecture(base, cfg.architecture);
  agent::TrainConfig tl = cfg;
  tl.exploration.eps_start = settings.eps_start_transfer;
  tl.exploration.eps_end = std::min(tl.exploration.eps_end, settings.eps_start_transfer);
  tl.exploration.t = 0;
  return agent::DqnAgent(tl, base, seed);
}

TrainingRecord train_environment(const EnvironmentTask& task, agent::DqnAgent& agent,
                                 const TrainingSettings& settings, EnergyMeter& meter,
                                 std::uint64_t env_seed) {
  TrainingRecord rec;
  rec.env_id = task.id;
  rec.area_m2 = task.area_m2();
  const int patch = task.mission.patch_size;
  if (mdp::feature_length(patch) != static_cast<std::size_t>(agent.online().architecture().input_dim)) {
    fail(ErrorKind::load, "environment '" + task.id + "' encodes " +
                              std::to_string(mdp::feature_length(patch)) + " features but the network expects " +
                              std::to_string(agent.online().architecture().input_dim));
  }

  Rng env_rng(env_seed);
  const auto& tc = agent.config();
  const auto wall_start = std::chrono::steady_clock::now();
  const EnergyMeter::Snapshot start = meter.snapshot();
  std::vector<double> features(mdp::feature_length(patch));
  std::vector<double> next_features(features.size());
  long total_steps = 0;
  mdp::MissionSpec ms = task.mission;

  try {
    for (int episode = 1; episode <= settings.max_episodes; ++episode) {
      const EnergyMeter::Snapshot ep_start = meter.snapshot();
      ms.users = mdp::sample_users(task.selection.target_area, task.user_count, env_rng);
      ms.target = mdp::select_target(ms.users, ms.geometry(), task.selection, task.channel);
      mdp::EpisodeState es = mdp::start_episode(ms, env_rng);
      const double eps = agent::update_epsilon(agent.exploration());

      mdp::encode_state_into(es, ms, features);
      while (!es.done) {
        const agent::WorkCounters before = agent.work();
        const int action = agent.act(features, eps);
        const mdp::StepResult r = mdp::step(es, static_cast<mdp::Action>(action), ms);
        mdp::encode_state_into(r.state, ms, next_features);
        const bool terminal = r.state.reason == mdp::Termination::reached;
        agent.replay().push(features, action, r.reward, next_features, terminal, r.done);
        ++total_steps;
        if (agent.replay().size() >= static_cast<std::size_t>(tc.learning_starts) &&
            total_steps % tc.train_every == 0) {
          agent.train_from_replay();
        }
        const agent::WorkCounters after = agent.work();
        meter.add({after.forward - before.forward, after.backward - before.backward, 1});
        es = r.state;
        std::swap(features, next_features);
      }

      const EnergyMeter::Snapshot ep_end = meter.snapshot();
      rec.episode_reward.push_back(es.cumulative_reward);
      rec.episode_success.push_back(es.reason == mdp::Termination::reached);
      rec.episode_energy_j.push_back(meter.energy_j(ep_start, ep_end));
      rec.episode_steps.push_back(es.step_count);
      rec.episodes_run = episode;

      if (!rec.episodes_to_convergence) {
        const int w = settings.convergence_window;
        if (episode >= w) {
          double sum = 0.0;
          for (int j = episode - w; j < episode; ++j) sum += rec.episode_reward[static_cast<std::size_t>(j)];
          if (sum / w >= task.convergence_threshold) rec.episodes_to_convergence = episode;
        }
      }
      if (rec.episodes_to_convergence && episode >= *rec.episodes_to_convergence + settings.patience) break;
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::training) throw;
    rec.failed = true;
    rec.failure = e.what();
  }

  const EnergyMeter::Snapshot end = meter.snapshot();
  rec.work = end.work - start.work;
  rec.energy_j = meter.energy_j(start, end);
  rec.time_s = meter.time_s(start, end);
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  rec.episodes_to_convergence =
      convergence_episode(rec.episode_reward, settings.convergence_window, task.convergence_threshold);
  rec.episodes_to_95_success =
      success_episode(rec.episode_success, settings.convergence_window, settings.success_rate);
  return rec;
}

double normalization_factor(double area_m2) {
  if (!(area_m2 > 0.0)) fail(ErrorKind::data, "environment area must be positive for normalisation");
  return 1.0e6 / area_m2;
}

Ratios efficiency_ratios(std::span<const double> times, std::span<const double> energies,
                         std::span<const double> areas_m2) {
  if (times.empty() || times.size() != energies.size() || times.size() != areas_m2.size())
    fail(ErrorKind::usage, "efficiency ratios need matching, non-empty series");
  if (times[0] == 0.0 || energies[0] == 0.0)
    fail(ErrorKind::data, "base environment has zero time or energy; ratios are undefined");
  Ratios r;
  for (std::size_t i = 0; i < times.size(); ++i) {
    r.eta_time.push_back(times[i] / times[0]);
    r.eta_energy.push_back(energies[i] / energies[0]);
    r.normalized_energy_j.push_back(energies[i] * normalization_factor(areas_m2[i]));
  }
  return r;
}

Ratios efficiency_ratios(std::span<const TrainingRecord> records) {
  std::vector<double> t, e, a;
  for (const auto& rec : records) {
    t.push_back(rec.time_s);
    e.push_back(rec.energy_j);
    a.push_back(rec.area_m2);
  }
  return efficiency_ratios(t, e, a);
}

double savings_percent(double scratch, double transfer) {
  if (scratch == 0.0) fail(ErrorKind::data, "savings against a zero baseline are undefined");
  return (1.0 - transfer / scratch) * 100.0;
}

std::uint64_t agent_seed(std::uint64_t seed, std::size_t env_index, bool transfer_arm) {
  return derive_seed(seed, 2 * env_index + (transfer_arm ? 1 : 0));
}

std::uint64_t environment_seed(std::uint64_t seed, std::size_t env_index) {
  return derive_seed(seed, 1000 + env_index);
}

TransferReport run_continuous(std::span<const EnvironmentTask> envs, const ContinuousConfig& cfg) {
  if (envs.empty()) fail(ErrorKind::config, "continuous transfer needs at least one environment");
  TransferReport report;
  EnergyMeter meter(cfg.meter_mode, cfg.coefficients);
  std::optional<agent::DuelingNetwork> previous;
  for (std::size_t i = 0; i < envs.size(); ++i) {
    const agent::TrainConfig tc = effective_config(cfg.train, envs[i]);
    const TrainingSettings ts = effective_settings(cfg.settings, envs[i]);
    agent::DqnAgent agent = previous ? init_from_base(*previous, tc, ts, agent_seed(cfg.seed, i, true))
                                     : make_scratch_agent(tc, agent_seed(cfg.seed, i, false));
    report.initial_checkpoints.push_back(agent::encode_checkpoint(agent.online()));
    TrainingRecord rec = train_environment(envs[i], agent, ts, meter, environment_seed(cfg.seed, i));
    report.final_checkpoints.push_back(agent::encode_checkpoint(agent.online()));
    const bool failed = rec.failed;
    report.records.push_back(std::move(rec));
    if (failed) {
      report.aborted = true;
      break;
    }
    previous = agent.online();
  }
  if (!report.records.front().failed) {
    const bool usable = report.records.front().time_s != 0.0 && report.records.front().energy_j != 0.0;
    if (usable) report.ratios = efficiency_ratios(report.records);
  }
  return report;
}

Comparison run_comparison(std::span<const EnvironmentTask> envs, const ContinuousConfig& cfg,
                          std::span<const std::uint64_t> seeds, int jobs) {
  if (envs.size() < 2) fail(ErrorKind::config, "comparison needs at least two environments");
  if (seeds.empty()) fail(ErrorKind::config, "comparison needs at least one seed");
  Comparison out;
  for (const auto& e : envs) out.env_ids.push_back(e.id);
  out.seeds.assign(seeds.begin(), seeds.end());

  // One job per seed; each job owns its agents and meters.
  std::vector<std::vector<ArmRun>> per_seed(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  auto run_seed = [&](std::size_t s) {
    try {
      const std::uint64_t seed = seeds[s];
      auto& runs = per_seed[s];
      ContinuousConfig chain_cfg = cfg;
      chain_cfg.seed = seed;
      TransferReport chain = run_continuous(envs, chain_cfg);
      for (std::size_t i = 0; i < envs.size(); ++i) {
        if (i > 0) {
          EnergyMeter meter(cfg.meter_mode, cfg.coefficients);
          agent::DqnAgent scratch = make_scratch_agent(effective_config(cfg.train, envs[i]), agent_seed(seed, i, false));
          runs.push_back({seed, i, false,
                          train_environment(envs[i], scratch, effective_settings(cfg.settings, envs[i]),
                                            meter, environment_seed(seed, i))});
        }
        if (i < chain.records.size()) runs.push_back({seed, i, i > 0, chain.records[i]});
      }
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (workers == 1) {
    for (std::size_t s = 0; s < seeds.size(); ++s) run_seed(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < seeds.size(); s = next++) run_seed(s);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& runs : per_seed) {
    for (auto& r : runs) {
      if (r.record.failed) out.partial = true;
      out.runs.push_back(std::move(r));
    }
    if (runs.size() != 2 * envs.size() - 1) out.partial = true;
  }
  return out;
}

}  // namespace uavtl::transfer
