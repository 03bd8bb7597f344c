#include "uavtl/transfer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support/tasks.hpp"
#include "support/test_util.hpp"
#include "uavtl/checkpoint.hpp"

namespace uavtl::transfer {
namespace {

using uavtl::testing::throws_error;
using uavtl::testing::tiny_task;
using uavtl::testing::tiny_train_config;

TrainingSettings tiny_settings(int episodes) {
  TrainingSettings s;
  s.max_episodes = episodes;
  s.convergence_window = 10;
  s.patience = episodes;
  return s;
}

TEST(Convergence, ConstantSeriesConvergesAtTheWindow) {
  const std::vector<double> r(50, 3.0);
  EXPECT_EQ(convergence_episode(r, 10, 3.0), 10);
  EXPECT_EQ(convergence_episode(r, 10, 3.5), std::nullopt);
  EXPECT_EQ(convergence_episode(std::vector<double>(5, 9.0), 10, 0.0), std::nullopt);
  EXPECT_TRUE(throws_error(ErrorKind::usage, "window", [&] { convergence_episode(r, 0, 0); }));
}

TEST(Convergence, MatchesWindowScanOracle) {
  Rng rng(19);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 120));
    const int w = 1 + static_cast<int>(uniform_index(rng, 30));
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = uniform(rng, -5, 5) + 0.05 * i;
    const double th = uniform(rng, -1, 3);
    std::optional<int> want;
    for (int e = w; e <= n && !want; ++e) {
      const double mean = std::accumulate(r.begin() + (e - w), r.begin() + e, 0.0) / w;
      if (mean >= th) want = e;
    }
    EXPECT_EQ(convergence_episode(r, w, th), want);
  }
}

TEST(Convergence, SuccessRateWindow) {
  std::vector<bool> s(30, false);
  for (int i = 10; i < 30; ++i) s[static_cast<std::size_t>(i)] = true;
  EXPECT_EQ(success_episode(s, 10, 0.95), 20);
  EXPECT_EQ(success_episode(s, 10, 0.5), 15);
  EXPECT_EQ(success_episode(std::vector<bool>(30, false), 10, 0.95), std::nullopt);
}

TEST(Ratios, PublishedWattHourExamples) {
  EXPECT_NEAR(savings_percent(2.34, 1.62), 30.769230769230766, 1e-9);
  EXPECT_NEAR(savings_percent(2.15, 0.89), 58.604651162790695, 1e-9);
  EXPECT_NEAR(normalization_factor(604800.0), 1.0e6 / 604800.0, 1e-15);
  EXPECT_NEAR(normalization_factor(604800.0), 1.6534, 1e-4);
  const double t[] = {2.0, 1.0, 3.0}, e[] = {4.0, 2.0, 4.0}, a[] = {1e6, 1e6, 4e6};
  const Ratios r = efficiency_ratios(t, e, a);
  EXPECT_EQ(r.eta_time, (std::vector<double>{1.0, 0.5, 1.5}));
  EXPECT_EQ(r.eta_energy, (std::vector<double>{1.0, 0.5, 1.0}));
  EXPECT_EQ(r.normalized_energy_j, (std::vector<double>{4.0, 2.0, 1.0}));
  const double zero[] = {0.0}, one[] = {1e6};
  EXPECT_TRUE(throws_error(ErrorKind::data, "base environment", [&] { efficiency_ratios(zero, zero, one); }));
  EXPECT_TRUE(throws_error(ErrorKind::data, "zero baseline", [] { savings_percent(0.0, 1.0); }));
}

TEST(Training, ZeroEpisodesGivesAnEmptyRecord) {
  const auto task = tiny_task("T");
  auto agent = make_scratch_agent(tiny_train_config(), 1);
  EnergyMeter meter;
  const TrainingRecord rec = train_environment(task, agent, tiny_settings(0), meter, 2);
  EXPECT_EQ(rec.episodes_run, 0);
  EXPECT_TRUE(rec.episode_reward.empty());
  EXPECT_EQ(rec.episodes_to_convergence, std::nullopt);
  EXPECT_EQ(rec.energy_j, 0.0);
}

TEST(Training, SmallGridIsSolved) {
  const auto task = tiny_task("T");
  auto agent = make_scratch_agent(tiny_train_config(), 3);
  EnergyMeter meter;
  const TrainingRecord rec = train_environment(task, agent, tiny_settings(50), meter, 4);
  ASSERT_EQ(rec.episodes_run, 50);
  ASSERT_TRUE(rec.episodes_to_95_success.has_value());
  EXPECT_LE(*rec.episodes_to_95_success, 50);
  int late = 0;
  for (int i = 40; i < 50; ++i) late += rec.episode_success[static_cast<std::size_t>(i)] ? 1 : 0;
  EXPECT_EQ(late, 10);
}

TEST(Training, EnergyAccountingIsConsistent) {
  const auto task = tiny_task("T", 4);
  auto agent = make_scratch_agent(tiny_train_config(), 5);
  EnergyMeter meter;
  const TrainingRecord rec = train_environment(task, agent, tiny_settings(30), meter, 6);
  const double sum = std::accumulate(rec.episode_energy_j.begin(), rec.episode_energy_j.end(), 0.0);
  EXPECT_NEAR(sum, rec.energy_j, 1e-9 * rec.energy_j);
  EXPECT_DOUBLE_EQ(rec.energy_j, meter.proxy_energy_j(rec.work));
  EXPECT_DOUBLE_EQ(rec.time_s, meter.proxy_time_s(rec.work));
  const long steps = std::accumulate(rec.episode_steps.begin(), rec.episode_steps.end(), 0L);
  EXPECT_EQ(rec.work.env_steps, static_cast<std::uint64_t>(steps));
  EXPECT_EQ(rec.work.forward, agent.work().forward);
  EXPECT_EQ(rec.work.backward, agent.work().backward);
  for (double e : rec.episode_energy_j) EXPECT_GT(e, 0.0);
}

TEST(Meter, CountersOnlyGrow) {
  EnergyMeter meter;
  const auto s0 = meter.snapshot();
  meter.add({3, 1, 2});
  const auto s1 = meter.snapshot();
  meter.add({0, 0, 0});
  const auto s2 = meter.snapshot();
  const MeterCoefficients c;
  EXPECT_DOUBLE_EQ(meter.energy_j(s0, s1), 3 * c.c_fwd + c.c_bwd + 2 * c.c_env);
  EXPECT_DOUBLE_EQ(meter.time_s(s0, s1), 3 * c.t_fwd + c.t_bwd + 2 * c.t_env);
  EXPECT_EQ(meter.energy_j(s1, s2), 0.0);
  EXPECT_GE(meter.energy_j(s0, s2), meter.energy_j(s0, s1));
  EXPECT_TRUE(throws_error(ErrorKind::config, "non-negative", [] { EnergyMeter(MeterMode::proxy, {-1, 0, 0, 0, 0, 0}); }));
}

ContinuousConfig chain_config(MeterCoefficients coeffs = {}) {
  ContinuousConfig cfg;
  cfg.train = tiny_train_config();
  cfg.settings = tiny_settings(20);
  cfg.coefficients = coeffs;
  cfg.seed = 7;
  return cfg;
}

TEST(Continuous, SingleEnvironmentHasUnitRatios) {
  const std::vector<EnvironmentTask> envs{tiny_task("A")};
  const TransferReport r = run_continuous(envs, chain_config());
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.ratios.eta_time, std::vector<double>{1.0});
  EXPECT_EQ(r.ratios.eta_energy, std::vector<double>{1.0});
}

TEST(Continuous, CheckpointChainLinksEnvironments) {
  const std::vector<EnvironmentTask> envs{tiny_task("A"), tiny_task("B", 4), tiny_task("C", 3, [](int c, int) { return c * 0.3; })};
  const TransferReport r = run_continuous(envs, chain_config());
  ASSERT_EQ(r.records.size(), 3u);
  ASSERT_EQ(r.final_checkpoints.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) EXPECT_EQ(r.initial_checkpoints[i], r.final_checkpoints[i - 1]);
  EXPECT_NE(r.initial_checkpoints[0], r.final_checkpoints[0]);
  EXPECT_EQ(r.ratios.eta_energy.size(), 3u);
  EXPECT_EQ(r.ratios.eta_energy[0], 1.0);
}

TEST(Continuous, RatiosAreInvariantToMeterScale) {
  const std::vector<EnvironmentTask> envs{tiny_task("A"), tiny_task("B", 4)};
  const TransferReport base = run_continuous(envs, chain_config());
  for (double k : {4.0, 3.7, 1e-3}) {
    MeterCoefficients c;
    c.c_fwd *= k, c.c_bwd *= k, c.c_env *= k, c.t_fwd *= k, c.t_bwd *= k, c.t_env *= k;
    const TransferReport scaled = run_continuous(envs, chain_config(c));
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(scaled.ratios.eta_energy[i], base.ratios.eta_energy[i], 1e-12) << k;
      EXPECT_NEAR(scaled.ratios.eta_time[i], base.ratios.eta_time[i], 1e-12) << k;
      EXPECT_EQ(scaled.records[i].episode_reward, base.records[i].episode_reward);
    }
  }
}

TEST(Continuous, RunsAreDeterministic) {
  const std::vector<EnvironmentTask> envs{tiny_task("A"), tiny_task("B", 4)};
  const TransferReport a = run_continuous(envs, chain_config());
  const TransferReport b = run_continuous(envs, chain_config());
  EXPECT_EQ(a.final_checkpoints, b.final_checkpoints);
  EXPECT_EQ(a.records[1].episode_reward, b.records[1].episode_reward);
}

TEST(InitFromBase, GreedyPolicyIsPreserved) {
  Rng rng(12);
  const auto tc = tiny_train_config();
  const auto base = agent::DuelingNetwork::initialized(tc.architecture, rng);
  TrainingSettings ts;
  agent::DqnAgent tl = init_from_base(base, tc, ts, 99);
  EXPECT_TRUE(tl.online() == base);
  EXPECT_TRUE(tl.target() == base);
  EXPECT_EQ(tl.exploration().eps_start, ts.eps_start_transfer);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(29);
    for (auto& v : x) v = uniform01(rng);
    EXPECT_EQ(agent::greedy_action(tl.q_values(x)), agent::greedy_action(base.forward(x)));
  }
  auto other = tc;
  other.architecture.trunk = {12};
  EXPECT_TRUE(throws_error(ErrorKind::load, "architecture mismatch", [&] { init_from_base(base, other, ts, 1); }));
}

TEST(Training, FeatureLengthMustMatchTheNetwork) {
  auto task = tiny_task("T");
  task.mission.patch_size = 3;
  auto agent = make_scratch_agent(tiny_train_config(), 1);
  EnergyMeter meter;
  EXPECT_TRUE(throws_error(ErrorKind::load, "features", [&] { train_environment(task, agent, tiny_settings(1), meter, 1); }));
}

TEST(Comparison, ArmsShareEnvironmentStreams) {
  const std::vector<EnvironmentTask> envs{tiny_task("A"), tiny_task("B", 4)};
  const std::uint64_t seeds[] = {1, 2};
  const Comparison c = run_comparison(envs, chain_config(), seeds, 1);
  ASSERT_EQ(c.runs.size(), 6u);
  EXPECT_FALSE(c.partial);
  EXPECT_EQ(c.runs[0].env_index, 0u);
  EXPECT_FALSE(c.runs[1].transfer);
  EXPECT_TRUE(c.runs[2].transfer);
  const Comparison threaded = run_comparison(envs, chain_config(), seeds, 2);
  for (std::size_t i = 0; i < c.runs.size(); ++i)
    EXPECT_EQ(threaded.runs[i].record.episode_reward, c.runs[i].record.episode_reward);
}

}  // namespace
}  // namespace uavtl::transfer
