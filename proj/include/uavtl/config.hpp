#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavtl/agent.hpp"
#include "uavtl/mdp.hpp"
#include "uavtl/propagation.hpp"
#include "uavtl/radiomap.hpp"
#include "uavtl/transfer.hpp"

namespace uavtl::config {

using Json = nlohmann::json;

struct MissionParams {
  int s_max = 200;
  double v_max_mps = 20.0;
  double dt_s = 2.0;
  double w1 = 1.0;
  double w2 = 2.0;
  double p_outbound = 1.0;
  double p_reach = 100.0;
  double reach_radius_m = 0.0;
  double objective_w1 = 1.0;
  double objective_w2 = 2.0;
  double outage_event_threshold = 0.5;
  int patch_size = 5;
  int users = 40;
  double gamma_user_db = 30.0;
  double uav_tx_power_dbm = 30.0;
};

enum class SourceKind { preset, outage_file, grid_file };

struct EnvironmentEntry {
  std::string id;
  SourceKind kind = SourceKind::preset;
  std::string preset;
  Json generator_overrides = Json::object();
  std::uint64_t seed = 1;
  std::string path;                     // outage or grid file, resolved
  std::optional<double> gamma_th_db;    // grid files
  std::optional<int> target_cols;       // grid files
  std::optional<int> target_rows;
  double uav_altitude_m = 100.0;        // file sources
  Rect launch_frac{0.0, 0.0, 0.2, 0.2}; // file sources
  Rect target_frac{0.6, 0.6, 0.9, 0.9};
  double convergence_threshold = 0.0;
  Json mission_overrides = Json::object();
  std::optional<double> learning_rate;
  std::optional<double> eps_start;
  std::optional<double> eps_start_transfer;
};

struct RunConfig {
  propagation::ChannelParams channel;
  propagation::AntennaPattern antenna;
  double gamma_th_db = 0.0;
  MissionParams mission;
  agent::TrainConfig train;
  transfer::TrainingSettings settings;
  transfer::MeterMode meter_mode = transfer::MeterMode::proxy;
  transfer::MeterCoefficients coefficients;
  std::vector<EnvironmentEntry> environments;
  std::vector<std::uint64_t> seeds{1};
  int jobs = 1;
  std::string output_dir = "out";
};

RunConfig parse_run_config(const Json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

propagation::ChannelParams parse_channel(const Json& j);
propagation::AntennaPattern parse_antenna(const Json& j, propagation::AntennaPattern base = {});
propagation::GeneratorConfig parse_generator(const Json& overrides, propagation::GeneratorConfig base);
MissionParams parse_mission(const Json& j, MissionParams base = {});
agent::TrainConfig parse_agent(const Json& j, agent::TrainConfig base = {});

Json to_json(const propagation::EnvironmentSpec& env);

// Everything derived from an entry: the synthesized environment (presets
// only), its SINR map (presets and grid files) and the outage map.
struct BuiltEnvironment {
  std::optional<propagation::EnvironmentSpec> spec;
  std::optional<radiomap::SinrGrid> sinr;
  radiomap::OutageMap outage;
  Rect launch_area;
  Rect target_area;
  double uav_altitude_m = 100.0;
};

BuiltEnvironment build_environment(const EnvironmentEntry& entry, const RunConfig& cfg);
transfer::EnvironmentTask make_task(const EnvironmentEntry& entry, const BuiltEnvironment& built,
                                    const RunConfig& cfg);
std::vector<transfer::EnvironmentTask> make_tasks(const RunConfig& cfg);

// Grid-file ingestion pipeline: fill, rescale, convert.
radiomap::OutageMap ingest(const radiomap::RawGrid& raw, double gamma_th_db,
                           std::optional<int> target_cols, std::optional<int> target_rows);

transfer::ContinuousConfig continuous_config(const RunConfig& cfg, std::uint64_t seed);

}  // namespace uavtl::config
