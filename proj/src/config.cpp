#include "uavtl/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

#include "uavtl/error.hpp"

namespace uavtl::config {

namespace {

namespace fs = std::filesystem;

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::config, where + ": expected an object");
}

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require_object(j, where);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) fail(ErrorKind::config, where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::config, where + "." + key + ": wrong value type");
  }
}

template <class T>
void read_opt(const Json& j, const char* key, std::optional<T>& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

void read_rect(const Json& j, const char* key, Rect& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  std::vector<double> v;
  read(j, key, v, where);
  if (v.size() != 4) fail(ErrorKind::config, where + "." + key + ": expected [x0, y0, x1, y1]");
  out = {v[0], v[1], v[2], v[3]};
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base_dir) / path;
  return path.lexically_normal().string();
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

propagation::ChannelParams parse_channel(const Json& j) {
  const std::string where = "channel";
  check_keys(j, where, {"x_los", "x_nlos", "x_los_db", "x_nlos_db", "alpha_los", "alpha_nlos", "noise_dbm", "carrier_hz"});
  propagation::ChannelParams c;
  read(j, "x_los", c.x_los, where);
  read(j, "x_nlos", c.x_nlos, where);
  if (j.contains("x_los_db")) {
    double db = 0.0;
    read(j, "x_los_db", db, where);
    c.x_los = db_to_linear(db);
  }
  if (j.contains("x_nlos_db")) {
    double db = 0.0;
    read(j, "x_nlos_db", db, where);
    c.x_nlos = db_to_linear(db);
  }
  read(j, "alpha_los", c.alpha_los, where);
  read(j, "alpha_nlos", c.alpha_nlos, where);
  read(j, "noise_dbm", c.noise_dbm, where);
  read(j, "carrier_hz", c.carrier_hz, where);
  c.validate();
  return c;
}

propagation::AntennaPattern parse_antenna(const Json& j, propagation::AntennaPattern a) {
  const std::string where = "antenna";
  check_keys(j, where, {"g_max_db", "a_m_db", "horizontal_hpbw_deg", "vertical_hpbw_deg", "sla_v_db"});
  read(j, "g_max_db", a.g_max_db, where);
  read(j, "a_m_db", a.a_m_db, where);
  read(j, "horizontal_hpbw_deg", a.horizontal_hpbw_deg, where);
  read(j, "vertical_hpbw_deg", a.vertical_hpbw_deg, where);
  read(j, "sla_v_db", a.sla_v_db, where);
  a.validate();
  return a;
}

propagation::GeneratorConfig parse_generator(const Json& j, propagation::GeneratorConfig g) {
  const std::string where = "generator";
  check_keys(j, where, {"width_m", "height_m", "cell_size_m", "building_count", "footprint_min_m", "footprint_max_m",
                        "building_height_min_m", "building_height_max_m", "site_count", "sectors_per_site",
                        "bs_height_m", "tx_power_dbm", "downtilt_deg", "uav_altitude_m", "h_min_m", "h_max_m",
                        "launch_frac", "target_frac"});
  read(j, "width_m", g.width_m, where);
  read(j, "height_m", g.height_m, where);
  read(j, "cell_size_m", g.cell_size_m, where);
  read(j, "building_count", g.building_count, where);
  read(j, "footprint_min_m", g.footprint_min_m, where);
  read(j, "footprint_max_m", g.footprint_max_m, where);
  read(j, "building_height_min_m", g.building_height_min_m, where);
  read(j, "building_height_max_m", g.building_height_max_m, where);
  read(j, "site_count", g.site_count, where);
  read(j, "sectors_per_site", g.sectors_per_site, where);
  read(j, "bs_height_m", g.bs_height_m, where);
  read(j, "tx_power_dbm", g.tx_power_dbm, where);
  read(j, "downtilt_deg", g.downtilt_deg, where);
  read(j, "uav_altitude_m", g.uav_altitude_m, where);
  read(j, "h_min_m", g.h_min_m, where);
  read(j, "h_max_m", g.h_max_m, where);
  read_rect(j, "launch_frac", g.launch_frac, where);
  read_rect(j, "target_frac", g.target_frac, where);
  g.validate();
  return g;
}

MissionParams parse_mission(const Json& j, MissionParams m) {
  const std::string where = "mission";
  check_keys(j, where, {"s_max", "v_max_mps", "dt_s", "w1", "w2", "p_outbound", "p_reach", "reach_radius_m",
                        "objective_w1", "objective_w2", "outage_event_threshold", "patch_size", "users",
                        "gamma_user_db", "uav_tx_power_dbm"});
  read(j, "s_max", m.s_max, where);
  read(j, "v_max_mps", m.v_max_mps, where);
  read(j, "dt_s", m.dt_s, where);
  read(j, "w1", m.w1, where);
  read(j, "w2", m.w2, where);
  read(j, "p_outbound", m.p_outbound, where);
  read(j, "p_reach", m.p_reach, where);
  read(j, "reach_radius_m", m.reach_radius_m, where);
  read(j, "objective_w1", m.objective_w1, where);
  read(j, "objective_w2", m.objective_w2, where);
  read(j, "outage_event_threshold", m.outage_event_threshold, where);
  read(j, "patch_size", m.patch_size, where);
  read(j, "users", m.users, where);
  read(j, "gamma_user_db", m.gamma_user_db, where);
  read(j, "uav_tx_power_dbm", m.uav_tx_power_dbm, where);
  if (m.users < 1) fail(ErrorKind::config, "mission.users must be at least 1");
  return m;
}

agent::TrainConfig parse_agent(const Json& j, agent::TrainConfig t) {
  const std::string where = "agent";
  check_keys(j, where, {"trunk", "value_hidden", "advantage_hidden", "learning_rate", "batch_size", "target_sync",
                        "gamma", "n_step", "buffer_capacity", "learning_starts", "train_every", "huber_delta",
                        "eps_start", "eps_end", "eps_decay"});
  read(j, "trunk", t.architecture.trunk, where);
  read(j, "value_hidden", t.architecture.value_hidden, where);
  read(j, "advantage_hidden", t.architecture.advantage_hidden, where);
  read(j, "learning_rate", t.learning_rate, where);
  read(j, "batch_size", t.batch_size, where);
  read(j, "target_sync", t.target_sync, where);
  read(j, "gamma", t.gamma, where);
  read(j, "n_step", t.n_step, where);
  read(j, "buffer_capacity", t.buffer_capacity, where);
  read(j, "learning_starts", t.learning_starts, where);
  read(j, "train_every", t.train_every, where);
  read(j, "huber_delta", t.huber_delta, where);
  read(j, "eps_start", t.exploration.eps_start, where);
  read(j, "eps_end", t.exploration.eps_end, where);
  read(j, "eps_decay", t.exploration.decay_rate, where);
  return t;
}

namespace {

transfer::TrainingSettings parse_settings(const Json& j) {
  const std::string where = "transfer";
  check_keys(j, where, {"max_episodes", "convergence_window", "patience", "success_rate", "eps_start_transfer"});
  transfer::TrainingSettings s;
  read(j, "max_episodes", s.max_episodes, where);
  read(j, "convergence_window", s.convergence_window, where);
  read(j, "patience", s.patience, where);
  read(j, "success_rate", s.success_rate, where);
  read(j, "eps_start_transfer", s.eps_start_transfer, where);
  if (s.max_episodes < 0 || s.convergence_window < 1 || s.patience < 0)
    fail(ErrorKind::config, "transfer: max_episodes, convergence_window and patience must be non-negative (window >= 1)");
  if (!(s.eps_start_transfer >= 0.0 && s.eps_start_transfer <= 1.0))
    fail(ErrorKind::config, "transfer.eps_start_transfer must lie in [0, 1]");
  return s;
}

void parse_meter(const Json& j, RunConfig& cfg) {
  const std::string where = "meter";
  check_keys(j, where, {"mode", "c_fwd", "c_bwd", "c_env", "t_fwd", "t_bwd", "t_env"});
  std::string mode = "proxy";
  read(j, "mode", mode, where);
  if (mode == "proxy")
    cfg.meter_mode = transfer::MeterMode::proxy;
  else if (mode == "platform")
    cfg.meter_mode = transfer::MeterMode::platform;
  else
    fail(ErrorKind::config, "meter.mode must be 'proxy' or 'platform'");
  auto& c = cfg.coefficients;
  read(j, "c_fwd", c.c_fwd, where);
  read(j, "c_bwd", c.c_bwd, where);
  read(j, "c_env", c.c_env, where);
  read(j, "t_fwd", c.t_fwd, where);
  read(j, "t_bwd", c.t_bwd, where);
  read(j, "t_env", c.t_env, where);
}

EnvironmentEntry parse_environment(const Json& j, std::size_t index, const std::string& base_dir) {
  const std::string where = "environments[" + std::to_string(index) + "]";
  check_keys(j, where, {"id", "preset", "generator", "seed", "outage_file", "grid_file", "gamma_th_db",
                        "target_cols", "target_rows", "uav_altitude_m", "launch_frac", "target_frac",
                        "convergence_threshold", "mission", "learning_rate", "eps_start", "eps_start_transfer"});
  EnvironmentEntry e;
  e.id = "env" + std::to_string(index + 1);
  read(j, "id", e.id, where);
  const int sources = static_cast<int>(j.contains("preset")) + static_cast<int>(j.contains("outage_file")) +
                      static_cast<int>(j.contains("grid_file"));
  if (sources != 1) fail(ErrorKind::config, where + ": exactly one of preset, outage_file, grid_file is required");
  if (j.contains("preset")) {
    e.kind = SourceKind::preset;
    read(j, "preset", e.preset, where);
    propagation::preset_by_name(e.preset);
  } else {
    std::string p;
    e.kind = j.contains("outage_file") ? SourceKind::outage_file : SourceKind::grid_file;
    read(j, e.kind == SourceKind::outage_file ? "outage_file" : "grid_file", p, where);
    e.path = resolve(base_dir, p);
    if (!fs::exists(e.path)) fail(ErrorKind::config, where + ": file '" + e.path + "' does not exist");
  }
  if (j.contains("generator")) e.generator_overrides = j["generator"];
  read(j, "seed", e.seed, where);
  read_opt(j, "gamma_th_db", e.gamma_th_db, where);
  read_opt(j, "target_cols", e.target_cols, where);
  read_opt(j, "target_rows", e.target_rows, where);
  read(j, "uav_altitude_m", e.uav_altitude_m, where);
  read_rect(j, "launch_frac", e.launch_frac, where);
  read_rect(j, "target_frac", e.target_frac, where);
  read(j, "convergence_threshold", e.convergence_threshold, where);
  if (j.contains("mission")) e.mission_overrides = j["mission"];
  read_opt(j, "learning_rate", e.learning_rate, where);
  read_opt(j, "eps_start", e.eps_start, where);
  read_opt(j, "eps_start_transfer", e.eps_start_transfer, where);
  return e;
}

}  // namespace

RunConfig parse_run_config(const Json& j, const std::string& base_dir) {
  check_keys(j, "config", {"channel", "antenna", "outage", "mission", "agent", "transfer", "meter",
                           "environments", "seeds", "jobs", "output_dir"});
  RunConfig cfg;
  if (j.contains("channel")) cfg.channel = parse_channel(j["channel"]);
  if (j.contains("antenna")) cfg.antenna = parse_antenna(j["antenna"]);
  if (j.contains("outage")) {
    check_keys(j["outage"], "outage", {"gamma_th_db"});
    read(j["outage"], "gamma_th_db", cfg.gamma_th_db, "outage");
  }
  if (j.contains("mission")) cfg.mission = parse_mission(j["mission"]);
  if (j.contains("agent")) cfg.train = parse_agent(j["agent"]);
  if (j.contains("transfer")) cfg.settings = parse_settings(j["transfer"]);
  if (j.contains("meter")) parse_meter(j["meter"], cfg);
  read(j, "seeds", cfg.seeds, "config");
  read(j, "jobs", cfg.jobs, "config");
  read(j, "output_dir", cfg.output_dir, "config");
  if (cfg.seeds.empty()) fail(ErrorKind::config, "config.seeds must not be empty");
  if (j.contains("environments")) {
    if (!j["environments"].is_array()) fail(ErrorKind::config, "config.environments: expected a list");
    for (std::size_t i = 0; i < j["environments"].size(); ++i)
      cfg.environments.push_back(parse_environment(j["environments"][i], i, base_dir));
  }
  // Feature length follows the mission patch size.
  cfg.train.architecture.input_dim = static_cast<int>(mdp::feature_length(cfg.mission.patch_size));
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::config, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  const std::string dir = fs::path(path).parent_path().string();
  return parse_run_config(j, dir.empty() ? "." : dir);
}

Json to_json(const propagation::EnvironmentSpec& env) {
  Json j;
  j["width_m"] = env.width_m;
  j["height_m"] = env.height_m;
  j["cell_size_m"] = env.cell_size_m;
  j["uav_altitude_m"] = env.uav_altitude_m;
  j["h_min_m"] = env.h_min_m;
  j["h_max_m"] = env.h_max_m;
  auto rect = [](const Rect& r) { return Json::array({r.x0, r.y0, r.x1, r.y1}); };
  j["launch_area"] = rect(env.launch_area);
  j["target_area"] = rect(env.target_area);
  j["buildings"] = Json::array();
  for (const auto& b : env.buildings)
    j["buildings"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"d", b.d}, {"height_m", b.height_m}});
  j["base_stations"] = Json::array();
  for (const auto& bs : env.base_stations) {
    j["base_stations"].push_back({{"position", Json::array({bs.position.x, bs.position.y, bs.position.z})},
                                  {"tx_power_dbm", bs.tx_power_dbm},
                                  {"azimuth_deg", bs.azimuth_deg},
                                  {"downtilt_deg", bs.downtilt_deg},
                                  {"antenna",
                                   {{"g_max_db", bs.antenna.g_max_db},
                                    {"a_m_db", bs.antenna.a_m_db},
                                    {"horizontal_hpbw_deg", bs.antenna.horizontal_hpbw_deg},
                                    {"vertical_hpbw_deg", bs.antenna.vertical_hpbw_deg},
                                    {"sla_v_db", bs.antenna.sla_v_db}}}});
  }
  return j;
}

radiomap::OutageMap ingest(const radiomap::RawGrid& raw, double gamma_th_db, std::optional<int> target_cols,
                           std::optional<int> target_rows) {
  radiomap::SinrGrid filled = radiomap::median_fill(raw);
  const int cols = target_cols.value_or(filled.geometry.cols);
  const int rows = target_rows.value_or(filled.geometry.rows);
  if (cols != filled.geometry.cols || rows != filled.geometry.rows) filled = radiomap::rescale(filled, cols, rows);
  return radiomap::sinr_to_outage(filled, gamma_th_db);
}

namespace {

Rect scale_frac(const Rect& f, const radiomap::GridGeometry& g) {
  return {g.origin_x + f.x0 * g.width_m(), g.origin_y + f.y0 * g.height_m(), g.origin_x + f.x1 * g.width_m(),
          g.origin_y + f.y1 * g.height_m()};
}

}  // namespace

BuiltEnvironment build_environment(const EnvironmentEntry& entry, const RunConfig& cfg) {
  BuiltEnvironment b;
  switch (entry.kind) {
    case SourceKind::preset: {
      propagation::GeneratorConfig g = propagation::preset_by_name(entry.preset);
      g.antenna = cfg.antenna;
      g = parse_generator(entry.generator_overrides, g);
      propagation::EnvironmentSpec spec = propagation::generate_environment(g, entry.seed);
      b.sinr = propagation::compute_sinr_map(spec, cfg.channel);
      b.outage = radiomap::sinr_to_outage(*b.sinr, entry.gamma_th_db.value_or(cfg.gamma_th_db));
      b.launch_area = spec.launch_area;
      b.target_area = spec.target_area;
      b.uav_altitude_m = spec.uav_altitude_m;
      b.spec = std::move(spec);
      break;
    }
    case SourceKind::grid_file: {
      const radiomap::RawGrid raw = radiomap::read_grid_file(entry.path);
      radiomap::SinrGrid filled = radiomap::median_fill(raw);
      const int cols = entry.target_cols.value_or(filled.geometry.cols);
      const int rows = entry.target_rows.value_or(filled.geometry.rows);
      if (cols != filled.geometry.cols || rows != filled.geometry.rows)
        filled = radiomap::rescale(filled, cols, rows);
      b.outage = radiomap::sinr_to_outage(filled, entry.gamma_th_db.value_or(cfg.gamma_th_db));
      b.sinr = std::move(filled);
      break;
    }
    case SourceKind::outage_file:
      b.outage = radiomap::read_outage_file(entry.path);
      break;
  }
  if (entry.kind != SourceKind::preset) {
    b.launch_area = scale_frac(entry.launch_frac, b.outage.geometry);
    b.target_area = scale_frac(entry.target_frac, b.outage.geometry);
    b.uav_altitude_m = entry.uav_altitude_m;
  }
  b.outage.validate();
  return b;
}

transfer::EnvironmentTask make_task(const EnvironmentEntry& entry, const BuiltEnvironment& built,
                                    const RunConfig& cfg) {
  const MissionParams mp = parse_mission(entry.mission_overrides, cfg.mission);
  if (mp.patch_size != cfg.mission.patch_size)
    fail(ErrorKind::config, entry.id + ": patch_size must match across environments (it fixes the network input)");
  transfer::EnvironmentTask t;
  t.id = entry.id;
  auto& ms = t.mission;
  ms.outage_map = std::make_shared<const radiomap::OutageMap>(built.outage);
  ms.launch_area = built.launch_area;
  ms.target_area = built.target_area;
  ms.target = {0.5 * (built.target_area.x0 + built.target_area.x1), 0.5 * (built.target_area.y0 + built.target_area.y1)};
  ms.s_max = mp.s_max;
  ms.v_max_mps = mp.v_max_mps;
  ms.dt_s = mp.dt_s;
  ms.w1 = mp.w1;
  ms.w2 = mp.w2;
  ms.p_outbound = mp.p_outbound;
  ms.p_reach = mp.p_reach;
  ms.reach_radius_m = mp.reach_radius_m;
  ms.objective_w1 = mp.objective_w1;
  ms.objective_w2 = mp.objective_w2;
  ms.outage_event_threshold = mp.outage_event_threshold;
  ms.patch_size = mp.patch_size;
  ms.validate();
  t.selection = {built.target_area, built.uav_altitude_m, mp.uav_tx_power_dbm, mp.gamma_user_db};
  t.channel = cfg.channel;
  t.user_count = mp.users;
  t.convergence_threshold = entry.convergence_threshold;
  t.learning_rate = entry.learning_rate;
  t.eps_start = entry.eps_start;
  t.eps_start_transfer = entry.eps_start_transfer;
  return t;
}

std::vector<transfer::EnvironmentTask> make_tasks(const RunConfig& cfg) {
  std::vector<transfer::EnvironmentTask> tasks;
  for (const auto& e : cfg.environments) tasks.push_back(make_task(e, build_environment(e, cfg), cfg));
  return tasks;
}

transfer::ContinuousConfig continuous_config(const RunConfig& cfg, std::uint64_t seed) {
  transfer::ContinuousConfig c;
  c.train = cfg.train;
  c.settings = cfg.settings;
  c.meter_mode = cfg.meter_mode;
  c.coefficients = cfg.coefficients;
  c.seed = seed;
  return c;
}

}  // namespace uavtl::config
