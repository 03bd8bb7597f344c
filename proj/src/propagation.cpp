#include "uavtl/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uavtl/error.hpp"
#include "uavtl/random.hpp"

namespace uavtl::propagation {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double check_distance(double d) {
  if (!(d > 0.0)) fail(ErrorKind::domain, "path loss requires a positive distance");
  return d;
}

double wrap_azimuth(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

}  // namespace

AntennaPattern AntennaPattern::isotropic() {
  const double inf = std::numeric_limits<double>::infinity();
  return AntennaPattern{0.0, inf, inf, inf, inf};
}

void AntennaPattern::validate() const {
  if (!std::isfinite(g_max_db)) fail(ErrorKind::config, "antenna g_max_db must be finite");
  if (!(a_m_db > 0.0)) fail(ErrorKind::config, "antenna a_m_db must be positive");
  if (!(horizontal_hpbw_deg > 0.0) || !(vertical_hpbw_deg > 0.0))
    fail(ErrorKind::config, "antenna beamwidths must be positive");
  if (!(sla_v_db >= 0.0)) fail(ErrorKind::config, "antenna sla_v_db must be non-negative");
}

void BaseStation::validate() const {
  if (!std::isfinite(tx_power_dbm)) fail(ErrorKind::config, "base station tx power must be finite");
  if (!(downtilt_deg >= -90.0 && downtilt_deg <= 90.0))
    fail(ErrorKind::config, "base station downtilt must lie in [-90, 90] degrees");
  antenna.validate();
}

void ChannelParams::validate() const {
  if (!(x_los > 0.0) || !(x_nlos > 0.0)) fail(ErrorKind::config, "path-loss intercepts must be positive");
  if (!(alpha_los > 0.0)) fail(ErrorKind::config, "alpha_los must be positive");
  if (!(alpha_nlos >= alpha_los)) fail(ErrorKind::config, "alpha_nlos must not be smaller than alpha_los");
  if (!std::isfinite(noise_dbm)) fail(ErrorKind::config, "noise_dbm must be finite");
  if (!(carrier_hz > 0.0)) fail(ErrorKind::config, "carrier_hz must be positive");
}

int EnvironmentSpec::cols() const { return static_cast<int>(std::ceil(width_m / cell_size_m)); }
int EnvironmentSpec::rows() const { return static_cast<int>(std::ceil(height_m / cell_size_m)); }

void EnvironmentSpec::validate() const {
  if (!(width_m > 0.0) || !(height_m > 0.0) || !(cell_size_m > 0.0))
    fail(ErrorKind::config, "environment width, height and cell size must be positive");
  if (!(h_min_m <= uav_altitude_m && uav_altitude_m <= h_max_m))
    fail(ErrorKind::config, "UAV altitude violates h_min <= h_uav <= h_max");
  if (!launch_area.within(bounds()) || !target_area.within(bounds()))
    fail(ErrorKind::config, "launch and target areas must lie within the map");
  for (const auto& b : buildings)
    if (!(b.w > 0.0 && b.d > 0.0 && b.height_m > 0.0)) fail(ErrorKind::config, "degenerate building");
  for (const auto& bs : base_stations) bs.validate();
}

double los_path_loss(double d, const ChannelParams& p) {
  return p.x_los * std::pow(check_distance(d), -p.alpha_los);
}

double nlos_path_loss(double d, const ChannelParams& p) {
  return p.x_nlos * std::pow(check_distance(d), -p.alpha_nlos);
}

double plane_attenuation(double delta_deg, double hpbw_deg, double cap_db) {
  if (std::isinf(hpbw_deg)) return 0.0;
  const double r = delta_deg / hpbw_deg;
  return std::min(12.0 * r * r, cap_db);
}

double antenna_gain(double theta_deg, double phi_deg, const AntennaPattern& pattern) {
  const double horizontal = plane_attenuation(phi_deg, pattern.horizontal_hpbw_deg, pattern.a_m_db);
  const double vertical = plane_attenuation(theta_deg - 90.0, pattern.vertical_hpbw_deg, pattern.sla_v_db);
  return pattern.g_max_db - std::min(horizontal + vertical, pattern.a_m_db);
}

bool is_los(Vec3 tx, Vec3 rx, std::span<const Building> buildings) {
  const double dir[3] = {rx.x - tx.x, rx.y - tx.y, rx.z - tx.z};
  const double org[3] = {tx.x, tx.y, tx.z};
  for (const Building& b : buildings) {
    const double lo[3] = {b.x, b.y, 0.0};
    const double hi[3] = {b.x + b.w, b.y + b.d, b.height_m};
    double t0 = 0.0, t1 = 1.0;
    bool hit = true;
    for (int a = 0; a < 3 && hit; ++a) {
      if (dir[a] == 0.0) {
        // Parallel to this slab: inside strictly or no intersection of volume.
        if (!(org[a] > lo[a] && org[a] < hi[a])) hit = false;
        continue;
      }
      double ta = (lo[a] - org[a]) / dir[a];
      double tb = (hi[a] - org[a]) / dir[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (!(t0 < t1)) hit = false;
    }
    if (hit) return false;
  }
  return true;
}

double received_power(const BaseStation& bs, Vec3 rx, const EnvironmentSpec& env,
                      const ChannelParams& ch) {
  const double dx = rx.x - bs.position.x;
  const double dy = rx.y - bs.position.y;
  const double dz = rx.z - bs.position.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  check_distance(d);

  const double zenith = std::acos(std::clamp(dz / d, -1.0, 1.0)) * kRadToDeg;
  const double theta = std::clamp(zenith - bs.downtilt_deg, 0.0, 180.0);
  const double azimuth = (dx == 0.0 && dy == 0.0) ? 0.0 : std::atan2(dy, dx) * kRadToDeg;
  const double phi = wrap_azimuth(azimuth - bs.azimuth_deg);

  const double gain_db = antenna_gain(theta, phi, bs.antenna);
  const double path_gain = is_los(bs.position, rx, env.buildings) ? los_path_loss(d, ch)
                                                                  : nlos_path_loss(d, ch);
  return bs.tx_power_dbm + gain_db + 10.0 * std::log10(path_gain);
}

radiomap::SinrGrid compute_sinr_map(const EnvironmentSpec& env, const ChannelParams& ch) {
  if (env.base_stations.empty()) fail(ErrorKind::config, "SINR map needs at least one base station");
  radiomap::GridGeometry geo{env.cols(), env.rows(), env.cell_size_m, 0.0, 0.0};
  radiomap::SinrGrid out{geo, std::vector<double>(geo.cell_count())};
  const double noise_mw = std::pow(10.0, ch.noise_dbm / 10.0);

  std::vector<double> powers_mw(env.base_stations.size());
  for (int row = 0; row < geo.rows; ++row) {
    for (int col = 0; col < geo.cols; ++col) {
      const Vec2 c = geo.cell_center(col, row);
      const Vec3 rx{c.x, c.y, env.uav_altitude_m};
      std::size_t serving = 0;
      for (std::size_t i = 0; i < env.base_stations.size(); ++i) {
        powers_mw[i] = std::pow(10.0, received_power(env.base_stations[i], rx, env, ch) / 10.0);
        if (powers_mw[i] > powers_mw[serving]) serving = i;
      }
      double interference = 0.0;
      for (std::size_t i = 0; i < powers_mw.size(); ++i)
        if (i != serving) interference += powers_mw[i];
      out.values[geo.index(col, row)] =
          10.0 * std::log10(powers_mw[serving] / (interference + noise_mw));
    }
  }
  return out;
}

void GeneratorConfig::validate() const {
  if (!(width_m > 0.0) || !(height_m > 0.0) || !(cell_size_m > 0.0))
    fail(ErrorKind::config, "generator map extent and cell size must be positive");
  if (building_count < 0) fail(ErrorKind::config, "building_count must be non-negative");
  if (!(footprint_min_m > 0.0 && footprint_min_m <= footprint_max_m))
    fail(ErrorKind::config, "footprint range must satisfy 0 < min <= max");
  if (!(building_height_min_m > 0.0 && building_height_min_m <= building_height_max_m))
    fail(ErrorKind::config, "building height range must satisfy 0 < min <= max");
  if (footprint_max_m > std::min(width_m, height_m))
    fail(ErrorKind::config, "building footprint exceeds the map");
  const double worst_footprint = building_count * footprint_max_m * footprint_max_m;
  if (worst_footprint > width_m * height_m)
    fail(ErrorKind::config, "infeasible density: total building footprint can exceed the map area");
  if (site_count < 1 || sectors_per_site < 1) fail(ErrorKind::config, "need at least one base station");
  const Rect unit{0.0, 0.0, 1.0, 1.0};
  if (!launch_frac.within(unit) || !target_frac.within(unit) || launch_frac.area() <= 0.0 ||
      target_frac.area() <= 0.0)
    fail(ErrorKind::config, "launch/target fractions must be non-empty rectangles inside [0,1]^2");
  antenna.validate();
}

GeneratorConfig preset_env1() {
  GeneratorConfig c;
  c.building_count = 40;
  c.footprint_min_m = 80.0;
  c.footprint_max_m = 160.0;
  c.building_height_min_m = 40.0;
  c.building_height_max_m = 120.0;
  c.uav_altitude_m = 100.0;
  return c;
}

GeneratorConfig preset_env2() {
  GeneratorConfig c;
  c.building_count = 160;
  c.footprint_min_m = 40.0;
  c.footprint_max_m = 90.0;
  c.building_height_min_m = 10.0;
  c.building_height_max_m = 40.0;
  c.uav_altitude_m = 80.0;
  return c;
}

GeneratorConfig preset_by_name(const std::string& name) {
  if (name == "env1") return preset_env1();
  if (name == "env2") return preset_env2();
  if (name == "open") return GeneratorConfig{};
  fail(ErrorKind::config, "unknown environment preset '" + name + "' (expected env1, env2 or open)");
}

EnvironmentSpec generate_environment(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  auto draw = [&rng](double lo, double hi) { return uniform(rng, lo, hi); };

  EnvironmentSpec env;
  env.width_m = cfg.width_m;
  env.height_m = cfg.height_m;
  env.cell_size_m = cfg.cell_size_m;
  env.uav_altitude_m = cfg.uav_altitude_m;
  env.h_min_m = cfg.h_min_m;
  env.h_max_m = cfg.h_max_m;
  env.launch_area = {cfg.launch_frac.x0 * cfg.width_m, cfg.launch_frac.y0 * cfg.height_m,
                     cfg.launch_frac.x1 * cfg.width_m, cfg.launch_frac.y1 * cfg.height_m};
  env.target_area = {cfg.target_frac.x0 * cfg.width_m, cfg.target_frac.y0 * cfg.height_m,
                     cfg.target_frac.x1 * cfg.width_m, cfg.target_frac.y1 * cfg.height_m};

  env.buildings.reserve(cfg.building_count);
  for (int i = 0; i < cfg.building_count; ++i) {
    Building b;
    b.w = draw(cfg.footprint_min_m, cfg.footprint_max_m);
    b.d = draw(cfg.footprint_min_m, cfg.footprint_max_m);
    b.x = draw(0.0, cfg.width_m - b.w);
    b.y = draw(0.0, cfg.height_m - b.d);
    b.height_m = draw(cfg.building_height_min_m, cfg.building_height_max_m);
    env.buildings.push_back(b);
  }

  auto inside_building = [&env](double x, double y) {
    for (const auto& b : env.buildings)
      if (x >= b.x && x <= b.x + b.w && y >= b.y && y <= b.y + b.d) return true;
    return false;
  };

  for (int s = 0; s < cfg.site_count; ++s) {
    double x = 0.0, y = 0.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      x = draw(0.1 * cfg.width_m, 0.9 * cfg.width_m);
      y = draw(0.1 * cfg.height_m, 0.9 * cfg.height_m);
      if (!inside_building(x, y)) break;
    }
    const double sector_offset = draw(0.0, 360.0);
    for (int k = 0; k < cfg.sectors_per_site; ++k) {
      BaseStation bs;
      bs.position = {x, y, cfg.bs_height_m};
      bs.tx_power_dbm = cfg.tx_power_dbm;
      bs.antenna = cfg.antenna;
      bs.azimuth_deg = std::fmod(sector_offset + 360.0 * k / cfg.sectors_per_site, 360.0);
      bs.downtilt_deg = cfg.downtilt_deg;
      env.base_stations.push_back(bs);
    }
  }
  env.validate();
  return env;
}

}  // namespace uavtl::propagation
