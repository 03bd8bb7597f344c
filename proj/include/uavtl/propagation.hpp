#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uavtl/geometry.hpp"
#include "uavtl/radiomap.hpp"

namespace uavtl::propagation {

// Building footprint (x, y, w, d) standing on the ground up to height_m.
struct Building {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double d = 0.0;
  double height_m = 0.0;

  friend bool operator==(const Building&, const Building&) = default;
};

// Aggregate sector pattern of the base-station array. Attenuations are
// positive dB quantities.
struct AntennaPattern {
  double g_max_db = 8.0;
  double a_m_db = 30.0;
  double horizontal_hpbw_deg = 65.0;
  double vertical_hpbw_deg = 12.7;  // 1x8 vertical UPA
  double sla_v_db = 30.0;

  static AntennaPattern isotropic();
  void validate() const;

  friend bool operator==(const AntennaPattern&, const AntennaPattern&) = default;
};

struct BaseStation {
  Vec3 position;
  double tx_power_dbm = 30.0;
  AntennaPattern antenna;
  double azimuth_deg = 0.0;   // boresight, counter-clockwise from +x
  double downtilt_deg = 10.0; // positive tilts the boresight towards the ground

  void validate() const;

  friend bool operator==(const BaseStation&, const BaseStation&) = default;
};

struct ChannelParams {
  double x_los = 7.943282347242815e-05;   // -41 dB at 1 m
  double x_nlos = 7.943282347242815e-04;  // -31 dB at 1 m
  double alpha_los = 2.2;
  double alpha_nlos = 3.5;
  double noise_dbm = -95.0;
  double carrier_hz = 2.0e9;

  void validate() const;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct EnvironmentSpec {
  double width_m = 0.0;
  double height_m = 0.0;
  double cell_size_m = 0.0;
  std::vector<Building> buildings;
  std::vector<BaseStation> base_stations;
  double uav_altitude_m = 100.0;
  Rect launch_area;
  Rect target_area;
  double h_min_m = 50.0;
  double h_max_m = 150.0;

  int cols() const;
  int rows() const;
  Rect bounds() const { return {0.0, 0.0, width_m, height_m}; }
  void validate() const;

  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

// Linear channel gain of the LoS branch, X_L * d^-alpha_L.
double los_path_loss(double d, const ChannelParams& p);
double nlos_path_loss(double d, const ChannelParams& p);

// Combined 3D gain in dB, in the antenna's own frame: theta_deg is the zenith
// angle (90 on boresight) and phi_deg the azimuth off boresight. Angles are
// taken as already normalized: theta in [0, 180], phi in (-180, 180].
double antenna_gain(double theta_deg, double phi_deg, const AntennaPattern& pattern);

// Per-plane parabolic attenuation min(12 (delta/hpbw)^2, cap), in dB.
double plane_attenuation(double delta_deg, double hpbw_deg, double cap_db);

// True iff the open segment tx -> rx crosses no building volume.
bool is_los(Vec3 tx, Vec3 rx, std::span<const Building> buildings);

double received_power(const BaseStation& bs, Vec3 rx, const EnvironmentSpec& env,
                      const ChannelParams& ch);

// Per-cell downlink SINR (dB) at UAV altitude; cell centers are sampled.
radiomap::SinrGrid compute_sinr_map(const EnvironmentSpec& env, const ChannelParams& ch);

struct GeneratorConfig {
  double width_m = 2000.0;
  double height_m = 2000.0;
  double cell_size_m = 40.0;
  int building_count = 0;
  double footprint_min_m = 50.0;
  double footprint_max_m = 100.0;
  double building_height_min_m = 10.0;
  double building_height_max_m = 40.0;
  int site_count = 4;
  int sectors_per_site = 3;
  double bs_height_m = 25.0;
  double tx_power_dbm = 30.0;
  double downtilt_deg = 10.0;
  AntennaPattern antenna;
  double uav_altitude_m = 100.0;
  double h_min_m = 50.0;
  double h_max_m = 150.0;
  // Launch and target rectangles as fractions of the map extent.
  Rect launch_frac{0.0, 0.0, 0.2, 0.2};
  Rect target_frac{0.6, 0.6, 0.9, 0.9};

  void validate() const;
};

// Tall, sparsely placed buildings.
GeneratorConfig preset_env1();
// Lower but more densely arranged buildings.
GeneratorConfig preset_env2();
GeneratorConfig preset_by_name(const std::string& name);

EnvironmentSpec generate_environment(const GeneratorConfig& cfg, std::uint64_t seed);

}  // namespace uavtl::propagation
