#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uavtl/radiomap.hpp"
#include "uavtl/transfer.hpp"

namespace uavtl::report {

// Shortest round-trip decimal form; "NA" for an empty optional.
std::string format(double v);
std::string format(std::optional<int> v);

// One row per environment: env_id, episodes, convergence_ep, success95_ep,
// time_s, energy_j, eta_time, eta_energy, norm_energy.
std::string transfer_report_csv(const transfer::TransferReport& r);
// episode, reward, success, energy_j, steps (energy is cumulative).
std::string episodes_csv(const transfer::TrainingRecord& r);
// Every arm of a comparison, one row each.
std::string runs_csv(const transfer::Comparison& c);
// Per seed and non-base environment: chain ratio E_i/E_1 and matched-arm ratio E_tl/E_scratch.
std::string ratios_csv(const transfer::Comparison& c);

// Medians over seeds; a run that never converged contributes its episode count.
struct ArmSummary {
  double convergence_episodes = 0.0;
  double time_h = 0.0;
  double success95_episodes = 0.0;
  double energy_wh = 0.0;
};

struct TableColumn {
  std::string env_id;
  ArmSummary scratch;
  ArmSummary transfer;
};

std::vector<TableColumn> comparison_table(const transfer::Comparison& c);
std::string table_csv(const transfer::Comparison& c);

// Per-episode reward of both arms for one non-base environment, one column per (seed, arm).
std::string reward_curves_csv(const transfer::Comparison& c, std::size_t env_index);

// col, row, x_m, y_m, outage; one row per cell.
std::string outage_cells_csv(const radiomap::OutageMap& m);

}  // namespace uavtl::report
