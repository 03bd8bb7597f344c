#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavtl/geometry.hpp"
#include "uavtl/propagation.hpp"
#include "uavtl/radiomap.hpp"
#include "uavtl/random.hpp"

namespace uavtl::mdp {

using radiomap::CellIndex;

enum class Action { forward = 0, backward = 1, left = 2, right = 3 };
inline constexpr int kActionCount = 4;
inline constexpr std::array<Action, kActionCount> kAllActions = {Action::forward, Action::backward,
                                                                 Action::left, Action::right};
const char* to_string(Action a);

// Cell offset of an action: forward +y, backward -y, left -x, right +x.
CellIndex action_offset(Action a);

enum class Termination { none, reached, budget_exhausted };
const char* to_string(Termination t);

struct MissionSpec {
  std::shared_ptr<const radiomap::OutageMap> outage_map;
  Rect launch_area;
  Rect target_area;
  std::vector<Vec2> users;
  Vec2 target;
  int s_max = 200;
  double v_max_mps = 20.0;
  double dt_s = 2.0;
  // Step reward weights (distance, outage).
  double w1 = 1.0;
  double w2 = 2.0;
  double p_outbound = 1.0;
  double p_reach = 100.0;
  double reach_radius_m = 0.0;  // <= 0 means one cell
  // Trajectory objective weights (steps, outage events).
  double objective_w1 = 1.0;
  double objective_w2 = 2.0;
  double outage_event_threshold = 0.5;
  int patch_size = 5;

  const radiomap::GridGeometry& geometry() const { return outage_map->geometry; }
  double effective_reach_radius() const;
  double diagonal_m() const;
  void validate() const;
};

struct EpisodeState {
  CellIndex cell;
  Vec2 position_m;
  int step_count = 0;
  double cumulative_reward = 0.0;
  bool done = false;
  Termination reason = Termination::none;
};

struct Transition {
  std::vector<double> state;
  Action action = Action::forward;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// Outcome of applying an action before the reward is assessed.
struct MoveOutcome {
  CellIndex next;
  Vec2 next_position_m;
  bool attempted_outbound = false;
};

struct RewardTerms {
  double outbound = 0.0;  // -p_outbound when the move tried to leave the grid
  double distance = 0.0;  // -w1 * d / diagonal
  double outage = 0.0;    // -w2 * outage(next)
  double reach = 0.0;     // +p_reach inside the reach radius

  double total() const { return outbound + distance + outage + reach; }
};

struct StepResult {
  EpisodeState state;
  double reward = 0.0;
  bool done = false;
  MoveOutcome move;
  RewardTerms terms;
};

struct TrajectoryScore {
  int steps = 0;
  int outage_events = 0;
  double objective = 0.0;
};

std::vector<Vec2> sample_users(const Rect& area, int count, Rng& rng);

struct TargetSelection {
  Rect target_area;
  double uav_altitude_m = 100.0;
  double uav_tx_power_dbm = 30.0;
  double gamma_user_db = 30.0;
};

// UAV -> ground user SNR (dB), LoS branch, noise limited.
double user_link_sinr_db(Vec2 uav, Vec2 user, const TargetSelection& sel,
                         const propagation::ChannelParams& ch);

// Center of the candidate cell (inside the target area) covering the most
// users; ties prefer the smaller mean horizontal distance, then lower (row, col).
Vec2 select_target(std::span<const Vec2> users, const radiomap::GridGeometry& grid,
                   const TargetSelection& sel, const propagation::ChannelParams& ch);

std::vector<CellIndex> cells_in(const radiomap::GridGeometry& grid, const Rect& area);

EpisodeState start_at(const MissionSpec& ms, CellIndex cell);
// Uniform start over the cells whose centers lie in the launch area.
EpisodeState start_episode(const MissionSpec& ms, Rng& rng);

std::size_t feature_length(int patch_size);
std::vector<double> encode_state(const EpisodeState& es, const MissionSpec& ms);
void encode_state_into(const EpisodeState& es, const MissionSpec& ms, std::span<double> out);

MoveOutcome apply_action(const EpisodeState& es, Action a, const MissionSpec& ms);
bool within_reach(Vec2 position, const MissionSpec& ms);
RewardTerms compute_reward_terms(const MoveOutcome& move, const MissionSpec& ms);
double compute_reward(const MoveOutcome& move, const MissionSpec& ms);

StepResult step(const EpisodeState& es, Action a, const MissionSpec& ms);

// Scores a cell trajectory p(0..N): S = N moves, Gamma = visited cells p(1..N)
// whose outage exceeds the event threshold.
TrajectoryScore evaluate_trajectory(std::span<const CellIndex> trajectory, const MissionSpec& ms);

struct TraceRow {
  int step = 0;
  Vec2 position_m;
  double reward = 0.0;
  double outage = 0.0;
};
std::string trajectory_csv(std::span<const TraceRow> rows);

}  // namespace uavtl::mdp
