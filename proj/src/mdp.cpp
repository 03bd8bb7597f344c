#include "uavtl/mdp.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "uavtl/error.hpp"

namespace uavtl::mdp {

const char* to_string(Action a) {
  switch (a) {
    case Action::forward: return "forward";
    case Action::backward: return "backward";
    case Action::left: return "left";
    case Action::right: return "right";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::reached: return "reached";
    case Termination::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

CellIndex action_offset(Action a) {
  switch (a) {
    case Action::forward: return {0, 1};
    case Action::backward: return {0, -1};
    case Action::left: return {-1, 0};
    case Action::right: return {1, 0};
  }
  return {0, 0};
}

double MissionSpec::effective_reach_radius() const {
  return reach_radius_m > 0.0 ? reach_radius_m : geometry().spacing_m;
}

double MissionSpec::diagonal_m() const { return std::hypot(geometry().width_m(), geometry().height_m()); }

void MissionSpec::validate() const {
  if (!outage_map) fail(ErrorKind::config, "mission has no outage map");
  outage_map->validate();
  if (s_max < 1) fail(ErrorKind::config, "s_max must be at least 1");
  if (v_max_mps * dt_s < geometry().spacing_m)
    fail(ErrorKind::config, "v_max * dt must cover one cell per step");
  const Rect extent = geometry().extent();
  if (!launch_area.within(extent) || !target_area.within(extent))
    fail(ErrorKind::config, "launch/target areas must lie within the map");
  if (!extent.contains(target)) fail(ErrorKind::config, "target lies outside the map");
  for (const Vec2& u : users)
    if (!target_area.contains(u)) fail(ErrorKind::config, "user outside the target area");
  if (patch_size < 1 || patch_size % 2 == 0) fail(ErrorKind::config, "patch_size must be a positive odd number");
  if (cells_in(geometry(), launch_area).empty()) fail(ErrorKind::config, "launch area contains no cell center");
}

std::vector<Vec2> sample_users(const Rect& area, int count, Rng& rng) {
  if (count < 1) fail(ErrorKind::usage, "user count must be at least 1");
  if (!(area.width() > 0.0 && area.height() > 0.0))
    fail(ErrorKind::config, "target area has zero extent");
  std::vector<Vec2> users;
  users.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double x = uniform(rng, area.x0, area.x1);
    const double y = uniform(rng, area.y0, area.y1);
    users.push_back({x, y});
  }
  return users;
}

double user_link_sinr_db(Vec2 uav, Vec2 user, const TargetSelection& sel,
                         const propagation::ChannelParams& ch) {
  const double d = distance(Vec3{uav.x, uav.y, sel.uav_altitude_m}, Vec3{user.x, user.y, 0.0});
  return sel.uav_tx_power_dbm + 10.0 * std::log10(propagation::los_path_loss(d, ch)) - ch.noise_dbm;
}

std::vector<CellIndex> cells_in(const radiomap::GridGeometry& grid, const Rect& area) {
  std::vector<CellIndex> out;
  for (int row = 0; row < grid.rows; ++row)
    for (int col = 0; col < grid.cols; ++col)
      if (area.contains(grid.cell_center(col, row))) out.push_back({col, row});
  return out;
}

Vec2 select_target(std::span<const Vec2> users, const radiomap::GridGeometry& grid,
                   const TargetSelection& sel, const propagation::ChannelParams& ch) {
  if (users.empty()) fail(ErrorKind::usage, "target selection needs at least one user");
  const auto candidates = cells_in(grid, sel.target_area);
  if (candidates.empty()) fail(ErrorKind::config, "target area contains no candidate cell");

  // Candidates are visited in (row, col) order, so strict improvement keeps
  // the lowest index on a full tie.
  int best_count = -1;
  double best_mean = std::numeric_limits<double>::infinity();
  Vec2 best{};
  for (const CellIndex& c : candidates) {
    const Vec2 center = grid.cell_center(c.col, c.row);
    int served = 0;
    double total_distance = 0.0;
    for (const Vec2& u : users) {
      if (user_link_sinr_db(center, u, sel, ch) >= sel.gamma_user_db) ++served;
      total_distance += distance(center, u);
    }
    const double mean = total_distance / static_cast<double>(users.size());
    if (served > best_count || (served == best_count && mean < best_mean)) {
      best_count = served;
      best_mean = mean;
      best = center;
    }
  }
  return best;
}

EpisodeState start_at(const MissionSpec& ms, CellIndex cell) {
  EpisodeState es;
  es.cell = cell;
  es.position_m = ms.geometry().cell_center(cell.col, cell.row);
  return es;
}

EpisodeState start_episode(const MissionSpec& ms, Rng& rng) {
  const auto cells = cells_in(ms.geometry(), ms.launch_area);
  if (cells.empty()) fail(ErrorKind::config, "launch area contains no cell center");
  return start_at(ms, cells[uniform_index(rng, cells.size())]);
}

std::size_t feature_length(int patch_size) {
  return 4 + static_cast<std::size_t>(patch_size) * patch_size;
}

namespace {

double normalized_index(int i, int count) {
  return count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
}

}  // namespace

void encode_state_into(const EpisodeState& es, const MissionSpec& ms, std::span<double> out) {
  const auto& g = ms.geometry();
  const int k = ms.patch_size;
  if (out.size() != feature_length(k)) fail(ErrorKind::usage, "feature buffer has the wrong length");
  const CellIndex t = radiomap::locate(g, ms.target);
  out[0] = normalized_index(es.cell.col, g.cols);
  out[1] = normalized_index(es.cell.row, g.rows);
  out[2] = normalized_index(t.col, g.cols);
  out[3] = normalized_index(t.row, g.rows);
  const int half = k / 2;
  std::size_t i = 4;
  for (int dr = -half; dr <= half; ++dr) {
    for (int dc = -half; dc <= half; ++dc) {
      const int r = es.cell.row + dr, c = es.cell.col + dc;
      const bool inside = r >= 0 && c >= 0 && r < g.rows && c < g.cols;
      out[i++] = inside ? ms.outage_map->at(c, r) : 1.0;
    }
  }
}

std::vector<double> encode_state(const EpisodeState& es, const MissionSpec& ms) {
  std::vector<double> f(feature_length(ms.patch_size));
  encode_state_into(es, ms, f);
  return f;
}

MoveOutcome apply_action(const EpisodeState& es, Action a, const MissionSpec& ms) {
  const auto& g = ms.geometry();
  const CellIndex off = action_offset(a);
  CellIndex next{es.cell.col + off.col, es.cell.row + off.row};
  MoveOutcome m;
  if (next.col < 0 || next.row < 0 || next.col >= g.cols || next.row >= g.rows) {
    m.attempted_outbound = true;
    next = es.cell;
  }
  m.next = next;
  m.next_position_m = g.cell_center(next.col, next.row);
  return m;
}

bool within_reach(Vec2 position, const MissionSpec& ms) {
  return distance(position, ms.target) <= ms.effective_reach_radius() * (1.0 + 1e-12);
}

RewardTerms compute_reward_terms(const MoveOutcome& move, const MissionSpec& ms) {
  RewardTerms t;
  if (move.attempted_outbound) t.outbound = -ms.p_outbound;
  t.distance = -ms.w1 * distance(move.next_position_m, ms.target) / ms.diagonal_m();
  t.outage = -ms.w2 * ms.outage_map->at(move.next.col, move.next.row);
  if (within_reach(move.next_position_m, ms)) t.reach = ms.p_reach;
  return t;
}

double compute_reward(const MoveOutcome& move, const MissionSpec& ms) {
  return compute_reward_terms(move, ms).total();
}

StepResult step(const EpisodeState& es, Action a, const MissionSpec& ms) {
  if (es.done) fail(ErrorKind::usage, "step called on a finished episode");
  StepResult r;
  r.move = apply_action(es, a, ms);
  r.terms = compute_reward_terms(r.move, ms);
  r.reward = r.terms.total();

  EpisodeState next = es;
  next.cell = r.move.next;
  next.position_m = r.move.next_position_m;
  next.step_count = es.step_count + 1;
  next.cumulative_reward = es.cumulative_reward + r.reward;
  if (within_reach(next.position_m, ms)) {
    next.done = true;
    next.reason = Termination::reached;
  } else if (next.step_count >= ms.s_max) {
    next.done = true;
    next.reason = Termination::budget_exhausted;
  }
  r.done = next.done;
  r.state = next;
  return r;
}

TrajectoryScore evaluate_trajectory(std::span<const CellIndex> trajectory, const MissionSpec& ms) {
  const auto& g = ms.geometry();
  TrajectoryScore s;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const CellIndex c = trajectory[i];
    if (c.col < 0 || c.row < 0 || c.col >= g.cols || c.row >= g.rows) {
      fail(ErrorKind::data, "trajectory position " + std::to_string(i) + " is out of bounds");
    }
    if (i == 0) continue;
    const CellIndex p = trajectory[i - 1];
    const int manhattan = std::abs(c.col - p.col) + std::abs(c.row - p.row);
    if (manhattan > 1 || manhattan * g.spacing_m > ms.v_max_mps * ms.dt_s) {
      fail(ErrorKind::data, "trajectory step " + std::to_string(i) +
                                " moves further than one cell (|p(n+1) - p(n)| <= v_max dt violated)");
    }
    ++s.steps;
    if (ms.outage_map->at(c.col, c.row) > ms.outage_event_threshold) ++s.outage_events;
  }
  s.objective = ms.objective_w1 * s.steps + ms.objective_w2 * s.outage_events;
  return s;
}

std::string trajectory_csv(std::span<const TraceRow> rows) {
  std::ostringstream os;
  os.precision(17);
  os << "step,x_m,y_m,reward,outage\n";
  for (const auto& r : rows)
    os << r.step << ',' << r.position_m.x << ',' << r.position_m.y << ',' << r.reward << ','
       << r.outage << '\n';
  return os.str();
}

}  // namespace uavtl::mdp
