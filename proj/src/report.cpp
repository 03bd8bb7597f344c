#include "uavtl/report.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "uavtl/error.hpp"

namespace uavtl::report {

namespace {

using transfer::ArmRun;
using transfer::Comparison;
using transfer::TrainingRecord;

double censored_convergence(const TrainingRecord& r) {
  return static_cast<double>(r.episodes_to_convergence.value_or(r.episodes_run));
}

double censored_success(const TrainingRecord& r) {
  return static_cast<double>(r.episodes_to_95_success.value_or(r.episodes_run));
}

const ArmRun* find_run(const Comparison& c, std::uint64_t seed, std::size_t env, bool transfer_arm) {
  for (const auto& r : c.runs)
    if (r.seed == seed && r.env_index == env && r.transfer == transfer_arm) return &r;
  return nullptr;
}

}  // namespace

std::string format(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format(std::optional<int> v) { return v ? std::to_string(*v) : std::string("NA"); }

std::string transfer_report_csv(const transfer::TransferReport& r) {
  std::ostringstream os;
  os << "env_id,episodes,convergence_ep,success95_ep,time_s,energy_j,eta_time,eta_energy,norm_energy\n";
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    auto ratio = [&](const std::vector<double>& v) { return i < v.size() ? format(v[i]) : std::string("NA"); };
    os << rec.env_id << ',' << rec.episodes_run << ',' << format(rec.episodes_to_convergence) << ','
       << format(rec.episodes_to_95_success) << ',' << format(rec.time_s) << ',' << format(rec.energy_j) << ','
       << ratio(r.ratios.eta_time) << ',' << ratio(r.ratios.eta_energy) << ','
       << ratio(r.ratios.normalized_energy_j) << '\n';
  }
  return os.str();
}

std::string episodes_csv(const TrainingRecord& r) {
  std::ostringstream os;
  os << "episode,reward,success,energy_j,steps\n";
  for (int e = 0; e < r.episodes_run; ++e) {
    os << e + 1 << ',' << format(r.episode_reward[e]) << ',' << (r.episode_success[e] ? 1 : 0) << ','
       << format(r.episode_energy_j[e]) << ',' << r.episode_steps[e] << '\n';
  }
  return os.str();
}

std::string runs_csv(const Comparison& c) {
  std::ostringstream os;
  os << "seed,env_id,arm,episodes,convergence_ep,success95_ep,time_s,energy_j,forward,backward,env_steps,failed\n";
  for (const auto& run : c.runs) {
    const auto& r = run.record;
    os << run.seed << ',' << c.env_ids[run.env_index] << ',' << (run.transfer ? "transfer" : "scratch") << ','
       << r.episodes_run << ',' << format(r.episodes_to_convergence) << ',' << format(r.episodes_to_95_success)
       << ',' << format(r.time_s) << ',' << format(r.energy_j) << ',' << r.work.forward << ',' << r.work.backward
       << ',' << r.work.env_steps << ',' << (r.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string ratios_csv(const Comparison& c) {
  std::ostringstream os;
  os << "seed,env_id,eta_time,eta_energy,matched_time_ratio,matched_energy_ratio\n";
  for (std::uint64_t seed : c.seeds) {
    const ArmRun* base = find_run(c, seed, 0, false);
    for (std::size_t i = 1; i < c.env_ids.size(); ++i) {
      const ArmRun* tl = find_run(c, seed, i, true);
      const ArmRun* sc = find_run(c, seed, i, false);
      auto q = [](const ArmRun* num, const ArmRun* den, bool energy) {
        if (!num || !den) return std::string("NA");
        const double d = energy ? den->record.energy_j : den->record.time_s;
        if (d == 0.0) return std::string("NA");
        return format((energy ? num->record.energy_j : num->record.time_s) / d);
      };
      os << seed << ',' << c.env_ids[i] << ',' << q(tl, base, false) << ',' << q(tl, base, true) << ','
         << q(tl, sc, false) << ',' << q(tl, sc, true) << '\n';
    }
  }
  return os.str();
}

std::vector<TableColumn> comparison_table(const Comparison& c) {
  std::vector<TableColumn> cols;
  for (std::size_t i = 1; i < c.env_ids.size(); ++i) {
    TableColumn col;
    col.env_id = c.env_ids[i];
    for (bool tl : {false, true}) {
      std::vector<double> conv, time, succ, energy;
      for (std::uint64_t seed : c.seeds) {
        const ArmRun* r = find_run(c, seed, i, tl);
        if (!r) continue;
        conv.push_back(censored_convergence(r->record));
        time.push_back(r->record.time_s / 3600.0);
        succ.push_back(censored_success(r->record));
        energy.push_back(r->record.energy_j / 3600.0);
      }
      if (conv.empty()) continue;
      ArmSummary& s = tl ? col.transfer : col.scratch;
      s = {radiomap::median(conv), radiomap::median(time), radiomap::median(succ), radiomap::median(energy)};
    }
    cols.push_back(col);
  }
  return cols;
}

std::string table_csv(const Comparison& c) {
  const auto cols = comparison_table(c);
  std::ostringstream os;
  os << "Metric";
  for (const auto& col : cols) os << ',' << col.env_id << " DDQN," << col.env_id << " Transfer";
  os << '\n';
  auto row = [&](const char* name, double ArmSummary::*field) {
    os << name;
    for (const auto& col : cols) os << ',' << format(col.scratch.*field) << ',' << format(col.transfer.*field);
    os << '\n';
  };
  row("Convergence Episodes", &ArmSummary::convergence_episodes);
  row("Convergence Time (h)", &ArmSummary::time_h);
  row("Episodes to 95% Success Rate", &ArmSummary::success95_episodes);
  row("Energy Consumption (Wh)", &ArmSummary::energy_wh);
  auto savings = [&](const char* name, double ArmSummary::*field) {
    os << name;
    for (const auto& col : cols) {
      const double sc = col.scratch.*field;
      os << ",NA," << (sc == 0.0 ? std::string("NA") : format(transfer::savings_percent(sc, col.transfer.*field)));
    }
    os << '\n';
  };
  savings("Convergence Episodes Savings (%)", &ArmSummary::convergence_episodes);
  savings("Convergence Time Savings (%)", &ArmSummary::time_h);
  savings("Episodes to 95% Success Rate Savings (%)", &ArmSummary::success95_episodes);
  savings("Energy Savings (%)", &ArmSummary::energy_wh);
  os << "Partial," << (c.partial ? "yes" : "no");
  for (std::size_t i = 1; i < 2 * cols.size(); ++i) os << ',';
  os << '\n';
  return os.str();
}

std::string reward_curves_csv(const Comparison& c, std::size_t env_index) {
  std::vector<const ArmRun*> arms;
  std::ostringstream os;
  os << "episode";
  for (std::uint64_t seed : c.seeds) {
    for (bool tl : {false, true}) {
      const ArmRun* r = find_run(c, seed, env_index, tl);
      if (!r) continue;
      arms.push_back(r);
      os << ",seed" << seed << (tl ? "_transfer" : "_scratch");
    }
  }
  os << '\n';
  int rows = 0;
  for (const ArmRun* r : arms) rows = std::max(rows, r->record.episodes_run);
  for (int e = 0; e < rows; ++e) {
    os << e + 1;
    for (const ArmRun* r : arms) {
      os << ',';
      if (e < r->record.episodes_run) os << format(r->record.episode_reward[e]);
      else os << "NA";
    }
    os << '\n';
  }
  return os.str();
}

std::string outage_cells_csv(const radiomap::OutageMap& m) {
  std::ostringstream os;
  os << "col,row,x_m,y_m,outage\n";
  const auto& g = m.geometry;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const Vec2 p = g.cell_center(c, r);
      os << c << ',' << r << ',' << format(p.x) << ',' << format(p.y) << ',' << format(m.values[g.index(c, r)])
         << '\n';
    }
  }
  return os.str();
}

}  // namespace uavtl::report
