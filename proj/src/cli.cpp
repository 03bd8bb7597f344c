#include "uavtl/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <ostream>

#include "uavtl/checkpoint.hpp"
#include "uavtl/config.hpp"
#include "uavtl/report.hpp"

namespace uavtl::cli {

namespace {

namespace fs = std::filesystem;
using config::Json;

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::config, "cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write(const fs::path& p, const std::string& contents) { radiomap::write_text_file(p.string(), contents); }

config::RunConfig load(const std::string& path, const std::optional<std::string>& out) {
  config::RunConfig cfg = config::load_run_config(path);
  if (out) cfg.output_dir = *out;
  return cfg;
}

double mean_outage(const radiomap::OutageMap& m) {
  double s = 0.0;
  for (double v : m.values) s += v;
  return m.values.empty() ? 0.0 : s / static_cast<double>(m.values.size());
}

// Environment summary published next to each checkpoint.
Json environment_summary(const transfer::EnvironmentTask& task, const transfer::TrainingRecord& rec,
                         const std::string& checkpoint) {
  const auto& g = task.mission.geometry();
  const auto& m = *task.mission.outage_map;
  auto rect = [](const Rect& r) { return Json::array({r.x0, r.y0, r.x1, r.y1}); };
  Json j;
  j["env_id"] = task.id;
  j["cols"] = g.cols;
  j["rows"] = g.rows;
  j["spacing_m"] = g.spacing_m;
  j["area_m2"] = task.area_m2();
  j["mean_outage"] = mean_outage(m);
  j["launch_area"] = rect(task.mission.launch_area);
  j["target_area"] = rect(task.mission.target_area);
  j["episodes"] = rec.episodes_run;
  j["convergence_ep"] = rec.episodes_to_convergence ? Json(*rec.episodes_to_convergence) : Json(nullptr);
  j["success95_ep"] = rec.episodes_to_95_success ? Json(*rec.episodes_to_95_success) : Json(nullptr);
  j["energy_j"] = rec.energy_j;
  j["checkpoint"] = checkpoint;
  return j;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  radiomap::write_text_file(p.string(), std::string(bytes.begin(), bytes.end()));
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kUsage;
    case ErrorKind::config:
    case ErrorKind::load: return kConfig;
    case ErrorKind::parse:
    case ErrorKind::data:
    case ErrorKind::domain: return kData;
    case ErrorKind::training: return kTraining;
  }
  return kData;
}

int cmd_gen_env(const GenEnvOptions& o, std::ostream& log) {
  config::RunConfig cfg;
  if (o.config) cfg = config::load_run_config(*o.config);
  propagation::GeneratorConfig g = propagation::preset_by_name(o.preset);
  g.antenna = cfg.antenna;
  const propagation::EnvironmentSpec spec = propagation::generate_environment(g, o.seed);
  const radiomap::SinrGrid sinr = propagation::compute_sinr_map(spec, cfg.channel);
  const radiomap::OutageMap outage = radiomap::sinr_to_outage(sinr, cfg.gamma_th_db);
  const fs::path dir = prepare_dir(o.out);
  write(dir / "environment.json", config::to_json(spec).dump(2) + "\n");
  write(dir / "sinr.grid", radiomap::serialize_grid(sinr));
  write(dir / "outage.map", radiomap::serialize_outage(outage));
  write(dir / "outage_cells.csv", report::outage_cells_csv(outage));
  log << "wrote " << o.preset << " (seed " << o.seed << ", " << sinr.geometry.cols << "x" << sinr.geometry.rows
      << " cells) to " << dir.string() << "\n";
  return kOk;
}

int cmd_ingest(const IngestOptions& o, std::ostream& log) {
  const radiomap::RawGrid raw = radiomap::read_grid_file(o.grid);
  const radiomap::OutageMap outage = config::ingest(raw, o.gamma_th_db, o.cols, o.rows);
  const fs::path dir = prepare_dir(o.out);
  write(dir / "outage.map", radiomap::serialize_outage(outage));
  write(dir / "outage_cells.csv", report::outage_cells_csv(outage));
  log << "ingested " << o.grid << " (" << raw.missing_count() << " missing cells) into " << outage.geometry.cols
      << "x" << outage.geometry.rows << " outage map\n";
  return kOk;
}

int cmd_train(const TrainOptions& o, std::ostream& log) {
  if (o.mode != "scratch" && o.mode != "transfer") fail(ErrorKind::usage, "--mode must be scratch or transfer");
  if (o.mode == "transfer" && !o.base) fail(ErrorKind::usage, "--mode transfer requires --base <checkpoint>");
  if (o.mode == "scratch" && o.base) fail(ErrorKind::usage, "--base is only valid with --mode transfer");
  const config::RunConfig cfg = load(o.config, o.out);
  if (cfg.environments.empty()) fail(ErrorKind::config, "config lists no environments");
  std::size_t index = 0;
  if (o.env) {
    index = cfg.environments.size();
    for (std::size_t i = 0; i < cfg.environments.size(); ++i)
      if (cfg.environments[i].id == *o.env) index = i;
    if (index == cfg.environments.size()) fail(ErrorKind::usage, "no environment with id '" + *o.env + "'");
  }
  const auto& entry = cfg.environments[index];
  const transfer::EnvironmentTask task = config::make_task(entry, config::build_environment(entry, cfg), cfg);
  const std::uint64_t seed = o.seed.value_or(cfg.seeds.front());
  const agent::TrainConfig tc = transfer::effective_config(cfg.train, task);
  const transfer::TrainingSettings ts = transfer::effective_settings(cfg.settings, task);
  const bool tl = o.mode == "transfer";
  agent::DqnAgent agent = tl ? transfer::init_from_base(agent::load_checkpoint(*o.base), tc, ts,
                                                        transfer::agent_seed(seed, index, true))
                             : transfer::make_scratch_agent(tc, transfer::agent_seed(seed, index, false));
  transfer::EnergyMeter meter(cfg.meter_mode, cfg.coefficients);
  transfer::TransferReport rep;
  rep.records.push_back(
      transfer::train_environment(task, agent, ts, meter, transfer::environment_seed(seed, index)));
  const auto& rec = rep.records.front();
  if (!rec.failed && rec.time_s != 0.0 && rec.energy_j != 0.0) rep.ratios = transfer::efficiency_ratios(rep.records);

  const fs::path dir = prepare_dir(cfg.output_dir);
  write(dir / "record.csv", report::transfer_report_csv(rep));
  write(dir / "episodes.csv", report::episodes_csv(rec));
  agent::save_checkpoint(agent.online(), (dir / "final.ckpt").string());
  write(dir / "environment_summary.json", environment_summary(task, rec, "final.ckpt").dump(2) + "\n");
  log << task.id << " " << o.mode << ": " << rec.episodes_run << " episodes, convergence "
      << report::format(rec.episodes_to_convergence) << "\n";
  if (rec.failed) {
    log << "training failed: " << rec.failure << "\n";
    return kTraining;
  }
  return kOk;
}

int cmd_compare(const CompareOptions& o, std::ostream& log) {
  config::RunConfig cfg = load(o.config, o.out);
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.jobs) cfg.jobs = *o.jobs;
  if (cfg.jobs < 1) fail(ErrorKind::usage, "--jobs must be at least 1");
  const auto tasks = config::make_tasks(cfg);
  const transfer::Comparison cmp =
      transfer::run_comparison(tasks, config::continuous_config(cfg, cfg.seeds.front()), cfg.seeds, cfg.jobs);
  const fs::path dir = prepare_dir(cfg.output_dir);
  write(dir / "table.csv", report::table_csv(cmp));
  write(dir / "runs.csv", report::runs_csv(cmp));
  write(dir / "ratios.csv", report::ratios_csv(cmp));
  for (std::size_t i = 1; i < cmp.env_ids.size(); ++i)
    write(dir / ("rewards_" + cmp.env_ids[i] + ".csv"), report::reward_curves_csv(cmp, i));
  log << "compared " << cmp.env_ids.size() << " environments over " << cmp.seeds.size() << " seeds\n";
  if (cmp.partial) {
    log << "partial report: at least one arm failed\n";
    return kTraining;
  }
  return kOk;
}

int cmd_report(const ReportOptions& o, std::ostream& log) {
  const config::RunConfig cfg = load(o.config, o.out);
  const auto tasks = config::make_tasks(cfg);
  const std::uint64_t seed = o.seed.value_or(cfg.seeds.front());
  const transfer::TransferReport rep = transfer::run_continuous(tasks, config::continuous_config(cfg, seed));
  const fs::path dir = prepare_dir(cfg.output_dir);
  write(dir / "report.csv", report::transfer_report_csv(rep));
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const std::string stem = std::to_string(i + 1) + "_" + tasks[i].id;
    write(dir / ("episodes_" + stem + ".csv"), report::episodes_csv(rep.records[i]));
    write_bytes(dir / ("initial_" + stem + ".ckpt"), rep.initial_checkpoints[i]);
    write_bytes(dir / ("final_" + stem + ".ckpt"), rep.final_checkpoints[i]);
    write(dir / ("summary_" + stem + ".json"),
          environment_summary(tasks[i], rep.records[i], "final_" + stem + ".ckpt").dump(2) + "\n");
  }
  log << "trained " << rep.records.size() << " of " << tasks.size() << " environments\n";
  if (rep.aborted) {
    log << "partial report: " << rep.records.back().env_id << " failed: " << rep.records.back().failure << "\n";
    return kTraining;
  }
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"UAV trajectory learning with transfer between radio environments", "uavtl"};
  app.require_subcommand(1);

  GenEnvOptions gen;
  auto* g = app.add_subcommand("gen-env", "Generate a synthetic environment and its radio maps");
  g->add_option("--config", gen.config, "Config file supplying channel, antenna and outage threshold");
  g->add_option("--preset", gen.preset, "Generator preset (env1, env2, open)");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--out", gen.out, "Output directory");

  IngestOptions ing;
  auto* i = app.add_subcommand("ingest", "Convert a SINR grid file into an outage map");
  i->add_option("--grid", ing.grid, "GRID v1 input file")->required();
  i->add_option("--gamma-th", ing.gamma_th_db, "Outage SINR threshold in dB");
  i->add_option("--cols", ing.cols, "Target column count");
  i->add_option("--rows", ing.rows, "Target row count");
  i->add_option("--out", ing.out, "Output directory");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train one environment from scratch or from a base checkpoint");
  t->add_option("--config", tr.config, "Run config")->required();
  t->add_option("--mode", tr.mode, "scratch or transfer");
  t->add_option("--base", tr.base, "Base checkpoint for transfer mode");
  t->add_option("--seed", tr.seed, "Seed (default: first config seed)");
  t->add_option("--env", tr.env, "Environment id (default: first)");
  t->add_option("--out", tr.out, "Output directory");

  CompareOptions cmp;
  auto* c = app.add_subcommand("compare", "Run matched scratch and transfer arms and tabulate them");
  c->add_option("--config", cmp.config, "Run config")->required();
  c->add_option("--seed", cmp.seed, "Run a single seed instead of the config list");
  c->add_option("--jobs", cmp.jobs, "Parallel worker slots");
  c->add_option("--out", cmp.out, "Output directory");

  ReportOptions rp;
  auto* r = app.add_subcommand("report", "Train the environment sequence continuously and report ratios");
  r->add_option("--config", rp.config, "Run config")->required();
  r->add_option("--seed", rp.seed, "Seed (default: first config seed)");
  r->add_option("--out", rp.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen_env(gen, out);
    if (i->parsed()) return cmd_ingest(ing, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (c->parsed()) return cmd_compare(cmp, out);
    return cmd_report(rp, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace uavtl::cli
