// mmv2x: run scenarios and sweeps, tabulate A-BFT collisions, evaluate a
// single link budget.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <mmv2x/config.hpp>
#include <mmv2x/engine.hpp>
#include <mmv2x/report.hpp>

namespace fs = std::filesystem;
using namespace mmv2x;

namespace {

struct ScenarioArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string strategy;
};

void add_scenario_options(CLI::App* app, ScenarioArgs& a) {
  app->add_option("--config", a.config_path, "Scenario JSON or run manifest")->check(CLI::ExistingFile);
  app->add_option("--set", a.overrides, "Override a field, KEY=VALUE (repeatable)");
  app->add_option("--seed", a.seed, "Master seed");
  app->add_option("--strategy", a.strategy, "Beam management strategy")
      ->check(CLI::IsMember({"legacy", "samba"}));
}

ScenarioConfig resolve(const ScenarioArgs& a) {
  ScenarioConfig base = a.config_path.empty() ? ScenarioConfig{} : load_scenario(a.config_path);
  std::vector<std::string> all = a.overrides;
  if (a.seed) all.push_back("master_seed=" + std::to_string(*a.seed));
  if (!a.strategy.empty()) all.push_back("strategy=" + a.strategy);
  ScenarioConfig cfg = with_overrides(base, all);
  cfg.validate();
  return cfg;
}

/// Options stored in a manifest given as --config, so re-running a manifest
/// reproduces its outputs without repeating the flags.
Json manifest_options(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const Json doc = parse_json_text(buf.str(), path);
  if (doc.is_object() && doc.contains("manifest_version") && doc.contains("options"))
    return doc.at("options");
  return Json::object();
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

std::vector<std::string> recorded_overrides(const ScenarioArgs& a) {
  std::vector<std::string> all = a.overrides;
  if (a.seed) all.push_back("master_seed=" + std::to_string(*a.seed));
  if (!a.strategy.empty()) all.push_back("strategy=" + a.strategy);
  return all;
}

void print_summary(const MetricsRecord& m, const ScenarioConfig& cfg) {
  fmt::print("strategy               {}\n", to_string(cfg.strategy));
  fmt::print("vehicles               {}\n", m.vehicle_rate_bps.size());
  fmt::print("measured_s             {}\n", m.measured_time);
  fmt::print("mean_rate_bps          {:.6g}\n", m.mean_rate_bps);
  fmt::print("network_throughput_bps {:.6g}\n", m.network_throughput_bps);
  fmt::print("misalignment_fraction  {:.4f}\n", m.misalignment_fraction);
  fmt::print("outage_fraction        {:.4f}\n", m.outage_fraction);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded mmWave V2I beam-management simulator"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);

  // run
  ScenarioArgs run_args;
  std::string run_out;
  double sample_interval = 0.1;
  double trajectory_interval = 0.0;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario; writes metrics.csv and manifest.json");
  add_scenario_options(run_cmd, run_args);
  run_cmd->add_option("--out", run_out, "Output directory")->required();
  auto* sample_opt = run_cmd->add_option("--sample-interval", sample_interval,
                                         "Seconds between metrics.csv samples (0: none)");
  auto* traj_opt = run_cmd->add_option("--trajectory-interval", trajectory_interval,
                                       "Seconds between trajectory.csv rows (0: no file)");

  // sweep
  ScenarioArgs sweep_args;
  std::string sweep_out;
  std::string axis;
  std::vector<double> values;
  int replications = 3;
  std::vector<std::string> strategies{"legacy", "samba"};
  unsigned threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one numeric parameter; writes sweep.csv");
  add_scenario_options(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--axis", axis, "Top-level numeric config field")->required();
  sweep_cmd->add_option("--values", values, "Axis values")->required()->delimiter(',');
  sweep_cmd->add_option("--replications", replications, "Replications per value")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--strategies", strategies, "Strategies to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"legacy", "samba"}));
  sweep_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
  sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();

  // collisions
  int x_min = 1, x_max = 16, v_min = 1, v_max = 20, trials = 100000;
  std::uint64_t coll_seed = 1;
  std::string coll_out;
  auto* coll_cmd = app.add_subcommand("collisions", "Tabulate A-BFT collision probabilities");
  coll_cmd->add_option("--x-min", x_min, "Fewest slots");
  coll_cmd->add_option("--x-max", x_max, "Most slots");
  coll_cmd->add_option("--v-min", v_min, "Fewest vehicles");
  coll_cmd->add_option("--v-max", v_max, "Most vehicles");
  coll_cmd->add_option("--trials", trials, "Monte Carlo trials per cell");
  coll_cmd->add_option("--seed", coll_seed, "Seed of the Monte Carlo draws");
  coll_cmd->add_option("--out", coll_out, "CSV file (default: stdout)");

  // linkbudget
  ScenarioArgs lb_args;
  double distance = 20.0;
  std::optional<double> theta_deg;
  double shadow = 0.0;
  auto* lb_cmd = app.add_subcommand("linkbudget", "Evaluate one link");
  lb_cmd->add_option("--config", lb_args.config_path, "Scenario JSON or run manifest")
      ->check(CLI::ExistingFile);
  lb_cmd->add_option("--set", lb_args.overrides, "Override a field, KEY=VALUE (repeatable)");
  lb_cmd->add_option("--distance", distance, "Link length in metres");
  lb_cmd->add_option("--theta", theta_deg, "Beamwidth in degrees (default: fixed_beamwidth)");
  lb_cmd->add_option("--shadow", shadow, "Shadow fading in dB");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) {
      const ScenarioConfig cfg = resolve(run_args);
      const Json stored = manifest_options(run_args.config_path);
      if (sample_opt->count() == 0 && stored.contains("sample_interval"))
        sample_interval = stored.at("sample_interval").get<double>();
      if (traj_opt->count() == 0 && stored.contains("trajectory_interval"))
        trajectory_interval = stored.at("trajectory_interval").get<double>();
      if (sample_interval < 0.0 || trajectory_interval < 0.0)
        throw ConfigError("sample-interval", "intervals must be >= 0");

      const fs::path dir(run_out);
      ensure_dir(dir);
      RunOptions opt;
      opt.sample_interval = sample_interval;
      opt.trajectory_interval = trajectory_interval;
      const MetricsRecord m = run(cfg, opt);

      auto metrics = open_output(dir / "metrics.csv");
      write_metrics_csv(metrics, m.samples);
      auto summary = open_output(dir / "vehicles.csv");
      write_vehicle_summary_csv(summary, m);
      if (trajectory_interval > 0.0) {
        auto traj = open_output(dir / "trajectory.csv");
        write_trajectory_csv(traj, m.trajectory);
      }
      const Json options{{"sample_interval", sample_interval},
                         {"trajectory_interval", trajectory_interval}};
      auto manifest = open_output(dir / "manifest.json");
      manifest << make_manifest("run", cfg, recorded_overrides(run_args), options).dump(2) << "\n";
      print_summary(m, cfg);
      return 0;
    }

    if (*sweep_cmd) {
      const ScenarioConfig base = resolve(sweep_args);
      if (!is_sweepable(base, axis)) throw ConfigError(axis, "not a sweepable numeric parameter");
      if (!sweep_args.strategy.empty()) strategies = {sweep_args.strategy};
      const fs::path dir(sweep_out);
      ensure_dir(dir);
      auto csv = open_output(dir / "sweep.csv");
      csv << kSweepHeader;
      for (const auto& s : strategies) {
        ScenarioConfig cfg = base;
        cfg.strategy = strategy_from_string(s);
        const auto rows = sweep(cfg, axis, values, replications, threads);
        write_sweep_rows(csv, rows);
        write_sweep_rows(std::cout, rows);
      }
      const Json options{{"axis", axis},
                         {"values", values},
                         {"replications", replications},
                         {"strategies", strategies}};
      auto manifest = open_output(dir / "manifest.json");
      manifest << make_manifest("sweep", base, recorded_overrides(sweep_args), options).dump(2) << "\n";
      return 0;
    }

    if (*coll_cmd) {
      const auto rows = collision_table(x_min, x_max, v_min, v_max, trials, coll_seed);
      if (coll_out.empty()) {
        write_collisions_csv(std::cout, rows);
      } else {
        auto out = open_output(coll_out);
        write_collisions_csv(out, rows);
      }
      return 0;
    }

    if (*lb_cmd) {
      const ScenarioConfig cfg = resolve(lb_args);
      const double theta = theta_deg ? deg_to_rad(*theta_deg) : cfg.fixed_beamwidth;
      write_link_budget(std::cout, link_budget(distance, theta, shadow, cfg));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
