#include "rlncs/experiments.hpp"
#include "rlncs/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace rlncs;

RunConfig config_from(const std::string& path, RunConfig base = {}) {
  return path.empty() ? base : load_config(path, base);
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  RunConfig cfg = config_from(config_path);
  if (seed) cfg.seed = *seed;
  validate(cfg);
  const TrainOutcome out = run_training(cfg, Rng(cfg.seed));

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "steps.csv");
    write_step_log(f, out.log);
  }
  {
    std::ofstream f(dir / "episodes.csv");
    f << "episode,tnmse,tnmse_db\n";
    for (std::size_t k = 0; k < out.episode_tnmse.size(); ++k)
      f << k + 1 << ',' << out.episode_tnmse[k] << ',' << to_db(out.episode_tnmse[k]) << '\n';
  }
  {
    std::ofstream f(dir / "config.json");
    f << serialize_config(cfg) << '\n';
  }
  save_checkpoint(dir / "checkpoint.txt", {out.online, out.target, out.lstm});

  const auto eval = evaluate_policy(out.online, out.lstm, cfg, cfg.eval_horizon, out.final_state,
                                    Rng(cfg.seed).split("eval"));
  const RawRow m = metrics_from_log(eval, Method::Rlncs);
  std::printf("steps %d  updates %ld  solver_failures %ld  wall %.1fs\n", cfg.t_max, out.updates,
              out.solver_failures, out.wall_seconds);
  std::printf("eval T=%d  tnmse %.2f dB  roi %.2f dB  recall %.1f%%  action2 %.1f%%\n", cfg.eval_horizon, m.tnmse_db,
              m.tnmse_roi_db.value_or(std::nan("")), m.recall_pct.value_or(std::nan("")),
              m.action2_pct.value_or(0.0));
  return 0;
}

int cmd_sweep(const std::string& param, const std::vector<double>& values, const std::string& mode,
              const std::vector<std::string>& methods, bool full, const std::string& out_dir,
              const std::string& config_path, int seeds, bool serial) {
  SweepSpec spec;
  spec.param = parse_sweep_param(param);
  spec.values = values;
  RunConfig base = full ? full_profile() : desk_profile();
  base.mode = mode == "dct" ? SignalMode::Dct : SignalMode::Canonical;
  spec.base = config_from(config_path, base);
  spec.seeds = seeds;
  spec.methods.clear();
  for (const auto& m : methods) spec.methods.push_back(parse_method(m));
  spec.exec = serial ? kernels::Exec::Serial : kernels::Exec::OpenMP;

  const SweepResult result = run_sweep(spec);
  write_sweep_outputs(out_dir, spec, result);
  write_agg_csv(std::cout, result.agg);
  for (const RawRow& r : result.raw)
    if (!r.ok()) std::cerr << to_string(r.method) << " value=" << r.value << " seed=" << r.seed_index << ": "
                           << r.status << '\n';
  return result.all_ok() ? 0 : 1;
}

int cmd_trajectory(const std::string& config_path, std::optional<std::uint64_t> seed, int steps,
                   const std::string& out_path) {
  RunConfig cfg = config_from(config_path);
  if (seed) cfg.seed = *seed;
  validate(cfg);
  Rng rng = Rng(cfg.seed).split("trajectory");
  const Matrix theta = cfg.mode == SignalMode::Dct ? dct_matrix(cfg.n_coeffs) : Matrix();
  SignalState s = initial_state(cfg, rng);
  std::ofstream file;
  if (!out_path.empty()) file.open(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "t,index,x,d\n";
  for (int t = 0; t < steps; ++t) {
    if (t > 0) s = step_signal(s, cfg, theta, rng);
    for (Index i = 0; i < s.x.size(); ++i) out << t << ',' << i << ',' << s.x[i] << ',' << s.d[i] << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-uniform compressed sensing driven by a learned ROI predictor"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;

  auto* train = app.add_subcommand("train", "Train one agent and write its logs and checkpoint");
  train->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--out", out_dir, "Output directory");

  std::string param, mode = "canonical", sweep_out;
  std::vector<double> values;
  std::vector<std::string> methods{"rlncs", "uniform"};
  bool full = false, serial = false;
  int seeds = 3;
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate every method over a parameter sweep");
  sweep->add_option("--param", param, "Swept parameter")->required()->check(CLI::IsMember({"tp01", "m", "snr", "fault"}));
  sweep->add_option("--values", values, "Parameter values")->required();
  sweep->add_option("--mode", mode, "Signal model")->check(CLI::IsMember({"canonical", "dct"}));
  sweep->add_option("--methods", methods, "rlncs, rlncs-2layer, uniform, direct-only");
  sweep->add_flag("--full", full, "Full-size profile instead of the desk profile");
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--config", config_path, "JSON overrides applied on top of the profile")->check(CLI::ExistingFile);
  sweep->add_option("--seeds", seeds, "Runs per point")->check(CLI::PositiveNumber);
  sweep->add_flag("--serial", serial, "Run tasks one at a time");

  int steps = 100;
  std::string traj_out;
  auto* traj = app.add_subcommand("trajectory", "Dump a simulated signal as t,index,x,d rows");
  traj->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  traj->add_option("--seed", seed, "Override the config seed");
  traj->add_option("--steps", steps, "Number of time steps")->check(CLI::PositiveNumber);
  traj->add_option("--out", traj_out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, seed, out_dir);
    if (*sweep) return cmd_sweep(param, values, mode, methods, full, sweep_out, config_path, seeds, serial);
    if (*traj) return cmd_trajectory(config_path, seed, steps, traj_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error (" << e.field() << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
