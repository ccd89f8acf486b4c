#pragma once

#include "rlncs/core.hpp"
#include "rlncs/kernels.hpp"
#include "rlncs/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rlncs {

inline constexpr double kDbFloor = -120.0;

/// Mean over t of ||x_t - x_hat_t||^2 / ||x_t||^2. Throws on empty or
/// mismatched series and on a zero-norm x_t.
double tnmse(const std::vector<Vector>& x, const std::vector<Vector>& x_hat);

/// Same ratio restricted to roi[t] per step; steps with an empty ROI are
/// skipped. nullopt when every step is skipped.
std::optional<double> tnmse_roi(const std::vector<Vector>& x, const std::vector<Vector>& x_hat,
                                const std::vector<IndexSet>& roi);

/// 10 log10(v), floored at kDbFloor.
double to_db(double v);

enum class Method { Rlncs, Rlncs2Layer, Uniform, DirectOnly };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

enum class SweepParam { Tp01, M, Snr, Fault };

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

/// Returns `base` with the swept field set to `value`.
RunConfig apply_param(RunConfig base, SweepParam p, double value);

struct SweepSpec {
  SweepParam param = SweepParam::Tp01;
  std::vector<double> values;
  int seeds = 3;
  RunConfig base;
  std::vector<Method> methods{Method::Rlncs, Method::Uniform};
  kernels::Exec exec = kernels::Exec::OpenMP;

  void validate() const;
};

/// Desk-scale profile: N=100, M=30, T_max=6000, decays scaled so that lambda
/// and epsilon reach zero at T_max / 3.
RunConfig desk_profile(RunConfig base = {});
/// N=200, M=60, T_max=30000, decays 1e-4.
RunConfig full_profile(RunConfig base = {});

/// Metrics of one (point, method, seed) run.
struct RawRow {
  double value = 0.0;
  Method method = Method::Rlncs;
  int seed_index = 0;
  std::uint64_t seed = 0;
  double tnmse_db = 0.0;
  std::optional<double> tnmse_roi_db;
  std::optional<double> recall_pct;
  std::optional<double> action2_pct;
  std::string status = "ok";
  double seconds = 0.0;

  bool ok() const { return status == "ok"; }
};

struct SweepRow {
  double param_value = 0.0;
  Method method = Method::Rlncs;
  double tnmse_db = 0.0;
  std::optional<double> tnmse_roi_db;
  std::optional<double> recall_pct;
  std::optional<double> action2_pct;
  int n_seeds = 0;
  double stderr_db = 0.0;  // standard error of tnmse_db across seeds
};

struct SweepResult {
  std::vector<RawRow> raw;
  std::vector<SweepRow> agg;

  bool all_ok() const;
};

/// Seed of run k at point i. Depends on neither the method nor the schedule.
Rng run_rng(const SweepSpec& spec, std::size_t point, int seed_index);

/// Trains (agent methods) and evaluates one run.
RawRow run_one(const SweepSpec& spec, std::size_t point, Method method, int seed_index);

/// Metrics of a frozen evaluation log.
RawRow metrics_from_log(const std::vector<StepLog>& log, Method method);

/// All (point, method, seed) runs, executed concurrently under spec.exec and
/// returned in spec order, then aggregated.
SweepResult run_sweep(const SweepSpec& spec);

std::vector<SweepRow> aggregate(const std::vector<RawRow>& raw, const std::vector<double>& values,
                                const std::vector<Method>& methods);

void write_raw_csv(std::ostream& out, SweepParam param, const std::vector<RawRow>& rows);
void write_agg_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// raw.csv, agg.csv and config.json under `dir`.
void write_sweep_outputs(const std::filesystem::path& dir, const SweepSpec& spec, const SweepResult& result);

/// Parses agg.csv back; throws std::runtime_error naming a missing column.
std::vector<SweepRow> read_agg_csv(std::istream& in);

}  // namespace rlncs
