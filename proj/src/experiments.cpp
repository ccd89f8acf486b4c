#include "rlncs/experiments.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rlncs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<double> mean_present(const std::vector<double>& v) {
  double sum = 0.0;
  int n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

bool is_agent(Method m) { return m == Method::Rlncs || m == Method::Rlncs2Layer; }

}  // namespace

double tnmse(const std::vector<Vector>& x, const std::vector<Vector>& x_hat) {
  if (x.empty() || x.size() != x_hat.size()) throw ParameterError("tnmse: series must be nonempty and equal length");
  double sum = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double den = x[t].squaredNorm();
    if (den == 0.0) throw ParameterError("tnmse: zero-norm signal at step " + std::to_string(t));
    sum += (x[t] - x_hat[t]).squaredNorm() / den;
  }
  return sum / static_cast<double>(x.size());
}

std::optional<double> tnmse_roi(const std::vector<Vector>& x, const std::vector<Vector>& x_hat,
                                const std::vector<IndexSet>& roi) {
  if (x.empty() || x.size() != x_hat.size() || x.size() != roi.size())
    throw ParameterError("tnmse_roi: series must be nonempty and equal length");
  double sum = 0.0;
  int used = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (roi[t].empty()) continue;
    double num = 0.0, den = 0.0;
    for (Index i : roi[t]) {
      num += (x[t][i] - x_hat[t][i]) * (x[t][i] - x_hat[t][i]);
      den += x[t][i] * x[t][i];
    }
    if (den == 0.0) throw ParameterError("tnmse_roi: zero-norm ROI signal at step " + std::to_string(t));
    sum += num / den;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return sum / used;
}

double to_db(double v) {
  if (!(v > 0.0)) return v == 0.0 ? kDbFloor : kNaN;
  return std::max(kDbFloor, 10.0 * std::log10(v));
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Rlncs: return "rlncs";
    case Method::Rlncs2Layer: return "rlncs-2layer";
    case Method::Uniform: return "uniform";
    case Method::DirectOnly: return "direct-only";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Rlncs, Method::Rlncs2Layer, Method::Uniform, Method::DirectOnly})
    if (to_string(m) == name) return m;
  throw ParameterError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Tp01: return "tp01";
    case SweepParam::M: return "m";
    case SweepParam::Snr: return "snr";
    case SweepParam::Fault: return "fault";
  }
  return "?";
}

SweepParam parse_sweep_param(std::string_view name) {
  for (SweepParam p : {SweepParam::Tp01, SweepParam::M, SweepParam::Snr, SweepParam::Fault})
    if (to_string(p) == name) return p;
  throw ParameterError("unknown sweep parameter '" + std::string(name) + "'");
}

RunConfig apply_param(RunConfig base, SweepParam p, double value) {
  switch (p) {
    case SweepParam::Tp01: base.tp01 = value; break;
    case SweepParam::M:
      if (value != std::floor(value)) throw ParameterError("apply_param: m must be an integer");
      base.n_meas = static_cast<int>(value);
      break;
    case SweepParam::Snr: base.snr_db = value; break;
    case SweepParam::Fault: base.fault_rate = value; break;
  }
  return base;
}

void SweepSpec::validate() const {
  if (values.empty()) throw ParameterError("sweep: value list is empty");
  if (seeds < 1) throw ParameterError("sweep: need at least one seed per point");
  if (methods.empty()) throw ParameterError("sweep: no methods");
  for (double v : values) rlncs::validate(apply_param(base, param, v));
}

RunConfig desk_profile(RunConfig base) {
  base.n_coeffs = 100;
  base.n_meas = 30;
  base.t_max = 6000;
  base.lambda_decay = 3.0 / base.t_max;
  base.eps_decay = 3.0 / base.t_max;
  return base;
}

RunConfig full_profile(RunConfig base) {
  base.n_coeffs = 200;
  base.n_meas = 60;
  base.t_max = 30000;
  base.lambda_decay = 1e-4;
  base.eps_decay = 1e-4;
  return base;
}

bool SweepResult::all_ok() const {
  for (const RawRow& r : raw)
    if (!r.ok()) return false;
  return true;
}

Rng run_rng(const SweepSpec& spec, std::size_t point, int seed_index) {
  return Rng(spec.base.seed).split("point/" + std::to_string(point) + "/seed/" + std::to_string(seed_index));
}

RawRow metrics_from_log(const std::vector<StepLog>& log, Method method) {
  if (log.empty()) throw ParameterError("metrics_from_log: empty log");
  std::vector<double> nmse, nmse_roi, recall;
  double learned = 0.0;
  for (const StepLog& s : log) {
    nmse.push_back(s.nmse);
    nmse_roi.push_back(s.nmse_roi);
    recall.push_back(s.recall);
    if (s.action == ActionId::Learned) learned += 1.0;
  }
  RawRow row;
  row.method = method;
  const auto overall = mean_present(nmse);
  row.tnmse_db = overall ? to_db(*overall) : kNaN;
  if (auto r = mean_present(nmse_roi)) row.tnmse_roi_db = to_db(*r);
  if (auto r = mean_present(recall)) row.recall_pct = 100.0 * *r;
  if (is_agent(method)) row.action2_pct = 100.0 * learned / static_cast<double>(log.size());
  return row;
}

RawRow run_one(const SweepSpec& spec, std::size_t point, Method method, int seed_index) {
  const auto started = std::chrono::steady_clock::now();
  const Rng rng = run_rng(spec, point, seed_index);
  RunConfig cfg = apply_param(spec.base, spec.param, spec.values.at(point));
  cfg.seed = rng.seed();
  if (method == Method::Rlncs2Layer) cfg.lstm_layers = 2;

  RawRow row;
  try {
    std::vector<StepLog> log;
    const Rng eval_rng = rng.split("eval");
    if (is_agent(method)) {
      TrainOutcome out = run_training(cfg, rng);
      log = evaluate_policy(out.online, out.lstm, cfg, cfg.eval_horizon, std::move(out.final_state), eval_rng,
                            EvalPolicy::Agent);
    } else if (method == Method::Uniform) {
      log = evaluate_policy({}, {}, cfg, cfg.eval_horizon, advanced_start(cfg, rng, cfg.t_max), eval_rng,
                            EvalPolicy::Uniform);
    } else {
      // Warm-up steps let the carried-forward ROI settle; they end where training ends.
      log = evaluate_policy({}, {}, cfg, cfg.eval_warmup + cfg.eval_horizon,
                            advanced_start(cfg, rng, cfg.t_max - cfg.eval_warmup), eval_rng, EvalPolicy::DirectOnly);
      log.erase(log.begin(), log.begin() + cfg.eval_warmup);
    }
    row = metrics_from_log(log, method);
  } catch (const std::exception& e) {
    row.method = method;
    row.tnmse_db = kNaN;
    row.status = std::string("error: ") + e.what();
  }
  row.value = spec.values[point];
  row.seed_index = seed_index;
  row.seed = rng.seed();
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Task {
    std::size_t point;
    Method method;
    int seed;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    for (Method m : spec.methods)
      for (int k = 0; k < spec.seeds; ++k) tasks.push_back({i, m, k});

  SweepResult result;
  result.raw.resize(tasks.size());
  kernels::parallel_for(tasks.size(), spec.exec, [&](std::size_t j) {
    result.raw[j] = run_one(spec, tasks[j].point, tasks[j].method, tasks[j].seed);
  });
  result.agg = aggregate(result.raw, spec.values, spec.methods);
  return result;
}

std::vector<SweepRow> aggregate(const std::vector<RawRow>& raw, const std::vector<double>& values,
                                const std::vector<Method>& methods) {
  std::vector<SweepRow> rows;
  for (double v : values) {
    for (Method m : methods) {
      std::vector<double> db, roi, rec, act;
      for (const RawRow& r : raw) {
        if (r.value != v || r.method != m || !r.ok()) continue;
        db.push_back(r.tnmse_db);
        roi.push_back(r.tnmse_roi_db.value_or(kNaN));
        rec.push_back(r.recall_pct.value_or(kNaN));
        act.push_back(r.action2_pct.value_or(kNaN));
      }
      SweepRow row;
      row.param_value = v;
      row.method = m;
      row.n_seeds = static_cast<int>(db.size());
      row.tnmse_db = mean_present(db).value_or(kNaN);
      row.tnmse_roi_db = mean_present(roi);
      row.recall_pct = mean_present(rec);
      row.action2_pct = mean_present(act);
      if (db.size() > 1) {
        double ss = 0.0;
        for (double x : db) ss += (x - row.tnmse_db) * (x - row.tnmse_db);
        row.stderr_db = std::sqrt(ss / static_cast<double>(db.size() - 1)) / std::sqrt(static_cast<double>(db.size()));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_raw_csv(std::ostream& out, SweepParam param, const std::vector<RawRow>& rows) {
  out << "param,value,method,seed_index,seed,tnmse_db,tnmse_roi_db,recall_pct,action2_pct,status,seconds\n";
  for (const RawRow& r : rows) {
    std::string status = r.status;
    for (char& c : status)
      if (c == ',' || c == '\n') c = ';';
    out << to_string(param) << ',' << fmt(r.value) << ',' << to_string(r.method) << ',' << r.seed_index << ','
        << r.seed << ',' << fmt(r.tnmse_db) << ',' << fmt(r.tnmse_roi_db) << ',' << fmt(r.recall_pct) << ','
        << fmt(r.action2_pct) << ',' << status << ',' << fmt(r.seconds) << '\n';
  }
}

void write_agg_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param_value,method,tnmse_db,tnmse_roi_db,recall_pct,action2_pct,n_seeds,stderr\n";
  for (const SweepRow& r : rows) {
    out << fmt(r.param_value) << ',' << to_string(r.method) << ',' << fmt(r.tnmse_db) << ',' << fmt(r.tnmse_roi_db)
        << ',' << fmt(r.recall_pct) << ',' << fmt(r.action2_pct) << ',' << r.n_seeds << ',' << fmt(r.stderr_db)
        << '\n';
  }
}

void write_sweep_outputs(const std::filesystem::path& dir, const SweepSpec& spec, const SweepResult& result) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("raw.csv");
    write_raw_csv(f, spec.param, result.raw);
  }
  {
    auto f = open("agg.csv");
    write_agg_csv(f, result.agg);
  }
  nlohmann::json j;
  j["param"] = std::string(to_string(spec.param));
  j["values"] = spec.values;
  j["seeds"] = spec.seeds;
  std::vector<std::string> methods;
  for (Method m : spec.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  j["base"] = nlohmann::json::parse(serialize_config(spec.base));
  auto f = open("config.json");
  f << j.dump(2) << '\n';
}

std::vector<SweepRow> read_agg_csv(std::istream& in) {
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("agg.csv: empty input");
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name :
       {"param_value", "method", "tnmse_db", "tnmse_roi_db", "recall_pct", "action2_pct", "n_seeds", "stderr"})
    if (!col.count(name)) throw std::runtime_error(std::string("agg.csv: missing column '") + name + "'");

  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::runtime_error("agg.csv: ragged row '" + line + "'");
    const auto num = [&](const char* name) { return cells[col.at(name)].empty() ? kNaN : std::stod(cells[col.at(name)]); };
    const auto opt = [&](const char* name) -> std::optional<double> {
      if (cells[col.at(name)].empty()) return std::nullopt;
      return std::stod(cells[col.at(name)]);
    };
    SweepRow r;
    r.param_value = num("param_value");
    r.method = parse_method(cells[col.at("method")]);
    r.tnmse_db = num("tnmse_db");
    r.tnmse_roi_db = opt("tnmse_roi_db");
    r.recall_pct = opt("recall_pct");
    r.action2_pct = opt("action2_pct");
    r.n_seeds = std::stoi(cells[col.at("n_seeds")]);
    r.stderr_db = num("stderr");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace rlncs
