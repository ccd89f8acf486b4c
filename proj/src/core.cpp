#include "rlncs/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rlncs {

namespace {

using nlohmann::json;

// Applies f(name, member) to every RunConfig field. The names are the config
// file keys.
template <class Cfg, class F>
void visit_fields(Cfg& c, F&& f) {
  f("n_coeffs", c.n_coeffs);
  f("n_meas", c.n_meas);
  f("sparsity", c.sparsity);
  f("tp01", c.tp01);
  f("corr", c.corr);
  f("sigma_large", c.sigma_large);
  f("sigma_small", c.sigma_small);
  f("eta_roi", c.eta_roi);
  f("eta_nonroi", c.eta_nonroi);
  f("snr_db", c.snr_db);
  f("fault_rate", c.fault_rate);
  f("roi_threshold", c.roi_threshold);
  f("mode", c.mode);
  f("paper_literal_tp10", c.paper_literal_tp10);
  f("saturate_tp10", c.saturate_tp10);
  f("fixed_gaussian", c.fixed_gaussian);
  f("discount", c.discount);
  f("reward_alpha", c.reward_alpha);
  f("ce_weight", c.ce_weight);
  f("th_up", c.th_up);
  f("th_low", c.th_low);
  f("target_sync_period", c.target_sync_period);
  f("lambda0", c.lambda0);
  f("lambda_decay", c.lambda_decay);
  f("eps_decay", c.eps_decay);
  f("eps_schedule", c.eps_schedule);
  f("t_max", c.t_max);
  f("batch_size", c.batch_size);
  f("replay_capacity", c.replay_capacity);
  f("lstm_hidden", c.lstm_hidden);
  f("lstm_layers", c.lstm_layers);
  f("q_hidden1", c.q_hidden1);
  f("q_hidden2", c.q_hidden2);
  f("lr0", c.lr0);
  f("lr_factor", c.lr_factor);
  f("lr_period", c.lr_period);
  f("seq_len", c.seq_len);
  f("grad_clip", c.grad_clip);
  f("paper_init", c.paper_init);
  f("batch_chunks", c.batch_chunks);
  f("eval_horizon", c.eval_horizon);
  f("eval_warmup", c.eval_warmup);
  f("seed", c.seed);
}

void read_value(const std::string& key, const json& v, double& out) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") {
      out = kInf;
      return;
    }
    if (s == "-inf") {
      out = -kInf;
      return;
    }
    throw ConfigError(key, "expected a number, got string '" + s + "'");
  }
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  out = v.get<double>();
}

void read_value(const std::string& key, const json& v, int& out) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  out = v.get<int>();
}

void read_value(const std::string& key, const json& v, std::uint64_t& out) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError(key, "expected a non-negative integer");
  out = v.get<std::uint64_t>();
}

void read_value(const std::string& key, const json& v, bool& out) {
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  out = v.get<bool>();
}

void read_value(const std::string& key, const json& v, SignalMode& out) {
  const auto s = v.is_string() ? v.get<std::string>() : std::string{};
  if (s == "canonical")
    out = SignalMode::Canonical;
  else if (s == "dct")
    out = SignalMode::Dct;
  else
    throw ConfigError(key, "expected \"canonical\" or \"dct\"");
}

void read_value(const std::string& key, const json& v, EpsilonSchedule& out) {
  const auto s = v.is_string() ? v.get<std::string>() : std::string{};
  if (s == "linear")
    out = EpsilonSchedule::Linear;
  else if (s == "exponential")
    out = EpsilonSchedule::Exponential;
  else
    throw ConfigError(key, "expected \"linear\" or \"exponential\"");
}

json to_json_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}
json to_json_value(int v) { return v; }
json to_json_value(std::uint64_t v) { return v; }
json to_json_value(bool v) { return v; }
json to_json_value(SignalMode v) { return std::string(to_string(v)); }
json to_json_value(EpsilonSchedule v) { return std::string(to_string(v)); }

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::string_view to_string(SignalMode mode) {
  return mode == SignalMode::Canonical ? "canonical" : "dct";
}

std::string_view to_string(EpsilonSchedule schedule) {
  return schedule == EpsilonSchedule::Linear ? "linear" : "exponential";
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  require(c.n_coeffs >= 1, "n_coeffs", "must be positive");
  require(c.n_meas >= 1, "n_meas", "must be positive");
  require(c.n_meas <= c.n_coeffs, "n_meas", "must not exceed n_coeffs");
  require(c.sparsity > 0.0 && c.sparsity < 1.0, "sparsity", "must lie in (0, 1)");
  require(is_probability(c.tp01), "tp01", "must lie in [0, 1]");
  require(is_probability(c.corr), "corr", "must lie in [0, 1]");
  require(c.sigma_large >= 0.0, "sigma_large", "must be non-negative");
  require(c.sigma_small >= 0.0, "sigma_small", "must be non-negative");
  require(c.eta_roi > 0.0, "eta_roi", "must be positive");
  require(c.eta_nonroi > 0.0, "eta_nonroi", "must be positive");
  require(!std::isnan(c.snr_db), "snr_db", "must be a number");
  require(is_probability(c.fault_rate), "fault_rate", "must lie in [0, 1]");
  require(c.roi_threshold > 0.0, "roi_threshold", "must be positive");
  require(is_probability(c.discount) && c.discount < 1.0, "discount", "must lie in [0, 1)");
  require(c.reward_alpha >= 0.0 && c.reward_alpha < 1.0, "reward_alpha", "must lie in [0, 1)");
  require(c.ce_weight > 0.0, "ce_weight", "must be positive");
  require(is_probability(c.th_up), "th_up", "must lie in [0, 1]");
  require(is_probability(c.th_low), "th_low", "must lie in [0, 1]");
  require(c.th_up > c.th_low, "th_up", "must be greater than th_low");
  require(c.target_sync_period >= 1, "target_sync_period", "must be positive");
  require(is_probability(c.lambda0), "lambda0", "must lie in [0, 1]");
  require(c.lambda_decay >= 0.0, "lambda_decay", "must be non-negative");
  require(c.eps_decay >= 0.0, "eps_decay", "must be non-negative");
  require(c.t_max >= 1, "t_max", "must be positive");
  require(c.batch_size >= 1, "batch_size", "must be positive");
  require(c.seq_len >= 1, "seq_len", "must be positive");
  require(c.replay_capacity >= c.batch_size + c.seq_len, "replay_capacity",
          "must hold at least batch_size + seq_len transitions");
  require(c.lstm_hidden >= 1, "lstm_hidden", "must be positive");
  require(c.lstm_layers == 1 || c.lstm_layers == 2, "lstm_layers", "must be 1 or 2");
  require(c.q_hidden1 >= 1, "q_hidden1", "must be positive");
  require(c.q_hidden2 >= 1, "q_hidden2", "must be positive");
  require(c.lr0 > 0.0, "lr0", "must be positive");
  require(c.lr_factor > 0.0 && c.lr_factor <= 1.0, "lr_factor", "must lie in (0, 1]");
  require(c.lr_period >= 1, "lr_period", "must be positive");
  require(c.grad_clip > 0.0, "grad_clip", "must be positive");
  require(c.batch_chunks >= 1, "batch_chunks", "must be positive");
  require(c.eval_horizon >= 1, "eval_horizon", "must be positive");
  require(c.eval_warmup >= 0 && c.eval_warmup <= c.t_max, "eval_warmup", "must lie in [0, t_max]");
}

RunConfig parse_config(std::string_view json_text, RunConfig base) {
  json doc = json::object();
  const bool blank = std::all_of(json_text.begin(), json_text.end(),
                                 [](char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; });
  try {
    if (!blank) doc = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  if (doc.is_null()) doc = json::object();
  if (!doc.is_object()) throw ConfigError("", "config must be a flat JSON object");

  std::vector<std::string> known;
  visit_fields(base, [&](const char* name, auto& member) {
    known.emplace_back(name);
    if (auto it = doc.find(name); it != doc.end()) read_value(name, *it, member);
  });
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(key, "unknown config key");
  }
  validate(base);
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const RunConfig& cfg) {
  json doc = json::object();
  visit_fields(cfg, [&](const char* name, const auto& member) { doc[name] = to_json_value(member); });
  return doc.dump(2);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::string_view label) const {
  return Rng(splitmix64(seed_ ^ splitmix64(fnv1a(label))));
}

double Rng::uniform() { return unif_(engine_); }

double Rng::normal(double mean, double stddev) { return mean + stddev * gauss_(engine_); }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ParameterError("Rng::index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Vector indicator(const IndexSet& roi, Index n) {
  Vector s = Vector::Zero(n);
  for (Index i : roi) {
    if (i < 0 || i >= n) throw ParameterError("index " + std::to_string(i) + " out of range");
    s[i] = 1.0;
  }
  return s;
}

IndexSet ones_of(const Vector& binary) {
  IndexSet out;
  for (Index i = 0; i < binary.size(); ++i)
    if (binary[i] > 0.5) out.push_back(i);
  return out;
}

}  // namespace rlncs
