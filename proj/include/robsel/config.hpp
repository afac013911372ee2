#pragma once

// Experiment configuration: a flat key/value text format plus the three
// built-in experiment presets.
//
//   # comment
//   k = 10
//   m = 5
//   sampling_var = 1            # a single value is broadcast to k x m
//   prior_var =                 # or k*m row-major values; a line without
//     0.01 0.01 0.01 0.01 0.01  # '=' continues the previous key
//     ...
//
// Keys: k, m, budget, warmup, reps, seed, policy, prior_mean, prior_var,
// sampling_var, true_mean, mean_source (fixed|prior), checkpoints,
// checkpoint_step, rocba_resolve_every, posterior_prior
// (informative|uninformative), threads. Supplying true_mean implies
// mean_source = fixed. prior_var accepts "inf" for the uninformative prior.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robsel/errors.hpp"
#include "robsel/policy.hpp"
#include "robsel/problem.hpp"

namespace robsel {

enum class MeanSource { fixed, prior };

struct ExperimentConfig {
  std::size_t k = 0;
  std::size_t m = 0;
  std::int64_t total_budget = 0;
  std::int64_t warmup = 2;  // n0 samples per pair before the policy takes over
  std::int64_t macro_reps = 1;
  std::uint64_t master_seed = 0;
  PolicyKind policy = PolicyKind::raoda;
  Matrix prior_mean;
  Matrix prior_var;
  Matrix sampling_var;
  MeanSource mean_source = MeanSource::prior;
  Matrix true_mean;  // used when mean_source == fixed
  std::vector<std::int64_t> checkpoints;  // empty: regular grid
  std::int64_t checkpoint_step = 200;
  std::int64_t rocba_resolve_every = 1;
  bool informative_posterior = true;
  unsigned threads = 0;  // 0: hardware concurrency

  std::int64_t warmup_budget() const {
    return warmup * static_cast<std::int64_t>(k * m);
  }

  // Explicit checkpoints, or every checkpoint_step from the end of warmup to
  // the total budget (the total budget is always included).
  std::vector<std::int64_t> budget_checkpoints() const {
    if (!checkpoints.empty()) return checkpoints;
    std::vector<std::int64_t> out;
    for (std::int64_t b = warmup_budget(); b < total_budget; b += checkpoint_step) out.push_back(b);
    out.push_back(total_budget);
    return out;
  }

  Matrix posterior_prior_var() const {
    return informative_posterior ? prior_var : Matrix::Constant(prior_var.rows(), prior_var.cols(), kUninformative);
  }

  void validate() const {
    if (k < 1 || m < 1) throw ConfigError("k and m must be at least 1");
    const auto rows = static_cast<Eigen::Index>(k);
    const auto cols = static_cast<Eigen::Index>(m);
    auto shape = [&](const Matrix& x, const char* name) {
      if (x.rows() != rows || x.cols() != cols) {
        throw ConfigError(std::string(name) + " must have k*m = " + std::to_string(k * m) + " entries");
      }
    };
    shape(prior_mean, "prior_mean");
    shape(prior_var, "prior_var");
    shape(sampling_var, "sampling_var");
    if ((sampling_var.array() <= 0.0).any() || !sampling_var.allFinite())
      throw ConfigError("sampling_var must be positive and finite");
    if ((prior_var.array() <= 0.0).any()) throw ConfigError("prior_var must be positive");
    if (!prior_mean.allFinite()) throw ConfigError("prior_mean must be finite");
    if (mean_source == MeanSource::fixed) {
      shape(true_mean, "true_mean");
      try {
        check_unique_worst_case(true_mean);
      } catch (const AssumptionViolation& e) {
        throw ConfigError(std::string("true_mean: ") + e.what());
      }
    } else if (!prior_var.allFinite()) {
      throw ConfigError("drawing means from the prior needs a finite prior_var");
    }
    if (warmup < 2) throw ConfigError("warmup must be at least 2 samples per pair");
    if (warmup_budget() > total_budget) throw ConfigError("budget is smaller than warmup * k * m");
    if (macro_reps < 1) throw ConfigError("reps must be at least 1");
    if (checkpoint_step < 1) throw ConfigError("checkpoint_step must be positive");
    if (rocba_resolve_every < 1) throw ConfigError("rocba_resolve_every must be positive");
    std::int64_t prev = -1;
    for (std::int64_t c : checkpoints) {
      if (c <= prev) throw ConfigError("checkpoints must be strictly ascending");
      if (c < warmup_budget() || c > total_budget)
        throw ConfigError("checkpoint " + std::to_string(c) + " outside [warmup*k*m, budget]");
      prev = c;
    }
  }
};

namespace detail {

inline std::vector<double> parse_numbers(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ConfigError("key '" + key + "': '" + token + "' is not a number");
    out.push_back(value);
  }
  return out;
}

inline std::int64_t parse_integer(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  long long v = 0;
  std::string rest;
  if (!(in >> v) || (in >> rest)) throw ConfigError("key '" + key + "' expects an integer");
  return v;
}

inline std::string parse_word(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::string w;
  std::string rest;
  if (!(in >> w) || (in >> rest)) throw ConfigError("key '" + key + "' expects a single word");
  return w;
}

inline Matrix to_matrix(const std::string& key, const std::vector<double>& values, std::size_t k,
                        std::size_t m) {
  const auto rows = static_cast<Eigen::Index>(k);
  const auto cols = static_cast<Eigen::Index>(m);
  if (values.size() == 1) return Matrix::Constant(rows, cols, values.front());
  if (values.size() != k * m) {
    throw ConfigError("key '" + key + "' needs 1 or k*m = " + std::to_string(k * m) +
                      " values, got " + std::to_string(values.size()));
  }
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index d = 0; d < cols; ++d) out(i, d) = values[static_cast<std::size_t>(i * cols + d)];
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::string last_key;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (last_key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      entries[last_key] += " " + line;
      continue;
    }
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t\r") + 1);
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (entries.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    entries[key] = line.substr(eq + 1);
    last_key = key;
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second;
    entries.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  };

  ExperimentConfig c;
  c.k = static_cast<std::size_t>(std::max<std::int64_t>(0, detail::parse_integer("k", require("k"))));
  c.m = static_cast<std::size_t>(std::max<std::int64_t>(0, detail::parse_integer("m", require("m"))));
  c.total_budget = detail::parse_integer("budget", require("budget"));
  if (auto v = take("warmup")) c.warmup = detail::parse_integer("warmup", *v);
  if (auto v = take("reps")) c.macro_reps = detail::parse_integer("reps", *v);
  if (auto v = take("seed")) c.master_seed = static_cast<std::uint64_t>(detail::parse_integer("seed", *v));
  if (auto v = take("policy")) c.policy = parse_policy(detail::parse_word("policy", *v));
  c.sampling_var = detail::to_matrix("sampling_var", detail::parse_numbers("sampling_var", require("sampling_var")), c.k, c.m);
  const auto prior_mean = take("prior_mean");
  c.prior_mean = detail::to_matrix("prior_mean", detail::parse_numbers("prior_mean", prior_mean.value_or("0")), c.k, c.m);
  const auto prior_var = take("prior_var");
  c.prior_var = detail::to_matrix("prior_var", detail::parse_numbers("prior_var", prior_var.value_or("inf")), c.k, c.m);
  if (auto v = take("true_mean")) {
    c.true_mean = detail::to_matrix("true_mean", detail::parse_numbers("true_mean", *v), c.k, c.m);
    c.mean_source = MeanSource::fixed;
  }
  if (auto v = take("mean_source")) {
    const auto w = detail::parse_word("mean_source", *v);
    if (w == "fixed") c.mean_source = MeanSource::fixed;
    else if (w == "prior") c.mean_source = MeanSource::prior;
    else throw ConfigError("mean_source must be fixed or prior");
  }
  if (auto v = take("checkpoints")) {
    for (double x : detail::parse_numbers("checkpoints", *v)) c.checkpoints.push_back(static_cast<std::int64_t>(x));
  }
  if (auto v = take("checkpoint_step")) c.checkpoint_step = detail::parse_integer("checkpoint_step", *v);
  if (auto v = take("rocba_resolve_every")) c.rocba_resolve_every = detail::parse_integer("rocba_resolve_every", *v);
  if (auto v = take("posterior_prior")) {
    const auto w = detail::parse_word("posterior_prior", *v);
    if (w == "informative") c.informative_posterior = true;
    else if (w == "uninformative") c.informative_posterior = false;
    else throw ConfigError("posterior_prior must be informative or uninformative");
  }
  if (auto v = take("threads")) c.threads = static_cast<unsigned>(detail::parse_integer("threads", *v));
  if (!entries.empty()) throw ConfigError("unknown key '" + entries.begin()->first + "'");
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Built-in experiments: k = 10 alternatives, m = 5 scenarios, budget 6000,
// 40 warmup samples per pair, means drawn from the prior each replication.
//   exp1: prior N(0, 0.01) for alternative 0 and N(0, 0.02) otherwise, unit
//         sampling variance.
//   exp2: prior variance (3 - 0.1 (i + d))^2, sampling variance 64.
//   exp3: prior variance (i + d)^2, sampling variance 64.
// i and d are counted from one in the variance formulas.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.k = 10;
  c.m = 5;
  c.total_budget = 6000;
  c.warmup = 40;
  c.macro_reps = 10000;
  c.master_seed = 20240601;
  c.mean_source = MeanSource::prior;
  const auto k = static_cast<Eigen::Index>(c.k);
  const auto m = static_cast<Eigen::Index>(c.m);
  c.prior_mean = Matrix::Zero(k, m);
  c.prior_var.resize(k, m);
  if (name == "exp1") {
    c.sampling_var = Matrix::Constant(k, m, 1.0);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index d = 0; d < m; ++d) c.prior_var(i, d) = i == 0 ? 0.01 : 0.02;
  } else if (name == "exp2") {
    c.sampling_var = Matrix::Constant(k, m, 64.0);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index d = 0; d < m; ++d) {
        const double sd = 3.0 - 0.1 * static_cast<double>((i + 1) + (d + 1));
        c.prior_var(i, d) = sd * sd;
      }
  } else if (name == "exp3") {
    c.sampling_var = Matrix::Constant(k, m, 64.0);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index d = 0; d < m; ++d) {
        const double sd = static_cast<double>((i + 1) + (d + 1));
        c.prior_var(i, d) = sd * sd;
      }
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected exp1|exp2|exp3)");
  }
  c.validate();
  return c;
}

}  // namespace robsel
