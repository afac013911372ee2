#pragma once

// Sequential allocate-simulate-update loop, macro-replication driver, PCS
// curves, the posterior PCS bound estimator and CSV output.
//
// Randomness for replication r is addressed by (master_seed, r, stream):
// every pair has its own observation stream (so all policies see the same
// sample path for a pair), and true means come from separate streams, one per
// redraw attempt.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "robsel/baselines.hpp"
#include "robsel/config.hpp"
#include "robsel/errors.hpp"
#include "robsel/policy.hpp"
#include "robsel/problem.hpp"
#include "robsel/rng.hpp"

namespace robsel {

inline constexpr std::uint64_t kMeanStreamBase = std::uint64_t{1} << 40;
inline constexpr int kMaxMeanRedraws = 1000;

inline std::uint64_t observation_stream(PairIndex p, std::size_t scenarios) {
  return 1 + static_cast<std::uint64_t>(p.alternative * scenarios + p.scenario);
}

struct DrawnMeans {
  Matrix means;
  std::size_t redraws = 0;
};

// True means for replication r: the configured matrix, or a draw from the
// prior, redrawn from the next stream while the draw has tied worst cases.
inline DrawnMeans draw_true_means(const ExperimentConfig& config, std::uint64_t replication) {
  if (config.mean_source == MeanSource::fixed) return {config.true_mean, 0};
  const auto k = static_cast<Eigen::Index>(config.k);
  const auto m = static_cast<Eigen::Index>(config.m);
  for (int attempt = 0; attempt < kMaxMeanRedraws; ++attempt) {
    Stream rng(config.master_seed, replication, kMeanStreamBase + static_cast<std::uint64_t>(attempt));
    Matrix means(k, m);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index d = 0; d < m; ++d) {
        std::normal_distribution<double> normal(config.prior_mean(i, d), std::sqrt(config.prior_var(i, d)));
        means(i, d) = normal(rng);
      }
    try {
      check_unique_worst_case(means);
      return {std::move(means), static_cast<std::size_t>(attempt)};
    } catch (const AssumptionViolation&) {
    }
  }
  throw AssumptionViolation("could not draw means with unique worst cases");
}

struct ReplicationResult {
  std::vector<std::int64_t> budgets;
  std::vector<std::size_t> selected;
  std::vector<unsigned char> correct;
  std::size_t true_best = 0;
  Matrix true_mean;
  PosteriorState final_state;
  std::size_t redraws = 0;
  std::size_t fallbacks = 0;
  std::size_t approximate_targets = 0;
};

inline ReplicationResult run_replication(const ExperimentConfig& config, std::uint64_t replication) {
  DrawnMeans drawn = draw_true_means(config, replication);
  const ProblemSpec spec(drawn.means, config.sampling_var, config.prior_mean, config.prior_var);
  const std::size_t best = true_best(spec);
  const std::size_t k = config.k;
  const std::size_t m = config.m;

  std::vector<Stream> streams;
  streams.reserve(k * m);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t d = 0; d < m; ++d)
      streams.emplace_back(config.master_seed, replication, observation_stream({i, d}, m));

  PosteriorState state(config.prior_mean, config.posterior_prior_var(), config.sampling_var);
  SampleVarianceTracker tracker(k, m);
  auto simulate = [&](PairIndex p) {
    const double x = sample_observation(spec, p, streams[p.alternative * m + p.scenario]);
    state.observe(p, x);
    tracker.observe(p, x);
  };

  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t d = 0; d < m; ++d)
      for (std::int64_t n = 0; n < config.warmup; ++n) simulate({i, d});

  const std::vector<std::int64_t> checkpoints = config.budget_checkpoints();
  std::vector<std::size_t> selected;
  std::vector<unsigned char> correct;
  selected.reserve(checkpoints.size());
  correct.reserve(checkpoints.size());
  std::size_t next_checkpoint = 0;
  auto record = [&](const Ranking& ranking) {
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == state.total_steps()) {
      selected.push_back(ranking.best());
      correct.push_back(ranking.best() == best ? 1 : 0);
      ++next_checkpoint;
    }
  };

  Allocator allocator(config.policy, PolicyOptions{config.rocba_resolve_every});
  for (;;) {
    const Ranking ranking = compute_ranking(state);
    record(ranking);
    if (state.total_steps() >= config.total_budget) break;
    const PairIndex p = allocator.next(state, tracker, allocator.needs_ranking() ? &ranking : nullptr);
    simulate(p);
  }

  return ReplicationResult{checkpoints, std::move(selected), std::move(correct), best,
                           std::move(drawn.means), std::move(state), drawn.redraws,
                           allocator.fallbacks(), allocator.approximate_targets()};
}

struct PcsRow {
  std::int64_t budget = 0;
  PolicyKind policy = PolicyKind::raoda;
  double pcs = 0.0;
  double std_error = 0.0;
  std::int64_t reps = 0;
};

struct PcsCurve {
  std::vector<PcsRow> rows;

  void append(const PcsCurve& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

  std::optional<PcsRow> find(std::int64_t budget, PolicyKind policy) const {
    for (const PcsRow& r : rows)
      if (r.budget == budget && r.policy == policy) return r;
    return std::nullopt;
  }
};

struct ExperimentDiagnostics {
  std::size_t mean_redraws = 0;
  std::size_t policy_fallbacks = 0;
  std::size_t approximate_targets = 0;
};

inline unsigned resolve_threads(unsigned requested, std::int64_t reps) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::int64_t>(n, reps));
}

// Runs replications 0..macro_reps-1 of config.policy. Workers pull
// replication indices from a shared counter; results are stored by index and
// reduced in index order, so the curve does not depend on scheduling.
inline PcsCurve run_experiment(const ExperimentConfig& config, ExperimentDiagnostics* diagnostics = nullptr) {
  config.validate();
  const std::vector<std::int64_t> checkpoints = config.budget_checkpoints();
  const std::size_t c = checkpoints.size();
  const auto reps = static_cast<std::size_t>(config.macro_reps);

  std::vector<unsigned char> correct(reps * c, 0);
  std::vector<std::size_t> redraws(reps, 0);
  std::vector<std::size_t> fallbacks(reps, 0);
  std::vector<std::size_t> approximate(reps, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        const ReplicationResult res = run_replication(config, r);
        std::copy(res.correct.begin(), res.correct.end(), correct.begin() + static_cast<std::ptrdiff_t>(r * c));
        redraws[r] = res.redraws;
        fallbacks[r] = res.fallbacks;
        approximate[r] = res.approximate_targets;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(reps);
        return;
      }
    }
  };

  const unsigned threads = resolve_threads(config.threads, config.macro_reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  PcsCurve curve;
  for (std::size_t j = 0; j < c; ++j) {
    std::int64_t hits = 0;
    for (std::size_t r = 0; r < reps; ++r) hits += correct[r * c + j];
    const double n = static_cast<double>(reps);
    const double p = static_cast<double>(hits) / n;
    curve.rows.push_back({checkpoints[j], config.policy, p, std::sqrt(p * (1.0 - p) / n), config.macro_reps});
  }
  if (diagnostics != nullptr) {
    for (std::size_t r = 0; r < reps; ++r) {
      diagnostics->mean_redraws += redraws[r];
      diagnostics->policy_fallbacks += fallbacks[r];
      diagnostics->approximate_targets += approximate[r];
    }
  }
  return curve;
}

inline PcsCurve run_experiments(ExperimentConfig config, const std::vector<PolicyKind>& policies,
                                ExperimentDiagnostics* diagnostics = nullptr) {
  PcsCurve out;
  for (PolicyKind p : policies) {
    config.policy = p;
    out.append(run_experiment(config, diagnostics));
  }
  return out;
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t draws = 0;
};

struct PosteriorPcsEstimates {
  McEstimate bound;   // every best-side scenario beats every competitor's ranked worst case
  McEstimate direct;  // the selection's sampled worst case beats every other sampled worst case
};

namespace detail {

inline McEstimate bernoulli_estimate(std::int64_t hits, std::int64_t draws) {
  const double n = static_cast<double>(draws);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), draws};
}

inline void require_draws(std::int64_t draws, const PosteriorState& state, const Ranking& ranking) {
  if (draws < 1) throw PreconditionError("posterior PCS estimate needs at least one draw");
  if (ranking.alternatives() != state.alternatives() || ranking.worst_scenario.size() != state.alternatives())
    throw InputError("ranking does not match the posterior shape");
  if (!state.post_mean().allFinite() || !state.post_var().allFinite())
    throw StateError("posterior PCS estimate needs defined, proper posteriors");
}

}  // namespace detail

// Monte Carlo estimate of the posterior probability that the current
// selection's every scenario beats each competitor's ranked worst-case
// scenario, sampling the pairs it references independently from their
// posteriors.
template <class Rng>
McEstimate estimate_posterior_pcs_bound(const PosteriorState& state, const Ranking& ranking,
                                        std::int64_t draws, Rng& rng) {
  detail::require_draws(draws, state, ranking);
  const std::size_t best = ranking.best();
  const std::size_t k = state.alternatives();
  const std::size_t m = state.scenarios();
  std::normal_distribution<double> z;
  std::int64_t hits = 0;
  for (std::int64_t n = 0; n < draws; ++n) {
    double best_min = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m; ++l)
      best_min = std::min(best_min, state.mean({best, l}) + std::sqrt(state.variance({best, l})) * z(rng));
    double comp_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      if (i == best) continue;
      const PairIndex c{i, ranking.worst_scenario[i]};
      comp_max = std::max(comp_max, state.mean(c) + std::sqrt(state.variance(c)) * z(rng));
    }
    if (best_min >= comp_max) ++hits;
  }
  return detail::bernoulli_estimate(hits, draws);
}

// The bound and the direct posterior probability of correct selection on the
// same joint draws of every pair, so the two can be compared draw by draw.
template <class Rng>
PosteriorPcsEstimates estimate_posterior_pcs(const PosteriorState& state, const Ranking& ranking,
                                             std::int64_t draws, Rng& rng) {
  detail::require_draws(draws, state, ranking);
  const std::size_t best = ranking.best();
  const auto k = static_cast<Eigen::Index>(state.alternatives());
  const auto m = static_cast<Eigen::Index>(state.scenarios());
  const Matrix sd = state.post_var().cwiseSqrt();
  std::normal_distribution<double> z;
  Matrix mu(k, m);
  std::int64_t bound_hits = 0;
  std::int64_t direct_hits = 0;
  for (std::int64_t n = 0; n < draws; ++n) {
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index d = 0; d < m; ++d) mu(i, d) = state.post_mean()(i, d) + sd(i, d) * z(rng);
    const double best_min = mu.row(static_cast<Eigen::Index>(best)).minCoeff();
    bool bound = true;
    bool direct = true;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (static_cast<std::size_t>(i) == best) continue;
      if (mu(i, static_cast<Eigen::Index>(ranking.worst_scenario[static_cast<std::size_t>(i)])) > best_min)
        bound = false;
      if (mu.row(i).minCoeff() > best_min) direct = false;
    }
    bound_hits += bound ? 1 : 0;
    direct_hits += direct ? 1 : 0;
  }
  return {detail::bernoulli_estimate(bound_hits, draws), detail::bernoulli_estimate(direct_hits, draws)};
}

// Six significant digits, shortest form.
inline std::string format_number(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

inline void write_csv(const PcsCurve& curve, std::ostream& out) {
  std::vector<PcsRow> rows = curve.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const PcsRow& a, const PcsRow& b) {
    if (a.budget != b.budget) return a.budget < b.budget;
    return policy_name(a.policy) < policy_name(b.policy);
  });
  out << "budget,policy,pcs,stderr,reps\n";
  for (const PcsRow& r : rows) {
    out << r.budget << ',' << policy_name(r.policy) << ',' << format_number(r.pcs) << ','
        << format_number(r.std_error) << ',' << r.reps << '\n';
  }
}

inline void emit_csv(const PcsCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(curve, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace robsel
