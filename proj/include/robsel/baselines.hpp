#pragma once

// Comparison allocation rules: equal allocation (EA), proportional to sample
// variance (PTV), and the robust OCBA rule (ROCBA) that tracks the optimal
// asymptotic ratios with plug-in estimates. All three pick the next pair by
// the most-starving rule against their target shares.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>

#include "robsel/asymptotics.hpp"
#include "robsel/errors.hpp"
#include "robsel/problem.hpp"

namespace robsel {

// Welford accumulator of per-pair sample variances, fed the same raw
// observations as the posterior.
class SampleVarianceTracker {
 public:
  SampleVarianceTracker() = default;
  SampleVarianceTracker(std::size_t alternatives, std::size_t scenarios)
      : count_(CountMatrix::Zero(static_cast<Eigen::Index>(alternatives),
                                 static_cast<Eigen::Index>(scenarios))),
        mean_(Matrix::Zero(count_.rows(), count_.cols())),
        m2_(Matrix::Zero(count_.rows(), count_.cols())) {}

  void observe(PairIndex p, double x) {
    const auto i = static_cast<Eigen::Index>(p.alternative);
    const auto d = static_cast<Eigen::Index>(p.scenario);
    if (i >= count_.rows() || d >= count_.cols()) throw IndexError("pair " + to_string(p) + " out of range");
    const auto n = ++count_(i, d);
    const double delta = x - mean_(i, d);
    mean_(i, d) += delta / static_cast<double>(n);
    m2_(i, d) += delta * (x - mean_(i, d));
  }

  std::int64_t count(PairIndex p) const { return count_(ix(p.alternative), ix(p.scenario)); }
  double mean(PairIndex p) const { return mean_(ix(p.alternative), ix(p.scenario)); }
  bool defined(PairIndex p) const { return count(p) >= 2; }

  double variance(PairIndex p) const {
    const auto n = count(p);
    if (n < 2) throw PreconditionError("sample variance needs two observations at " + to_string(p));
    return m2_(ix(p.alternative), ix(p.scenario)) / static_cast<double>(n - 1);
  }

  std::size_t alternatives() const { return static_cast<std::size_t>(count_.rows()); }
  std::size_t scenarios() const { return static_cast<std::size_t>(count_.cols()); }

 private:
  static Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

  CountMatrix count_;
  Matrix mean_;
  Matrix m2_;
};

// Pair with the fewest samples, lowest pair on ties.
inline PairIndex ea_allocate(const PosteriorState& state) {
  PairIndex choice{};
  std::int64_t fewest = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < state.alternatives(); ++i)
    for (std::size_t d = 0; d < state.scenarios(); ++d)
      if (state.count({i, d}) < fewest) {
        fewest = state.count({i, d});
        choice = {i, d};
      }
  return choice;
}

// Most-starving pair relative to shares proportional to the sample variances.
inline PairIndex ptv_allocate(const PosteriorState& state, const SampleVarianceTracker& tracker) {
  const std::size_t k = state.alternatives();
  const std::size_t m = state.scenarios();
  if (tracker.alternatives() != k || tracker.scenarios() != m) {
    throw InputError("variance tracker shape does not match the posterior");
  }
  double total_var = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t d = 0; d < m; ++d) total_var += tracker.variance({i, d});
  if (!(total_var > 0.0)) return ea_allocate(state);

  const double t = static_cast<double>(state.total_steps());
  PairIndex choice{};
  double largest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t d = 0; d < m; ++d) {
      const double deficit =
          tracker.variance({i, d}) / total_var - static_cast<double>(state.count({i, d})) / t;
      if (deficit > largest) {
        largest = deficit;
        choice = {i, d};
      }
    }
  return choice;
}

// Most-starving support pair against target shares.
inline PairIndex most_starving(const PosteriorState& state, const AllocationRatios& target) {
  const double t = static_cast<double>(state.total_steps());
  if (!(t > 0.0)) throw PreconditionError("most-starving rule needs at least one sample");
  PairIndex choice{};
  double largest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.alternatives(); ++i)
    for (std::size_t d = 0; d < state.scenarios(); ++d) {
      const PairIndex p{i, d};
      if (!target.in_support(p)) continue;
      const double deficit = target.at(p) - static_cast<double>(state.count(p)) / t;
      if (deficit > largest) {
        largest = deficit;
        choice = p;
      }
    }
  return choice;
}

// Sequential ROCBA with a persistent solver (warm-started binding graph) and
// an optional re-solve interval. Counts solves that only reached an
// approximate target and steps that fell back to EA because the plug-in
// instance could not be solved at all.
class RocbaPolicy {
 public:
  static constexpr double kApproximateTolerance = 1e-2;

  explicit RocbaPolicy(std::int64_t resolve_every = 1) : resolve_every_(resolve_every) {
    if (resolve_every_ < 1) throw InputError("ROCBA re-solve interval must be at least 1");
  }

  PairIndex allocate(const PosteriorState& state, const Ranking& ranking) {
    if (!target_ || steps_since_solve_ >= resolve_every_) {
      steps_since_solve_ = 0;
      try {
        target_ = solver_.solve(state.post_mean(), state.sampling_var(), ranking);
      } catch (const NonConvergence& e) {
        // Nearly tied plug-in means can defeat the exact solve; an iterate
        // whose optimality conditions hold to within a percent is still a
        // usable target.
        if (e.residuals().max() <= kApproximateTolerance) {
          target_ = e.best_iterate();
          ++approximate_;
        } else {
          target_.reset();
        }
      } catch (const AssumptionViolation&) {
        target_.reset();
      }
    }
    ++steps_since_solve_;
    if (!target_) {
      ++fallbacks_;
      return ea_allocate(state);
    }
    return most_starving(state, *target_);
  }

  std::size_t fallbacks() const { return fallbacks_; }
  std::size_t approximate_targets() const { return approximate_; }
  const RatioSolver& solver() const { return solver_; }

 private:
  std::int64_t resolve_every_;
  std::int64_t steps_since_solve_ = 0;
  std::optional<AllocationRatios> target_;
  RatioSolver solver_;
  std::size_t fallbacks_ = 0;
  std::size_t approximate_ = 0;
};

// Stateless single-step ROCBA: fresh solve on the plug-in posterior means and
// known sampling variances.
inline PairIndex rocba_allocate(const PosteriorState& state, const Ranking& ranking) {
  RocbaPolicy policy;
  return policy.allocate(state, ranking);
}

}  // namespace robsel
