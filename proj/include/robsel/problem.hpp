#pragma once

// Problem definition, simulation oracle, and the conjugate Gaussian
// posterior over the k x m matrix of alternative-scenario means.
//
// Alternatives are rows, scenarios are columns; all indices are 0-based.
// Each alternative is scored by its worst-case (minimum over scenarios) mean
// and the target is the alternative whose worst case is largest.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "robsel/errors.hpp"

namespace robsel {

using Matrix = Eigen::MatrixXd;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Prior variance sentinel for the uninformative (zero-precision) prior.
inline constexpr double kUninformative = std::numeric_limits<double>::infinity();

struct PairIndex {
  std::size_t alternative = 0;
  std::size_t scenario = 0;

  friend constexpr auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

inline std::string to_string(PairIndex p) {
  return "(" + std::to_string(p.alternative) + ", " + std::to_string(p.scenario) + ")";
}

namespace detail {

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                          const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InputError(std::string(what) + " must be " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

// Lowest-index argmin of a row; NaN entries are rejected by callers.
inline std::size_t row_argmin(const Matrix& m, Eigen::Index row) {
  std::size_t best = 0;
  for (Eigen::Index d = 1; d < m.cols(); ++d) {
    if (m(row, d) < m(row, static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(d);
  }
  return best;
}

}  // namespace detail

// Indices of the worst-case scenario of every alternative (ties -> lowest).
inline std::vector<std::size_t> worst_case_scenarios(const Matrix& means) {
  std::vector<std::size_t> out(static_cast<std::size_t>(means.rows()));
  for (Eigen::Index i = 0; i < means.rows(); ++i) out[static_cast<std::size_t>(i)] = detail::row_argmin(means, i);
  return out;
}

// Throws AssumptionViolation unless every alternative has a unique worst-case
// scenario and the worst-case best alternative is unique. Exact comparison.
inline void check_unique_worst_case(const Matrix& means) {
  const Eigen::Index k = means.rows();
  std::vector<double> worst(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const std::size_t d = detail::row_argmin(means, i);
    worst[static_cast<std::size_t>(i)] = means(i, static_cast<Eigen::Index>(d));
    for (Eigen::Index l = 0; l < means.cols(); ++l) {
      if (l != static_cast<Eigen::Index>(d) && means(i, l) == worst[static_cast<std::size_t>(i)]) {
        throw AssumptionViolation("alternative " + std::to_string(i) +
                                  " has more than one worst-case scenario");
      }
    }
  }
  const auto top = std::max_element(worst.begin(), worst.end());
  if (std::count(worst.begin(), worst.end(), *top) > 1) {
    throw AssumptionViolation("worst-case best alternative is not unique");
  }
}

// argmax_i min_d means(i, d). Throws AssumptionViolation on a tie at the top.
inline std::size_t true_best(const Matrix& means) {
  if (means.size() == 0) throw InputError("empty mean matrix");
  const Eigen::Index k = means.rows();
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  bool tied = false;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double w = means.row(i).minCoeff();
    if (w > best_value) {
      best_value = w;
      best = static_cast<std::size_t>(i);
      tied = false;
    } else if (w == best_value) {
      tied = true;
    }
  }
  if (tied) throw AssumptionViolation("worst-case best alternative is not unique");
  return best;
}

// Ground truth plus prior hyper-parameters. Construction validates shapes,
// positivity of variances, and the unique worst-case assumption.
class ProblemSpec {
 public:
  ProblemSpec(Matrix true_mean, Matrix sampling_var, Matrix prior_mean, Matrix prior_var)
      : true_mean_(std::move(true_mean)),
        sampling_var_(std::move(sampling_var)),
        prior_mean_(std::move(prior_mean)),
        prior_var_(std::move(prior_var)) {
    const Eigen::Index k = true_mean_.rows();
    const Eigen::Index m = true_mean_.cols();
    if (k == 0 || m == 0) throw InputError("problem needs at least one alternative and scenario");
    detail::require_shape(sampling_var_, k, m, "sampling_var");
    detail::require_shape(prior_mean_, k, m, "prior_mean");
    detail::require_shape(prior_var_, k, m, "prior_var");
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index d = 0; d < m; ++d) {
        if (!std::isfinite(true_mean_(i, d))) throw InputError("true_mean must be finite");
        if (!(sampling_var_(i, d) > 0.0) || !std::isfinite(sampling_var_(i, d))) {
          throw InputError("sampling_var must be positive and finite");
        }
        if (!std::isfinite(prior_mean_(i, d))) throw InputError("prior_mean must be finite");
        if (!(prior_var_(i, d) > 0.0)) {
          throw InputError("prior_var must be positive or the uninformative sentinel");
        }
      }
    }
    check_unique_worst_case(true_mean_);
  }

  static ProblemSpec uninformative(Matrix true_mean, Matrix sampling_var) {
    const auto k = true_mean.rows();
    const auto m = true_mean.cols();
    return ProblemSpec(std::move(true_mean), std::move(sampling_var), Matrix::Zero(k, m),
                       Matrix::Constant(k, m, kUninformative));
  }

  std::size_t alternatives() const { return static_cast<std::size_t>(true_mean_.rows()); }
  std::size_t scenarios() const { return static_cast<std::size_t>(true_mean_.cols()); }
  bool contains(PairIndex p) const {
    return p.alternative < alternatives() && p.scenario < scenarios();
  }

  const Matrix& true_mean() const { return true_mean_; }
  const Matrix& sampling_var() const { return sampling_var_; }
  const Matrix& prior_mean() const { return prior_mean_; }
  const Matrix& prior_var() const { return prior_var_; }

  double true_mean(PairIndex p) const { return true_mean_(idx(p.alternative), idx(p.scenario)); }
  double sampling_var(PairIndex p) const {
    return sampling_var_(idx(p.alternative), idx(p.scenario));
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  Matrix true_mean_;
  Matrix sampling_var_;
  Matrix prior_mean_;
  Matrix prior_var_;
};

inline std::size_t true_best(const ProblemSpec& spec) { return true_best(spec.true_mean()); }

// One replication X ~ N(true_mean[pair], sampling_var[pair]).
template <class Rng>
double sample_observation(const ProblemSpec& spec, PairIndex pair, Rng& rng) {
  if (!spec.contains(pair)) throw IndexError("pair " + to_string(pair) + " out of range");
  std::normal_distribution<double> normal(spec.true_mean(pair), std::sqrt(spec.sampling_var(pair)));
  return normal(rng);
}

// Conjugate normal posterior with known sampling variance, stored as
// sufficient statistics (count, sum) per pair. The prior and sampling
// variances travel with the state so lookahead computations need nothing
// else.
class PosteriorState {
 public:
  PosteriorState(Matrix prior_mean, Matrix prior_var, Matrix sampling_var)
      : prior_mean_(std::move(prior_mean)),
        prior_var_(std::move(prior_var)),
        sampling_var_(std::move(sampling_var)) {
    const auto k = prior_mean_.rows();
    const auto m = prior_mean_.cols();
    if (k == 0 || m == 0) throw InputError("posterior needs a non-empty shape");
    detail::require_shape(prior_var_, k, m, "prior_var");
    detail::require_shape(sampling_var_, k, m, "sampling_var");
    count_ = CountMatrix::Zero(k, m);
    sum_ = Matrix::Zero(k, m);
    post_mean_.resize(k, m);
    post_var_.resize(k, m);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index d = 0; d < m; ++d) refresh(i, d);
  }

  explicit PosteriorState(const ProblemSpec& spec)
      : PosteriorState(spec.prior_mean(), spec.prior_var(), spec.sampling_var()) {}

  std::size_t alternatives() const { return static_cast<std::size_t>(count_.rows()); }
  std::size_t scenarios() const { return static_cast<std::size_t>(count_.cols()); }
  bool contains(PairIndex p) const {
    return p.alternative < alternatives() && p.scenario < scenarios();
  }

  void observe(PairIndex pair, double observation) {
    check(pair);
    if (!std::isfinite(observation)) throw InputError("observation must be finite");
    const auto i = idx(pair.alternative);
    const auto d = idx(pair.scenario);
    count_(i, d) += 1;
    sum_(i, d) += observation;
    ++total_;
    refresh(i, d);
  }

  // Adds a batch of `n` observations summing to `sum`.
  void absorb(PairIndex pair, std::int64_t n, double sum) {
    check(pair);
    if (n < 0) throw InputError("negative observation count");
    if (!std::isfinite(sum)) throw InputError("observation sum must be finite");
    const auto i = idx(pair.alternative);
    const auto d = idx(pair.scenario);
    count_(i, d) += n;
    sum_(i, d) += sum;
    total_ += n;
    refresh(i, d);
  }

  std::int64_t count(PairIndex p) const { return count_(idx(p.alternative), idx(p.scenario)); }
  double sum(PairIndex p) const { return sum_(idx(p.alternative), idx(p.scenario)); }
  double mean(PairIndex p) const { return post_mean_(idx(p.alternative), idx(p.scenario)); }
  double variance(PairIndex p) const { return post_var_(idx(p.alternative), idx(p.scenario)); }
  double sampling_var(PairIndex p) const {
    return sampling_var_(idx(p.alternative), idx(p.scenario));
  }

  // Posterior variance the pair would have after one more observation.
  double next_variance(PairIndex p) const {
    const auto i = idx(p.alternative);
    const auto d = idx(p.scenario);
    return posterior_variance(prior_var_(i, d), sampling_var_(i, d), count_(i, d) + 1);
  }

  const CountMatrix& counts() const { return count_; }
  const Matrix& sums() const { return sum_; }
  const Matrix& post_mean() const { return post_mean_; }
  const Matrix& post_var() const { return post_var_; }
  const Matrix& prior_mean() const { return prior_mean_; }
  const Matrix& prior_var() const { return prior_var_; }
  const Matrix& sampling_var() const { return sampling_var_; }
  std::int64_t total_steps() const { return total_; }

  friend bool operator==(const PosteriorState& a, const PosteriorState& b) {
    return a.total_ == b.total_ && a.count_ == b.count_ && a.sum_ == b.sum_ &&
           a.prior_mean_ == b.prior_mean_ && a.prior_var_ == b.prior_var_ &&
           a.sampling_var_ == b.sampling_var_;
  }

  static double posterior_variance(double prior_var, double sampling_var, std::int64_t n) {
    if (prior_var == kUninformative) {
      return n == 0 ? kUninformative : sampling_var / static_cast<double>(n);
    }
    return 1.0 / (1.0 / prior_var + static_cast<double>(n) / sampling_var);
  }

  static double posterior_mean(double prior_mean, double prior_var, double sampling_var,
                               std::int64_t n, double sum) {
    if (prior_var == kUninformative) {
      return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
    }
    return posterior_variance(prior_var, sampling_var, n) *
           (prior_mean / prior_var + sum / sampling_var);
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  void check(PairIndex p) const {
    if (!contains(p)) throw IndexError("pair " + to_string(p) + " out of range");
  }

  void refresh(Eigen::Index i, Eigen::Index d) {
    post_var_(i, d) = posterior_variance(prior_var_(i, d), sampling_var_(i, d), count_(i, d));
    post_mean_(i, d) = posterior_mean(prior_mean_(i, d), prior_var_(i, d), sampling_var_(i, d),
                                      count_(i, d), sum_(i, d));
  }

  Matrix prior_mean_;
  Matrix prior_var_;
  Matrix sampling_var_;
  CountMatrix count_;
  Matrix sum_;
  Matrix post_mean_;
  Matrix post_var_;
  std::int64_t total_ = 0;
};

inline PosteriorState update_posterior(PosteriorState state, PairIndex pair, double observation) {
  state.observe(pair, observation);
  return state;
}

// Posterior worst-case scenarios and alternatives ordered by descending
// worst-case posterior mean; order[0] is the current selection.
struct Ranking {
  std::vector<std::size_t> worst_scenario;
  std::vector<std::size_t> order;

  std::size_t best() const { return order.front(); }
  std::size_t alternatives() const { return order.size(); }
};

inline Ranking compute_ranking(const Matrix& means) {
  const Eigen::Index k = means.rows();
  if (k == 0 || means.cols() == 0) throw StateError("cannot rank an empty state");
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index d = 0; d < means.cols(); ++d)
      if (std::isnan(means(i, d))) throw StateError("posterior mean undefined (NaN)");

  Ranking r;
  r.worst_scenario = worst_case_scenarios(means);
  std::vector<double> worst(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    worst[static_cast<std::size_t>(i)] =
        means(i, static_cast<Eigen::Index>(r.worst_scenario[static_cast<std::size_t>(i)]));
  }
  r.order.resize(static_cast<std::size_t>(k));
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return worst[a] > worst[b]; });
  return r;
}

inline Ranking compute_ranking(const PosteriorState& state) {
  return compute_ranking(state.post_mean());
}

}  // namespace robsel
