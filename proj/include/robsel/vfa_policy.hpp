#pragma once

// One-step-lookahead allocation on the inscribed-hypersphere value function
// approximation.
//
// The posterior probability that the current selection keeps its worst-case
// lead is an orthant probability of the m(k-1) differences
//   mu[best, l] - mu[i, d_i],   l in scenarios, i != best.
// Its approximation is the squared radius of the largest ball inscribed in
// that orthant (in standardized coordinates), i.e. the minimum over the
// differences of
//   R^2(l, i) = (mu[best, l] - mu[i, d_i])^2 / (var[best, l] + var[i, d_i]).
// An allocation is scored by recomputing that minimum with the candidate's
// posterior variance replaced by its one-step-updated value; the policy
// samples the highest-scoring candidate.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "robsel/errors.hpp"
#include "robsel/problem.hpp"

namespace robsel {

struct LookaheadValue {
  PairIndex pair;
  double value = 0.0;
};

namespace detail {

inline double radius_term(double best_mean, double comp_mean, double best_var, double comp_var) {
  const double denom = best_var + comp_var;
  if (!(denom > 0.0)) throw DegenerateState("radius denominator is zero");
  const double gap = best_mean - comp_mean;
  return gap * gap / denom;
}

inline void require_competitors(const Ranking& ranking) {
  if (ranking.alternatives() < 2) {
    throw PreconditionError("value function approximation needs at least two alternatives");
  }
}

inline PairIndex competitor_pair(const Ranking& ranking, std::size_t competitor) {
  return {competitor, ranking.worst_scenario[competitor]};
}

}  // namespace detail

// Squared radius for best-side scenario `scenario` against `competitor`'s
// posterior worst case.
inline double radius_squared(const PosteriorState& state, const Ranking& ranking,
                             std::size_t scenario, std::size_t competitor) {
  detail::require_competitors(ranking);
  const std::size_t best = ranking.best();
  if (competitor == best) throw PreconditionError("competitor must differ from the selection");
  if (competitor >= state.alternatives() || scenario >= state.scenarios()) {
    throw IndexError("radius index out of range");
  }
  const PairIndex b{best, scenario};
  const PairIndex c = detail::competitor_pair(ranking, competitor);
  return detail::radius_term(state.mean(b), state.mean(c), state.variance(b), state.variance(c));
}

inline double current_vfa(const PosteriorState& state, const Ranking& ranking) {
  detail::require_competitors(ranking);
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.alternatives(); ++i) {
    if (i == ranking.best()) continue;
    for (std::size_t l = 0; l < state.scenarios(); ++l) {
      v = std::min(v, radius_squared(state, ranking, l, i));
    }
  }
  return v;
}

// The VFA after one more sample of `candidate` under certainty equivalence:
// means stay put, the candidate's posterior variance shrinks. Terms that do
// not reference the candidate are unchanged, so candidates outside the
// support set score exactly current_vfa.
inline LookaheadValue lookahead_value(const PosteriorState& state, const Ranking& ranking,
                                      PairIndex candidate) {
  detail::require_competitors(ranking);
  if (!state.contains(candidate)) throw IndexError("candidate " + to_string(candidate) + " out of range");
  const std::size_t best = ranking.best();
  const double next = state.next_variance(candidate);
  auto var_of = [&](PairIndex p) { return p == candidate ? next : state.variance(p); };

  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.alternatives(); ++i) {
    if (i == best) continue;
    const PairIndex c = detail::competitor_pair(ranking, i);
    for (std::size_t l = 0; l < state.scenarios(); ++l) {
      const PairIndex b{best, l};
      v = std::min(v, detail::radius_term(state.mean(b), state.mean(c), var_of(b), var_of(c)));
    }
  }
  return {candidate, v};
}

// Candidates that can change the VFA, in lexicographic order:
// every scenario of the selection plus each competitor's worst case.
inline std::vector<PairIndex> raoda_candidates(const Ranking& ranking, std::size_t scenarios) {
  std::vector<PairIndex> out;
  out.reserve(scenarios + ranking.alternatives());
  for (std::size_t a = 0; a < ranking.alternatives(); ++a) {
    if (a == ranking.best()) {
      for (std::size_t s = 0; s < scenarios; ++s) out.push_back({a, s});
    } else {
      out.push_back({a, ranking.worst_scenario[a]});
    }
  }
  return out;
}

// argmax of lookahead_value over raoda_candidates; ties go to the lowest pair.
//
// Radii are computed once; the lookahead for (best, s) only rescans row s and
// for (i, d_i) only column i, with the untouched rows/columns summarised by
// their minima.
inline PairIndex raoda_allocate(const PosteriorState& state, const Ranking& ranking) {
  detail::require_competitors(ranking);
  const std::size_t k = state.alternatives();
  const std::size_t m = state.scenarios();
  const std::size_t best = ranking.best();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> row_min(m, inf);
  std::vector<double> col_min(k, inf);
  for (std::size_t i = 0; i < k; ++i) {
    if (i == best) continue;
    const PairIndex c = detail::competitor_pair(ranking, i);
    for (std::size_t l = 0; l < m; ++l) {
      const PairIndex b{best, l};
      const double r =
          detail::radius_term(state.mean(b), state.mean(c), state.variance(b), state.variance(c));
      row_min[l] = std::min(row_min[l], r);
      col_min[i] = std::min(col_min[i], r);
    }
  }

  PairIndex choice{};
  double choice_value = -inf;
  auto consider = [&](PairIndex p, double v) {
    if (v > choice_value) {
      choice_value = v;
      choice = p;
    }
  };

  for (std::size_t a = 0; a < k; ++a) {
    if (a == best) {
      for (std::size_t s = 0; s < m; ++s) {
        const PairIndex b{best, s};
        const double next = state.next_variance(b);
        double v = inf;
        for (std::size_t l = 0; l < m; ++l)
          if (l != s) v = std::min(v, row_min[l]);
        for (std::size_t i = 0; i < k; ++i) {
          if (i == best) continue;
          const PairIndex c = detail::competitor_pair(ranking, i);
          v = std::min(v, detail::radius_term(state.mean(b), state.mean(c), next, state.variance(c)));
        }
        consider(b, v);
      }
    } else {
      const PairIndex c = detail::competitor_pair(ranking, a);
      const double next = state.next_variance(c);
      double v = inf;
      for (std::size_t i = 0; i < k; ++i)
        if (i != best && i != a) v = std::min(v, col_min[i]);
      for (std::size_t l = 0; l < m; ++l) {
        const PairIndex b{best, l};
        v = std::min(v, detail::radius_term(state.mean(b), state.mean(c), state.variance(b), next));
      }
      consider(c, v);
    }
  }
  return choice;
}

// Frequentist-limit form of the lookahead: posterior variances replaced by
// sampling_var / count and the candidate's count incremented. Requires every
// referenced pair to have at least one observation.
inline LookaheadValue plugin_lookahead_value(const PosteriorState& state, const Ranking& ranking,
                                             PairIndex candidate) {
  detail::require_competitors(ranking);
  if (!state.contains(candidate)) throw IndexError("candidate " + to_string(candidate) + " out of range");
  const std::size_t best = ranking.best();
  auto var_of = [&](PairIndex p) {
    const auto n = state.count(p) + (p == candidate ? 1 : 0);
    if (n == 0) throw StateError("plug-in variance needs at least one observation");
    return state.sampling_var(p) / static_cast<double>(n);
  };
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.alternatives(); ++i) {
    if (i == best) continue;
    const PairIndex c = detail::competitor_pair(ranking, i);
    for (std::size_t l = 0; l < state.scenarios(); ++l) {
      const PairIndex b{best, l};
      v = std::min(v, detail::radius_term(state.mean(b), state.mean(c), var_of(b), var_of(c)));
    }
  }
  return {candidate, v};
}

}  // namespace robsel
