#pragma once

// Large-deviations rate function, the optimality conditions for the
// asymptotic allocation ratios, and a solver for those ratios.
//
// Only pairs in the support set receive positive asymptotic budget:
//   Omega = {(best, l) : every l} U {(i, d_i) : i != best}.
// With x_l the share of (best, l) and y_i the share of (i, d_i), the rate for
// the comparison (l, i) is
//   G(l, i) = gap(l, i)^2 / (2 (var[best, l] / x_l + var[i, d_i] / y_i)).
// The optimal ratios maximise min G over the simplex. At that point the
// row minima are all equal, the column minima are all equal, and
//   sum_l x_l^2 / var[best, l] = sum_i y_i^2 / var[i, d_i].
//
// The solver works with a_l = var[best, l] / x_l and b_i = var[i, d_i] / y_i,
// where the problem becomes
//   minimise sum_l var_l / a_l + sum_i var_i / b_i
//   subject to a_l + b_i <= gap(l, i)^2 / 2,
// a smooth convex objective under linear constraints. A log-barrier Newton
// method locates the binding comparisons; the solution is then recomputed
// exactly on that binding graph and certified through its KKT multipliers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "robsel/errors.hpp"
#include "robsel/problem.hpp"

namespace robsel {

struct AllocationRatios {
  Matrix alpha;  // k x m, sums to one
  std::size_t best = 0;
  std::vector<std::size_t> worst_scenario;

  bool in_support(PairIndex p) const {
    return p.alternative == best || p.scenario == worst_scenario[p.alternative];
  }
  double at(PairIndex p) const {
    return alpha(static_cast<Eigen::Index>(p.alternative), static_cast<Eigen::Index>(p.scenario));
  }
  double off_support_mass() const {
    double mass = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(alpha.rows()); ++i)
      for (std::size_t d = 0; d < static_cast<std::size_t>(alpha.cols()); ++d)
        if (!in_support({i, d})) mass += at({i, d});
    return mass;
  }
  // Copy with off-support entries zeroed (not renormalised).
  AllocationRatios on_support() const {
    AllocationRatios out = *this;
    for (std::size_t i = 0; i < static_cast<std::size_t>(alpha.rows()); ++i)
      for (std::size_t d = 0; d < static_cast<std::size_t>(alpha.cols()); ++d)
        if (!in_support({i, d}))
          out.alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = 0.0;
    return out;
  }
};

struct Residuals {
  double scenario_balance = 0.0;    // spread of per-scenario minimum rates
  double competitor_balance = 0.0;  // spread of per-competitor minimum rates
  double total_balance = 0.0;       // relative gap in the squared-share balance
  double max() const { return std::max({scenario_balance, competitor_balance, total_balance}); }
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, AllocationRatios best_iterate, Residuals residuals)
      : std::runtime_error(what), best_iterate_(std::move(best_iterate)), residuals_(residuals) {}
  const AllocationRatios& best_iterate() const { return best_iterate_; }
  const Residuals& residuals() const { return residuals_; }

 private:
  AllocationRatios best_iterate_;
  Residuals residuals_;
};

// gap^2 / (2 (var1 / a1 + var2 / a2)). Linear in (a1, a2) jointly.
inline double g_function(double gap, double var1, double var2, double a1, double a2) {
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw DomainError("allocation ratios must be positive");
  return gap * gap / (2.0 * (var1 / a1 + var2 / a2));
}

namespace detail {

inline double spread(const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    for (std::size_t q = p + 1; q < v.size(); ++q) {
      const double mean = 0.5 * (v[p] + v[q]);
      if (mean > 0.0) worst = std::max(worst, std::abs(v[p] - v[q]) / mean);
    }
  }
  return worst;
}

}  // namespace detail

inline Residuals optimality_residuals(const AllocationRatios& ratios, const Matrix& means,
                                      const Matrix& vars, const Ranking& ranking) {
  const std::size_t k = static_cast<std::size_t>(means.rows());
  const std::size_t m = static_cast<std::size_t>(means.cols());
  if (ranking.alternatives() != k || ratios.alpha.rows() != means.rows() ||
      ratios.alpha.cols() != means.cols() || vars.rows() != means.rows() ||
      vars.cols() != means.cols()) {
    throw InputError("ratio, mean, and variance shapes disagree");
  }
  if (k < 2) throw PreconditionError("optimality conditions need at least two alternatives");
  const std::size_t best = ranking.best();
  auto at = [](const Matrix& x, std::size_t i, std::size_t d) {
    return x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
  };
  for (std::size_t l = 0; l < m; ++l)
    if (!(at(ratios.alpha, best, l) > 0.0)) throw DegenerateState("zero ratio on the support set");
  for (std::size_t i = 0; i < k; ++i)
    if (i != best && !(at(ratios.alpha, i, ranking.worst_scenario[i]) > 0.0))
      throw DegenerateState("zero ratio on the support set");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> row_min(m, inf);
  std::vector<double> col_min;
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double x = at(ratios.alpha, best, l);
    lhs += x * x / at(vars, best, l);
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (i == best) continue;
    const std::size_t d = ranking.worst_scenario[i];
    const double y = at(ratios.alpha, i, d);
    rhs += y * y / at(vars, i, d);
    double cmin = inf;
    for (std::size_t l = 0; l < m; ++l) {
      const double g = g_function(at(means, best, l) - at(means, i, d), at(vars, best, l),
                                  at(vars, i, d), at(ratios.alpha, best, l), y);
      row_min[l] = std::min(row_min[l], g);
      cmin = std::min(cmin, g);
    }
    col_min.push_back(cmin);
  }
  Residuals r;
  r.scenario_balance = detail::spread(row_min);
  r.competitor_balance = detail::spread(col_min);
  r.total_balance = std::abs(lhs - rhs) / std::max(lhs, rhs);
  return r;
}

namespace detail {

// Normalised instance: rows are the selection's scenarios, columns its
// competitors. cost(l, j) is gap^2 / 2 scaled so the largest equals one.
struct BalanceProblem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;  // best-side variances (scaled)
  std::vector<double> w;  // competitor-side variances (scaled)
  std::vector<double> c;  // rows * cols
  std::vector<std::size_t> competitors;

  double cost(std::size_t l, std::size_t j) const { return c[l * cols + j]; }
};

struct BalancePoint {
  std::vector<double> a;
  std::vector<double> b;
};

inline BalanceProblem make_balance_problem(const Matrix& means, const Matrix& vars,
                                           const Ranking& ranking) {
  const std::size_t k = static_cast<std::size_t>(means.rows());
  const std::size_t m = static_cast<std::size_t>(means.cols());
  if (k < 2) throw PreconditionError("ratio solver needs at least two alternatives");
  if (ranking.alternatives() != k || vars.rows() != means.rows() || vars.cols() != means.cols()) {
    throw InputError("mean, variance, and ranking shapes disagree");
  }
  auto at = [](const Matrix& x, std::size_t i, std::size_t d) {
    return x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
  };
  BalanceProblem p;
  p.rows = m;
  const std::size_t best = ranking.best();
  for (std::size_t i = 0; i < k; ++i)
    if (i != best) p.competitors.push_back(i);
  p.cols = p.competitors.size();

  double vmax = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double v = at(vars, best, l);
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("variances must be positive and finite");
    p.v.push_back(v);
    vmax = std::max(vmax, v);
  }
  for (std::size_t i : p.competitors) {
    const double w = at(vars, i, ranking.worst_scenario[i]);
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("variances must be positive and finite");
    p.w.push_back(w);
    vmax = std::max(vmax, w);
  }
  for (double& v : p.v) v /= vmax;
  for (double& w : p.w) w /= vmax;

  double cmax = 0.0;
  p.c.resize(p.rows * p.cols);
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t j = 0; j < p.cols; ++j) {
      const std::size_t i = p.competitors[j];
      const double gap = at(means, best, l) - at(means, i, ranking.worst_scenario[i]);
      const double c = 0.5 * gap * gap;
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw AssumptionViolation("worst-case gap between the selection and competitor " +
                                  std::to_string(i) + " is zero or non-finite");
      }
      p.c[l * p.cols + j] = c;
      cmax = std::max(cmax, c);
    }
  }
  for (double& c : p.c) c /= cmax;
  return p;
}

inline double balance_objective(const BalanceProblem& p, const BalancePoint& z) {
  double f = 0.0;
  for (std::size_t l = 0; l < p.rows; ++l) f += p.v[l] / z.a[l];
  for (std::size_t j = 0; j < p.cols; ++j) f += p.w[j] / z.b[j];
  return f;
}

inline BalancePoint interior_start(const BalanceProblem& p) {
  BalancePoint z;
  z.a.assign(p.rows, std::numeric_limits<double>::infinity());
  z.b.assign(p.cols, std::numeric_limits<double>::infinity());
  for (std::size_t l = 0; l < p.rows; ++l)
    for (std::size_t j = 0; j < p.cols; ++j) {
      z.a[l] = std::min(z.a[l], p.cost(l, j) / 3.0);
      z.b[j] = std::min(z.b[j], p.cost(l, j) / 3.0);
    }
  return z;
}

// Log-barrier path following:  minimise t f(z) - sum log(slack).
class BarrierSolver {
 public:
  BarrierSolver(const BalanceProblem& p, std::size_t iteration_cap)
      : p_(p), cap_(iteration_cap), z_(interior_start(p)) {
    t_ = static_cast<double>(p_.rows * p_.cols) / balance_objective(p_, z_);
  }

  // Follows the central path until the duality-gap bound drops below
  // gap_tol times the smallest objective term, so every share is resolved
  // and not just the dominant ones. Returns false if the Newton iteration cap is exhausted.
  bool advance(double gap_tol) {
    const double constraints = static_cast<double>(p_.rows * p_.cols);
    while (true) {
      if (!center()) return false;
      if (constraints / t_ <= gap_tol * smallest_term()) return true;
      t_ *= 20.0;
    }
  }

  const BalancePoint& point() const { return z_; }
  double slack(std::size_t l, std::size_t j) const { return p_.cost(l, j) - z_.a[l] - z_.b[j]; }
  // Central-path estimate of the multiplier on comparison (l, j).
  double flow(std::size_t l, std::size_t j) const { return 1.0 / (t_ * slack(l, j)); }
  std::size_t iterations() const { return iterations_; }

 private:
  double smallest_term() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < p_.rows; ++l) m = std::min(m, p_.v[l] / z_.a[l]);
    for (std::size_t j = 0; j < p_.cols; ++j) m = std::min(m, p_.w[j] / z_.b[j]);
    return m;
  }

  bool interior(const BalancePoint& z) const {
    for (double a : z.a)
      if (!(a > 0.0)) return false;
    for (double b : z.b)
      if (!(b > 0.0)) return false;
    for (std::size_t l = 0; l < p_.rows; ++l)
      for (std::size_t j = 0; j < p_.cols; ++j)
        if (!(p_.cost(l, j) - z.a[l] - z.b[j] > 0.0)) return false;
    return true;
  }

  // phi(to) - phi(from) for phi = t f - sum log(slack), accumulated term by
  // term so that small changes stay visible next to a huge objective.
  double phi_change(const BalancePoint& from, const BalancePoint& to) const {
    double df = 0.0;
    for (std::size_t l = 0; l < p_.rows; ++l)
      df += p_.v[l] * (from.a[l] - to.a[l]) / (from.a[l] * to.a[l]);
    for (std::size_t j = 0; j < p_.cols; ++j)
      df += p_.w[j] * (from.b[j] - to.b[j]) / (from.b[j] * to.b[j]);
    double dlog = 0.0;
    for (std::size_t l = 0; l < p_.rows; ++l)
      for (std::size_t j = 0; j < p_.cols; ++j) {
        const double s0 = p_.cost(l, j) - from.a[l] - from.b[j];
        const double ds = (from.a[l] - to.a[l]) + (from.b[j] - to.b[j]);
        dlog += std::log1p(ds / s0);
      }
    return t_ * df - dlog;
  }

  bool center() {
    const std::size_t R = p_.rows;
    const std::size_t n = R + p_.cols;
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (int step = 0; step < 200; ++step) {
      if (++iterations_ > cap_) return false;
      g.setZero();
      h.setZero();
      for (std::size_t l = 0; l < R; ++l) {
        const double a = z_.a[l];
        g(idx(l)) = -t_ * p_.v[l] / (a * a);
        h(idx(l), idx(l)) = 2.0 * t_ * p_.v[l] / (a * a * a);
      }
      for (std::size_t j = 0; j < p_.cols; ++j) {
        const double b = z_.b[j];
        g(idx(R + j)) = -t_ * p_.w[j] / (b * b);
        h(idx(R + j), idx(R + j)) = 2.0 * t_ * p_.w[j] / (b * b * b);
      }
      for (std::size_t l = 0; l < R; ++l)
        for (std::size_t j = 0; j < p_.cols; ++j) {
          const double s = slack(l, j);
          const double s1 = 1.0 / s;
          const double s2 = s1 * s1;
          g(idx(l)) += s1;
          g(idx(R + j)) += s1;
          h(idx(l), idx(l)) += s2;
          h(idx(R + j), idx(R + j)) += s2;
          h(idx(l), idx(R + j)) += s2;
          h(idx(R + j), idx(l)) += s2;
        }
      // Symmetric diagonal scaling keeps the factorisation accurate when the
      // shares span many orders of magnitude.
      const Eigen::VectorXd d = h.diagonal().cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd hs = d.asDiagonal() * h * d.asDiagonal();
      const Eigen::VectorXd dir = -(d.asDiagonal() * hs.ldlt().solve(d.asDiagonal() * g)).eval();
      const double slope = g.dot(dir);
      if (!std::isfinite(slope)) return false;
      if (-slope * 0.5 <= 1e-12) return true;

      double step_len = 1.0;
      BalancePoint trial = z_;
      double change = std::numeric_limits<double>::infinity();
      while (step_len > 1e-18) {
        for (std::size_t l = 0; l < R; ++l) trial.a[l] = z_.a[l] + step_len * dir(idx(l));
        for (std::size_t j = 0; j < p_.cols; ++j) trial.b[j] = z_.b[j] + step_len * dir(idx(R + j));
        if (interior(trial)) {
          change = phi_change(z_, trial);
          if (change <= 0.25 * step_len * slope) break;
        }
        step_len *= 0.5;
      }
      if (!(change < 0.0)) return true;  // no further progress at this precision
      z_ = trial;
    }
    return true;
  }

  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  const BalanceProblem& p_;
  std::size_t cap_;
  BalancePoint z_;
  double t_ = 1.0;
  std::size_t iterations_ = 0;
};

struct PolishResult {
  bool ok = false;
  bool forest = true;
  BalancePoint z;
};

// Solves the balance problem exactly, assuming `active` (rows * cols flags)
// is the set of binding comparisons: binding constraints are met with
// equality and each connected component of the binding graph is balanced.
// The result is certified by primal feasibility and, on forests, by
// non-negative KKT multipliers.
inline PolishResult polish(const BalanceProblem& p, const std::vector<unsigned char>& active,
                           bool require_certificate) {
  // Costs are scaled to at most one and potentials are sums of costs, so
  // rounding leaves absolute errors near machine epsilon even on edges whose
  // own cost is tiny (nearly tied worst cases).
  constexpr double kAbsoluteSlack = 1e-13;
  PolishResult out;
  const std::size_t R = p.rows;
  const std::size_t C = p.cols;
  const std::size_t n = R + C;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t l = 0; l < R; ++l)
    for (std::size_t j = 0; j < C; ++j)
      if (active[l * C + j]) {
        adj[l].push_back(R + j);
        adj[R + j].push_back(l);
      }
  for (const auto& nb : adj)
    if (nb.empty()) return out;

  auto cost = [&](std::size_t u, std::size_t v) {
    return u < R ? p.cost(u, v - R) : p.cost(v, u - R);
  };

  std::vector<double> kappa(n, 0.0);
  std::vector<int> component(n, -1);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::pair<std::size_t, std::size_t>> tree_edges;
  std::vector<std::vector<std::size_t>> members;
  // Each component is rooted at the row end of its cheapest binding edge, so
  // the smallest shares come out of the balance search directly instead of
  // as differences of order-one potentials.
  std::vector<std::size_t> roots;
  {
    std::vector<std::size_t> edges;
    for (std::size_t e = 0; e < R * C; ++e)
      if (active[e]) edges.push_back(e);
    std::stable_sort(edges.begin(), edges.end(),
                     [&](std::size_t x, std::size_t y) { return p.c[x] < p.c[y]; });
    for (std::size_t e : edges) roots.push_back(e / C);
  }
  for (std::size_t root : roots) {
    if (component[root] >= 0) continue;
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    std::queue<std::size_t> queue;
    component[root] = id;
    queue.push(root);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop();
      members.back().push_back(u);
      for (std::size_t v : adj[u]) {
        const double c = cost(u, v);
        if (component[v] < 0) {
          component[v] = id;
          kappa[v] = c - kappa[u];
          parent[v] = u;
          tree_edges.emplace_back(u, v);
          queue.push(v);
        } else if (u < v) {
          // Edge seen from its lower endpoint: either the tree edge that
          // discovered v, or a cycle edge that has to be consistent.
          if (parent[v] != u && parent[u] != v) {
            out.forest = false;
            if (std::abs(kappa[u] + kappa[v] - c) > 1e-9 * c + kAbsoluteSlack) return out;
          }
        }
      }
    }
  }

  out.z.a.assign(R, 0.0);
  out.z.b.assign(C, 0.0);
  for (const auto& nodes : members) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t u : nodes) {
      if (u < R) lo = std::max(lo, -kappa[u]);
      else hi = std::min(hi, kappa[u]);
    }
    if (!(lo < hi)) return out;
    auto excess = [&](double tau) {
      double h = 0.0;
      for (std::size_t u : nodes) {
        if (u < R) {
          const double a = tau + kappa[u];
          h += p.v[u] / (a * a);
        } else {
          const double b = kappa[u] - tau;
          h -= p.w[u - R] / (b * b);
        }
      }
      return h;
    };
    double mid = lo;
    for (int it = 0; it < 2000; ++it) {
      mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      if (excess(mid) > 0.0) lo = mid;
      else hi = mid;
    }
    for (std::size_t u : nodes) {
      if (u < R) out.z.a[u] = mid + kappa[u];
      else out.z.b[u - R] = kappa[u] - mid;
    }
  }

  for (double a : out.z.a)
    if (!(a > 0.0)) return out;
  for (double b : out.z.b)
    if (!(b > 0.0)) return out;
  for (std::size_t l = 0; l < R; ++l)
    for (std::size_t j = 0; j < C; ++j)
      if (out.z.a[l] + out.z.b[j] > p.cost(l, j) * (1.0 + 1e-10) + kAbsoluteSlack) return out;

  if (out.forest) {
    // Multipliers on a tree follow from the node demands by leaf peeling.
    std::vector<double> demand(n);
    double scale = 0.0;
    for (std::size_t l = 0; l < R; ++l) demand[l] = p.v[l] / (out.z.a[l] * out.z.a[l]);
    for (std::size_t j = 0; j < C; ++j) demand[R + j] = p.w[j] / (out.z.b[j] * out.z.b[j]);
    for (double d : demand) scale = std::max(scale, d);
    std::vector<std::vector<std::size_t>> tadj(n);
    for (const auto& [u, v] : tree_edges) {
      tadj[u].push_back(v);
      tadj[v].push_back(u);
    }
    std::vector<std::size_t> degree(n);
    std::vector<unsigned char> removed(n, 0);
    std::queue<std::size_t> leaves;
    for (std::size_t u = 0; u < n; ++u) {
      degree[u] = tadj[u].size();
      if (degree[u] == 1) leaves.push(u);
    }
    while (!leaves.empty()) {
      const std::size_t u = leaves.front();
      leaves.pop();
      if (removed[u] || degree[u] != 1) continue;
      removed[u] = 1;
      for (std::size_t v : tadj[u]) {
        if (removed[v]) continue;
        const double lambda = demand[u];
        if (lambda < -1e-8 * scale) return out;
        demand[v] -= lambda;
        if (--degree[v] == 1) leaves.push(v);
      }
    }
  } else if (require_certificate) {
    return out;
  }
  out.ok = true;
  return out;
}

inline AllocationRatios ratios_from_point(const BalanceProblem& p, const BalancePoint& z,
                                          const Matrix& means, const Ranking& ranking) {
  AllocationRatios r;
  r.alpha = Matrix::Zero(means.rows(), means.cols());
  r.best = ranking.best();
  r.worst_scenario = ranking.worst_scenario;
  double total = 0.0;
  for (std::size_t l = 0; l < p.rows; ++l) total += p.v[l] / z.a[l];
  for (std::size_t j = 0; j < p.cols; ++j) total += p.w[j] / z.b[j];
  for (std::size_t l = 0; l < p.rows; ++l)
    r.alpha(static_cast<Eigen::Index>(r.best), static_cast<Eigen::Index>(l)) = p.v[l] / z.a[l] / total;
  for (std::size_t j = 0; j < p.cols; ++j) {
    const std::size_t i = p.competitors[j];
    r.alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ranking.worst_scenario[i])) =
        p.w[j] / z.b[j] / total;
  }
  return r;
}

}  // namespace detail

// Reusable solver. Remembers the last certified binding graph and tries it
// first on the next call; consecutive plug-in instances in a sequential run
// usually share it.
class RatioSolver {
 public:
  static constexpr std::size_t kIterationCap = 100000;

  AllocationRatios solve(const Matrix& means, const Matrix& vars, const Ranking& ranking) {
    const detail::BalanceProblem p = detail::make_balance_problem(means, vars, ranking);
    if (cached_.size() == p.rows * p.cols) {
      const auto warm = detail::polish(p, cached_, true);
      if (warm.ok) {
        ++warm_hits_;
        return detail::ratios_from_point(p, warm.z, means, ranking);
      }
    }
    ++cold_solves_;
    detail::BarrierSolver barrier(p, kIterationCap);
    std::vector<unsigned char> active(p.rows * p.cols);
    for (double gap_tol : {1e-9, 1e-12, 1e-14}) {
      const bool advanced = barrier.advance(gap_tol);
      // Two guesses at the binding set: small slack relative to the cost,
      // or a multiplier that carries a visible share of either endpoint's
      // demand (scale-free, so it survives nearly tied worst cases).
      for (int rule = 0; rule < 6; ++rule) {
        const double threshold = rule < 3 ? std::pow(10.0, -4 - 2 * rule) : std::pow(10.0, -(rule - 1));
        for (std::size_t l = 0; l < p.rows; ++l)
          for (std::size_t j = 0; j < p.cols; ++j) {
            bool on;
            if (rule < 3) {
              on = barrier.slack(l, j) < threshold * p.cost(l, j);
            } else {
              const auto& z = barrier.point();
              const double demand = std::min(p.v[l] / (z.a[l] * z.a[l]), p.w[j] / (z.b[j] * z.b[j]));
              on = barrier.flow(l, j) > threshold * demand;
            }
            active[l * p.cols + j] = on;
          }
        const auto exact = detail::polish(p, active, false);
        if (exact.ok) {
          if (exact.forest) cached_ = active;
          else cached_.clear();
          return detail::ratios_from_point(p, exact.z, means, ranking);
        }
      }
      if (!advanced) break;
    }
    AllocationRatios iterate = detail::ratios_from_point(p, barrier.point(), means, ranking);
    const Residuals res = optimality_residuals(iterate, means, vars, ranking);
    if (res.max() < 1e-8) return iterate;
    throw NonConvergence("optimal-ratio solver did not converge (max residual " +
                             std::to_string(res.max()) + ")",
                         std::move(iterate), res);
  }

  std::size_t warm_hits() const { return warm_hits_; }
  std::size_t cold_solves() const { return cold_solves_; }
  void reset() { cached_.clear(); }

 private:
  std::vector<unsigned char> cached_;
  std::size_t warm_hits_ = 0;
  std::size_t cold_solves_ = 0;
};

inline AllocationRatios solve_optimal_ratios(const Matrix& means, const Matrix& vars,
                                             const Ranking& ranking) {
  RatioSolver solver;
  return solver.solve(means, vars, ranking);
}

// count / total for every pair; the support set comes from `ranking`.
inline AllocationRatios empirical_ratios(const PosteriorState& state, const Ranking& ranking) {
  if (state.total_steps() < 1) throw PreconditionError("empirical ratios need at least one sample");
  AllocationRatios r;
  r.alpha = state.counts().cast<double>() / static_cast<double>(state.total_steps());
  r.best = ranking.best();
  r.worst_scenario = ranking.worst_scenario;
  return r;
}

inline AllocationRatios empirical_ratios(const PosteriorState& state) {
  return empirical_ratios(state, compute_ranking(state));
}

}  // namespace robsel
