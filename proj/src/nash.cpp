#include "gpnn/nash.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "gpnn/errors.hpp"

namespace gpnn {

namespace {
constexpr double kEqResidual = 1e-9;
constexpr double kDedupeTv = 1e-7;
constexpr double kProbFloor = -1e-9;
}  // namespace

Vector uniform_strategy(int n) { return Vector::Constant(n, 1.0 / n); }

Vector pure_strategy(int n, int j) {
  Vector v = Vector::Zero(n);
  v(j) = 1.0;
  return v;
}

double expected_payoff(const Matrix& u, const Vector& own, const Vector& opp) {
  return own.dot(u * opp);
}

double regret(const Matrix& u, const Vector& own, const Vector& opp) {
  Vector pay = u * opp;
  double r = pay.maxCoeff() - own.dot(pay);
  return r > 0.0 ? r : 0.0;
}

double max_normalized_regret(const Game& g, const StrategyProfile& p) {
  double range1 = g.u1.maxCoeff() - g.u1.minCoeff();
  double range2 = g.u2.maxCoeff() - g.u2.minCoeff();
  if (range1 <= 0.0 || range2 <= 0.0)
    throw DegenerateGame("constant payoffs: MaxReg undefined");
  double r1 = regret(g.u1, p.s1, p.s2) / range1;
  double r2 = regret(g.u2, p.s2, p.s1) / range2;
  return std::max(r1, r2);
}

std::vector<std::pair<int, int>> enumerate_pure_nash(const Game& g) {
  const int n = g.n();
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      bool best1 = true, best2 = true;
      for (int a = 0; a < n && best1; ++a) best1 = g.u1(j, k) >= g.u1(a, k);
      for (int a = 0; a < n && best2; ++a) best2 = g.u2(k, j) >= g.u2(a, j);
      if (best1 && best2) out.emplace_back(j, k);
    }
  return out;
}

double tv_distance(const Vector& a, const Vector& b) {
  return 0.5 * (a - b).lpNorm<1>();
}

double profile_tv(const StrategyProfile& a, const StrategyProfile& b) {
  return std::max(tv_distance(a.s1, b.s1), tv_distance(a.s2, b.s2));
}

namespace {

bool is_pure(const Vector& v) { return v.maxCoeff() >= 1.0 - 1e-9; }

Equilibrium make_equilibrium(const Game& g, Vector s1, Vector s2) {
  Equilibrium eq;
  eq.profile = {std::move(s1), std::move(s2)};
  eq.residual = std::max(regret(g.u1, eq.profile.s1, eq.profile.s2),
                         regret(g.u2, eq.profile.s2, eq.profile.s1));
  eq.kind = (is_pure(eq.profile.s1) && is_pure(eq.profile.s2)) ? EqKind::pure
                                                               : EqKind::mixed;
  return eq;
}

// Solve the indifference-and-normalization system of one support pair.
// Returns nullopt when the system is inconsistent or the solution leaves the
// simplex / fails the equilibrium check; throws DegenerateGame when both
// sides are consistent and at least one admits a continuum.
std::optional<Equilibrium> solve_support(const Game& g,
                                         const std::vector<int>& S1,
                                         const std::vector<int>& S2) {
  const int n = g.n();
  const int m1 = static_cast<int>(S1.size());
  const int m2 = static_cast<int>(S2.size());

  if (m1 == 1 && m2 == 1) {
    // pure cell: best-reply scan, no linear algebra
    int j = S1[0], k = S2[0];
    Vector s1 = pure_strategy(n, j), s2 = pure_strategy(n, k);
    Equilibrium eq = make_equilibrium(g, std::move(s1), std::move(s2));
    if (eq.residual > kEqResidual) return std::nullopt;
    return eq;
  }

  // unknowns (sigma_opp restricted to S_opp, value); one equation per own
  // support action plus normalization
  auto side = [&](const Matrix& u, const std::vector<int>& own,
                  const std::vector<int>& opp, bool& continuum)
      -> std::optional<Vector> {
    const int r = static_cast<int>(own.size());
    const int c = static_cast<int>(opp.size());
    Matrix A = Matrix::Zero(r + 1, c + 1);
    Vector rhs = Vector::Zero(r + 1);
    for (int i = 0; i < r; ++i) {
      for (int t = 0; t < c; ++t) A(i, t) = u(own[i], opp[t]);
      A(i, c) = -1.0;
    }
    for (int t = 0; t < c; ++t) A(r, t) = 1.0;
    rhs(r) = 1.0;

    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    Vector x = cod.solve(rhs);
    if ((A * x - rhs).norm() > 1e-9 * scale) return std::nullopt;
    continuum = cod.rank() < c + 1;
    return x;
  };

  bool cont1 = false, cont2 = false;
  auto x = side(g.u1, S1, S2, cont1);  // -> sigma2 on S2, v1
  if (!x) return std::nullopt;
  auto y = side(g.u2, S2, S1, cont2);  // -> sigma1 on S1, v2
  if (!y) return std::nullopt;
  if (cont1 || cont2)
    throw DegenerateGame("support system admits a solution continuum");

  Vector s1 = Vector::Zero(n), s2 = Vector::Zero(n);
  for (int t = 0; t < m1; ++t) s1(S1[t]) = (*y)(t);
  for (int t = 0; t < m2; ++t) s2(S2[t]) = (*x)(t);
  if (s1.minCoeff() < kProbFloor || s2.minCoeff() < kProbFloor)
    return std::nullopt;
  s1 = s1.cwiseMax(0.0);
  s2 = s2.cwiseMax(0.0);
  s1 /= s1.sum();
  s2 /= s2.sum();

  Equilibrium eq = make_equilibrium(g, std::move(s1), std::move(s2));
  if (eq.residual > kEqResidual) return std::nullopt;
  return eq;
}

std::vector<std::vector<int>> subsets_of_size(int n, int size) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace

std::vector<Equilibrium> enumerate_all_nash(const Game& g) {
  const int n = g.n();
  if (n > 5) throw ShapeMismatch("support enumeration limited to n <= 5");
  std::vector<std::vector<std::vector<int>>> by_size(n + 1);
  for (int s = 1; s <= n; ++s) by_size[s] = subsets_of_size(n, s);

  std::vector<Equilibrium> found;
  auto novel = [&](const Equilibrium& eq) {
    for (const auto& e : found)
      if (profile_tv(e.profile, eq.profile) < kDedupeTv) return false;
    return true;
  };

  for (int s1 = 1; s1 <= n; ++s1)
    for (int s2 = 1; s2 <= n; ++s2) {
      if (n >= 4 && s1 != s2) continue;  // generic games: equal support sizes
      for (const auto& S1 : by_size[s1])
        for (const auto& S2 : by_size[s2]) {
          auto eq = solve_support(g, S1, S2);
          if (eq && novel(*eq)) found.push_back(std::move(*eq));
        }
    }
  return found;
}

std::vector<Equilibrium> enumerate_nash_2x2_closed_form(const Game& g) {
  std::vector<Equilibrium> out;
  auto push_unique = [&](Equilibrium eq) {
    for (const auto& e : out)
      if (profile_tv(e.profile, eq.profile) < kDedupeTv) return;
    out.push_back(std::move(eq));
  };

  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      if (g.u1(j, k) >= g.u1(1 - j, k) && g.u2(k, j) >= g.u2(1 - k, j))
        push_unique(make_equilibrium(g, pure_strategy(2, j),
                                     pure_strategy(2, k)));

  double d1 = g.u1(0, 0) - g.u1(0, 1) - g.u1(1, 0) + g.u1(1, 1);
  double d2 = g.u2(0, 0) - g.u2(0, 1) - g.u2(1, 0) + g.u2(1, 1);
  if (d1 != 0.0 && d2 != 0.0) {
    double q = (g.u1(1, 1) - g.u1(0, 1)) / d1;  // P(opponent action 0) for P1
    double p = (g.u2(1, 1) - g.u2(0, 1)) / d2;
    if (p > kProbFloor && p < 1.0 - kProbFloor && q > kProbFloor &&
        q < 1.0 - kProbFloor) {
      Vector s1(2), s2(2);
      s1 << std::clamp(p, 0.0, 1.0), 1.0 - std::clamp(p, 0.0, 1.0);
      s2 << std::clamp(q, 0.0, 1.0), 1.0 - std::clamp(q, 0.0, 1.0);
      Equilibrium eq = make_equilibrium(g, std::move(s1), std::move(s2));
      if (eq.residual <= kEqResidual) push_unique(std::move(eq));
    }
  }
  return out;
}

ClosestEq closest_equilibrium(const StrategyProfile& p,
                              const std::vector<Equilibrium>& eqs) {
  if (eqs.empty()) throw EmptyEquilibriumList("no equilibria to compare");
  ClosestEq best;
  best.tv = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(eqs.size()); ++i) {
    double tv = profile_tv(p, eqs[i].profile);
    if (tv < best.tv - 1e-12) {
      best.index = i;
      best.tv = tv;
      best.tie = false;
    } else if (tv <= best.tv + 1e-12) {
      best.tie = true;
    }
  }
  return best;
}

namespace {

struct CoordCells {
  std::pair<int, int> e1, e2;  // pure equilibrium cells, list order
};

CoordCells coordination_cells(const Game& g) {
  auto pure = enumerate_pure_nash(g);
  if (pure.size() != 2)
    throw NotCoordinationGame("need exactly two pure equilibria");
  if (pure[0].first == pure[1].first || pure[0].second == pure[1].second)
    throw NotCoordinationGame("pure equilibria share a row or column");
  return {pure[0], pure[1]};
}

}  // namespace

std::pair<double, double> deviation_loss_products(const Game& g) {
  auto [e1, e2] = coordination_cells(g);
  auto [j1, k1] = e1;
  auto [j2, k2] = e2;
  double pd1 = (g.u1(j1, k1) - g.u1(j2, k1)) * (g.u2(k1, j1) - g.u2(k2, j1));
  double pd2 = (g.u1(j2, k2) - g.u1(j1, k2)) * (g.u2(k2, j2) - g.u2(k1, j2));
  return {pd1, pd2};
}

Equilibrium risk_dominant_2x2(const Game& g) {
  auto [e1, e2] = coordination_cells(g);
  auto [pd1, pd2] = deviation_loss_products(g);
  if (std::abs(pd1 - pd2) <= 1e-12) {
    for (auto& eq : enumerate_all_nash(g))
      if (eq.kind == EqKind::mixed) return eq;
    throw NotCoordinationGame("tie without a mixed equilibrium");
  }
  auto [j, k] = (pd1 > pd2) ? e1 : e2;
  return make_equilibrium(g, pure_strategy(2, j), pure_strategy(2, k));
}

// ---- linear tracing ------------------------------------------------------

namespace {

Game tracing_game(const Game& g, const Vector& r1, const Vector& r2,
                  double t) {
  const int n = g.n();
  Game gt;
  gt.u1 = t * g.u1 + (1.0 - t) * r1.replicate(1, n);
  gt.u2 = t * g.u2 + (1.0 - t) * r2.replicate(1, n);
  return gt;
}

std::vector<int> support_of(const Vector& v) {
  std::vector<int> s;
  for (int i = 0; i < v.size(); ++i)
    if (v(i) > 1e-9) s.push_back(i);
  return s;
}

// closest equilibrium within the TV gate, else the unique one
std::optional<Equilibrium> pick_continuation(const std::vector<Equilibrium>&
                                                 eqs,
                                             const StrategyProfile& prev) {
  if (eqs.empty()) return std::nullopt;
  int best = 0;
  double best_tv = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(eqs.size()); ++i) {
    double tv = profile_tv(prev, eqs[i].profile);
    if (tv < best_tv) {
      best_tv = tv;
      best = i;
    }
  }
  if (best_tv <= 0.25) return eqs[best];
  if (eqs.size() == 1) return eqs[0];
  return std::nullopt;
}

}  // namespace

Equilibrium trace_linear(const Game& g, const StrategyProfile& prior) {
  const int n = g.n();
  if (n > 3) throw ShapeMismatch("tracing limited to n <= 3");
  const int steps = 1024;
  Vector r1 = g.u1 * prior.s2;
  Vector r2 = g.u2 * prior.s1;

  // t = 0: dominant-strategy game, best reply against the prior
  int j0 = 0, k0 = 0;
  r1.maxCoeff(&j0);
  r2.maxCoeff(&k0);
  StrategyProfile prev{pure_strategy(n, j0), pure_strategy(n, k0)};
  double prev_t = 0.0;

  auto enumerate_at = [&](const Game& gt, double t) {
    try {
      return enumerate_all_nash(gt);
    } catch (const DegenerateGame& e) {
      throw TracingFailure("degenerate tracing game at t=" + std::to_string(t));
    }
  };
  // a continuum at an exactly-hit switch point is a warm-start miss, not an
  // abort: the grid point after it resolves the branch
  auto warm_solve = [&](const Game& gt, const StrategyProfile& from)
      -> std::optional<Equilibrium> {
    try {
      return solve_support(gt, support_of(from.s1), support_of(from.s2));
    } catch (const DegenerateGame&) {
      return std::nullopt;
    }
  };

  for (int i = 1; i <= steps; ++i) {
    double t = double(i) / steps;
    Game gt = tracing_game(g, r1, r2, t);
    auto warm = warm_solve(gt, prev);
    if (warm) {
      prev = warm->profile;
      prev_t = t;
      continue;
    }
    auto pick = pick_continuation(enumerate_at(gt, t), prev);
    if (!pick) {
      // one bisection refinement on the support-change interval
      double tm = 0.5 * (prev_t + t);
      Game gm = tracing_game(g, r1, r2, tm);
      auto warm_m = warm_solve(gm, prev);
      if (warm_m) {
        prev = warm_m->profile;
      } else {
        auto pick_m = pick_continuation(enumerate_at(gm, tm), prev);
        if (!pick_m)
          throw TracingFailure("no continuation at t=" + std::to_string(tm));
        prev = pick_m->profile;
      }
      prev_t = tm;
      pick = pick_continuation(enumerate_at(gt, t), prev);
      if (!pick)
        throw TracingFailure("no continuation at t=" + std::to_string(t));
    }
    prev = pick->profile;
    prev_t = t;
  }
  return make_equilibrium(g, prev.s1, prev.s2);
}

Equilibrium trace_linear(const Game& g) {
  return trace_linear(
      g, StrategyProfile{uniform_strategy(g.n()), uniform_strategy(g.n())});
}

// ---- selection -----------------------------------------------------------

SelectionFlags classify_selection(const Game& g, const StrategyProfile& p) {
  return classify_selection(g, p, enumerate_all_nash(g));
}

SelectionFlags classify_selection(const Game& g, const StrategyProfile& p,
                                  const std::vector<Equilibrium>& eqs) {
  if (eqs.size() < 2)
    throw EmptyEquilibriumList("selection needs >= 2 equilibria");
  SelectionFlags flags;
  ClosestEq closest = closest_equilibrium(p, eqs);
  flags.closest_index = closest.index;
  flags.tv_to_closest = closest.tv;
  flags.tie = closest.tie;

  Equilibrium rd = (g.n() == 2) ? risk_dominant_2x2(g) : trace_linear(g);
  for (size_t i = 0; i < eqs.size(); ++i)
    if (profile_tv(eqs[i].profile, rd.profile) < 1e-6) {
      flags.rd_index = static_cast<int>(i);
      break;
    }
  flags.risk_dominant = flags.rd_index == closest.index && flags.rd_index >= 0;

  std::vector<double> pay1(eqs.size()), pay2(eqs.size());
  for (size_t i = 0; i < eqs.size(); ++i) {
    pay1[i] = expected_payoff(g.u1, eqs[i].profile.s1, eqs[i].profile.s2);
    pay2[i] = expected_payoff(g.u2, eqs[i].profile.s2, eqs[i].profile.s1);
  }
  double best_welfare = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < eqs.size(); ++i)
    best_welfare = std::max(best_welfare, pay1[i] + pay2[i]);
  auto is_util = [&](int i) {
    return pay1[i] + pay2[i] >= best_welfare - 1e-9;
  };
  flags.utilitarian = is_util(closest.index);
  if (flags.rd_index >= 0) flags.rd_is_utilitarian = is_util(flags.rd_index);

  std::vector<int> pareto;
  for (size_t i = 0; i < eqs.size(); ++i) {
    bool dominated = false;
    for (size_t o = 0; o < eqs.size() && !dominated; ++o)
      dominated = o != i && pay1[o] >= pay1[i] - 1e-12 &&
                  pay2[o] >= pay2[i] - 1e-12 &&
                  (pay1[o] > pay1[i] + 1e-9 || pay2[o] > pay2[i] + 1e-9);
    if (!dominated) pareto.push_back(static_cast<int>(i));
  }
  if (pareto.size() == 1) {
    flags.payoff_dominant = (closest.index == pareto[0]);
    if (flags.rd_index >= 0)
      flags.rd_is_payoff_dominant = (flags.rd_index == pareto[0]);
  }
  return flags;
}

// ---- dominance via a tiny LP ----------------------------------------------

namespace {

// maximize sum(x) s.t. Ax <= b, x >= 0 with b > 0; dense tableau simplex
// with Bland's rule. Sizes here are at most 5x5.
double simplex_max_sum(const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  const int k = static_cast<int>(A.cols());
  Matrix T = Matrix::Zero(m + 1, k + m + 1);
  T.block(0, 0, m, k) = A;
  T.block(0, k, m, m) = Matrix::Identity(m, m);
  T.block(0, k + m, m, 1) = b;
  for (int j = 0; j < k; ++j) T(m, j) = 1.0;  // maximize 1'x

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = k + i;

  const double tol = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    int enter = -1;
    for (int j = 0; j < k + m; ++j)
      if (T(m, j) > tol) {
        enter = j;
        break;  // Bland: smallest index
      }
    if (enter < 0) return -T(m, k + m);

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) > tol) {
        double ratio = T(i, k + m) / T(i, enter);
        if (leave < 0 || ratio < best_ratio - tol ||
            (ratio < best_ratio + tol && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0)
      throw DegenerateGame("unbounded domination LP");  // cannot happen

    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[leave] = enter;
  }
  throw DegenerateGame("domination LP failed to converge");
}

// value of the zero-sum game max_x min_col (x'D), x on the simplex over rows
double maxmin_value(const Matrix& D) {
  double shift = 1.0 - D.minCoeff();
  Matrix Dp = D.array() + shift;  // all entries >= 1
  // value' = 1 / max{ 1'z : Dp z <= 1, z >= 0 }
  double z = simplex_max_sum(Dp, Vector::Ones(Dp.rows()));
  return 1.0 / z - shift;
}

}  // namespace

std::vector<int> strictly_dominated_actions(const Matrix& u) {
  const int n = static_cast<int>(u.rows());
  std::vector<int> out;
  if (n < 2) return out;
  for (int j = 0; j < n; ++j) {
    Matrix D(n - 1, u.cols());
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      D.row(r++) = u.row(i) - u.row(j);
    }
    if (maxmin_value(D) > 1e-9) out.push_back(j);
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> rationalizable_actions(
    const Game& g) {
  std::vector<int> k1(g.n()), k2(g.n());
  for (int i = 0; i < g.n(); ++i) k1[i] = k2[i] = i;
  for (;;) {
    Game r = restrict_game(g, k1, k2);
    auto d1 = strictly_dominated_actions(r.u1);
    auto d2 = strictly_dominated_actions(r.u2);
    if (d1.empty() && d2.empty()) return {k1, k2};
    auto prune = [](std::vector<int>& keep, const std::vector<int>& drop) {
      std::vector<int> next;
      for (int i = 0; i < static_cast<int>(keep.size()); ++i)
        if (std::find(drop.begin(), drop.end(), i) == drop.end())
          next.push_back(keep[i]);
      keep = std::move(next);
    };
    prune(k1, d1);
    prune(k2, d2);
  }
}

double uniform_benchmark_maxreg(const Game& g) {
  const int n = g.n();
  return max_normalized_regret(
      g, StrategyProfile{uniform_strategy(n), uniform_strategy(n)});
}

}  // namespace gpnn
