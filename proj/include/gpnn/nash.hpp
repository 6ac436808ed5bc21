#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gpnn/game.hpp"

namespace gpnn {

struct StrategyProfile {
  Vector s1, s2;
};

enum class EqKind { pure, mixed };

struct Equilibrium {
  StrategyProfile profile;
  EqKind kind = EqKind::mixed;
  double residual = 0.0;  // max player regret, re-verified
};

struct SelectionFlags {
  bool risk_dominant = false;
  bool utilitarian = false;
  std::optional<bool> payoff_dominant;  // absent when no payoff-dominant eq
  double tv_to_closest = 0.0;
  int closest_index = -1;
  bool tie = false;
  // properties of the risk-dominant equilibrium itself, used by the
  // conditional columns of the selection table
  int rd_index = -1;
  bool rd_is_utilitarian = false;
  std::optional<bool> rd_is_payoff_dominant;
};

Vector uniform_strategy(int n);
Vector pure_strategy(int n, int j);

double expected_payoff(const Matrix& u, const Vector& own, const Vector& opp);
// max_j [u*opp]_j - own' u opp, clipped to >= 0
double regret(const Matrix& u, const Vector& own, const Vector& opp);
// max over players of regret / payoff range; DegenerateGame on zero range
double max_normalized_regret(const Game& g, const StrategyProfile& p);

std::vector<std::pair<int, int>> enumerate_pure_nash(const Game& g);

// Support enumeration, n <= 5. Accepts residual <= 1e-9, dedupes at
// profile TV < 1e-7, throws DegenerateGame on singular systems that admit
// solution continua.
std::vector<Equilibrium> enumerate_all_nash(const Game& g);

// Independent 2x2 oracle: pure cell scan + the indifference formula. Shares
// no linear algebra with enumerate_all_nash.
std::vector<Equilibrium> enumerate_nash_2x2_closed_form(const Game& g);

double tv_distance(const Vector& a, const Vector& b);
double profile_tv(const StrategyProfile& a, const StrategyProfile& b);

struct ClosestEq {
  int index = -1;
  double tv = 0.0;
  bool tie = false;
};
ClosestEq closest_equilibrium(const StrategyProfile& p,
                              const std::vector<Equilibrium>& eqs);

// Deviation-loss products of the two pure equilibria of a 2x2 coordination
// game, in that game's own labeling (first = the pure eq with the smaller
// (row, col) index). NotCoordinationGame unless exactly two pure equilibria
// on distinct rows and columns exist.
std::pair<double, double> deviation_loss_products(const Game& g);

// Product-of-losses rule; returns the mixed equilibrium on a tie (<= 1e-12).
Equilibrium risk_dominant_2x2(const Game& g);

// Harsanyi–Selten linear tracing from the given prior (uniform by default),
// 1024-step grid with one bisection refinement on support breaks.
Equilibrium trace_linear(const Game& g, const StrategyProfile& prior);
Equilibrium trace_linear(const Game& g);

SelectionFlags classify_selection(const Game& g, const StrategyProfile& p);
SelectionFlags classify_selection(const Game& g, const StrategyProfile& p,
                                  const std::vector<Equilibrium>& eqs);

// Mixed strict domination via a small LP; action indices into u's rows.
std::vector<int> strictly_dominated_actions(const Matrix& u);
std::pair<std::vector<int>, std::vector<int>> rationalizable_actions(
    const Game& g);

double uniform_benchmark_maxreg(const Game& g);

}  // namespace gpnn
