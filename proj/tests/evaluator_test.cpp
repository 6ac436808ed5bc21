#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gpnn/errors.hpp"
#include "gpnn/evaluator.hpp"

using namespace gpnn;

namespace {

NetworkParams small_net(uint64_t seed, int n = 2) {
  NetworkShape s{n, 1, 2 * n * n + 4};
  return init_params(s, seed);
}

}  // namespace

TEST_CASE("test sets are deterministic and normalized") {
  auto a = build_test_set(2, 64, 5);
  auto b = build_test_set(2, 64, 5);
  auto c = build_test_set(2, 64, 6);
  REQUIRE(a.size() == 64);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].u1 - b[i].u1).norm() == 0.0);
    CHECK(std::abs(a[i].u1.sum()) < 1e-9);
    CHECK(a[i].u1.norm() == doctest::Approx(2.0));
  }
  double d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += (a[i].u1 - c[i].u1).norm();
  CHECK(d > 1e-6);
}

TEST_CASE("model evaluation: buckets, masses, benchmark") {
  NetworkParams w1 = small_net(1), w2 = small_net(2);
  auto games = build_test_set(2, 4096, 9);
  EvalReport rep = evaluate_models(w1, w2, games, 1);

  int64_t sum = rep.buckets[0].count + rep.buckets[1].count +
                rep.buckets[2].count;
  CHECK(sum == rep.buckets[3].count);
  CHECK(sum + rep.degenerate_excluded == 4096);
  CHECK(rep.frequency(0) + rep.frequency(1) + rep.frequency(2) ==
        doctest::Approx(1.0));
  for (int b = 0; b < 4; ++b) {
    CHECK(rep.buckets[b].mean_maxreg >= 0.0);
    CHECK(rep.buckets[b].mean_maxreg <= 1.0);
    CHECK(rep.buckets[b].dominated_mass >= 0.0);
    CHECK(rep.buckets[b].dominated_mass <= 1.0);
    CHECK(rep.buckets[b].nonrational_mass >= rep.buckets[b].dominated_mass -
                                                 1e-12);
    CHECK(rep.buckets[b].exact_pure_rate >= 0.0);
    CHECK(rep.buckets[b].exact_pure_rate <= 1.0);
  }
  CHECK(std::abs(rep.buckets[3].benchmark_mean - 0.259) < 0.02);
  CHECK(std::abs(rep.frequency(1) - 0.748) < 0.03);
  // zero-pure bucket has no exact-pure hits by construction
  CHECK(rep.buckets[0].exact_pure_rate == 0.0);
  CHECK(int64_t(rep.maxreg_sorted.size()) == sum);

  EvalReport rep4 = evaluate_models(w1, w2, games, 4);
  CHECK(rep4.buckets[3].mean_maxreg == rep.buckets[3].mean_maxreg);
  CHECK(rep4.buckets[2].count == rep.buckets[2].count);
}

TEST_CASE("cdf: monotone, anchored, with nearest-rank tails") {
  NetworkParams w1 = small_net(3), w2 = small_net(4);
  auto games = build_test_set(2, 1024, 11);
  EvalReport rep = evaluate_models(w1, w2, games, 1);
  CdfResult cdf = maxreg_cdf(rep);
  REQUIRE(!cdf.points.empty());
  for (size_t i = 1; i < cdf.points.size(); ++i) {
    CHECK(cdf.points[i].first > cdf.points[i - 1].first);
    CHECK(cdf.points[i].second >= cdf.points[i - 1].second);
  }
  CHECK(cdf.points.back().second == doctest::Approx(1.0));
  CHECK(cdf.p95 <= cdf.p99);
  // nearest-rank p99 must be an attained value
  bool found = false;
  for (auto& [e, f] : cdf.points) found = found || e == cdf.p99;
  CHECK(found);
}

TEST_CASE("selection tables add across disjoint chunks") {
  NetworkParams w1 = small_net(5), w2 = small_net(6);
  auto games = build_test_set(2, 2048, 13);
  SelectionTable whole = selection_report(w1, w2, games, 1);
  std::vector<Game> lo(games.begin(), games.begin() + 1024);
  std::vector<Game> hi(games.begin() + 1024, games.end());
  SelectionTable sum = selection_report(w1, w2, lo, 2);
  sum += selection_report(w1, w2, hi, 1);
  CHECK(sum.total == whole.total);
  CHECK(sum.selected_rd == whole.selected_rd);
  CHECK(sum.rd_util == whole.rd_util);
  CHECK(sum.selected_util == whole.selected_util);
  CHECK(sum.selected_pd == whole.selected_pd);
  CHECK(sum.pd_exists == whole.pd_exists);
  CHECK(sum.excluded_quarantined == whole.excluded_quarantined);
  CHECK(sum.excluded_degenerate == whole.excluded_degenerate);

  CHECK(whole.total > 0);
  CHECK(whole.selected_rd <= whole.total);
  CHECK(whole.rd_util + whole.rd_not_util == whole.total);
  CHECK(whole.selected_rd_given_util <= whole.rd_util);
  CHECK(whole.rd_is_pd <= whole.pd_exists);
}

TEST_CASE("filters: multi-pure and one-dominated-per-player") {
  auto games = build_test_set(2, 2048, 17);
  auto multi = filter_multi_pure(games);
  CHECK(!multi.empty());
  for (const Game& g : multi) CHECK(enumerate_pure_nash(g).size() >= 2);
  double frac = double(multi.size()) / 2048;
  CHECK(std::abs(frac - 0.126) < 0.03);

  auto g3 = build_test_set(3, 2048, 19);
  auto dom = filter_one_dominated_each(g3);
  CHECK(!dom.empty());
  for (const Game& g : dom) {
    CHECK(strictly_dominated_actions(g.u1).size() == 1);
    CHECK(strictly_dominated_actions(g.u2).size() == 1);
  }
}

TEST_CASE("symmetry axiom vanishes for identical parameters") {
  NetworkParams w = small_net(21);
  auto games = filter_multi_pure(build_test_set(2, 512, 23));
  AxiomStats st = axiom_symmetry(w, w, games);
  CHECK(st.games == int64_t(games.size()));
  CHECK(st.mean == 0.0);
  CHECK(st.q99 == 0.0);

  NetworkParams other = small_net(22);
  AxiomStats diff = axiom_symmetry(w, other, games);
  CHECK(diff.mean > 0.0);
  CHECK(diff.q90 >= diff.mean * 0.1);
}

TEST_CASE("equivariance axiom vanishes for the uniform constant net") {
  NetworkShape s{2, 1, 12};
  NetworkParams z = zero_params(s);
  auto games = filter_multi_pure(build_test_set(2, 256, 29));
  AxiomStats st = axiom_equivariance(z, z, games);
  CHECK(st.mean == 0.0);
  CHECK(st.transforms == 4);  // (2!)^2

  NetworkParams w = small_net(23);
  AxiomStats real = axiom_equivariance(w, w, games);
  CHECK(real.mean > 0.0);
  CHECK(real.mean <= 1.0);
}

TEST_CASE("best-reply invariance axiom is bounded and deterministic") {
  NetworkParams w1 = small_net(31), w2 = small_net(32);
  auto games = filter_multi_pure(build_test_set(2, 128, 31));
  AxiomStats a = axiom_br_invariance(w1, w2, games, 7, 16);
  AxiomStats b = axiom_br_invariance(w1, w2, games, 7, 16);
  CHECK(a.mean == b.mean);
  CHECK(a.std_dev == b.std_dev);
  CHECK(a.transforms == 16);
  CHECK(a.mean >= 0.0);
  CHECK(a.mean <= 1.0);
  AxiomStats c = axiom_br_invariance(w1, w2, games, 8, 16);
  CHECK(c.mean != a.mean);
}

TEST_CASE("monotonicity axiom: zero increments change nothing") {
  // constant nets pinned to action 1: eligible exactly on games with a pure
  // equilibrium at (1,1), and trivially argmax-stable
  NetworkShape s{2, 1, 12};
  NetworkParams w1 = zero_params(s), w2 = zero_params(s);
  w1.b.back()(0) = 50.0;
  w2.b.back()(0) = 50.0;
  auto games = filter_multi_pure(build_test_set(2, 512, 37));
  double stable = -1.0;
  AxiomStats z = axiom_monotonicity(w1, w2, games, 11, 8, 0.0, &stable);
  CHECK(z.games > 0);
  CHECK(z.games <= int64_t(games.size()));
  CHECK(z.mean == 0.0);
  CHECK(z.q99 == 0.0);
  CHECK(stable == 1.0);

  double stable1 = -1.0;
  AxiomStats one = axiom_monotonicity(w1, w2, games, 11, 8, 1.0, &stable1);
  CHECK(one.games == z.games);
  CHECK(one.mean >= 0.0);
  CHECK(stable1 >= 0.0);
  CHECK(stable1 <= 1.0);

  // random nets are nowhere near pure play, so nothing is eligible
  double none = -1.0;
  AxiomStats empty =
      axiom_monotonicity(small_net(41), small_net(42), games, 11, 8, 1.0,
                         &none);
  CHECK(empty.games == 0);
}

TEST_CASE("independence axiom compares reduced to restricted play") {
  NetworkParams s1 = small_net(51, 2), s2 = small_net(52, 2);
  NetworkParams l1 = small_net(53, 3), l2 = small_net(54, 3);
  auto g3 = filter_one_dominated_each(build_test_set(3, 2048, 41));
  REQUIRE(!g3.empty());
  AxiomStats st = axiom_independence(s1, s2, l1, l2, g3, false);
  CHECK(st.games == int64_t(g3.size()));
  CHECK(st.mean >= 0.0);
  CHECK(st.mean <= 1.0);
  AxiomStats raw = axiom_independence(s1, s2, l1, l2, g3, true);
  CHECK(raw.axiom != st.axiom);
  CHECK(raw.mean != st.mean);
}

TEST_CASE("heatmap: cell-centered torus grid") {
  NetworkParams w1 = small_net(61), w2 = small_net(62);
  HeatmapGrid grid = heatmap_grid(w1, w2, 8);
  REQUIRE(int64_t(grid.cells.size()) == 64);
  const double two_pi = 6.283185307179586;
  for (const auto& c : grid.cells) {
    CHECK(c.theta1 > 0.0);
    CHECK(c.theta1 < two_pi);
    CHECK(c.p1_action1 >= 0.0);
    CHECK(c.p1_action1 <= 1.0);
    CHECK(c.maxreg >= 0.0);
    CHECK(c.maxreg <= 1.0);
  }
  // theta1-major layout
  CHECK(grid.cells[0].theta1 == grid.cells[1].theta1);
  CHECK(grid.cells[0].theta2 < grid.cells[1].theta2);
  CHECK(grid.cells[0].theta1 < grid.cells[8].theta1);
}

TEST_CASE("affine ood: same transformed inputs for candidate and reference") {
  NetworkParams w1 = small_net(71), w2 = small_net(72);
  auto games = build_test_set(2, 512, 43);
  OodSummary self = ood_affine_report(w1, w2, w1, w2, games, 3, 1);
  CHECK(self.dist_mean == 0.0);
  CHECK(self.dist_std == 0.0);
  CHECK(self.report.buckets[3].count > 0);

  NetworkParams r1 = small_net(73), r2 = small_net(74);
  OodSummary other = ood_affine_report(w1, w2, r1, r2, games, 3, 2);
  CHECK(other.dist_mean > 0.0);
  CHECK(other.dist_mean <= 1.0);
  OodSummary again = ood_affine_report(w1, w2, r1, r2, games, 3, 1);
  CHECK(again.dist_mean == other.dist_mean);

  CHECK_THROWS_AS(ood_affine_report(w1, w2, r1, r2, {}, 3, 1), EmptyTestSet);
}

TEST_CASE("complement sets sit outside the half-space pair") {
  SubspaceSpec mm{subspace_M(), subspace_M()};
  auto games = build_complement_set(2, mm, 256, 47);
  REQUIRE(games.size() == 256);
  for (const Game& g : games) {
    bool in1 = (g.u1.array() * mm.v1.array()).sum() >= 0;
    bool in2 = (g.u2.array() * mm.v2.array()).sum() >= 0;
    CHECK(!(in1 && in2));
  }
  NetworkParams w1 = small_net(81), w2 = small_net(82);
  OodSummary s = ood_subspace_report(w1, w2, w1, w2, games, 1);
  CHECK(s.dist_mean == 0.0);
  CHECK(s.report.buckets[3].count > 0);
}
