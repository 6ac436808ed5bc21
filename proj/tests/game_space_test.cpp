#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gpnn/errors.hpp"
#include "gpnn/game.hpp"
#include "gpnn/nash.hpp"

using namespace gpnn;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

bool on_manifold(const Matrix& a, double tol = 1e-9) {
  int n = static_cast<int>(a.rows());
  return std::abs(a.sum()) <= tol * n * n &&
         std::abs(a.norm() - n) <= tol * n;
}

}  // namespace

TEST_CASE("normalize: fixed points and arithmetic") {
  Matrix a = m2(1, -1, 1, -1);
  CHECK((normalize_to_payoff_space(a) - a).norm() < 1e-12);

  Matrix b = m2(2, 0, 0, 0);
  Matrix want = m2(1.5, -0.5, -0.5, -0.5) * (2.0 / std::sqrt(3.0));
  CHECK((normalize_to_payoff_space(b) - want).norm() < 1e-12);

  CHECK_THROWS_AS(normalize_to_payoff_space(m2(3, 3, 3, 3)), ConstantMatrix);
  CHECK(is_normalized(normalize_to_payoff_space(m2(0.3, 2, -1, 7))));
}

TEST_CASE("uniform sampler stays on the manifold for every n") {
  for (int n = 2; n <= 5; ++n) {
    Rng rng(7, stream::misc, n);
    for (int i = 0; i < 200; ++i) {
      Game g = sample_uniform_game(n, rng);
      CHECK(on_manifold(g.u1));
      CHECK(on_manifold(g.u2));
    }
  }
}

TEST_CASE("uniform 2x2 pure-equilibrium bucket frequencies") {
  const int N = 1 << 14;
  int c0 = 0, c1 = 0, cm = 0;
  for (int i = 0; i < N; ++i) {
    Rng rng(11, stream::test_game, i);
    Game g = sample_uniform_game(2, rng);
    size_t k = enumerate_pure_nash(g).size();
    (k == 0 ? c0 : k == 1 ? c1 : cm)++;
  }
  CHECK(std::abs(c0 / double(N) - 0.126) < 0.02);
  CHECK(std::abs(c1 / double(N) - 0.748) < 0.02);
  CHECK(std::abs(cm / double(N) - 0.126) < 0.02);
}

TEST_CASE("nonuniform sampler: zero tilt matches uniform, tilt shrinks range") {
  Rng a(5, stream::misc, 1), b(5, stream::misc, 1);
  Game gu = sample_uniform_game(2, a);
  Game gn = sample_nonuniform_game(2, 0.0, b);
  CHECK((gu.u1 - gn.u1).norm() == 0.0);

  auto mean_range = [](double tilt) {
    double acc = 0;
    for (int i = 0; i < 20000; ++i) {
      Rng rng(13, stream::misc, i);
      Game g = tilt == 0.0 ? sample_uniform_game(2, rng)
                           : sample_nonuniform_game(2, tilt, rng);
      acc += g.u1.array().abs().maxCoeff() - g.u1.array().abs().minCoeff();
    }
    return acc / 20000;
  };
  CHECK(mean_range(2.0) < mean_range(0.0) - 0.05);
}

TEST_CASE("subspace sampler respects half-spaces") {
  SubspaceSpec mm{subspace_M(), subspace_M()};
  SubspaceSpec nn{subspace_N(), subspace_N()};
  for (int i = 0; i < 500; ++i) {
    Rng rng(3, stream::misc, i);
    Game g = sample_subspace_game(2, mm, rng);
    CHECK(g.u1.col(0).sum() <= g.u1.col(1).sum() + 1e-12);
    CHECK(g.u2.col(0).sum() <= g.u2.col(1).sum() + 1e-12);
    Rng rng2(4, stream::misc, i);
    Game h = sample_subspace_game(2, nn, rng2);
    CHECK(h.u1(0, 0) + h.u1(1, 1) >= h.u1(0, 1) + h.u1(1, 0) - 1e-12);
    CHECK(h.u2(0, 0) + h.u2(1, 1) >= h.u2(0, 1) + h.u2(1, 0) - 1e-12);
  }
}

TEST_CASE("subspace acceptance rate near one quarter") {
  SubspaceSpec mn{subspace_M(), subspace_N()};
  int hits = 0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    Rng rng(9, stream::misc, i);
    Game g = sample_uniform_game(2, rng);
    bool ok1 = (g.u1.array() * mn.v1.array()).sum() >= 0;
    bool ok2 = (g.u2.array() * mn.v2.array()).sum() >= 0;
    if (ok1 && ok2) ++hits;
  }
  CHECK(std::abs(hits / double(N) - 0.25) < 0.02);
}

TEST_CASE("affine transform preserves best replies, leaves the manifold") {
  for (int i = 0; i < 200; ++i) {
    Rng rng(21, stream::misc, i);
    Game g = sample_uniform_game(3, rng);
    Rng t(21, stream::affine, i);
    Game a = affine_transform_game(g, t);
    for (int s = 0; s < 20; ++s) {
      Rng sr(22, stream::misc, i * 20 + s);
      Vector opp(3);
      opp << sr.uniform01(), sr.uniform01(), sr.uniform01();
      opp /= opp.sum();
      int j0, j1;
      (g.u1 * opp).maxCoeff(&j0);
      (a.u1 * opp).maxCoeff(&j1);
      CHECK(j0 == j1);
    }
    double bound = 3 * std::sqrt(8.0) + 3 + 1e-9;
    CHECK(a.u1.array().abs().maxCoeff() <= bound);
  }
}

TEST_CASE("angle games: closed form, zero column sums, per-player control") {
  Game g = game_from_angles(0.0, 0.0);
  CHECK(g.u1(0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(g.u1(1, 0) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(g.u1(0, 1) == doctest::Approx(0.0));
  CHECK(g.u1(1, 1) == doctest::Approx(0.0));

  for (double th1 : {0.3, 1.7, 4.0})
    for (double th2 : {0.9, 5.5}) {
      Game h = game_from_angles(th1, th2);
      CHECK(std::abs(h.u1.col(0).sum()) < 1e-12);
      CHECK(std::abs(h.u1.col(1).sum()) < 1e-12);
      CHECK(h.u1.norm() == doctest::Approx(2.0));
      CHECK(h.u2.norm() == doctest::Approx(2.0));
    }

  Game p = game_from_angles(0.3, 0.9), q = game_from_angles(2.8, 0.9);
  CHECK((p.u2 - q.u2).norm() == 0.0);
  CHECK((p.u1 - q.u1).norm() > 1e-6);

  Rng rng(2, stream::misc, 0);
  Game u = sample_uniform_game(2, rng);
  CHECK(std::abs(u.u1.col(0).sum()) > 1e-9);
}

TEST_CASE("best-reply-equivalent draws keep the argmax correspondence") {
  for (int i = 0; i < 50; ++i) {
    Rng rng(31, stream::misc, i);
    Game g = sample_uniform_game(2, rng);
    Rng t(31, stream::br_equiv, i);
    Matrix e = sample_br_equivalent(g.u1, t);
    CHECK(on_manifold(e));
    for (int s = 0; s < 100; ++s) {
      Rng sr(32, stream::misc, i * 100 + s);
      Vector opp(2);
      opp << sr.uniform01(), sr.uniform01();
      opp /= opp.sum();
      int j0, j1;
      (g.u1 * opp).maxCoeff(&j0);
      (e * opp).maxCoeff(&j1);
      CHECK(j0 == j1);
    }
  }
}

TEST_CASE("permutations relabel pure equilibria and invert cleanly") {
  std::vector<int> id{0, 1, 2}, p{1, 2, 0}, pinv{2, 0, 1}, q{2, 1, 0};
  for (int i = 0; i < 100; ++i) {
    Rng rng(41, stream::misc, i);
    Game g = sample_uniform_game(3, rng);
    Game same = permute_game(g, id, id);
    CHECK((same.u1 - g.u1).norm() == 0.0);
    Game back = permute_game(permute_game(g, p, q), pinv, q);
    CHECK((back.u1 - g.u1).norm() < 1e-12);
    CHECK((back.u2 - g.u2).norm() < 1e-12);

    Game gp = permute_game(g, p, q);
    auto orig = enumerate_pure_nash(g);
    auto mapped = enumerate_pure_nash(gp);
    CHECK(orig.size() == mapped.size());
    for (auto [j, k] : orig) {
      bool found = false;
      for (auto [a, b] : mapped) found = found || (a == p[j] && b == q[k]);
      CHECK(found);
    }
  }
}

TEST_CASE("swap_roles is an involution mirroring pure equilibria") {
  for (int i = 0; i < 100; ++i) {
    Rng rng(43, stream::misc, i);
    Game g = sample_uniform_game(2, rng);
    Game s = swap_roles(swap_roles(g));
    CHECK((s.u1 - g.u1).norm() == 0.0);
    auto orig = enumerate_pure_nash(g);
    auto swp = enumerate_pure_nash(swap_roles(g));
    CHECK(orig.size() == swp.size());
    for (auto [j, k] : orig) {
      bool found = false;
      for (auto [a, b] : swp) found = found || (a == k && b == j);
      CHECK(found);
    }
  }
  Game sym{m2(1, 0, 0, 1), m2(1, 0, 0, 1)};
  Game ss = swap_roles(sym);
  CHECK((ss.u1 - sym.u1).norm() == 0.0);
}

TEST_CASE("payoff evaluation commutes with relabeling") {
  std::vector<int> p{1, 0}, q{1, 0};
  for (int i = 0; i < 50; ++i) {
    Rng rng(47, stream::misc, i);
    Game g = sample_uniform_game(2, rng);
    Vector s1(2), s2(2);
    s1 << 0.3, 0.7;
    s2 << 0.8, 0.2;
    Vector t1(2), t2(2);
    t1 << s1(1), s1(0);
    t2 << s2(1), s2(0);
    Game gp = permute_game(g, p, q);
    CHECK(expected_payoff(g.u1, s1, s2) ==
          doctest::Approx(expected_payoff(gp.u1, t1, t2)).epsilon(1e-12));
    CHECK(expected_payoff(g.u2, s2, s1) ==
          doctest::Approx(expected_payoff(gp.u2, t2, t1)).epsilon(1e-12));
    Game sw = swap_roles(g);
    CHECK(expected_payoff(g.u1, s1, s2) ==
          doctest::Approx(expected_payoff(sw.u2, s1, s2)).epsilon(1e-12));
  }
}

TEST_CASE("restriction takes sub-blocks; dominated drops keep the Nash set") {
  Rng rng(53, stream::misc, 0);
  Game g = sample_uniform_game(3, rng);
  Game whole = restrict_game(g, {0, 1, 2}, {0, 1, 2});
  CHECK((whole.u1 - g.u1).norm() == 0.0);
  Game tl = restrict_game(g, {0, 1}, {0, 1});
  CHECK((tl.u1 - g.u1.topLeftCorner(2, 2)).norm() == 0.0);
  CHECK((tl.u2 - g.u2.topLeftCorner(2, 2)).norm() == 0.0);

  int tested = 0;
  for (int i = 0; tested < 20 && i < 4000; ++i) {
    Rng r(59, stream::misc, i);
    Game h = sample_uniform_game(3, r);
    auto d1 = strictly_dominated_actions(h.u1);
    auto d2 = strictly_dominated_actions(h.u2);
    if (d1.size() != 1 || d2.size() != 1) continue;
    std::vector<int> k1, k2;
    for (int j = 0; j < 3; ++j) {
      if (j != d1[0]) k1.push_back(j);
      if (j != d2[0]) k2.push_back(j);
    }
    Game red = restrict_game(h, k1, k2);
    std::vector<Equilibrium> eo, er;
    try {
      eo = enumerate_all_nash(h);
      er = enumerate_all_nash(red);
    } catch (const DegenerateGame&) {
      continue;
    }
    REQUIRE(eo.size() == er.size());
    for (const auto& e : eo) {
      CHECK(e.profile.s1(d1[0]) < 1e-9);
      CHECK(e.profile.s2(d2[0]) < 1e-9);
      double best = 1.0;
      for (const auto& f : er) {
        Vector a1(2), a2(2);
        a1 << e.profile.s1(k1[0]), e.profile.s1(k1[1]);
        a2 << e.profile.s2(k2[0]), e.profile.s2(k2[1]);
        best = std::min(best, std::max(tv_distance(a1, f.profile.s1),
                                       tv_distance(a2, f.profile.s2)));
      }
      CHECK(best < 1e-6);
    }
    ++tested;
  }
  CHECK(tested == 20);
}
