#include "gpnn/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpnn/errors.hpp"
#include "gpnn/rng.hpp"
#include "gpnn/threading.hpp"

namespace gpnn {

namespace {

void forward_all(const NetworkParams& w, const std::vector<Game>& games,
                 Role role, Matrix& probs) {
  const int64_t N = static_cast<int64_t>(games.size());
  const int n = w.shape.n;
  const int in_dim = 2 * n * n;
  probs.resize(n, N);
  const int64_t chunk = 2048;
  BatchCache cache;
  Matrix X(in_dim, chunk);
  for (int64_t lo = 0; lo < N; lo += chunk) {
    int64_t len = std::min(chunk, N - lo);
    for (int64_t i = 0; i < len; ++i)
      X.col(i) = net_input(games[lo + i], role);
    forward_batch(w, X.leftCols(len), cache);
    probs.middleCols(lo, len) = cache.probs;
  }
}

double mass_on(const Eigen::Ref<const Vector>& p, const std::vector<int>& idx) {
  double s = 0.0;
  for (int i : idx) s += p(i);
  return s;
}

// centroid of identical points is that point, bit-exactly
Vector centroid_of(const std::vector<Vector>& vs) {
  bool all_equal = true;
  for (size_t i = 1; i < vs.size() && all_equal; ++i)
    all_equal = vs[i] == vs[0];
  if (all_equal) return vs[0];
  Vector c = Vector::Zero(vs[0].size());
  for (const Vector& v : vs) c += v;
  return c / double(vs.size());
}

double mean_tv_to_centroid(const std::vector<Vector>& vs) {
  Vector c = centroid_of(vs);
  double s = 0.0;
  for (const Vector& v : vs) s += tv_distance(v, c);
  return s / double(vs.size());
}

AxiomStats make_stats(const std::string& name, int64_t games,
                      int64_t transforms, std::vector<double>& d) {
  AxiomStats st;
  st.axiom = name;
  st.games = games;
  st.transforms = transforms;
  if (d.empty()) return st;
  const int64_t N = static_cast<int64_t>(d.size());
  double sum = 0, sumsq = 0;
  for (double x : d) {
    sum += x;
    sumsq += x * x;
  }
  st.mean = sum / double(N);
  st.std_dev = std::sqrt(std::max(0.0, sumsq / double(N) - st.mean * st.mean));
  std::sort(d.begin(), d.end());
  auto rank = [&](double q) {
    int64_t r = static_cast<int64_t>(std::ceil(q * double(N)));
    return d[std::clamp<int64_t>(r, 1, N) - 1];
  };
  st.q90 = rank(0.90);
  st.q99 = rank(0.99);
  return st;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace

double EvalReport::frequency(int b) const {
  return buckets[3].count > 0
             ? double(buckets[b].count) / double(buckets[3].count)
             : 0.0;
}

std::vector<Game> build_test_set(int n, int64_t size, uint64_t seed) {
  std::vector<Game> out(size);
  for (int64_t i = 0; i < size; ++i) {
    Rng rng(seed, stream::test_game, uint64_t(i));
    out[i] = sample_uniform_game(n, rng);
  }
  return out;
}

EvalReport evaluate_models(const NetworkParams& w1, const NetworkParams& w2,
                           const std::vector<Game>& games, int threads) {
  EvalReport rep;
  const int64_t N = static_cast<int64_t>(games.size());
  if (N == 0) return rep;

  Matrix P1, P2;
  forward_all(w1, games, Role::row, P1);
  forward_all(w2, games, Role::column, P2);

  struct Slot {
    int bucket = -1;
    double maxreg = 0, bench = 0, dom = 0, nonrat = 0;
    bool has_pure = false, exact = false;
  };
  std::vector<Slot> slots(N);

  parallel_for(N, threads, [&](int64_t i) {
    const Game& g = games[i];
    std::vector<Equilibrium> eqs;
    try {
      eqs = enumerate_all_nash(g);
    } catch (const DegenerateGame&) {
      return;
    }
    if (eqs.empty()) return;
    int np = 0;
    for (const auto& e : eqs) np += e.kind == EqKind::pure;
    Slot& s = slots[i];
    Vector p1 = P1.col(i), p2 = P2.col(i);
    StrategyProfile prof{p1, p2};
    try {
      s.maxreg = max_normalized_regret(g, prof);
      s.bench = uniform_benchmark_maxreg(g);
    } catch (const DegenerateGame&) {
      return;
    }
    s.bucket = np == 0 ? 0 : (np == 1 ? 1 : 2);
    s.has_pure = np > 0;
    for (const auto& e : eqs)
      if (e.kind == EqKind::pure && profile_tv(prof, e.profile) <= 1e-6) {
        s.exact = true;
        break;
      }
    auto d1 = strictly_dominated_actions(g.u1);
    auto d2 = strictly_dominated_actions(g.u2);
    s.dom = 0.5 * (mass_on(p1, d1) + mass_on(p2, d2));
    auto [k1, k2] = rationalizable_actions(g);
    s.nonrat = 0.5 * (std::max(0.0, 1.0 - mass_on(p1, k1)) +
                      std::max(0.0, 1.0 - mass_on(p2, k2)));
  });

  struct Acc {
    int64_t cnt = 0, pure_cnt = 0, exact_cnt = 0;
    double sum = 0, sumsq = 0, bench = 0, dom = 0, nonrat = 0;
  };
  std::array<Acc, 4> acc;
  rep.maxreg_sorted.reserve(N);
  for (int64_t i = 0; i < N; ++i) {
    const Slot& s = slots[i];
    if (s.bucket < 0) {
      ++rep.degenerate_excluded;
      continue;
    }
    for (int b : {s.bucket, 3}) {
      Acc& a = acc[b];
      ++a.cnt;
      a.sum += s.maxreg;
      a.sumsq += s.maxreg * s.maxreg;
      a.bench += s.bench;
      a.dom += s.dom;
      a.nonrat += s.nonrat;
      if (s.has_pure) {
        ++a.pure_cnt;
        a.exact_cnt += s.exact;
      }
    }
    rep.maxreg_sorted.push_back(s.maxreg);
  }
  std::sort(rep.maxreg_sorted.begin(), rep.maxreg_sorted.end());
  for (int b = 0; b < 4; ++b) {
    const Acc& a = acc[b];
    EvalBucket& out = rep.buckets[b];
    out.count = a.cnt;
    if (a.cnt == 0) continue;
    out.mean_maxreg = a.sum / double(a.cnt);
    out.std_maxreg = std::sqrt(std::max(
        0.0, a.sumsq / double(a.cnt) - out.mean_maxreg * out.mean_maxreg));
    out.benchmark_mean = a.bench / double(a.cnt);
    out.exact_pure_rate =
        a.pure_cnt > 0 ? double(a.exact_cnt) / double(a.pure_cnt) : 0.0;
    out.dominated_mass = a.dom / double(a.cnt);
    out.nonrational_mass = a.nonrat / double(a.cnt);
  }
  return rep;
}

CdfResult maxreg_cdf(const EvalReport& report) {
  CdfResult cdf;
  const auto& s = report.maxreg_sorted;
  const int64_t N = static_cast<int64_t>(s.size());
  if (N == 0) return cdf;
  for (int64_t i = 0; i < N; ++i) {
    double frac = double(i + 1) / double(N);
    if (!cdf.points.empty() && cdf.points.back().first == s[i])
      cdf.points.back().second = frac;
    else
      cdf.points.emplace_back(s[i], frac);
  }
  auto rank = [&](double q) {
    int64_t r = static_cast<int64_t>(std::ceil(q * double(N)));
    return s[std::clamp<int64_t>(r, 1, N) - 1];
  };
  cdf.p95 = rank(0.95);
  cdf.p99 = rank(0.99);
  return cdf;
}

SelectionTable& operator+=(SelectionTable& a, const SelectionTable& b) {
  a.total += b.total;
  a.selected_rd += b.selected_rd;
  a.rd_util += b.rd_util;
  a.selected_rd_given_util += b.selected_rd_given_util;
  a.rd_not_util += b.rd_not_util;
  a.selected_rd_given_not_util += b.selected_rd_given_not_util;
  a.pd_exists += b.pd_exists;
  a.rd_is_pd += b.rd_is_pd;
  a.selected_rd_given_pd += b.selected_rd_given_pd;
  a.rd_not_pd += b.rd_not_pd;
  a.selected_rd_given_not_pd += b.selected_rd_given_not_pd;
  a.selected_util += b.selected_util;
  a.selected_pd += b.selected_pd;
  a.excluded_tracing += b.excluded_tracing;
  a.excluded_quarantined += b.excluded_quarantined;
  a.excluded_degenerate += b.excluded_degenerate;
  return a;
}

SelectionTable selection_report(const NetworkParams& w1,
                                const NetworkParams& w2,
                                const std::vector<Game>& games, int threads) {
  SelectionTable table;
  const int64_t N = static_cast<int64_t>(games.size());
  if (N == 0) return table;

  Matrix P1, P2;
  forward_all(w1, games, Role::row, P1);
  forward_all(w2, games, Role::column, P2);

  enum class Out : uint8_t { skip, degenerate, quarantined, tracing, ok };
  struct Slot {
    Out out = Out::skip;
    SelectionFlags flags;
  };
  std::vector<Slot> slots(N);

  parallel_for(N, threads, [&](int64_t i) {
    const Game& g = games[i];
    Slot& s = slots[i];
    std::vector<Equilibrium> eqs;
    try {
      eqs = enumerate_all_nash(g);
    } catch (const DegenerateGame&) {
      s.out = Out::degenerate;
      return;
    }
    if (eqs.size() < 2) return;
    if (eqs.size() % 2 == 0) {
      s.out = Out::degenerate;
      return;
    }
    if (g.n() == 2) {
      try {
        auto [pd1, pd2] = deviation_loss_products(g);
        if (std::abs(pd1 - pd2) < 1e-6) {
          s.out = Out::quarantined;
          return;
        }
      } catch (const NotCoordinationGame&) {
        s.out = Out::degenerate;
        return;
      }
    }
    try {
      s.flags = classify_selection(
          g, StrategyProfile{P1.col(i), P2.col(i)}, eqs);
    } catch (const TracingFailure&) {
      s.out = Out::tracing;
      return;
    } catch (const NotCoordinationGame&) {
      s.out = Out::degenerate;
      return;
    }
    if (s.flags.rd_index < 0) {
      s.out = Out::tracing;
      return;
    }
    s.out = Out::ok;
  });

  for (int64_t i = 0; i < N; ++i) {
    const Slot& s = slots[i];
    switch (s.out) {
      case Out::skip:
        break;
      case Out::degenerate:
        ++table.excluded_degenerate;
        break;
      case Out::quarantined:
        ++table.excluded_quarantined;
        break;
      case Out::tracing:
        ++table.excluded_tracing;
        break;
      case Out::ok: {
        const SelectionFlags& f = s.flags;
        ++table.total;
        int64_t sel = f.risk_dominant ? 1 : 0;
        table.selected_rd += sel;
        if (f.rd_is_utilitarian) {
          ++table.rd_util;
          table.selected_rd_given_util += sel;
        } else {
          ++table.rd_not_util;
          table.selected_rd_given_not_util += sel;
        }
        if (f.rd_is_payoff_dominant.has_value()) {
          ++table.pd_exists;
          if (*f.rd_is_payoff_dominant) {
            ++table.rd_is_pd;
            table.selected_rd_given_pd += sel;
          } else {
            ++table.rd_not_pd;
            table.selected_rd_given_not_pd += sel;
          }
        }
        table.selected_util += f.utilitarian ? 1 : 0;
        if (f.payoff_dominant.has_value())
          table.selected_pd += *f.payoff_dominant ? 1 : 0;
        break;
      }
    }
  }
  return table;
}

// ---- axioms ----------------------------------------------------------------

AxiomStats axiom_symmetry(const NetworkParams& w1, const NetworkParams& w2,
                          const std::vector<Game>& games) {
  std::vector<double> d;
  d.reserve(games.size());
  for (const Game& g : games)
    d.push_back(tv_distance(forward(w1, g, Role::row),
                            forward(w2, swap_roles(g), Role::column)));
  return make_stats("symmetry", static_cast<int64_t>(games.size()), 1, d);
}

AxiomStats axiom_equivariance(const NetworkParams& w1, const NetworkParams& w2,
                              const std::vector<Game>& games) {
  (void)w2;  // row-network axiom; symmetry covers the column side
  if (games.empty()) {
    std::vector<double> d;
    return make_stats("equivariance", 0, 0, d);
  }
  const int n = games[0].n();
  auto perms = all_permutations(n);
  const int64_t T =
      static_cast<int64_t>(perms.size()) * static_cast<int64_t>(perms.size());
  std::vector<double> d;
  d.reserve(games.size());
  for (const Game& g : games) {
    std::vector<Vector> mapped;
    mapped.reserve(T);
    for (const auto& p : perms)
      for (const auto& q : perms) {
        Vector s1 = forward(w1, permute_game(g, p, q), Role::row);
        Vector m1(n);
        for (int j = 0; j < n; ++j) m1(j) = s1(p[j]);
        mapped.push_back(std::move(m1));
      }
    d.push_back(mean_tv_to_centroid(mapped));
  }
  return make_stats("equivariance", static_cast<int64_t>(games.size()), T, d);
}

AxiomStats axiom_br_invariance(const NetworkParams& w1,
                               const NetworkParams& w2,
                               const std::vector<Game>& games, uint64_t seed,
                               int k) {
  (void)w2;
  std::vector<double> d;
  d.reserve(games.size());
  for (int64_t gi = 0; gi < static_cast<int64_t>(games.size()); ++gi) {
    const Game& g = games[gi];
    std::vector<Vector> outs;
    outs.reserve(k);
    for (int s = 0; s < k; ++s) {
      Rng rng(seed, stream::br_equiv, uint64_t(gi) * uint64_t(k) + s);
      Game tg;
      tg.u1 = sample_br_equivalent(g.u1, rng);
      tg.u2 = sample_br_equivalent(g.u2, rng);
      outs.push_back(forward(w1, tg, Role::row));
    }
    d.push_back(mean_tv_to_centroid(outs));
  }
  return make_stats("br_invariance", static_cast<int64_t>(games.size()), k, d);
}

AxiomStats axiom_monotonicity(const NetworkParams& w1, const NetworkParams& w2,
                              const std::vector<Game>& games, uint64_t seed,
                              int k, double scale,
                              double* argmax_stable_rate) {
  std::vector<double> d;
  int64_t used = 0, stable = 0, total = 0;
  for (int64_t gi = 0; gi < static_cast<int64_t>(games.size()); ++gi) {
    const Game& g = games[gi];
    StrategyProfile prof{forward(w1, g, Role::row),
                         forward(w2, g, Role::column)};
    // eligible only when the model already plays (close to) a pure equilibrium
    int j = -1, q = -1;
    double best = 1e-3;
    for (auto [pj, pq] : enumerate_pure_nash(g)) {
      StrategyProfile eq{pure_strategy(g.n(), pj), pure_strategy(g.n(), pq)};
      double tv = profile_tv(prof, eq);
      if (tv <= best) {
        best = tv;
        j = pj;
        q = pq;
      }
    }
    if (j < 0) continue;
    ++used;
    std::vector<Vector> outs;
    outs.reserve(k);
    for (int s = 0; s < k; ++s) {
      Rng rng(seed, stream::monotonic, uint64_t(gi) * uint64_t(k) + s);
      double h = scale * rng.uniform01();
      Game tg = g;  // raised payoffs feed the nets unrenormalized
      tg.u1(j, q) += h;
      tg.u2(q, j) += h;
      Vector a1 = forward(w1, tg, Role::row);
      Vector a2 = forward(w2, tg, Role::column);
      int aj = 0, ak = 0;
      a1.maxCoeff(&aj);
      a2.maxCoeff(&ak);
      stable += (aj == j && ak == q);
      ++total;
      outs.push_back(std::move(a1));
    }
    d.push_back(mean_tv_to_centroid(outs));
  }
  if (argmax_stable_rate)
    *argmax_stable_rate = total > 0 ? double(stable) / double(total) : 0.0;
  return make_stats("monotonicity", used, k, d);
}

AxiomStats axiom_independence(const NetworkParams& w1_small,
                              const NetworkParams& w2_small,
                              const NetworkParams& w1_large,
                              const NetworkParams& w2_large,
                              const std::vector<Game>& games3, bool raw) {
  (void)w2_small;
  (void)w2_large;
  const std::string name = raw ? "independence_raw" : "independence";
  std::vector<double> d;
  int64_t used = 0;
  for (const Game& g : games3) {
    const int n = g.n();
    if (w1_large.shape.n != n || w1_small.shape.n != n - 1) {
      throw ShapeMismatch("independence needs nets of sizes n and n-1");
    }
    auto d1 = strictly_dominated_actions(g.u1);
    auto d2 = strictly_dominated_actions(g.u2);
    if (d1.size() != 1 || d2.size() != 1) continue;
    std::vector<int> keep1, keep2;
    for (int i = 0; i < n; ++i) {
      if (i != d1[0]) keep1.push_back(i);
      if (i != d2[0]) keep2.push_back(i);
    }
    Game r = restrict_game(g, keep1, keep2);
    if (!raw) {
      try {
        r.u1 = normalize_to_payoff_space(r.u1);
        r.u2 = normalize_to_payoff_space(r.u2);
      } catch (const ConstantMatrix&) {
        continue;
      }
    }
    Vector s1 = forward(w1_small, r, Role::row);
    Vector l1 = forward(w1_large, g, Role::row);
    // dominated-action mass stays in place; compare over kept coordinates
    double dist = 0.0;
    for (size_t i = 0; i < keep1.size(); ++i)
      dist += std::abs(s1(i) - l1(keep1[i]));
    d.push_back(0.5 * dist);
    ++used;
  }
  return make_stats(name, used, 1, d);
}

std::vector<Game> filter_multi_pure(const std::vector<Game>& games) {
  std::vector<Game> out;
  for (const Game& g : games)
    if (enumerate_pure_nash(g).size() >= 2) out.push_back(g);
  return out;
}

std::vector<Game> filter_one_dominated_each(const std::vector<Game>& games) {
  std::vector<Game> out;
  for (const Game& g : games)
    if (strictly_dominated_actions(g.u1).size() == 1 &&
        strictly_dominated_actions(g.u2).size() == 1)
      out.push_back(g);
  return out;
}

HeatmapGrid heatmap_grid(const NetworkParams& w1, const NetworkParams& w2,
                         int resolution) {
  HeatmapGrid grid;
  grid.resolution = resolution;
  grid.cells.reserve(static_cast<size_t>(resolution) * resolution);
  const double two_pi = 2.0 * M_PI;
  for (int i1 = 0; i1 < resolution; ++i1)
    for (int i2 = 0; i2 < resolution; ++i2) {
      HeatmapCell c;
      c.theta1 = two_pi * (i1 + 0.5) / resolution;
      c.theta2 = two_pi * (i2 + 0.5) / resolution;
      Game g = game_from_angles(c.theta1, c.theta2);
      Vector p1 = forward(w1, g, Role::row);
      Vector p2 = forward(w2, g, Role::column);
      c.p1_action1 = p1(0);
      c.p2_action1 = p2(0);
      c.maxreg = max_normalized_regret(g, StrategyProfile{p1, p2});
      grid.cells.push_back(c);
    }
  return grid;
}

// ---- out-of-distribution ----------------------------------------------------

namespace {

OodSummary ood_common(const NetworkParams& w1, const NetworkParams& w2,
                      const NetworkParams& ref1, const NetworkParams& ref2,
                      const std::vector<Game>& inputs, int threads) {
  OodSummary s;
  s.report = evaluate_models(w1, w2, inputs, threads);
  const int64_t N = static_cast<int64_t>(inputs.size());
  Matrix P1, P2, R1, R2;
  forward_all(w1, inputs, Role::row, P1);
  forward_all(w2, inputs, Role::column, P2);
  forward_all(ref1, inputs, Role::row, R1);
  forward_all(ref2, inputs, Role::column, R2);
  double sum = 0, sumsq = 0;
  for (int64_t i = 0; i < N; ++i) {
    double dist = std::max(tv_distance(P1.col(i), R1.col(i)),
                           tv_distance(P2.col(i), R2.col(i)));
    sum += dist;
    sumsq += dist * dist;
  }
  s.dist_mean = sum / double(N);
  s.dist_std =
      std::sqrt(std::max(0.0, sumsq / double(N) - s.dist_mean * s.dist_mean));
  return s;
}

}  // namespace

OodSummary ood_affine_report(const NetworkParams& w1, const NetworkParams& w2,
                             const NetworkParams& ref1,
                             const NetworkParams& ref2,
                             const std::vector<Game>& games, uint64_t seed,
                             int threads) {
  if (games.empty()) throw EmptyTestSet("affine: no games");
  const int64_t N = static_cast<int64_t>(games.size());
  std::vector<Game> tg(N);
  parallel_for(N, threads, [&](int64_t i) {
    Rng rng(seed, stream::affine, uint64_t(i));
    tg[i] = affine_transform_game(games[i], rng);
  });
  return ood_common(w1, w2, ref1, ref2, tg, threads);
}

OodSummary ood_subspace_report(const NetworkParams& w1,
                               const NetworkParams& w2,
                               const NetworkParams& ref1,
                               const NetworkParams& ref2,
                               const std::vector<Game>& games, int threads) {
  if (games.empty()) throw EmptyTestSet("subspace complement: no games");
  return ood_common(w1, w2, ref1, ref2, games, threads);
}

std::vector<Game> build_complement_set(int n, const SubspaceSpec& spec,
                                       int64_t size, uint64_t seed) {
  std::vector<Game> out(size);
  for (int64_t i = 0; i < size; ++i) {
    Rng rng(seed, stream::misc, uint64_t(i));
    for (;;) {
      Game g = sample_uniform_game(n, rng);
      if (g.u1.cwiseProduct(spec.v1).sum() >= 0.0 &&
          g.u2.cwiseProduct(spec.v2).sum() >= 0.0)
        continue;
      out[i] = g;
      break;
    }
  }
  return out;
}

}  // namespace gpnn
