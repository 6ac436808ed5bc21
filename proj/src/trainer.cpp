#include "gpnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "gpnn/errors.hpp"
#include "gpnn/evaluator.hpp"
#include "gpnn/io.hpp"
#include "gpnn/threading.hpp"

namespace gpnn {

double learning_rate(int64_t t, double eta0, double alpha) {
  return eta0 * std::pow(alpha, double(t));
}

std::vector<int64_t> log_schedule(int64_t steps, int points) {
  std::vector<int64_t> out;
  if (steps <= 0 || points <= 0) return out;
  if (points == 1) return {steps};
  double span = std::log(double(steps));
  for (int i = 0; i < points; ++i) {
    double x = std::exp(span * double(i) / double(points - 1));
    int64_t s = std::clamp<int64_t>(std::llround(x), 1, steps);
    if (out.empty() || s > out.back()) out.push_back(s);
  }
  if (out.back() != steps) out.push_back(steps);
  return out;
}

namespace {

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.total_games < 0 || cfg.total_games % cfg.batch_size != 0)
    throw ConfigError("total_games must be a multiple of batch_size");
  if (cfg.alpha <= 0.0 || cfg.alpha > 1.0)
    throw ConfigError("alpha must lie in (0,1]");
  if (cfg.eta0 < 0.0) throw ConfigError("eta0 must be >= 0");
  if (cfg.shape1.n != cfg.sampler.n || cfg.shape2.n != cfg.sampler.n)
    throw ConfigError("network n must match sampler n");
  if (cfg.test_size < 0) throw ConfigError("test_size must be >= 0");
}

struct HeldOut {
  std::vector<Game> games;
  Matrix X1, X2;
  std::vector<char> has_pure;
  std::vector<double> range1, range2;
};

HeldOut build_held_out(const TrainConfig& cfg) {
  HeldOut h;
  h.games = build_test_set(cfg.sampler.n, cfg.test_size, cfg.seed);
  const int64_t N = static_cast<int64_t>(h.games.size());
  const int in_dim = 2 * cfg.sampler.n * cfg.sampler.n;
  h.X1.resize(in_dim, N);
  h.X2.resize(in_dim, N);
  h.has_pure.resize(N);
  h.range1.resize(N);
  h.range2.resize(N);
  for (int64_t i = 0; i < N; ++i) {
    const Game& g = h.games[i];
    h.X1.col(i) = net_input(g, Role::row);
    h.X2.col(i) = net_input(g, Role::column);
    h.has_pure[i] = !enumerate_pure_nash(g).empty();
    h.range1[i] = g.u1.maxCoeff() - g.u1.minCoeff();
    h.range2[i] = g.u2.maxCoeff() - g.u2.minCoeff();
  }
  return h;
}

void forward_chunked(const NetworkParams& w, const Matrix& X, Matrix& probs) {
  const int64_t N = X.cols();
  const int64_t chunk = 2048;
  probs.resize(w.shape.n, N);
  BatchCache cache;
  for (int64_t lo = 0; lo < N; lo += chunk) {
    int64_t len = std::min(chunk, N - lo);
    forward_batch(w, X.middleCols(lo, len), cache);
    probs.middleCols(lo, len) = cache.probs;
  }
}

CurvePoint eval_held_out(const TrainState& st, const HeldOut& h,
                         const TrainConfig& cfg, int threads) {
  CurvePoint cp;
  cp.step = st.step;
  cp.games_seen = st.step * cfg.batch_size;
  cp.eta = learning_rate(st.step, cfg.eta0, cfg.alpha);
  const int64_t N = static_cast<int64_t>(h.games.size());
  if (N == 0) return cp;

  Matrix P1, P2;
  forward_chunked(st.w1, h.X1, P1);
  forward_chunked(st.w2, h.X2, P2);

  std::vector<double> maxreg(N);
  parallel_for(N, threads, [&](int64_t i) {
    const Game& g = h.games[i];
    Vector pay1 = g.u1 * P2.col(i);
    Vector pay2 = g.u2 * P1.col(i);
    double r1 = std::max(0.0, pay1.maxCoeff() - P1.col(i).dot(pay1));
    double r2 = std::max(0.0, pay2.maxCoeff() - P2.col(i).dot(pay2));
    maxreg[i] = std::max(r1 / h.range1[i], r2 / h.range2[i]);
  });

  double sum_all = 0, sum_pure = 0, sum_mixed = 0;
  int64_t n_pure = 0, n_mixed = 0;
  for (int64_t i = 0; i < N; ++i) {
    sum_all += maxreg[i];
    if (h.has_pure[i]) {
      sum_pure += maxreg[i];
      ++n_pure;
    } else {
      sum_mixed += maxreg[i];
      ++n_mixed;
    }
  }
  cp.maxreg_all = sum_all / double(N);
  cp.maxreg_pure = n_pure ? sum_pure / double(n_pure) : 0.0;
  cp.maxreg_mixed = n_mixed ? sum_mixed / double(n_mixed) : 0.0;
  return cp;
}

int sample_discrete(const Eigen::Ref<const Vector>& probs, Rng& rng) {
  double u = rng.uniform01();
  double acc = 0.0;
  int last = static_cast<int>(probs.size()) - 1;
  for (int i = 0; i < last; ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  return last;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  int threads) {
  validate(cfg);
  const int B = cfg.batch_size;
  const int64_t T = cfg.total_games / B;
  const int n = cfg.sampler.n;
  const int in_dim = 2 * n * n;

  TrainResult res;
  TrainState& st = res.state;
  st.w1 = init_params(cfg.shape1, stream_seed(cfg.seed, stream::init_p1, 0));
  st.w2 = init_params(cfg.shape2, stream_seed(cfg.seed, stream::init_p2, 0));
  st.step = 0;

  const bool writing = !out_dir.empty();
  namespace fs = std::filesystem;
  if (writing) fs::create_directories(out_dir);
  auto write_pair = [&](int64_t step) {
    for (int pl = 1; pl <= 2; ++pl) {
      std::string name =
          "p" + std::to_string(pl) + "_" + std::to_string(step) + ".ckpt";
      save_checkpoint((fs::path(out_dir) / name).string(),
                      pl == 1 ? st.w1 : st.w2, uint64_t(step), cfg.seed);
      if (std::find(res.files.begin(), res.files.end(), name) ==
          res.files.end())
        res.files.push_back(name);
    }
  };

  HeldOut held = build_held_out(cfg);
  auto schedule = log_schedule(T, cfg.eval_points);
  std::set<int64_t> eval_at(schedule.begin(), schedule.end());

  if (T == 0) {
    if (writing) write_pair(0);
  } else {
    Matrix X1(in_dim, B), X2(in_dim, B), C1(n, B), C2(n, B);
    std::vector<Game> batch(B);
    BatchCache cache1, cache2;
    NetworkParams g1 = zero_params(cfg.shape1);
    NetworkParams g2 = zero_params(cfg.shape2);

    for (int64_t t = 0; t < T; ++t) {
      double eta = learning_rate(t, cfg.eta0, cfg.alpha);
      int64_t base = t * B;
      parallel_for(B, threads, [&](int64_t i) {
        Rng rng(cfg.seed, stream::train_game, uint64_t(base + i));
        batch[i] = sample_game(cfg.sampler, rng);
        X1.col(i) = net_input(batch[i], Role::row);
        X2.col(i) = net_input(batch[i], Role::column);
      });
      forward_batch(st.w1, X1, cache1);
      forward_batch(st.w2, X2, cache2);
      if (cfg.feedback == FeedbackMode::full_mixed) {
        for (int i = 0; i < B; ++i) {
          C1.col(i).noalias() = batch[i].u1 * cache2.probs.col(i);
          C2.col(i).noalias() = batch[i].u2 * cache1.probs.col(i);
        }
      } else {
        for (int i = 0; i < B; ++i) {
          Rng arng(cfg.seed, stream::action, uint64_t(base + i));
          int a1 = sample_discrete(cache1.probs.col(i), arng);
          int a2 = sample_discrete(cache2.probs.col(i), arng);
          C1.col(i) = batch[i].u1.col(a2);
          C2.col(i) = batch[i].u2.col(a1);
        }
      }
      gradient_batch(st.w1, X1, cache1, C1, cfg.loss, g1);
      gradient_batch(st.w2, X2, cache2, C2, cfg.loss, g2);
      try {
        apply_update(st.w1, g1, eta);
        apply_update(st.w2, g2, eta);
      } catch (const NonFiniteUpdate& e) {
        int64_t bad = base;
        for (int i = 0; i < B; ++i)
          if (!cache1.probs.col(i).allFinite() ||
              !cache2.probs.col(i).allFinite() || !C1.col(i).allFinite() ||
              !C2.col(i).allFinite()) {
            bad = base + i;
            break;
          }
        throw NonFiniteUpdate(std::string(e.what()) + " at step " +
                              std::to_string(t) + ", game index " +
                              std::to_string(bad));
      }
      st.step = t + 1;
      if (eval_at.count(st.step)) {
        res.curve.push_back(eval_held_out(st, held, cfg, threads));
        if (writing) write_pair(st.step);
      } else if (cfg.checkpoint_every > 0 &&
                 st.step % cfg.checkpoint_every == 0 && writing) {
        write_pair(st.step);
      }
    }
  }

  if (writing) {
    write_curve_csv((fs::path(out_dir) / "curve.csv").string(), res.curve);
    res.files.push_back("curve.csv");
    std::map<std::string, std::string> meta;
    meta["command"] = "train";
    for (const auto& [k, v] : train_config_echo(cfg)) meta["config." + k] = v;
    write_manifest(out_dir, meta, res.files);
  }
  return res;
}

std::tuple<double, double, int64_t> fit_learning_curve(
    const std::vector<CurvePoint>& points) {
  const int N = static_cast<int>(points.size());
  if (N < 10) throw InsufficientData("need >= 10 curve points");
  std::vector<double> t(N), ly(N), lt(N);
  for (int i = 0; i < N; ++i) {
    t[i] = double(points[i].step);
    ly[i] = std::log(std::max(points[i].maxreg_all, 1e-12));
    lt[i] = std::log(std::max(t[i], 1.0));
  }
  // least squares y = a + b x; returns (b, sse)
  auto fit = [](const std::vector<double>& x, const std::vector<double>& y,
                int lo, int hi) {
    double n = hi - lo, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = lo; i < hi; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    double b = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    double a = (sy - b * sx) / n;
    double sse = 0;
    for (int i = lo; i < hi; ++i) {
      double e = y[i] - (a + b * x[i]);
      sse += e * e;
    }
    return std::pair<double, double>(b, sse);
  };

  double best_total = std::numeric_limits<double>::infinity();
  double exp_rate = 0, power_exp = 0;
  int64_t split_step = points[N / 2].step;
  for (int s = 3; s <= N - 3; ++s) {
    auto [b1, sse1] = fit(t, ly, 0, s);
    auto [b2, sse2] = fit(lt, ly, s, N);
    if (sse1 + sse2 < best_total) {
      best_total = sse1 + sse2;
      exp_rate = -b1;
      power_exp = b2;
      split_step = points[s].step;
    }
  }
  return {exp_rate, power_exp, split_step};
}

}  // namespace gpnn
