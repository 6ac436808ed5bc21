#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "gpnn/net.hpp"

namespace gpnn {

struct TrainConfig {
  NetworkShape shape1, shape2;
  SamplerConfig sampler;
  int64_t total_games = 0;  // must equal batch_size * steps
  int batch_size = 128;
  double eta0 = 0.5;
  double alpha = 0.999999;
  LossKind loss = LossKind::squared_regret;
  FeedbackMode feedback = FeedbackMode::full_mixed;
  uint64_t seed = 0;
  int eval_points = 48;          // log-spaced eval steps in [1, T]
  int64_t checkpoint_every = 0;  // extra checkpoints; eval points always get one
  int64_t test_size = 8192;      // held-out set size
};

struct TrainState {
  NetworkParams w1, w2;
  int64_t step = 0;
};

struct CurvePoint {
  int64_t step = 0, games_seen = 0;
  double eta = 0.0;
  double maxreg_all = 0.0, maxreg_pure = 0.0, maxreg_mixed = 0.0;
};

struct TrainResult {
  TrainState state;
  std::vector<CurvePoint> curve;
  std::vector<std::string> files;  // paths written, relative to out_dir
};

double learning_rate(int64_t t, double eta0, double alpha);

std::vector<int64_t> log_schedule(int64_t steps, int points);

// Simultaneous adversarial SGD; when out_dir is nonempty writes checkpoints,
// curve.csv and a manifest there.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  int threads = 1);

// (exp_rate, power_exponent, split_step): least-squares log-linear fit on the
// early window, log-log on the tail, split by grid search on total residual.
std::tuple<double, double, int64_t> fit_learning_curve(
    const std::vector<CurvePoint>& points);

}  // namespace gpnn
