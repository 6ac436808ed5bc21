#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gpnn/game.hpp"

namespace gpnn {

struct NetworkShape {
  int n = 2;
  int L = 1;  // hidden layers
  int d = 16;  // hidden width, must exceed 2n^2
};

// W[0]: d x 2n^2, W[1..L-1]: d x d, W[L]: n x d; b sized to match.
struct NetworkParams {
  NetworkShape shape;
  std::vector<Matrix> W;
  std::vector<Vector> b;
};

enum class Role { row, column };
enum class LossKind { squared_regret, linear_regret };
enum class FeedbackMode { full_mixed, realized_action };

struct OpponentFeedback {
  FeedbackMode mode = FeedbackMode::full_mixed;
  Vector strategy;  // full_mixed
  int action = 0;   // realized_action, 0-based

  Vector as_vector(int n) const;
};

int64_t param_count(const NetworkShape& s);
NetworkParams zero_params(const NetworkShape& s);
// He-style init: W ~ N(0, 2/fan_in), biases zero, deterministic in seed.
NetworkParams init_params(const NetworkShape& s, uint64_t seed);

// (vec(u_own), vec(u_opp)) column-major; role=row reads (u1,u2).
Vector net_input(const Game& g, Role role);

struct ActivationCache {
  Vector x;
  std::vector<Vector> z, h;  // pre/post activations per hidden layer
  Vector logits, probs;
};

Vector forward(const NetworkParams& p, const Game& g, Role role,
               ActivationCache* cache = nullptr);

// Loss is R^2 (squared) or R (linear) with
// R = max_j [u_own s_opp]_j - f(g)' u_own s_opp; exact reverse mode, the max
// term and the opponent strategy are constants wrt the parameters.
std::pair<double, NetworkParams> loss_and_gradient(const NetworkParams& p,
                                                   const Game& g, Role role,
                                                   const OpponentFeedback& fb,
                                                   LossKind lk);

NetworkParams finite_difference_gradient(const NetworkParams& p, const Game& g,
                                         Role role, const OpponentFeedback& fb,
                                         LossKind lk, double h);

// w - eta*grad elementwise; NonFiniteUpdate if any entry leaves the reals.
void apply_update(NetworkParams& p, const NetworkParams& grad, double eta);

// ---- batched paths (columns = batch members), used by the trainer

struct BatchCache {
  std::vector<Matrix> z, h;
  Matrix logits, probs;
};

// X: 2n^2 x B input block. Reuses cache storage across calls.
void forward_batch(const NetworkParams& p, const Matrix& X, BatchCache& cache);

// C: n x B, column i = u_own * s_opp for batch member i. Writes the
// batch-MEAN gradient into grad (preallocated, same shape as p) and returns
// the mean loss.
double gradient_batch(const NetworkParams& p, const Matrix& X,
                      const BatchCache& cache, const Matrix& C, LossKind lk,
                      NetworkParams& grad);

}  // namespace gpnn
