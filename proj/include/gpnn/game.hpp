#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpnn/rng.hpp"

namespace gpnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Both payoff matrices are own-action-first: element (j,k) of u_i is player
// i's payoff when i plays j and the opponent plays k.
struct Game {
  Matrix u1, u2;
  int n() const { return static_cast<int>(u1.rows()); }
};

struct SubspaceSpec {
  Matrix v1, v2;  // accept iff <u1,v1> >= 0 and <u2,v2> >= 0 (Frobenius)
};

enum class SampleMode { uniform, nonuniform, subspace };

struct SamplerConfig {
  int n = 2;
  SampleMode mode = SampleMode::uniform;
  uint64_t seed = 0;
  double tilt = 2.0;
  SubspaceSpec spec;
};

// (a - mean) * n / ||a - mean||_F; throws ConstantMatrix when the centered
// norm is <= 1e-12.
Matrix normalize_to_payoff_space(const Matrix& a);
bool is_normalized(const Matrix& a, double tol = 1e-9);

Game sample_uniform_game(int n, Rng& rng);
Game sample_nonuniform_game(int n, double tilt, Rng& rng);
Game sample_subspace_game(int n, const SubspaceSpec& spec, Rng& rng);
// dispatch on cfg.mode; rng should be the per-index substream
Game sample_game(const SamplerConfig& cfg, Rng& rng);

// (alpha1*u1+beta1, alpha2*u2+beta2), alpha ~ U[1,n], beta ~ U[-n,n];
// deliberately NOT renormalized. Draw order: alpha1, beta1, alpha2, beta2.
Game affine_transform_game(const Game& g, Rng& rng);

// 2x2 strategic-subspace game: u_i columns (x,-x),(y,-y) with
// x = sqrt(2) cos(theta_i), y = sqrt(2) sin(theta_i).
Game game_from_angles(double theta1, double theta2);

// alpha*a + 1 gamma^T with alpha ~ U[0.25,4], gamma_j ~ U[-n,n], renormalized.
Matrix sample_br_equivalent(const Matrix& a, Rng& rng);

// p relabels player 1's actions, q player 2's: u1'[p(j),q(k)] = u1[j,k],
// u2'[q(k),p(j)] = u2[k,j].
Game permute_game(const Game& g, const std::vector<int>& p,
                  const std::vector<int>& q);

Game swap_roles(const Game& g);

// Sub-blocks (keep1 x keep2 of u1, keep2 x keep1 of u2); NOT renormalized.
Game restrict_game(const Game& g, const std::vector<int>& keep1,
                   const std::vector<int>& keep2);

Matrix subspace_M();  // [[-1,1],[-1,1]]
Matrix subspace_N();  // [[1,-1],[-1,1]]

}  // namespace gpnn
