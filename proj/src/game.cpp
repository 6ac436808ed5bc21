#include "gpnn/game.hpp"

#include <cmath>

#include "gpnn/errors.hpp"

namespace gpnn {

Matrix normalize_to_payoff_space(const Matrix& a) {
  if (!a.allFinite()) throw ConstantMatrix("non-finite entries");
  const int n = static_cast<int>(a.rows());
  Matrix c = a.array() - a.mean();
  double norm = c.norm();
  if (norm <= 1e-12) throw ConstantMatrix("total indifference");
  return c * (double(n) / norm);
}

bool is_normalized(const Matrix& a, double tol) {
  const double n = double(a.rows());
  return std::abs(a.sum()) <= tol * n * n && std::abs(a.norm() - n) <= tol * n;
}

static Matrix sample_sphere_matrix(int n, Rng& rng) {
  Matrix a(n, n);
  for (;;) {
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) a(j, k) = rng.gaussian();
    Matrix c = a.array() - a.mean();
    double norm = c.norm();
    if (norm > 1e-12) return c * (double(n) / norm);
    // measure-zero all-equal draw: resample
  }
}

Game sample_uniform_game(int n, Rng& rng) {
  Game g;
  g.u1 = sample_sphere_matrix(n, rng);
  g.u2 = sample_sphere_matrix(n, rng);
  return g;
}

static Matrix sample_tilted_matrix(int n, double tilt, Rng& rng) {
  for (;;) {
    Matrix a = sample_sphere_matrix(n, rng);
    double lo = a.array().abs().minCoeff();
    double hi = a.array().abs().maxCoeff();
    double accept = std::exp(-tilt * (hi - lo));
    if (rng.uniform01() < accept) return a;
  }
}

Game sample_nonuniform_game(int n, double tilt, Rng& rng) {
  Game g;
  g.u1 = sample_tilted_matrix(n, tilt, rng);
  g.u2 = sample_tilted_matrix(n, tilt, rng);
  return g;
}

Game sample_subspace_game(int n, const SubspaceSpec& spec, Rng& rng) {
  for (;;) {
    Game g = sample_uniform_game(n, rng);
    if (g.u1.cwiseProduct(spec.v1).sum() >= 0.0 &&
        g.u2.cwiseProduct(spec.v2).sum() >= 0.0)
      return g;
  }
}

Game sample_game(const SamplerConfig& cfg, Rng& rng) {
  switch (cfg.mode) {
    case SampleMode::uniform:
      return sample_uniform_game(cfg.n, rng);
    case SampleMode::nonuniform:
      return sample_nonuniform_game(cfg.n, cfg.tilt, rng);
    case SampleMode::subspace:
      return sample_subspace_game(cfg.n, cfg.spec, rng);
  }
  throw ConfigError("bad sampler mode");
}

Game affine_transform_game(const Game& g, Rng& rng) {
  const double n = double(g.n());
  double a1 = rng.uniform(1.0, n);
  double b1 = rng.uniform(-n, n);
  double a2 = rng.uniform(1.0, n);
  double b2 = rng.uniform(-n, n);
  Game out;
  out.u1 = (a1 * g.u1).array() + b1;
  out.u2 = (a2 * g.u2).array() + b2;
  return out;
}

Game game_from_angles(double theta1, double theta2) {
  const double s = std::sqrt(2.0);
  auto build = [&](double t) {
    Matrix u(2, 2);
    double x = s * std::cos(t), y = s * std::sin(t);
    u(0, 0) = x;
    u(1, 0) = -x;
    u(0, 1) = y;
    u(1, 1) = -y;
    return u;
  };
  return Game{build(theta1), build(theta2)};
}

Matrix sample_br_equivalent(const Matrix& a, Rng& rng) {
  const int n = static_cast<int>(a.rows());
  double alpha = rng.uniform(0.25, 4.0);
  Matrix out = alpha * a;
  for (int j = 0; j < n; ++j)
    out.col(j).array() += rng.uniform(-double(n), double(n));
  return normalize_to_payoff_space(out);
}

Game permute_game(const Game& g, const std::vector<int>& p,
                  const std::vector<int>& q) {
  const int n = g.n();
  Game out;
  out.u1.resize(n, n);
  out.u2.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      out.u1(p[j], q[k]) = g.u1(j, k);
      out.u2(q[j], p[k]) = g.u2(j, k);
    }
  return out;
}

Game swap_roles(const Game& g) { return Game{g.u2, g.u1}; }

Game restrict_game(const Game& g, const std::vector<int>& keep1,
                   const std::vector<int>& keep2) {
  const int m1 = static_cast<int>(keep1.size());
  const int m2 = static_cast<int>(keep2.size());
  Game out;
  out.u1.resize(m1, m2);
  out.u2.resize(m2, m1);
  for (int j = 0; j < m1; ++j)
    for (int k = 0; k < m2; ++k) out.u1(j, k) = g.u1(keep1[j], keep2[k]);
  for (int j = 0; j < m2; ++j)
    for (int k = 0; k < m1; ++k) out.u2(j, k) = g.u2(keep2[j], keep1[k]);
  return out;
}

Matrix subspace_M() {
  Matrix m(2, 2);
  m << -1, 1, -1, 1;
  return m;
}

Matrix subspace_N() {
  Matrix m(2, 2);
  m << 1, -1, -1, 1;
  return m;
}

}  // namespace gpnn
