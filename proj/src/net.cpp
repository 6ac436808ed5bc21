#include "gpnn/net.hpp"

#include <cmath>

#include "gpnn/errors.hpp"
#include "gpnn/rng.hpp"

namespace gpnn {

Vector OpponentFeedback::as_vector(int n) const {
  if (mode == FeedbackMode::full_mixed) return strategy;
  Vector v = Vector::Zero(n);
  v(action) = 1.0;
  return v;
}

int64_t param_count(const NetworkShape& s) {
  int64_t L = s.L, d = s.d, n = s.n;
  return (L - 1) * d * d + (2 * n * n + n + L) * d + n;
}

static void check_shape(const NetworkShape& s) {
  if (s.L < 1 || s.d <= 2 * s.n * s.n || s.n < 2)
    throw ConfigError("network shape needs L >= 1, d > 2n^2, n >= 2");
}

NetworkParams zero_params(const NetworkShape& s) {
  check_shape(s);
  NetworkParams p;
  p.shape = s;
  const int in = 2 * s.n * s.n;
  p.W.push_back(Matrix::Zero(s.d, in));
  p.b.push_back(Vector::Zero(s.d));
  for (int l = 1; l < s.L; ++l) {
    p.W.push_back(Matrix::Zero(s.d, s.d));
    p.b.push_back(Vector::Zero(s.d));
  }
  p.W.push_back(Matrix::Zero(s.n, s.d));
  p.b.push_back(Vector::Zero(s.n));
  return p;
}

NetworkParams init_params(const NetworkShape& s, uint64_t seed) {
  NetworkParams p = zero_params(s);
  Rng rng(seed, 0, 0);
  for (auto& W : p.W) {
    double scale = std::sqrt(2.0 / double(W.cols()));
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i)
        W(i, j) = scale * rng.gaussian();
  }
  return p;
}

Vector net_input(const Game& g, Role role) {
  const int nn = g.n() * g.n();
  Vector x(2 * nn);
  const Matrix& own = (role == Role::row) ? g.u1 : g.u2;
  const Matrix& opp = (role == Role::row) ? g.u2 : g.u1;
  x.head(nn) = Eigen::Map<const Vector>(own.data(), nn);  // column-major
  x.tail(nn) = Eigen::Map<const Vector>(opp.data(), nn);
  return x;
}

static Vector softmax(const Vector& z) {
  Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Vector forward(const NetworkParams& p, const Game& g, Role role,
               ActivationCache* cache) {
  if (g.n() != p.shape.n) throw ShapeMismatch("game size vs network input");
  Vector h = net_input(g, role);
  if (cache) {
    cache->x = h;
    cache->z.clear();
    cache->h.clear();
  }
  for (int l = 0; l < p.shape.L; ++l) {
    Vector z = p.W[l] * h + p.b[l];
    h = z.cwiseMax(0.0);
    if (cache) {
      cache->z.push_back(std::move(z));
      cache->h.push_back(h);
    }
  }
  Vector logits = p.W[p.shape.L] * h + p.b[p.shape.L];
  Vector probs = softmax(logits);
  if (cache) {
    cache->logits = std::move(logits);
    cache->probs = probs;
  }
  return probs;
}

static double loss_only(const NetworkParams& p, const Game& g, Role role,
                        const Vector& sigma_opp, LossKind lk) {
  Vector probs = forward(p, g, role);
  const Matrix& u_own = (role == Role::row) ? g.u1 : g.u2;
  Vector c = u_own * sigma_opp;
  double r = c.maxCoeff() - probs.dot(c);
  if (r < 0.0) r = 0.0;
  return lk == LossKind::squared_regret ? r * r : r;
}

std::pair<double, NetworkParams> loss_and_gradient(const NetworkParams& p,
                                                   const Game& g, Role role,
                                                   const OpponentFeedback& fb,
                                                   LossKind lk) {
  ActivationCache cache;
  forward(p, g, role, &cache);
  const Matrix& u_own = (role == Role::row) ? g.u1 : g.u2;
  Vector sigma_opp = fb.as_vector(g.n());
  Vector c = u_own * sigma_opp;  // constant wrt the parameters
  double pay = cache.probs.dot(c);
  double r = c.maxCoeff() - pay;
  if (r < 0.0) r = 0.0;
  double loss = lk == LossKind::squared_regret ? r * r : r;
  double s = lk == LossKind::squared_regret ? 2.0 * r : 1.0;

  NetworkParams grad = zero_params(p.shape);
  const int L = p.shape.L;
  Vector delta = (-s) * (cache.probs.array() * (c.array() - pay)).matrix();
  grad.W[L] = delta * cache.h[L - 1].transpose();
  grad.b[L] = delta;
  Vector dh = p.W[L].transpose() * delta;
  for (int l = L - 1; l >= 0; --l) {
    Vector dz = (cache.z[l].array() > 0.0).select(dh, 0.0);
    const Vector& prev = (l == 0) ? cache.x : cache.h[l - 1];
    grad.W[l] = dz * prev.transpose();
    grad.b[l] = dz;
    if (l > 0) dh = p.W[l].transpose() * dz;
  }
  return {loss, std::move(grad)};
}

NetworkParams finite_difference_gradient(const NetworkParams& p, const Game& g,
                                         Role role, const OpponentFeedback& fb,
                                         LossKind lk, double h) {
  Vector sigma_opp = fb.as_vector(g.n());
  NetworkParams grad = zero_params(p.shape);
  NetworkParams work = p;
  auto central = [&](double& w, double& out) {
    double keep = w;
    w = keep + h;
    double up = loss_only(work, g, role, sigma_opp, lk);
    w = keep - h;
    double down = loss_only(work, g, role, sigma_opp, lk);
    w = keep;
    out = (up - down) / (2.0 * h);
  };
  for (size_t l = 0; l < work.W.size(); ++l) {
    for (Eigen::Index j = 0; j < work.W[l].cols(); ++j)
      for (Eigen::Index i = 0; i < work.W[l].rows(); ++i)
        central(work.W[l](i, j), grad.W[l](i, j));
    for (Eigen::Index i = 0; i < work.b[l].size(); ++i)
      central(work.b[l](i), grad.b[l](i));
  }
  return grad;
}

void apply_update(NetworkParams& p, const NetworkParams& grad, double eta) {
  for (size_t l = 0; l < p.W.size(); ++l) {
    p.W[l].noalias() -= eta * grad.W[l];
    p.b[l] -= eta * grad.b[l];
    if (!p.W[l].allFinite() || !p.b[l].allFinite())
      throw NonFiniteUpdate("layer " + std::to_string(l));
  }
}

void forward_batch(const NetworkParams& p, const Matrix& X,
                   BatchCache& cache) {
  const int L = p.shape.L;
  cache.z.resize(L);
  cache.h.resize(L);
  const Matrix* prev = &X;
  for (int l = 0; l < L; ++l) {
    cache.z[l].noalias() = p.W[l] * (*prev);
    cache.z[l].colwise() += p.b[l];
    cache.h[l] = cache.z[l].cwiseMax(0.0);
    prev = &cache.h[l];
  }
  cache.logits.noalias() = p.W[L] * (*prev);
  cache.logits.colwise() += p.b[L];
  Eigen::RowVectorXd m = cache.logits.colwise().maxCoeff();
  cache.probs = (cache.logits.rowwise() - m).array().exp().matrix();
  Eigen::RowVectorXd sums = cache.probs.colwise().sum();
  cache.probs = (cache.probs.array().rowwise() / sums.array()).matrix();
}

double gradient_batch(const NetworkParams& p, const Matrix& X,
                      const BatchCache& cache, const Matrix& C, LossKind lk,
                      NetworkParams& grad) {
  const int L = p.shape.L;
  const double B = double(X.cols());
  Eigen::RowVectorXd pay = (cache.probs.array() * C.array()).colwise().sum();
  Eigen::RowVectorXd best = C.colwise().maxCoeff();
  Eigen::RowVectorXd r = (best - pay).cwiseMax(0.0);
  Eigen::RowVectorXd s;
  double mean_loss;
  if (lk == LossKind::squared_regret) {
    s = 2.0 * r;
    mean_loss = r.array().square().sum() / B;
  } else {
    s = Eigen::RowVectorXd::Ones(C.cols());
    mean_loss = r.sum() / B;
  }

  Matrix delta =
      (cache.probs.array() * (C.rowwise() - pay).array()).matrix();
  delta = (-(delta.array().rowwise() * s.array())).matrix();

  grad.W[L].noalias() = delta * cache.h[L - 1].transpose() / B;
  grad.b[L] = delta.rowwise().sum() / B;
  Matrix dh = p.W[L].transpose() * delta;
  for (int l = L - 1; l >= 0; --l) {
    Matrix dz = (cache.z[l].array() > 0.0).select(dh, 0.0);
    const Matrix& prev = (l == 0) ? X : cache.h[l - 1];
    grad.W[l].noalias() = dz * prev.transpose() / B;
    grad.b[l] = dz.rowwise().sum() / B;
    if (l > 0) dh.noalias() = p.W[l].transpose() * dz;
  }
  return mean_loss;
}

}  // namespace gpnn
