#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gpnn/nash.hpp"
#include "gpnn/net.hpp"

namespace gpnn {

// Buckets: 0 pure Nash / exactly 1 / more than 1; index 3 = overall.
struct EvalBucket {
  int64_t count = 0;
  double mean_maxreg = 0.0, std_maxreg = 0.0;
  double benchmark_mean = 0.0;
  double exact_pure_rate = 0.0;  // among games with >= 1 pure eq
  double dominated_mass = 0.0;   // mean over games, averaged across players
  double nonrational_mass = 0.0;
};

struct EvalReport {
  std::array<EvalBucket, 4> buckets;
  int64_t degenerate_excluded = 0;
  std::vector<double> maxreg_sorted;  // CDF sample over included games
  double frequency(int b) const;
};

struct SelectionTable {
  int64_t total = 0;               // multi-equilibrium games tabulated
  int64_t selected_rd = 0;         // closest equilibrium is risk dominant
  int64_t rd_util = 0;             // games whose RD eq is utilitarian
  int64_t selected_rd_given_util = 0;
  int64_t rd_not_util = 0;
  int64_t selected_rd_given_not_util = 0;
  int64_t pd_exists = 0;           // games with a payoff-dominant eq
  int64_t rd_is_pd = 0;
  int64_t selected_rd_given_pd = 0;
  int64_t rd_not_pd = 0;
  int64_t selected_rd_given_not_pd = 0;
  int64_t selected_util = 0;
  int64_t selected_pd = 0;
  int64_t excluded_tracing = 0;
  int64_t excluded_quarantined = 0;  // near-tie deviation-loss products
  int64_t excluded_degenerate = 0;
};

// Tables from disjoint game chunks add field-wise.
SelectionTable& operator+=(SelectionTable& a, const SelectionTable& b);

struct AxiomStats {
  std::string axiom;
  int64_t games = 0;
  int64_t transforms = 0;  // per game
  double mean = 0.0, std_dev = 0.0, q90 = 0.0, q99 = 0.0;
};

struct HeatmapCell {
  double theta1 = 0.0, theta2 = 0.0;
  double p1_action1 = 0.0, p2_action1 = 0.0, maxreg = 0.0;
};

struct HeatmapGrid {
  int resolution = 0;
  std::vector<HeatmapCell> cells;  // theta1-major, R*R entries
};

struct OodSummary {
  EvalReport report;
  double dist_mean = 0.0, dist_std = 0.0;  // TV to the reference pair
};

std::vector<Game> build_test_set(int n, int64_t size, uint64_t seed);

// Per-game forward of both networks, bucketed MaxReg statistics, dominance
// diagnostics. Even-equilibrium-count and degenerate games are excluded and
// counted.
EvalReport evaluate_models(const NetworkParams& w1, const NetworkParams& w2,
                           const std::vector<Game>& games, int threads = 1);

// Sorted (epsilon, fraction) pairs plus nearest-rank p95/p99 markers.
struct CdfResult {
  std::vector<std::pair<double, double>> points;
  double p95 = 0.0, p99 = 0.0;
};
CdfResult maxreg_cdf(const EvalReport& report);

SelectionTable selection_report(const NetworkParams& w1,
                                const NetworkParams& w2,
                                const std::vector<Game>& games,
                                int threads = 1);

// Axiom distances aggregate over the full (game x transform) population.
AxiomStats axiom_symmetry(const NetworkParams& w1, const NetworkParams& w2,
                          const std::vector<Game>& games);
AxiomStats axiom_equivariance(const NetworkParams& w1, const NetworkParams& w2,
                              const std::vector<Game>& games);
AxiomStats axiom_br_invariance(const NetworkParams& w1,
                               const NetworkParams& w2,
                               const std::vector<Game>& games, uint64_t seed,
                               int k = 64);
// one increment h ~ scale*U[0,1] per transform, added to both payoffs at the
// selected pure equilibrium cell; argmax_stable_rate via the pointer.
AxiomStats axiom_monotonicity(const NetworkParams& w1, const NetworkParams& w2,
                              const std::vector<Game>& games, uint64_t seed,
                              int k = 64, double scale = 1.0,
                              double* argmax_stable_rate = nullptr);
// games3: 3x3 games with exactly one strictly dominated action per player.
// raw = feed the reduced game unnormalized (logged comparison variant).
AxiomStats axiom_independence(const NetworkParams& w1_small,
                              const NetworkParams& w2_small,
                              const NetworkParams& w1_large,
                              const NetworkParams& w2_large,
                              const std::vector<Game>& games3,
                              bool raw = false);

// Filters used by the axiom driver.
std::vector<Game> filter_multi_pure(const std::vector<Game>& games);
std::vector<Game> filter_one_dominated_each(const std::vector<Game>& games);

HeatmapGrid heatmap_grid(const NetworkParams& w1, const NetworkParams& w2,
                         int resolution);

OodSummary ood_affine_report(const NetworkParams& w1, const NetworkParams& w2,
                             const NetworkParams& ref1,
                             const NetworkParams& ref2,
                             const std::vector<Game>& games, uint64_t seed,
                             int threads = 1);

// games must already be complement-filtered; EmptyTestSet if empty.
OodSummary ood_subspace_report(const NetworkParams& w1,
                               const NetworkParams& w2,
                               const NetworkParams& ref1,
                               const NetworkParams& ref2,
                               const std::vector<Game>& games,
                               int threads = 1);

// Uniform games rejected by the subspace half-space filter.
std::vector<Game> build_complement_set(int n, const SubspaceSpec& spec,
                                       int64_t size, uint64_t seed);

}  // namespace gpnn
