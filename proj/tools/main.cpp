#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpnn/errors.hpp"
#include "gpnn/evaluator.hpp"
#include "gpnn/io.hpp"
#include "gpnn/nash.hpp"
#include "gpnn/threading.hpp"
#include "gpnn/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  ~Timer() {
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0);
    std::cerr << "elapsed_s=" << dt.count() << "\n";
  }
};

std::string hex_of_file(const std::string& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)gpnn::fnv1a64_file(path));
  return buf;
}

std::pair<gpnn::NetworkParams, gpnn::NetworkParams> load_pair(
    const std::string& p1, const std::string& p2) {
  gpnn::Checkpoint a = gpnn::load_checkpoint(p1);
  gpnn::Checkpoint b = gpnn::load_checkpoint(p2);
  if (a.params.shape.n != b.params.shape.n)
    throw gpnn::ShapeMismatch("checkpoint pair differs in n");
  return {std::move(a.params), std::move(b.params)};
}

std::string run_id_near(const std::string& ckpt_path) {
  std::ifstream in(fs::path(ckpt_path).parent_path() / "manifest");
  std::string line;
  while (in && std::getline(in, line))
    if (line.rfind("run_id=", 0) == 0) return line.substr(7);
  return "unknown";
}

void finish_run(const std::string& out_dir, const std::string& command,
                std::map<std::string, std::string> meta,
                const std::vector<std::string>& files) {
  meta["command"] = command;
  gpnn::write_manifest(out_dir, meta, files);
}

gpnn::Matrix subspace_by_name(const std::string& name) {
  if (name == "M") return gpnn::subspace_M();
  if (name == "N") return gpnn::subspace_N();
  throw gpnn::ConfigError("subspace must be M or N, got " + name);
}

// test-stream game for a global index (chunk-friendly)
gpnn::Game test_game_at(int n, uint64_t seed, int64_t index) {
  gpnn::Rng rng(seed, gpnn::stream::test_game, uint64_t(index));
  return gpnn::sample_uniform_game(n, rng);
}

struct TrainOpts {
  std::string config, out;
  std::optional<uint64_t> seed;
  int threads = 1;
};

int cmd_train(const TrainOpts& o) {
  Timer timer;
  gpnn::ConfigMap cm = gpnn::ConfigMap::parse_file(o.config);
  if (o.seed) cm.set("seed", std::to_string(*o.seed));
  gpnn::TrainConfig cfg = gpnn::train_config_from(cm);
  gpnn::TrainResult res = gpnn::train(cfg, o.out, o.threads);
  if (!res.curve.empty()) {
    const gpnn::CurvePoint& p = res.curve.back();
    std::cout << "final step=" << p.step << " games_seen=" << p.games_seen
              << " maxreg_all=" << gpnn::fmt_real(p.maxreg_all) << "\n";
  } else {
    std::cout << "final step=" << res.state.step << "\n";
  }
  std::cout << "wrote " << res.files.size() << " files to " << o.out << "\n";
  return 0;
}

struct EvalOpts {
  std::string p1, p2, out, games_csv;
  int64_t test_size = 8192;
  uint64_t seed = 1;
  int threads = 1;
};

int cmd_eval(const EvalOpts& o) {
  Timer timer;
  auto [w1, w2] = load_pair(o.p1, o.p2);
  std::vector<gpnn::Game> games;
  std::map<std::string, std::string> meta;
  if (!o.games_csv.empty()) {
    for (auto& row : gpnn::read_games_csv(o.games_csv))
      games.push_back(std::move(row.game));
    meta["config.games"] = fs::path(o.games_csv).filename().string();
    meta["config.games_checksum"] = hex_of_file(o.games_csv);
  } else {
    games = gpnn::build_test_set(w1.shape.n, o.test_size, o.seed);
    meta["config.test_size"] = std::to_string(o.test_size);
    meta["config.seed"] = std::to_string(o.seed);
  }
  gpnn::EvalReport rep = gpnn::evaluate_models(w1, w2, games, o.threads);
  gpnn::CdfResult cdf = gpnn::maxreg_cdf(rep);
  fs::create_directories(o.out);
  gpnn::write_eval_report_csv((fs::path(o.out) / "eval.csv").string(), rep);
  gpnn::write_cdf_csv((fs::path(o.out) / "cdf.csv").string(), cdf);
  meta["config.n"] = std::to_string(w1.shape.n);
  meta["config.p1_checksum"] = hex_of_file(o.p1);
  meta["config.p2_checksum"] = hex_of_file(o.p2);
  finish_run(o.out, "eval", meta, {"eval.csv", "cdf.csv"});
  std::cout << "overall mean_maxreg="
            << gpnn::fmt_real(rep.buckets[3].mean_maxreg)
            << " benchmark=" << gpnn::fmt_real(rep.buckets[3].benchmark_mean)
            << " p99=" << gpnn::fmt_real(cdf.p99)
            << " excluded=" << rep.degenerate_excluded << "\n";
  return 0;
}

struct SelectOpts {
  std::string p1, p2, out;
  int64_t count = 131072;
  int64_t chunk = 65536;
  uint64_t seed = 1;
  int threads = 1;
};

int cmd_select(const SelectOpts& o) {
  Timer timer;
  auto [w1, w2] = load_pair(o.p1, o.p2);
  const int n = w1.shape.n;
  if (n > 3) throw gpnn::ShapeMismatch("selection tables need n <= 3");
  gpnn::SelectionTable table;
  for (int64_t lo = 0; lo < o.count; lo += o.chunk) {
    int64_t len = std::min(o.chunk, o.count - lo);
    std::vector<gpnn::Game> games(len);
    for (int64_t i = 0; i < len; ++i) games[i] = test_game_at(n, o.seed, lo + i);
    table += gpnn::selection_report(w1, w2, games, o.threads);
  }
  fs::create_directories(o.out);
  gpnn::write_selection_csv((fs::path(o.out) / "selection.csv").string(),
                            table);
  std::map<std::string, std::string> meta;
  meta["config.n"] = std::to_string(n);
  meta["config.count"] = std::to_string(o.count);
  meta["config.seed"] = std::to_string(o.seed);
  meta["config.p1_checksum"] = hex_of_file(o.p1);
  meta["config.p2_checksum"] = hex_of_file(o.p2);
  finish_run(o.out, "select", meta, {"selection.csv"});
  double rate =
      table.total > 0 ? double(table.selected_rd) / double(table.total) : 0.0;
  std::cout << "multi-equilibrium games=" << table.total
            << " selected_rd_rate=" << gpnn::fmt_real(rate) << "\n";
  return 0;
}

struct AxiomOpts {
  std::string p1, p2, large1, large2, out;
  int64_t games = 32768;
  int64_t games3 = 65536;
  int transforms = 64;
  double scale = 1.0;
  uint64_t seed = 1;
  int threads = 1;
};

int cmd_axioms(const AxiomOpts& o) {
  Timer timer;
  auto [w1, w2] = load_pair(o.p1, o.p2);
  const int n = w1.shape.n;
  std::vector<gpnn::Game> multi =
      gpnn::filter_multi_pure(gpnn::build_test_set(n, o.games, o.seed));
  std::vector<gpnn::AxiomStats> rows;
  rows.push_back(gpnn::axiom_symmetry(w1, w2, multi));
  rows.push_back(gpnn::axiom_equivariance(w1, w2, multi));
  rows.push_back(
      gpnn::axiom_br_invariance(w1, w2, multi, o.seed, o.transforms));
  double stable = 0.0;
  rows.push_back(gpnn::axiom_monotonicity(w1, w2, multi, o.seed, o.transforms,
                                          o.scale, &stable));
  if (!o.large1.empty() || !o.large2.empty()) {
    if (o.large1.empty() || o.large2.empty())
      throw gpnn::ConfigError("--large1 and --large2 must be given together");
    auto [l1, l2] = load_pair(o.large1, o.large2);
    if (l1.shape.n != n + 1)
      throw gpnn::ShapeMismatch("large pair must have n+1 actions");
    std::vector<gpnn::Game> g3 = gpnn::filter_one_dominated_each(
        gpnn::build_test_set(n + 1, o.games3, o.seed));
    rows.push_back(gpnn::axiom_independence(w1, w2, l1, l2, g3, false));
    rows.push_back(gpnn::axiom_independence(w1, w2, l1, l2, g3, true));
  }
  fs::create_directories(o.out);
  gpnn::write_axioms_csv((fs::path(o.out) / "axioms.csv").string(), rows);
  std::map<std::string, std::string> meta;
  meta["config.n"] = std::to_string(n);
  meta["config.games"] = std::to_string(o.games);
  meta["config.games3"] = std::to_string(o.games3);
  meta["config.transforms"] = std::to_string(o.transforms);
  meta["config.scale"] = gpnn::fmt_real(o.scale);
  meta["config.seed"] = std::to_string(o.seed);
  meta["config.p1_checksum"] = hex_of_file(o.p1);
  meta["config.p2_checksum"] = hex_of_file(o.p2);
  if (!o.large1.empty()) {
    meta["config.large1_checksum"] = hex_of_file(o.large1);
    meta["config.large2_checksum"] = hex_of_file(o.large2);
  }
  finish_run(o.out, "axioms", meta, {"axioms.csv"});
  for (const auto& r : rows)
    std::cout << r.axiom << " games=" << r.games
              << " mean=" << gpnn::fmt_real(r.mean)
              << " std=" << gpnn::fmt_real(r.std_dev) << "\n";
  std::cout << "monotonicity_argmax_stable_rate=" << gpnn::fmt_real(stable)
            << "\n";
  return 0;
}

struct HeatmapOpts {
  std::string p1, p2, out;
  int resolution = 64;
};

int cmd_heatmap(const HeatmapOpts& o) {
  Timer timer;
  auto [w1, w2] = load_pair(o.p1, o.p2);
  if (w1.shape.n != 2) throw gpnn::ShapeMismatch("heatmaps need n=2 models");
  gpnn::HeatmapGrid grid = gpnn::heatmap_grid(w1, w2, o.resolution);
  fs::create_directories(o.out);
  gpnn::write_heatmap_csv((fs::path(o.out) / "heatmap.csv").string(), grid);
  std::map<std::string, std::string> meta;
  meta["config.resolution"] = std::to_string(o.resolution);
  meta["config.p1_checksum"] = hex_of_file(o.p1);
  meta["config.p2_checksum"] = hex_of_file(o.p2);
  finish_run(o.out, "heatmap", meta, {"heatmap.csv"});
  std::cout << "cells=" << grid.cells.size() << "\n";
  return 0;
}

struct OodOpts {
  std::string kind = "affine";
  std::string p1, p2, ref1, ref2, out;
  std::string v1 = "M", v2 = "M";
  int64_t count = 8192;
  uint64_t seed = 1;
  int threads = 1;
};

int cmd_ood(const OodOpts& o) {
  Timer timer;
  auto [w1, w2] = load_pair(o.p1, o.p2);
  auto [r1, r2] = load_pair(o.ref1, o.ref2);
  if (r1.shape.n != w1.shape.n)
    throw gpnn::ShapeMismatch("reference pair differs in n");
  const int n = w1.shape.n;
  gpnn::OodSummary summary;
  std::map<std::string, std::string> meta;
  if (o.kind == "affine") {
    std::vector<gpnn::Game> games = gpnn::build_test_set(n, o.count, o.seed);
    summary = gpnn::ood_affine_report(w1, w2, r1, r2, games, o.seed, o.threads);
  } else if (o.kind == "subspace") {
    gpnn::SubspaceSpec spec{subspace_by_name(o.v1), subspace_by_name(o.v2)};
    std::vector<gpnn::Game> games =
        gpnn::build_complement_set(n, spec, o.count, o.seed);
    summary = gpnn::ood_subspace_report(w1, w2, r1, r2, games, o.threads);
    meta["config.v1"] = o.v1;
    meta["config.v2"] = o.v2;
  } else {
    throw gpnn::ConfigError("ood kind must be affine or subspace");
  }
  fs::create_directories(o.out);
  gpnn::write_eval_report_csv((fs::path(o.out) / "eval.csv").string(),
                              summary.report);
  gpnn::write_cdf_csv((fs::path(o.out) / "cdf.csv").string(),
                      gpnn::maxreg_cdf(summary.report));
  {
    std::ofstream out(fs::path(o.out) / "ood.csv", std::ios::trunc);
    out << "metric,value\n";
    out << "kind," << o.kind << "\n";
    out << "dist_mean," << gpnn::fmt_real(summary.dist_mean) << "\n";
    out << "dist_std," << gpnn::fmt_real(summary.dist_std) << "\n";
    out << "mean_maxreg," << gpnn::fmt_real(summary.report.buckets[3].mean_maxreg)
        << "\n";
  }
  meta["config.kind"] = o.kind;
  meta["config.count"] = std::to_string(o.count);
  meta["config.seed"] = std::to_string(o.seed);
  meta["config.p1_checksum"] = hex_of_file(o.p1);
  meta["config.p2_checksum"] = hex_of_file(o.p2);
  meta["config.ref1_checksum"] = hex_of_file(o.ref1);
  meta["config.ref2_checksum"] = hex_of_file(o.ref2);
  meta["reference_run_id"] = run_id_near(o.ref1);
  finish_run(o.out, "ood", meta, {"eval.csv", "cdf.csv", "ood.csv"});
  std::cout << "kind=" << o.kind << " mean_maxreg="
            << gpnn::fmt_real(summary.report.buckets[3].mean_maxreg)
            << " dist_mean=" << gpnn::fmt_real(summary.dist_mean) << "\n";
  return 0;
}

struct OracleOpts {
  std::string games_csv, out;
  int n = 2;
  int64_t count = 0;
  uint64_t seed = 1;
};

int cmd_oracle(const OracleOpts& o) {
  Timer timer;
  std::vector<gpnn::GameRow> rows;
  std::vector<std::string> files;
  std::map<std::string, std::string> meta;
  fs::create_directories(o.out);
  if (!o.games_csv.empty()) {
    rows = gpnn::read_games_csv(o.games_csv);
    meta["config.games"] = fs::path(o.games_csv).filename().string();
    meta["config.games_checksum"] = hex_of_file(o.games_csv);
  } else {
    std::vector<gpnn::Game> sampled =
        gpnn::build_test_set(o.n, o.count, o.seed);
    for (int64_t i = 0; i < static_cast<int64_t>(sampled.size()); ++i)
      rows.push_back({i, sampled[i]});
    gpnn::write_games_csv((fs::path(o.out) / "games.csv").string(), sampled,
                          o.seed);
    files.push_back("games.csv");
    meta["config.n"] = std::to_string(o.n);
    meta["config.count"] = std::to_string(o.count);
    meta["config.seed"] = std::to_string(o.seed);
  }

  std::vector<std::pair<int64_t, gpnn::Equilibrium>> eq_rows;
  std::ofstream flags(fs::path(o.out) / "selection_flags.csv",
                      std::ios::trunc);
  flags << "game_index,status,n_eqs,n_pure,rd_index,utilitarian_index,"
           "payoff_dominant_index,quarantined\n";
  std::ofstream dom(fs::path(o.out) / "dominance.csv", std::ios::trunc);
  dom << "game_index,dominated1,dominated2,rationalizable1,rationalizable2\n";
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : ";") + std::to_string(x);
    return s;
  };

  for (const auto& row : rows) {
    const gpnn::Game& g = row.game;
    auto d1 = gpnn::strictly_dominated_actions(g.u1);
    auto d2 = gpnn::strictly_dominated_actions(g.u2);
    auto [k1, k2] = gpnn::rationalizable_actions(g);
    dom << row.index << "," << join(d1) << "," << join(d2) << "," << join(k1)
        << "," << join(k2) << "\n";

    std::string status = "ok";
    std::vector<gpnn::Equilibrium> eqs;
    try {
      eqs = gpnn::enumerate_all_nash(g);
    } catch (const gpnn::DegenerateGame&) {
      status = "degenerate";
    }
    for (const auto& eq : eqs) eq_rows.emplace_back(row.index, eq);
    int np = 0;
    for (const auto& e : eqs) np += e.kind == gpnn::EqKind::pure;

    int rd = -1, util = -1, pd = -1, quarantined = 0;
    if (!eqs.empty()) {
      std::vector<double> pay1(eqs.size()), pay2(eqs.size());
      for (size_t i = 0; i < eqs.size(); ++i) {
        pay1[i] = gpnn::expected_payoff(g.u1, eqs[i].profile.s1,
                                        eqs[i].profile.s2);
        pay2[i] = gpnn::expected_payoff(g.u2, eqs[i].profile.s2,
                                        eqs[i].profile.s1);
      }
      double best = -1e300;
      for (size_t i = 0; i < eqs.size(); ++i)
        best = std::max(best, pay1[i] + pay2[i]);
      for (size_t i = 0; i < eqs.size(); ++i)
        if (pay1[i] + pay2[i] >= best - 1e-9) {
          util = static_cast<int>(i);
          break;
        }
      std::vector<int> pareto;
      for (size_t i = 0; i < eqs.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < eqs.size() && !dominated; ++j)
          dominated = j != i && pay1[j] >= pay1[i] - 1e-12 &&
                      pay2[j] >= pay2[i] - 1e-12 &&
                      (pay1[j] > pay1[i] + 1e-9 || pay2[j] > pay2[i] + 1e-9);
        if (!dominated) pareto.push_back(static_cast<int>(i));
      }
      if (pareto.size() == 1) pd = pareto[0];
      if (eqs.size() >= 2 && g.n() <= 3) {
        try {
          if (g.n() == 2) {
            auto [pd1, pd2] = gpnn::deviation_loss_products(g);
            if (std::abs(pd1 - pd2) < 1e-6) quarantined = 1;
          }
          gpnn::Equilibrium rde = g.n() == 2 ? gpnn::risk_dominant_2x2(g)
                                             : gpnn::trace_linear(g);
          for (size_t i = 0; i < eqs.size(); ++i)
            if (gpnn::profile_tv(eqs[i].profile, rde.profile) < 1e-6) {
              rd = static_cast<int>(i);
              break;
            }
        } catch (const gpnn::NotCoordinationGame&) {
          status = "not_coordination";
        } catch (const gpnn::TracingFailure&) {
          status = "tracing_failure";
        }
      }
    }
    flags << row.index << "," << status << "," << eqs.size() << "," << np
          << "," << rd << "," << util << "," << pd << "," << quarantined
          << "\n";
  }
  flags.close();
  dom.close();
  gpnn::write_equilibria_csv((fs::path(o.out) / "equilibria.csv").string(),
                             eq_rows);
  files.push_back("equilibria.csv");
  files.push_back("selection_flags.csv");
  files.push_back("dominance.csv");
  finish_run(o.out, "oracle", meta, files);
  std::cout << "games=" << rows.size() << " equilibria=" << eq_rows.size()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarially trained game-playing networks"};
  app.require_subcommand(1);
  int rc = 0;

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "train a network pair");
  t->add_option("--config", tr.config, "flat key=value config")->required();
  t->add_option("--out", tr.out, "run directory")->required();
  t->add_option("--seed", tr.seed, "seed override");
  t->add_option("--threads", tr.threads, "worker cap");
  t->callback([&] { rc = cmd_train(tr); });

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "regret report for a checkpoint pair");
  e->add_option("--p1", ev.p1, "player 1 checkpoint")->required();
  e->add_option("--p2", ev.p2, "player 2 checkpoint")->required();
  e->add_option("--out", ev.out, "output directory")->required();
  e->add_option("--games", ev.games_csv, "games CSV (else sampled)");
  e->add_option("--test-size", ev.test_size, "sampled test set size");
  e->add_option("--seed", ev.seed, "test stream seed");
  e->add_option("--threads", ev.threads, "worker cap");
  e->callback([&] { rc = cmd_eval(ev); });

  SelectOpts se;
  auto* s = app.add_subcommand("select", "equilibrium selection table");
  s->add_option("--p1", se.p1)->required();
  s->add_option("--p2", se.p2)->required();
  s->add_option("--out", se.out)->required();
  s->add_option("--count", se.count, "test games");
  s->add_option("--chunk", se.chunk, "games per processing chunk");
  s->add_option("--seed", se.seed);
  s->add_option("--threads", se.threads);
  s->callback([&] { rc = cmd_select(se); });

  AxiomOpts ax;
  auto* a = app.add_subcommand("axioms", "behavioural axiom statistics");
  a->add_option("--p1", ax.p1)->required();
  a->add_option("--p2", ax.p2)->required();
  a->add_option("--out", ax.out)->required();
  a->add_option("--large1", ax.large1, "(n+1)-action pair for independence");
  a->add_option("--large2", ax.large2);
  a->add_option("--games", ax.games, "uniform games before filtering");
  a->add_option("--games3", ax.games3, "large-game samples before filtering");
  a->add_option("--transforms", ax.transforms);
  a->add_option("--scale", ax.scale, "monotonicity increment scale");
  a->add_option("--seed", ax.seed);
  a->add_option("--threads", ax.threads);
  a->callback([&] { rc = cmd_axioms(ax); });

  HeatmapOpts hm;
  auto* h = app.add_subcommand("heatmap", "strategic-subspace heatmap");
  h->add_option("--p1", hm.p1)->required();
  h->add_option("--p2", hm.p2)->required();
  h->add_option("--out", hm.out)->required();
  h->add_option("--resolution", hm.resolution);
  h->callback([&] { rc = cmd_heatmap(hm); });

  OodOpts od;
  auto* d = app.add_subcommand("ood", "out-of-distribution report");
  d->add_option("--kind", od.kind, "affine or subspace");
  d->add_option("--p1", od.p1)->required();
  d->add_option("--p2", od.p2)->required();
  d->add_option("--ref1", od.ref1, "reference pair")->required();
  d->add_option("--ref2", od.ref2)->required();
  d->add_option("--out", od.out)->required();
  d->add_option("--v1", od.v1, "complement subspace, player 1");
  d->add_option("--v2", od.v2, "complement subspace, player 2");
  d->add_option("--count", od.count);
  d->add_option("--seed", od.seed);
  d->add_option("--threads", od.threads);
  d->callback([&] { rc = cmd_ood(od); });

  OracleOpts orc;
  auto* r = app.add_subcommand("oracle", "equilibrium dump for a game list");
  r->add_option("--games", orc.games_csv, "games CSV (else sampled)");
  r->add_option("--out", orc.out)->required();
  r->add_option("--n", orc.n, "actions per player when sampling");
  r->add_option("--count", orc.count, "games to sample");
  r->add_option("--seed", orc.seed);
  r->callback([&] { rc = cmd_oracle(orc); });

  std::string verify_dir;
  auto* v = app.add_subcommand("verify", "check a run directory's manifest");
  v->add_option("--dir", verify_dir, "run directory")->required();
  v->callback([&] {
    std::string err;
    if (gpnn::verify_manifest(verify_dir, err)) {
      std::cout << "ok\n";
      rc = 0;
    } else {
      std::cerr << err;
      throw gpnn::ParseError("manifest verification failed");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const gpnn::ConfigError& err) {
    std::cerr << err.what() << "\n";
    return 2;
  } catch (const gpnn::CheckpointFormatError& err) {
    std::cerr << err.what() << "\n";
    return 3;
  } catch (const gpnn::ParseError& err) {
    std::cerr << err.what() << "\n";
    return 3;
  } catch (const gpnn::ShapeMismatch& err) {
    std::cerr << err.what() << "\n";
    return 3;
  } catch (const gpnn::NonFiniteUpdate& err) {
    std::cerr << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << err.what() << "\n";
    return 1;
  }
  return rc;
}
