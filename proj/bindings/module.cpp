#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gpnn/errors.hpp"
#include "gpnn/evaluator.hpp"
#include "gpnn/io.hpp"
#include "gpnn/nash.hpp"
#include "gpnn/trainer.hpp"

namespace py = pybind11;
using namespace gpnn;

namespace {

Role role_from(const std::string& s) {
  if (s == "row") return Role::row;
  if (s == "column") return Role::column;
  throw ConfigError("role must be 'row' or 'column'");
}

Game make_game(const Matrix& u1, const Matrix& u2) {
  if (u1.rows() != u1.cols() || u2.rows() != u2.cols() ||
      u1.rows() != u2.rows())
    throw ShapeMismatch("payoff matrices must be square and equal-sized");
  return Game{u1, u2};
}

}  // namespace

PYBIND11_MODULE(_gpnn, m) {
  m.doc() = "adversarially trained game-playing networks: core operations";

  py::register_exception<ConstantMatrix>(m, "ConstantMatrixError");
  py::register_exception<DegenerateGame>(m, "DegenerateGameError");
  py::register_exception<NotCoordinationGame>(m, "NotCoordinationGameError");
  py::register_exception<TracingFailure>(m, "TracingFailureError");
  py::register_exception<ConfigError>(m, "ConfigurationError");
  py::register_exception<CheckpointFormatError>(m, "CheckpointError");
  py::register_exception<ShapeMismatch>(m, "ShapeError");
  py::register_exception<NonFiniteUpdate>(m, "NonFiniteUpdateError");

  py::class_<Game>(m, "Game")
      .def(py::init(&make_game), py::arg("u1"), py::arg("u2"))
      .def_readwrite("u1", &Game::u1)
      .def_readwrite("u2", &Game::u2)
      .def_property_readonly("n", &Game::n)
      .def("__repr__", [](const Game& g) {
        return "Game(n=" + std::to_string(g.n()) + ")";
      });

  py::class_<StrategyProfile>(m, "StrategyProfile")
      .def(py::init([](const Vector& s1, const Vector& s2) {
             return StrategyProfile{s1, s2};
           }),
           py::arg("s1"), py::arg("s2"))
      .def_readwrite("s1", &StrategyProfile::s1)
      .def_readwrite("s2", &StrategyProfile::s2);

  py::class_<Equilibrium>(m, "Equilibrium")
      .def_property_readonly(
          "s1", [](const Equilibrium& e) { return e.profile.s1; })
      .def_property_readonly(
          "s2", [](const Equilibrium& e) { return e.profile.s2; })
      .def_property_readonly("kind",
                             [](const Equilibrium& e) {
                               return e.kind == EqKind::pure
                                          ? std::string("pure")
                                          : std::string("mixed");
                             })
      .def_readonly("residual", &Equilibrium::residual);

  py::class_<NetworkShape>(m, "NetworkShape")
      .def(py::init([](int n, int L, int d) {
             return NetworkShape{n, L, d};
           }),
           py::arg("n"), py::arg("layers"), py::arg("width"))
      .def_readwrite("n", &NetworkShape::n)
      .def_readwrite("layers", &NetworkShape::L)
      .def_readwrite("width", &NetworkShape::d);

  py::class_<NetworkParams>(m, "NetworkParams")
      .def_readonly("shape", &NetworkParams::shape)
      .def_property_readonly(
          "weights", [](const NetworkParams& p) { return p.W; })
      .def_property_readonly(
          "biases", [](const NetworkParams& p) { return p.b; });

  m.def("normalize", &normalize_to_payoff_space, py::arg("a"));
  m.def("is_normalized", &is_normalized, py::arg("a"), py::arg("tol") = 1e-9);
  m.def(
      "sample_uniform_game",
      [](int n, uint64_t seed, uint64_t index) {
        Rng rng(seed, stream::test_game, index);
        return sample_uniform_game(n, rng);
      },
      py::arg("n"), py::arg("seed"), py::arg("index") = 0);
  m.def("game_from_angles", &game_from_angles, py::arg("theta1"),
        py::arg("theta2"));
  m.def("swap_roles", &swap_roles);
  m.def("restrict_game", &restrict_game, py::arg("game"), py::arg("keep1"),
        py::arg("keep2"));

  m.def("expected_payoff", &expected_payoff);
  m.def("regret", &regret);
  m.def("max_normalized_regret", &max_normalized_regret);
  m.def("enumerate_pure_nash", &enumerate_pure_nash);
  m.def("enumerate_all_nash", &enumerate_all_nash);
  m.def("tv_distance", &tv_distance);
  m.def("profile_tv", &profile_tv);
  m.def("risk_dominant_2x2", &risk_dominant_2x2);
  m.def("trace_linear",
        py::overload_cast<const Game&>(&trace_linear));
  m.def("strictly_dominated_actions", &strictly_dominated_actions);
  m.def("rationalizable_actions", &rationalizable_actions);
  m.def("uniform_benchmark_maxreg", &uniform_benchmark_maxreg);

  m.def(
      "param_count",
      [](int n, int L, int d) { return param_count({n, L, d}); },
      py::arg("n"), py::arg("layers"), py::arg("width"));
  m.def("init_params", &init_params, py::arg("shape"), py::arg("seed"));
  m.def(
      "forward",
      [](const NetworkParams& p, const Game& g, const std::string& role) {
        return forward(p, g, role_from(role));
      },
      py::arg("params"), py::arg("game"), py::arg("role") = "row");

  m.def(
      "train",
      [](int n, int layers, int width, int64_t total_games, int batch_size,
         double eta0, double alpha, uint64_t seed, const std::string& out_dir,
         int threads, int eval_points, int64_t test_size) {
        TrainConfig cfg;
        cfg.shape1 = {n, layers, width};
        cfg.shape2 = {n, layers, width};
        cfg.sampler.n = n;
        cfg.sampler.seed = seed;
        cfg.total_games = total_games;
        cfg.batch_size = batch_size;
        cfg.eta0 = eta0;
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.eval_points = eval_points;
        cfg.test_size = test_size;
        TrainResult res = train(cfg, out_dir, threads);
        py::list curve;
        for (const CurvePoint& p : res.curve)
          curve.append(py::make_tuple(p.step, p.games_seen, p.eta,
                                      p.maxreg_all, p.maxreg_pure,
                                      p.maxreg_mixed));
        return py::make_tuple(res.state.w1, res.state.w2, curve);
      },
      py::arg("n"), py::arg("layers"), py::arg("width"),
      py::arg("total_games"), py::arg("batch_size") = 128,
      py::arg("eta0") = 0.5, py::arg("alpha") = 0.999999, py::arg("seed") = 1,
      py::arg("out_dir") = "", py::arg("threads") = 1,
      py::arg("eval_points") = 8, py::arg("test_size") = 1024);

  m.def("build_test_set", &build_test_set, py::arg("n"), py::arg("size"),
        py::arg("seed"));
  m.def(
      "evaluate_models",
      [](const NetworkParams& w1, const NetworkParams& w2,
         const std::vector<Game>& games, int threads) {
        EvalReport rep = evaluate_models(w1, w2, games, threads);
        py::dict out;
        const char* keys[4] = {"zero_pure", "one_pure", "multi_pure", "all"};
        for (int b = 0; b < 4; ++b) {
          py::dict bucket;
          bucket["count"] = rep.buckets[b].count;
          bucket["frequency"] = rep.frequency(b);
          bucket["mean_maxreg"] = rep.buckets[b].mean_maxreg;
          bucket["std_maxreg"] = rep.buckets[b].std_maxreg;
          bucket["benchmark_mean"] = rep.buckets[b].benchmark_mean;
          bucket["exact_pure_rate"] = rep.buckets[b].exact_pure_rate;
          bucket["dominated_mass"] = rep.buckets[b].dominated_mass;
          bucket["nonrational_mass"] = rep.buckets[b].nonrational_mass;
          out[keys[b]] = bucket;
        }
        out["degenerate_excluded"] = rep.degenerate_excluded;
        return out;
      },
      py::arg("w1"), py::arg("w2"), py::arg("games"), py::arg("threads") = 1);

  m.def(
      "classify_selection",
      [](const Game& g, const StrategyProfile& p) {
        SelectionFlags f = classify_selection(g, p);
        py::dict out;
        out["risk_dominant"] = f.risk_dominant;
        out["utilitarian"] = f.utilitarian;
        out["payoff_dominant"] = f.payoff_dominant.has_value()
                                     ? py::cast(*f.payoff_dominant)
                                     : py::none();
        out["tv_to_closest"] = f.tv_to_closest;
        return out;
      },
      py::arg("game"), py::arg("profile"));

  m.def("save_checkpoint", &save_checkpoint, py::arg("path"),
        py::arg("params"), py::arg("step") = 0, py::arg("seed") = 0);
  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        Checkpoint c = load_checkpoint(path);
        return py::make_tuple(c.params, c.step, c.seed);
      },
      py::arg("path"));
}
