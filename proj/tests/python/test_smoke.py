import math

import numpy as np
import pytest

import gpnn


def test_param_count():
    assert gpnn.param_count(2, 8, 256) == 463362
    assert gpnn.param_count(3, 8, 512) == 1849859
    assert gpnn.param_count(2, 1, 16) == 178


def test_sampling_and_normalization():
    g = gpnn.sample_uniform_game(2, seed=7, index=3)
    assert g.n == 2
    assert abs(g.u1.sum()) < 1e-9
    assert abs(np.linalg.norm(g.u1) - 2.0) < 1e-9
    assert gpnn.is_normalized(g.u1)
    again = gpnn.sample_uniform_game(2, seed=7, index=3)
    assert np.array_equal(g.u1, again.u1)

    with pytest.raises(gpnn.ConstantMatrixError):
        gpnn.normalize(np.ones((2, 2)))


def test_nash_oracle():
    pennies = gpnn.Game(
        np.array([[1.0, -1.0], [-1.0, 1.0]]),
        np.array([[-1.0, 1.0], [1.0, -1.0]]),
    )
    eqs = gpnn.enumerate_all_nash(pennies)
    assert len(eqs) == 1
    assert eqs[0].kind == "mixed"
    assert np.allclose(eqs[0].s1, [0.5, 0.5])

    stag = gpnn.Game(
        np.array([[4.0, 0.0], [3.0, 2.0]]),
        np.array([[4.0, 0.0], [3.0, 2.0]]),
    )
    assert len(gpnn.enumerate_all_nash(stag)) == 3
    assert gpnn.enumerate_pure_nash(stag) == [(0, 0), (1, 1)]
    rd = gpnn.risk_dominant_2x2(stag)
    assert rd.kind == "pure"
    assert rd.s1[1] > 0.99
    traced = gpnn.trace_linear(stag)
    assert gpnn.profile_tv(
        gpnn.StrategyProfile(rd.s1, rd.s2),
        gpnn.StrategyProfile(traced.s1, traced.s2),
    ) < 1e-6

    flags = gpnn.classify_selection(
        stag, gpnn.StrategyProfile(np.array([0.02, 0.98]), np.array([0.03, 0.97]))
    )
    assert flags["risk_dominant"] is True
    assert flags["utilitarian"] is False


def test_dominance():
    pd = np.array([[3.0, 0.0], [5.0, 1.0]])
    assert gpnn.strictly_dominated_actions(pd) == [0]
    game = gpnn.Game(pd, pd)
    r1, r2 = gpnn.rationalizable_actions(game)
    assert r1 == [1] and r2 == [1]
    assert gpnn.regret(pd, np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(2.0)


def test_forward_simplex():
    shape = gpnn.NetworkShape(2, layers=1, width=16)
    params = gpnn.init_params(shape, 42)
    g = gpnn.sample_uniform_game(2, seed=1)
    probs = gpnn.forward(params, g, "row")
    assert probs.shape == (2,)
    assert probs.min() >= 0
    assert math.isclose(probs.sum(), 1.0, abs_tol=1e-12)


def test_training_smoke(tmp_path):
    w1, w2, curve = gpnn.train(
        n=2, layers=1, width=16, total_games=8 * 200, batch_size=8,
        seed=3, out_dir=str(tmp_path / "run"), eval_points=6, test_size=256,
    )
    assert len(curve) >= 3
    steps = [c[0] for c in curve]
    assert steps == sorted(steps)
    assert curve[-1][3] < curve[0][3]  # held-out MaxReg falls
    assert (tmp_path / "run" / "curve.csv").exists()
    assert (tmp_path / "run" / "manifest").exists()

    # same config reruns bit-identically
    v1, v2, curve2 = gpnn.train(
        n=2, layers=1, width=16, total_games=8 * 200, batch_size=8,
        seed=3, eval_points=6, test_size=256,
    )
    assert curve == curve2
    for a, b in zip(w1.weights, v1.weights):
        assert np.array_equal(a, b)


def test_checkpoint_roundtrip(tmp_path):
    params = gpnn.init_params(gpnn.NetworkShape(2, layers=2, width=12), 9)
    path = str(tmp_path / "w.ckpt")
    gpnn.save_checkpoint(path, params, step=5, seed=9)
    loaded, step, seed = gpnn.load_checkpoint(path)
    assert step == 5 and seed == 9
    for a, b in zip(params.weights, loaded.weights):
        assert np.array_equal(a, b)
    with pytest.raises(gpnn.CheckpointError):
        gpnn.load_checkpoint(str(tmp_path / "missing.ckpt"))


def test_evaluation_report():
    params1 = gpnn.init_params(gpnn.NetworkShape(2, layers=1, width=16), 1)
    params2 = gpnn.init_params(gpnn.NetworkShape(2, layers=1, width=16), 2)
    games = gpnn.build_test_set(2, 512, seed=11)
    report = gpnn.evaluate_models(params1, params2, games)
    assert report["all"]["count"] + report["degenerate_excluded"] == 512
    assert 0.0 <= report["all"]["mean_maxreg"] <= 1.0
    assert report["all"]["benchmark_mean"] == pytest.approx(0.259, abs=0.05)
