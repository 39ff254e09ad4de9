import json
import math

import numpy as np
import pytest

import mvtrace


def test_version():
    assert mvtrace.__version__ == "0.1.0"


def test_mvrl_round_trip(tmp_path):
    m = np.arange(12, dtype=float).reshape(3, 4)
    mvtrace.write_mvrl(tmp_path / "m.mvrl", m)
    np.testing.assert_array_equal(mvtrace.read_mvrl(tmp_path / "m.mvrl"), m)
    with pytest.raises(mvtrace.Error):
        mvtrace.read_mvrl(tmp_path / "missing.mvrl")


def test_laplacian_rows_sum_to_zero():
    lap = mvtrace.mesh_laplacian("icosphere-1")
    assert lap.shape == (42, 42)
    np.testing.assert_allclose(lap.sum(axis=1), 0.0)
    assert np.linalg.eigvalsh(lap).min() > -1e-10


def test_prox_group_shrinks_rows():
    v = np.array([[3.0, 4.0], [0.3, 0.4]])
    p = mvtrace.prox_group(v, 1.0)
    np.testing.assert_allclose(p[0], [2.4, 3.2])
    np.testing.assert_array_equal(p[1], [0.0, 0.0])


def test_metrics():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert mvtrace.r_squared(y, y) == 1.0
    assert mvtrace.r_squared(y, np.full(4, 2.5)) == 0.0
    assert mvtrace.mean_squared_error(y, y + 1.0) == 1.0


def test_folds_partition():
    folds = mvtrace.make_folds(40, 10, 0)
    assert sorted(i for f in folds for i in f) == list(range(40))
    assert {len(f) for f in folds} == {4}


def test_significance_map():
    betas = [np.array([[v], [0.0]]) for v in (1.0, 2.0, 3.0)]
    t, mask = mvtrace.significance_map(betas, 2.45, "mean-entry")
    assert t[0] == pytest.approx(2.0 * math.sqrt(3.0))
    assert list(mask) == [True, False]


def test_fit_recovers_planted_rows():
    rng = np.random.default_rng(0)
    m, d, n = 6, 2, 60
    beta = np.zeros((m, d))
    beta[1] = [2.0, -1.0]
    latents = [rng.normal(size=(m, d)) for _ in range(n)]
    y = np.array([np.sum(beta * z) for z in latents])
    lap = mvtrace.mesh_laplacian("grid-2x3")
    fit, trace, converged = mvtrace.fit_trace_regression(latents, y, lap, alpha=5.0, eta=0.0)
    assert converged
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    norms = np.linalg.norm(fit, axis=1)
    assert np.argmax(norms) == 1
    assert np.count_nonzero(norms > 1e-8) == 1


def test_generate_and_run(tmp_path):
    mvtrace.generate(json.dumps({
        "output": str(tmp_path / "data"),
        "generator": {"n_subjects": 12, "mesh": "grid-6x6", "d_task": 4, "d_rest": 3,
                      "k_true": 2, "n_clusters": 1, "cluster_size": 4, "seed": 1},
    }))
    result = mvtrace.run(json.dumps({
        "dataset": str(tmp_path / "data"),
        "output": str(tmp_path / "run"),
        "folds": 3,
        "representation": {"method": "pca", "enc": 2},
        "regularization": {"alpha": 1.0, "eta": 0.5},
    }))
    assert len(result["fold_mse"]) == 3
    assert math.isfinite(result["mean_mse"])
    assert (tmp_path / "run" / "summary.csv").exists()
    assert "12" in mvtrace.inspect(tmp_path / "data")


def test_config_errors_name_the_field(tmp_path):
    with pytest.raises(mvtrace.ConfigError, match="representation.enc"):
        mvtrace.run(json.dumps({"representation": {"enc": 1}}))
    with pytest.raises(mvtrace.Error):
        mvtrace.run(json.dumps({"dataset": str(tmp_path / "nothing"), "output": str(tmp_path / "o")}))
