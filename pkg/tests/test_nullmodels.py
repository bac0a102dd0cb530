import math

import numpy as np
import pytest

import oracles
from mlcommunity.graph import MultiLayerGraph, PreconditionError
from mlcommunity.nullmodels import (
    bootstrap_lrt,
    degrees_of_freedom,
    fit_id,
    fit_sd,
    lrt_statistic,
    sample_from_null,
)


def rand_graph(rng, n, m):
    mats = []
    for _ in range(m):
        a = rng.integers(0, 3, size=(n, n)).astype(float)
        a *= rng.random((n, n)) < 0.6
        a = np.triu(a, 1)
        a = a + a.T
        if a.sum() == 0.0:
            a[0, 1] = a[1, 0] = 1.0
        mats.append(a)
    return MultiLayerGraph.from_dense(mats)


def test_statistic_matches_oracle():
    rng = np.random.default_rng(31)
    for _ in range(25):
        g = rand_graph(rng, int(rng.integers(4, 12)), int(rng.integers(1, 4)))
        assert lrt_statistic(g) == pytest.approx(
            oracles.lrt_statistic(g), abs=1e-9
        )


def test_statistic_nonnegative():
    # the ID fit nests the SD fit, so the gap can never be negative
    rng = np.random.default_rng(37)
    for _ in range(60):
        g = rand_graph(rng, int(rng.integers(4, 15)), int(rng.integers(2, 5)))
        assert lrt_statistic(g) >= -1e-9


def test_single_layer_statistic_is_zero():
    rng = np.random.default_rng(41)
    for _ in range(10):
        g = rand_graph(rng, 8, 1)
        assert lrt_statistic(g) == 0.0


def test_single_edge_statistic():
    # one edge in each of two layers with equal totals: the ID and SD
    # estimates coincide on every node, only the beta split differs
    l1 = np.zeros((3, 3))
    l2 = np.zeros((3, 3))
    l1[0, 1] = l1[1, 0] = 1.0
    l2[0, 1] = l2[1, 0] = 1.0
    g = MultiLayerGraph.from_dense([l1, l2])
    # lambda1 = sum k log(k/sqrt(2)) = 4 * log(1/sqrt(2))
    # lambda2 = sum K log(K/2) + sum L_m log(1/2) = 0 - 2 log 2
    want = 2.0 * (4.0 * math.log(1.0 / math.sqrt(2.0)) + 2.0 * math.log(2.0))
    assert lrt_statistic(g) == pytest.approx(want, abs=1e-12)
    assert lrt_statistic(g) == pytest.approx(0.0, abs=1e-12)


def test_degrees_of_freedom():
    assert degrees_of_freedom(29, 3) == 29 * 3 - (29 + 3 - 1)
    assert degrees_of_freedom(10, 1) == 0


def test_fit_id_theta():
    g = rand_graph(np.random.default_rng(43), 6, 2)
    params = fit_id(g)
    assert params.kind == "ID"
    for m in range(2):
        want = g.degrees[m] / math.sqrt(g.layer_totals[m])
        np.testing.assert_allclose(params.theta[m], want)


def test_fit_sd_theta_and_beta():
    g = rand_graph(np.random.default_rng(47), 6, 3)
    params = fit_sd(g)
    assert params.kind == "SD"
    np.testing.assert_allclose(
        params.theta, g.total_degrees() / math.sqrt(g.grand_total)
    )
    np.testing.assert_allclose(params.beta.sum(), 1.0)
    np.testing.assert_allclose(
        params.beta, g.layer_totals / g.grand_total
    )


def test_sampler_determinism():
    g = rand_graph(np.random.default_rng(53), 10, 2)
    params = fit_sd(g)
    a = sample_from_null(params, 123)
    b = sample_from_null(params, 123)
    for m in range(2):
        np.testing.assert_array_equal(a.to_dense(m), b.to_dense(m))
    c = sample_from_null(params, 124)
    assert any(
        not np.array_equal(a.to_dense(m), c.to_dense(m)) for m in range(2)
    )


def test_sampler_no_self_loops_and_symmetric():
    g = rand_graph(np.random.default_rng(59), 12, 2)
    params = fit_id(g)
    s = sample_from_null(params, 7)
    for m in range(2):
        dense = s.to_dense(m)
        np.testing.assert_array_equal(dense, dense.T)
        assert np.all(np.diag(dense) == 0.0)


def test_sampler_mean_total_tracks_fit():
    # expected total degree of an SD replicate equals the observed one
    # up to the dropped diagonal terms
    rng = np.random.default_rng(61)
    g = rand_graph(rng, 30, 2)
    params = fit_sd(g)
    totals = np.zeros(2)
    reps = 60
    for b in range(reps):
        s = sample_from_null(params, 1000 + b)
        totals += s.layer_totals
    totals /= reps
    np.testing.assert_allclose(totals, g.layer_totals, rtol=0.15)


def test_bootstrap_requires_two_layers():
    g = rand_graph(np.random.default_rng(67), 6, 1)
    with pytest.raises(PreconditionError):
        bootstrap_lrt(g, n_boot=5, seed=0)


def test_bootstrap_result_fields():
    g = rand_graph(np.random.default_rng(71), 12, 2)
    res = bootstrap_lrt(g, n_boot=19, seed=5, keep_boot_stats=True)
    assert res.n_boot == 19
    assert res.boot_stats.shape == (19,)
    assert 0.0 < res.p_boot <= 1.0
    assert 0.0 <= res.p_chi2 <= 1.0
    assert res.recommended in ("ID", "SD")
    assert res.df == degrees_of_freedom(12, 2)
    # empirical p-value is (1 + count) / (B + 1)
    count = int(np.sum(res.boot_stats >= res.statistic))
    assert res.p_boot == pytest.approx((1 + count) / 20.0)


def test_bootstrap_determinism():
    g = rand_graph(np.random.default_rng(73), 10, 2)
    a = bootstrap_lrt(g, n_boot=11, seed=9, keep_boot_stats=True)
    b = bootstrap_lrt(g, n_boot=11, seed=9, keep_boot_stats=True)
    assert a.statistic == b.statistic
    np.testing.assert_array_equal(a.boot_stats, b.boot_stats)
    assert a.p_boot == b.p_boot
