"""Partition agreement metric tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlcommunity.evaluate import (
    HUNGARIAN_LIMIT,
    confusion_matrix,
    mse_num_communities,
    nmi,
    optimal_assignment,
)
from mlcommunity.graph import Partition, PreconditionError

from oracles import nmi as nmi_oracle


def test_confusion_counts_and_margins():
    c = confusion_matrix([1, 1, 2, 2, 2], [1, 2, 2, 2, 1])
    assert np.array_equal(c, np.array([[1, 1], [1, 2]]))
    assert c.sum() == 5
    assert np.array_equal(c.sum(axis=1), [2, 3])
    assert np.array_equal(c.sum(axis=0), [2, 3])


def test_confusion_skips_unused_labels():
    c = confusion_matrix([1, 5, 5], [2, 2, 9])
    assert c.shape == (2, 2)
    assert np.array_equal(c, np.array([[1, 0], [1, 1]]))


def test_confusion_input_validation():
    with pytest.raises(PreconditionError):
        confusion_matrix([1, 2], [1, 2, 3])
    with pytest.raises(PreconditionError):
        confusion_matrix([], [])
    with pytest.raises(PreconditionError):
        confusion_matrix(np.ones((2, 2), dtype=int), np.ones((2, 2), dtype=int))


def test_nmi_frozen_small_case():
    got = nmi([1, 1, 2, 2], [1, 1, 1, 2])
    assert got == pytest.approx(0.3437110184854508, abs=1e-12)
    assert got == pytest.approx(nmi_oracle([1, 1, 2, 2], [1, 1, 1, 2]), abs=1e-12)


def test_nmi_matches_oracle_on_random_pairs():
    rng = np.random.default_rng(23)
    for _ in range(40):
        n = int(rng.integers(2, 30))
        a = rng.integers(1, 5, size=n)
        b = rng.integers(1, 5, size=n)
        assert nmi(a, b) == pytest.approx(nmi_oracle(a, b), abs=1e-12)


def test_nmi_perfect_under_relabeling():
    a = np.array([1, 1, 2, 3, 3, 2])
    b = np.array([7, 7, 1, 4, 4, 1])
    for variant in ("mean", "sqrt", "max"):
        assert nmi(a, b, variant) == pytest.approx(1.0, abs=1e-12)


def test_nmi_degenerate_cases():
    assert nmi([1, 1, 1], [1, 1, 1]) == 1.0
    assert nmi([1, 1, 1], [1, 1, 2]) == 0.0
    assert nmi([1, 2, 1], [5, 5, 5]) == 0.0


def test_nmi_variant_validation():
    with pytest.raises(PreconditionError):
        nmi([1, 2], [1, 2], variant="min")


def test_nmi_accepts_partition_objects():
    a = Partition.from_labels(np.array([1, 1, 2, 2]))
    b = Partition.from_labels(np.array([2, 2, 1, 1]))
    assert nmi(a, b) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    labels=st.lists(
        st.tuples(st.integers(1, 4), st.integers(1, 4)), min_size=1, max_size=40
    ),
    variant=st.sampled_from(["mean", "sqrt", "max"]),
)
def test_nmi_symmetric_and_bounded(labels, variant):
    a = np.array([p[0] for p in labels])
    b = np.array([p[1] for p in labels])
    v = nmi(a, b, variant)
    assert -1e-12 <= v <= 1.0 + 1e-12
    assert v == pytest.approx(nmi(b, a, variant), abs=1e-12)


def test_optimal_assignment_small_case():
    rep = optimal_assignment([1, 1, 2, 2, 3], [2, 2, 1, 1, 1])
    assert rep.hungarian
    assert rep.k_detected == 3 and rep.k_true == 2
    assert rep.matching[1] == 2 and rep.matching[2] == 1
    assert 3 not in rep.matching
    assert rep.agreement == 4
    assert np.array_equal(rep.confusion, np.array([[0, 2], [2, 0], [1, 0]]))
    assert rep.nmi == pytest.approx(nmi_oracle([1, 1, 2, 2, 3], [2, 2, 1, 1, 1]), abs=1e-12)


def test_optimal_assignment_perfect_permutation():
    rng = np.random.default_rng(4)
    truth = rng.integers(1, 5, size=60)
    detected = np.array([5 - t for t in truth])
    rep = optimal_assignment(detected, truth)
    assert rep.agreement == 60
    assert rep.nmi == pytest.approx(1.0, abs=1e-12)
    for d, t in rep.matching.items():
        assert t == 5 - d


def test_greedy_fallback_above_limit():
    n = HUNGARIAN_LIMIT + 5
    labels = np.arange(1, n + 1)
    rep = optimal_assignment(labels, labels)
    assert not rep.hungarian
    assert rep.agreement == n
    assert rep.matching == {int(i): int(i) for i in labels}


def test_mse_num_communities():
    assert mse_num_communities([2, 3, 4], 3) == pytest.approx(2.0 / 3.0)
    assert mse_num_communities([3, 3], 3) == 0.0
    with pytest.raises(PreconditionError):
        mse_num_communities([], 3)
