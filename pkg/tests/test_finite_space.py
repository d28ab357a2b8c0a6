"""Exactness tests for the finite filtered space engine.

On a binary tree with p_up = 1/2 every probability is a power of two and the
unit-step walk takes integer values, so block averages are exact dyadic
rationals and the martingale defect of the walk is exactly zero in floats.
Tests below assert that where it holds and fall back to 1e-12 where weights
are not dyadic.
"""

import json

import numpy as np
import pytest

from incmart.finite_space import (
    AdaptedFiniteProcess,
    FiniteFilteredSpace,
    FiniteStoppingTime,
    adaptedness_defect,
    check_increment_martingale,
    conditional_expectation,
    decompose,
    expectation,
    is_martingale,
    random_walk_values,
    stop_process,
    variance_profile,
)


@pytest.fixture(scope="module")
def tree8():
    return FiniteFilteredSpace.binary_tree(8)


def test_binary_tree_shape_and_times(tree8):
    assert tree8.n_outcomes == 256
    assert tree8.n_times == 9
    assert np.array_equal(tree8.times, np.arange(-4.0, 5.0))
    assert float(np.sum(tree8.p)) == 1.0
    # root partition is trivial, leaf partition separates everything
    assert np.all(tree8.blocks[0] == 0)
    assert np.unique(tree8.blocks[-1]).size == 256


def test_binary_tree_biased():
    sp = FiniteFilteredSpace.binary_tree(3, p_up=0.7)
    # outcome 7 = three up flips
    assert sp.p[7] == pytest.approx(0.7 ** 3, abs=1e-15)
    assert sp.p[0] == pytest.approx(0.3 ** 3, abs=1e-15)


def test_refinement_violation_rejected():
    # partition merges blocks at the later time: not a filtration
    blocks = [[0, 0, 1, 1], [0, 0, 0, 0]]
    with pytest.raises(ValueError, match="refine"):
        FiniteFilteredSpace([0.25] * 4, [0.0, 1.0], blocks)


def test_probability_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        FiniteFilteredSpace([0.5, 0.4], [0.0], [[0, 1]])
    with pytest.raises(ValueError, match="positive"):
        FiniteFilteredSpace([1.0, 0.0], [0.0], [[0, 1]])


def test_conditional_expectation_hand_computed():
    sp = FiniteFilteredSpace([0.2, 0.3, 0.5], [0.0, 1.0], [[0, 0, 0], [0, 0, 1]])
    x = np.array([1.0, 2.0, 4.0])
    e0 = conditional_expectation(sp, x, 0)
    assert np.allclose(e0, 0.2 * 1 + 0.3 * 2 + 0.5 * 4, atol=1e-15)
    e1 = conditional_expectation(sp, x, 1)
    assert e1[0] == pytest.approx((0.2 * 1 + 0.3 * 2) / 0.5, abs=1e-15)
    assert e1[2] == 4.0
    assert expectation(sp, x) == pytest.approx(2.8, abs=1e-15)


def test_tower_property(tree8):
    rng = np.random.default_rng(5)
    x = rng.normal(size=tree8.n_outcomes)
    for k, l in [(0, 3), (2, 6), (1, 8)]:
        inner = conditional_expectation(tree8, x, l)
        assert np.allclose(
            conditional_expectation(tree8, inner, k),
            conditional_expectation(tree8, x, k),
            atol=1e-13,
        )


def test_unit_walk_is_exact_martingale(tree8):
    walk = random_walk_values(tree8)
    report = is_martingale(tree8, walk)
    # dyadic probabilities + integer values: block averages are exact
    assert report.defect == 0.0
    assert report.passed
    assert report.pairs_checked == 36


def test_drifted_walk_flagged(tree8):
    walk = random_walk_values(tree8, drift=0.1)
    report = is_martingale(tree8, walk)
    assert report.defect >= 0.099
    assert not report.passed


def test_adaptedness(tree8):
    walk = random_walk_values(tree8)
    assert adaptedness_defect(tree8, walk) == 0.0
    AdaptedFiniteProcess(tree8, walk)
    z = tree8.flip_signs()[:, -1]  # terminal flip, invisible before the end
    skewed = walk + z[:, None]
    assert adaptedness_defect(tree8, skewed) == 2.0
    with pytest.raises(ValueError, match="not adapted"):
        AdaptedFiniteProcess(tree8, skewed)
    with pytest.raises(ValueError, match="not adapted"):
        is_martingale(tree8, skewed)


def test_increment_martingale_without_adaptedness(tree8):
    # walk plus a terminal-measurable offset: increments unaffected
    z = tree8.flip_signs() @ (1.0 / np.arange(1, 9))
    m = random_walk_values(tree8) + z[:, None]
    report = check_increment_martingale(tree8, m)
    assert report.centering_defect <= 1e-13
    # z does not cancel bitwise (non-dyadic weights), only to rounding error
    assert report.increment_adaptedness_defect <= 1e-13
    assert report.passed

    bad = check_increment_martingale(tree8, random_walk_values(tree8, drift=0.1))
    assert bad.centering_defect >= 0.099
    assert not bad.passed


def test_decompose_against_suffix_oracle(tree8):
    """Split M = walk + Z into martingale part and centered remainder.

    With Z = sum_j w_j * sign_j, the remainder at time k must equal the
    still-unseen suffix sum_{j>k} w_j sign_j, with second moment
    sum_{j>k} w_j**2. Both are computed independently here.
    """
    w = 1.0 / np.arange(1, 9)
    signs = tree8.flip_signs()
    z = signs @ w
    walk = random_walk_values(tree8)
    m = walk + z[:, None]

    K, N = decompose(tree8, m)

    assert np.max(np.abs(K + N - m)) <= 1e-12
    assert is_martingale(tree8, K).defect <= 1e-12

    for k in range(9):
        suffix = signs[:, k:] @ w[k:]
        assert np.max(np.abs(N[:, k] - suffix)) <= 1e-12
        # conditionally centered and orthogonal to anything adapted
        assert np.max(np.abs(conditional_expectation(tree8, N[:, k], k))) <= 1e-12
        assert abs(expectation(tree8, K[:, k] * N[:, k])) <= 1e-12
        # second-moment ladder, strictly decreasing to 0
        oracle_var = float(np.sum(w[k:] ** 2))
        assert expectation(tree8, N[:, k] ** 2) == pytest.approx(oracle_var, abs=1e-12)
        total = expectation(tree8, m[:, k] ** 2)
        split = expectation(tree8, K[:, k] ** 2) + expectation(tree8, N[:, k] ** 2)
        assert total == pytest.approx(split, abs=1e-11)

    # backward evolution N_t = N_s - E[N_s | F_t] for s < t
    for s, t in [(0, 3), (2, 7), (5, 8)]:
        evolved = N[:, s] - conditional_expectation(tree8, N[:, s], t)
        assert np.max(np.abs(evolved - N[:, t])) <= 1e-12


def test_decompose_idempotent_and_linear(tree8):
    w = 1.0 / np.arange(1, 9)
    z = tree8.flip_signs() @ w
    m1 = random_walk_values(tree8) + z[:, None]
    m2 = random_walk_values(tree8, step=0.5) + (z ** 2)[:, None]

    K1, N1 = decompose(tree8, m1)
    K1b, N1b = decompose(tree8, K1)
    assert np.max(np.abs(K1b - K1)) <= 1e-12
    assert np.max(np.abs(N1b)) <= 1e-12

    K2, N2 = decompose(tree8, m2)
    Kc, Nc = decompose(tree8, 2.0 * m1 - 3.0 * m2)
    assert np.max(np.abs(Kc - (2.0 * K1 - 3.0 * K2))) <= 1e-12
    assert np.max(np.abs(Nc - (2.0 * N1 - 3.0 * N2))) <= 1e-12


def test_decompose_rejects_drift(tree8):
    with pytest.raises(ValueError, match="not an increment martingale"):
        decompose(tree8, random_walk_values(tree8, drift=0.1))


def test_stopping_time_validation(tree8):
    walk = random_walk_values(tree8)
    sigma = FiniteStoppingTime.first_exceedance(tree8, walk, 1.5)
    assert np.all((sigma.indices >= 2) & (sigma.indices <= tree8.n_times))
    # an index keyed to the terminal flip is not a stopping time
    peek = np.where(tree8.flip_signs()[:, -1] > 0, 0, 1)
    with pytest.raises(ValueError, match="not measurable"):
        FiniteStoppingTime(tree8, peek)


def test_stopped_walk_still_martingale(tree8):
    walk = random_walk_values(tree8)
    sigma = FiniteStoppingTime.first_exceedance(tree8, walk, 2.5)
    stopped = stop_process(tree8, walk, sigma)
    assert is_martingale(tree8, stopped).defect == 0.0
    # frozen beyond the hit, identical before it
    for w in range(tree8.n_outcomes):
        k = sigma.indices[w]
        if k < tree8.n_times:
            assert np.all(stopped[w, k:] == walk[w, k])
        assert np.array_equal(stopped[w, : min(k + 1, 9)], walk[w, : min(k + 1, 9)])


def test_never_stopping_is_identity(tree8):
    walk = random_walk_values(tree8)
    never = FiniteStoppingTime(tree8, np.full(256, tree8.n_times))
    assert np.array_equal(stop_process(tree8, walk, never), walk)


def test_variance_profile_counts_steps(tree8):
    walk = random_walk_values(tree8)
    assert np.array_equal(variance_profile(tree8, walk), np.arange(9.0))


def test_json_round_trip(tree8):
    restored = FiniteFilteredSpace.from_json(tree8.to_json())
    assert np.array_equal(restored.p, tree8.p)
    assert np.array_equal(restored.times, tree8.times)
    assert np.array_equal(restored.blocks, tree8.blocks)
    json.loads(tree8.to_json())  # stays valid JSON
