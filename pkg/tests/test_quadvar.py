"""Tests for realized QV: exact identity defects, splits, tail verdicts."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from incmart.models import ModelSpec, sample
from incmart.paths import SamplePath, TimeGrid, increment, random_lattice_path
from incmart.quadvar import (
    ContingencyReport,
    convergence_vs_qv_verdict,
    predictable_qv_hazard,
    qv_stopping_identity_check,
    realized_qv,
    tail_verdict,
)


def brownian_like(grid, seed):
    rng = np.random.default_rng(seed)
    cells = rng.standard_normal(grid.n - 1) * np.sqrt(grid.cell_widths())
    return SamplePath.from_cells(grid, cells, kind="linear")


# ---------------------------------------------------------------------------
# realized_qv basics


def test_smooth_path_has_vanishing_qv():
    grid = TimeGrid.uniform(0, 1, 10_000)
    path = SamplePath(grid, grid.times**2, kind="linear")
    rep = realized_qv(path)
    assert rep.total() <= 4e-4
    assert rep.jump_sum.values[-1] == 0.0
    assert rep.tail == "converges"


def test_single_unit_jump():
    grid = TimeGrid.uniform(0, 1, 10)
    k = grid.index_of(0.5)
    values = np.where(np.arange(grid.n) >= k, 1.0, 0.0)
    path = SamplePath(grid, values, jumps={k: 1.0})
    rep = realized_qv(path)
    assert rep.total() == 1.0
    assert rep.jump_sum.values[-1] == 1.0
    assert np.all(rep.cont_est.values == 0.0)
    assert rep.clamp_defect == 0.0
    assert rep.qv.jumps == {k: 1.0}


def test_brownian_qv_concentrates_near_one():
    grid = TimeGrid.uniform(0, 1, 2**14)
    totals = np.array([realized_qv(brownian_like(grid, s)).total() for s in range(32)])
    # E[qv] = 1, Var = 2 * sum(dt^2) = 2 / 2^14
    assert np.all((totals > 0.9) & (totals < 1.1))
    assert abs(totals.mean() - 1.0) < 4 * math.sqrt(2.0 / 2**14 / 32)


def test_qv_nondecreasing_and_split():
    grid = TimeGrid.uniform(0, 4, 300)
    b = sample(ModelSpec("levy_r", {"jump_rate": 2.0}), grid, 9)
    rep = realized_qv(b.path)
    assert np.all(np.diff(rep.qv.values) >= 0.0)
    assert np.all(np.diff(rep.jump_sum.values) >= 0.0)
    assert np.all(rep.cont_est.values >= 0.0)
    raw = rep.qv.values - rep.jump_sum.values
    assert rep.clamp_defect == max(0.0, float(-raw.min()))
    keep = raw >= 0.0
    assert np.array_equal(rep.cont_est.values[keep], raw[keep])


def test_continuous_path_has_zero_jump_sum():
    grid = TimeGrid.uniform(-3, 3, 200)
    rep = realized_qv(brownian_like(grid, 4))
    assert np.all(rep.jump_sum.values == 0.0)
    assert np.array_equal(rep.cont_est.values, rep.qv.values)


def test_qv_from_s_is_zero_before_s():
    grid = TimeGrid.uniform(-2, 2, 40)
    path = brownian_like(grid, 12)
    rep = realized_qv(path, s=0.0)
    k = grid.index_of(0.0)
    assert np.all(rep.qv.values[: k + 1] == 0.0)
    assert rep.qv.values[-1] > 0
    with pytest.raises(ValueError, match="outside"):
        realized_qv(path, s=7.0)


def test_qv_of_increment_matches_increment_of_qv_bitwise():
    grid = TimeGrid.uniform(-2, 2, 60)
    path = sample(ModelSpec("levy_r", {}), grid, 3).path
    s = float(grid.times[17])
    a = increment(realized_qv(path).qv, s)
    b = realized_qv(increment(path, s)).qv
    assert np.array_equal(a.values, b.values)
    assert a.jumps == b.jumps


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), data=st.data())
def test_property_qv_additivity_on_lattice(seed, data):
    g = TimeGrid.uniform(0, 1, 32)
    p = random_lattice_path(g, seed, jump_prob=0.15)
    i = data.draw(st.integers(0, g.n - 1))
    j = data.draw(st.integers(i, g.n - 1))
    s, t = float(g.times[i]), float(g.times[j])
    total = realized_qv(p, s=s).qv.values[-1]
    first = realized_qv(p, s=s).qv.values[j]
    second = realized_qv(p, s=t).qv.values[-1]
    # squared lattice cells are exact dyadics, so regrouping the sum is exact
    assert first + second == total


# ---------------------------------------------------------------------------
# stopping and increment identities


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), data=st.data())
def test_property_stopping_identities_exact_on_gaussian_data(seed, data):
    g = TimeGrid.uniform(-2, 2, 48)
    p = brownian_like(g, seed)
    k = data.draw(st.integers(0, g.n - 1))
    s = float(g.times[data.draw(st.integers(0, g.n - 1))])
    rep = qv_stopping_identity_check(p, k, s)
    assert rep.passed
    assert rep.stop_defect == 0.0 and rep.increment_defect == 0.0


def test_stopping_identities_exact_with_jumps():
    grid = TimeGrid.uniform(0, 5, 200)
    path = sample(ModelSpec("levy_r", {"jump_rate": 3.0}), grid, 21).path
    assert len(path.jumps) > 0
    exit_idx = int(np.argmax(np.abs(path.values) > 1.0))
    for k in (exit_idx, grid.n - 1, 0):
        rep = qv_stopping_identity_check(path, k, s=2.5)
        assert rep.passed


def test_stopping_identity_at_t_max_is_trivially_zero():
    grid = TimeGrid.uniform(0, 1, 30)
    path = brownian_like(grid, 2)
    rep = qv_stopping_identity_check(path, grid.n - 1, s=grid.t_max)
    assert rep.passed
    assert np.all(realized_qv(increment(path, grid.t_max)).qv.values == 0.0)


# ---------------------------------------------------------------------------
# hazard models


HGRID = TimeGrid.uniform(-20, 5, 500)


def test_hazard_jump_sum_is_counting_path_exactly():
    hits = 0
    for s in range(12):
        b = sample("hazard_pair", HGRID, s)
        rep = realized_qv(b.path)
        if b.marks["tau1_index"] is not None and b.marks["tau1_index"] > 0:
            hits += 1
            assert np.array_equal(rep.jump_sum.values, b.extras["counting1"].values)
    assert hits > 5


def test_predictable_qv_is_compensator():
    b = sample("hazard_pair", HGRID, 2)
    a = predictable_qv_hazard(b)
    assert a is b.compensator
    a2 = predictable_qv_hazard(b, component=2)
    assert a2 is b.extras["compensator2"]
    brown = sample("brownian_r", TimeGrid.uniform(0, 1, 10), 0)
    with pytest.raises(ValueError, match="compensator"):
        predictable_qv_hazard(brown)


def test_hazard_cont_estimate_shrinks_under_refinement():
    # the raw qv - jump_sum gap is dominated by the compensator's cell
    # increments; refining the grid 4x must cut it at least in half
    sups = {}
    for n in (250, 1000):
        grid = TimeGrid.uniform(-20, 5, n)
        worst = 0.0
        for s in range(8):
            b = sample("hazard_pair", grid, s)
            rep = realized_qv(b.path)
            worst = max(worst, float(np.max(np.abs(
                rep.qv.values - rep.jump_sum.values))))
        sups[n] = worst
    assert sups[1000] <= 0.5 * sups[250]


# ---------------------------------------------------------------------------
# tail verdicts and the contingency report


def test_tail_verdict_three_ways():
    flat = np.concatenate([np.zeros(50), np.linspace(0, 3, 50)])
    assert tail_verdict(flat) == "converges"
    ramp = np.linspace(0, 10, 100)
    assert tail_verdict(ramp) == "diverges"
    # oscillation between tol and 5 tol in the earliest window
    mid = np.concatenate([np.linspace(0, 0.03, 10), np.ones(90)])
    assert tail_verdict(mid) == "inconclusive"


class FakeEnsemble:
    def __init__(self, rows, name="brownian_r"):
        self.rows = np.asarray(rows, dtype=np.float64)
        self.model = ModelSpec(name)

    def values(self, component="path"):
        assert component == "path"
        return self.rows


def test_contingency_counts_and_fraction():
    t = np.linspace(-10, 0, 200)
    still = np.zeros_like(t)                      # qv and value both stabilize
    ramp = np.linspace(0, 100, t.size)            # neither stabilizes
    rep = convergence_vs_qv_verdict(FakeEnsemble([still, still, ramp]))
    assert rep.counts["both_stabilize"] == 2
    assert rep.counts["neither"] == 1
    assert rep.inconclusive == 0
    assert rep.off_diagonal_fraction == 0.0
    assert rep.expected_cell == "neither"
    summary = rep.json_summary()
    assert summary["n_paths"] == 3
    json.dumps(summary)


def test_contingency_flags_off_diagonal():
    # a 0.5 step inside the earliest window moves the value past its verdict
    # threshold, while a size-5 jump later inflates the qv range enough that
    # the window's qv contribution reads as stable: qv_only
    row = np.zeros(200)
    row[5:] = 0.5
    row[150:] = 5.5
    fake = FakeEnsemble([row])
    rep = convergence_vs_qv_verdict(fake)
    assert rep.counts["qv_only"] == 1
    assert rep.off_diagonal_fraction == 1.0


def test_brownian_ensemble_lands_on_neither():
    grid = TimeGrid.uniform(-50, 0, 500)
    rows = [sample("brownian_r", grid, s).path.values for s in range(40)]
    rep = convergence_vs_qv_verdict(FakeEnsemble(rows))
    assert rep.counts["neither"] >= 36
    assert rep.off_diagonal_fraction <= 0.05


def test_bump_ensemble_lands_on_both_stabilize():
    grid = TimeGrid.uniform(-50, 0, 500)
    rows = [sample("bump", grid, s).path.values for s in range(40)]
    rep = convergence_vs_qv_verdict(FakeEnsemble(rows, name="bump"))
    assert rep.counts["both_stabilize"] == 40
    assert rep.expected_cell == "both_stabilize"


# ---------------------------------------------------------------------------
# serialization


def test_qv_report_csv_and_json():
    grid = TimeGrid.uniform(0, 1, 8)
    path = sample(ModelSpec("levy_r", {"jump_rate": 4.0}), grid, 6).path
    rep = realized_qv(path)
    text = rep.csv_string()
    lines = text.strip().splitlines()
    assert lines[0] == "time,qv,jump_sum,cont_est"
    assert len(lines) == grid.n + 1
    # columns reparse to the exact stored floats
    row = lines[3].split(",")
    assert float(row[1]) == rep.qv.values[2]
    summary = rep.json_summary()
    assert set(summary) == {"clamp_defect", "n_jumps", "start_time",
                            "tail_verdict", "total_cont_est",
                            "total_jump_sum", "total_qv"}
    assert summary["total_qv"] == rep.total()
