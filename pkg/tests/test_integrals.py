import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incmart.integrals import (
    Deterministic,
    IntegralReport,
    LinearCombination,
    Masked,
    PathFunctional,
    Product,
    Tabulated,
    combine_paths,
    improper_integral,
    increment_integral,
    ll1_classify,
    parse_integrand,
    time_change_to_bm,
    verify_integral_properties,
)
from incmart.models import sample
from incmart.paths import (
    SamplePath,
    TimeGrid,
    increment,
    random_lattice_path,
    round_sig,
    stop,
)
from incmart.quadvar import realized_qv

UNIT = Deterministic(lambda t: np.ones_like(t), name="one")


def brownian_path(seed, t_min=0.0, t_max=1.0, n=512):
    grid = TimeGrid.uniform(t_min, t_max, n)
    return sample("brownian_r", grid, seed=seed).path


def levy_path(seed, n=400):
    grid = TimeGrid.uniform(-5.0, 5.0, n)
    bundle = sample("levy_r", grid, seed=seed)
    return bundle.path


# ---------------------------------------------------------------------------
# basic evaluation


def test_unit_integrand_reproduces_increment():
    path = levy_path(3)
    for s in (-5.0, -1.0, 2.5):
        out = increment_integral(UNIT, path, s)
        ref = increment(path, s)
        assert np.array_equal(out.values, ref.values)
        assert out.jumps == ref.jumps


def test_zero_integrand_gives_zero_path():
    path = levy_path(4)
    out = increment_integral(Deterministic(lambda t: np.zeros_like(t)), path)
    assert np.all(out.values == 0.0)
    assert out.jumps == {}


def test_deterministic_riemann_value():
    # integrate phi(t) = t against the deterministic path M_t = t on [0, 1]
    grid = TimeGrid.uniform(0.0, 1.0, 4000)
    tpath = SamplePath(grid, grid.times.copy(), kind="linear")
    out = increment_integral(Deterministic(lambda t: t, name="t"), tpath)
    assert abs(out.values[-1] - 0.5) < 1e-3


def test_integral_starts_at_zero_after_s():
    path = brownian_path(9)
    out = increment_integral(UNIT, path, s=0.5)
    k = path.grid.index_of(0.5)
    assert np.all(out.values[: k + 1] == 0.0)


def test_path_functional_sees_only_past():
    seen = []

    def g(prefix, t):
        seen.append((float(prefix.grid.times[-1]), t))
        return float(prefix.values[-1])

    grid = TimeGrid.uniform(0.0, 1.0, 8)
    path = SamplePath(grid, np.arange(9.0), kind="linear")
    coeffs = PathFunctional(g, name="lag").coefficients(path)
    # coefficient at t_j is the path value at t_j, never later
    assert np.array_equal(coeffs, np.arange(8.0))
    for latest, t in seen[1:]:
        assert latest <= t + 1e-15


def test_functional_integrand_self_integral():
    # integral of M against dM on a smooth path approximates (M^2 - M_0^2)/2
    grid = TimeGrid.uniform(0.0, 1.0, 4000)
    vals = np.sin(grid.times)
    path = SamplePath(grid, vals, kind="linear")
    phi = PathFunctional(lambda prefix, t: float(prefix.values[-1]), name="self")
    out = increment_integral(phi, path)
    target = 0.5 * math.sin(1.0) ** 2
    assert abs(out.values[-1] - target) < 1e-3


# ---------------------------------------------------------------------------
# exact identities


def lattice(seed, jump_prob=0.25):
    grid = TimeGrid.uniform(-2.0, 3.0, 160)
    return random_lattice_path(grid, seed=seed, jump_prob=jump_prob)


PHI = Deterministic(lambda t: np.sin(3.0 * t) + 0.5, name="wave")
PSI = Deterministic(lambda t: np.exp(0.3 * t), name="grow")


@pytest.mark.parametrize("seed", range(6))
def test_identity_suite_exact_on_levy(seed):
    path = levy_path(seed, n=300)
    rep = verify_integral_properties(PHI, PSI, path, stop_index=210, s=-3.0)
    assert rep.passed, rep.defects
    assert set(rep.defects) == {
        "increment", "linearity", "jump_formula", "qv_formula",
        "stopping", "associativity",
    }
    assert all(v == 0.0 for v in rep.defects.values())


@pytest.mark.parametrize("seed", range(4))
def test_identity_suite_exact_on_gaussian_cells(seed):
    rng = np.random.default_rng(seed)
    grid = TimeGrid.uniform(-1.0, 1.0, 100)
    path = SamplePath.from_cells(grid, rng.standard_normal(100), kind="linear")
    rep = verify_integral_properties(PHI, PSI, path, stop_index=70, s=-0.5)
    assert rep.passed, rep.defects


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), stop_i=st.integers(1, 159),
       s_i=st.integers(0, 159))
def test_identity_suite_exact_property(seed, stop_i, s_i):
    path = lattice(seed)
    s = float(path.grid.times[s_i])
    rep = verify_integral_properties(PHI, PSI, path, stop_index=stop_i, s=s)
    assert rep.passed, rep.defects


def test_identity_suite_with_functional_integrand():
    path = levy_path(11, n=250)
    phi = PathFunctional(lambda prefix, t: float(prefix.values[-1]), name="self")
    rep = verify_integral_properties(phi, PSI, path, stop_index=180, s=-2.0)
    assert rep.passed, rep.defects


def test_jump_formula_covers_every_recorded_jump():
    path = levy_path(7, n=300)
    assert path.jumps, "need a path with jumps for this check"
    out = increment_integral(PHI, path)
    coeffs = PHI.coefficients(path)
    for i, size in path.jumps.items():
        want = float(coeffs[i - 1] * size)
        assert out.jumps.get(i, 0.0) == want


def test_linearity_matches_combine_paths_bitwise():
    path = levy_path(12, n=300)
    lin = LinearCombination(2.0, PHI, -3.0, PSI)
    lhs = increment_integral(lin, path, s=-1.0)
    rhs = combine_paths(2.0, increment_integral(PHI, path, s=-1.0),
                        -3.0, increment_integral(PSI, path, s=-1.0))
    assert np.array_equal(lhs.values, rhs.values)
    assert lhs.jumps == rhs.jumps


def test_stopping_three_routes_bitwise():
    path = levy_path(13, n=300)
    k = 200
    r1 = stop(increment_integral(PHI, path), k)
    r2 = increment_integral(Masked(PHI, k), path)
    r3 = increment_integral(PHI, stop(path, k))
    assert np.array_equal(r1.values, r2.values)
    assert np.array_equal(r2.values, r3.values)
    assert r1.jumps == r2.jumps == r3.jumps


def test_associativity_nested_bitwise():
    path = levy_path(14, n=300)
    inner = increment_integral(PHI, path)
    lhs = increment_integral(PSI, inner)
    rhs = increment_integral(Product(PSI, PHI), path)
    assert np.array_equal(lhs.values, rhs.values)
    assert lhs.jumps == rhs.jumps


def test_qv_formula_bitwise():
    path = levy_path(15, n=300)
    out = increment_integral(PHI, path)
    qv = realized_qv(out).qv
    w = PHI.weighted_cells(path, path.cells)
    direct = np.concatenate(([0.0], np.cumsum(w * w)))
    assert np.array_equal(qv.values, direct)


def test_combine_paths_grid_mismatch():
    p = brownian_path(1, n=64)
    q = brownian_path(1, t_max=2.0, n=64)
    with pytest.raises(ValueError):
        combine_paths(1.0, p, 1.0, q)


# ---------------------------------------------------------------------------
# improper integrals and square-integrability verdicts


def far_past_grid(n=600):
    # the steep ratio keeps cells near 0 a few hundredths wide; the
    # left-endpoint rule then discretizes the variance integral of e^{2t}
    # to 0.483 instead of 0.5
    return TimeGrid.log_tail(-1e4, 0.0, n, ratio=5000.0)


def test_improper_exp_against_brownian_converges():
    grid = far_past_grid()
    hits = 0
    vals = []
    for seed in range(80):
        path = sample("brownian_r", grid, seed=seed).path
        rep = improper_integral(parse_integrand("exp(1)"), path)
        if rep.converged:
            hits += 1
            vals.append(rep.improper_value)
        assert rep.verdict == "LL1"
    assert hits >= 76
    # improper value has variance integral of e^{2t} dt = 1/2 over the past
    assert 0.22 < float(np.var(vals)) < 0.80


def test_improper_const_against_brownian_diverges():
    grid = far_past_grid()
    misses = 0
    for seed in range(60):
        path = sample("brownian_r", grid, seed=seed).path
        rep = improper_integral(parse_integrand("const(1)"), path)
        if not rep.converged:
            misses += 1
        assert rep.verdict == "ILL1_only"
    assert misses >= 57


def test_improper_zero_path_trivially_converges():
    grid = far_past_grid(200)
    path = SamplePath(grid, np.zeros(grid.n), kind="linear")
    rep = improper_integral(parse_integrand("const(1)"), path)
    assert rep.converged
    assert rep.improper_value == 0.0
    summary = rep.json_summary()
    assert summary["converged"] is True
    assert summary["improper_value"] == 0.0


def test_ll1_verdicts_three_examples():
    grid = far_past_grid()
    bpath = sample("brownian_r", grid, seed=5).path
    bqv = realized_qv(bpath)
    assert ll1_classify(parse_integrand("exp(1)"), bqv) == "LL1"
    assert ll1_classify(parse_integrand("const(1)"), bqv) == "ILL1_only"

    bump_grid = TimeGrid.uniform(-8.0, 1.0, 900)
    bump = sample("bump", bump_grid, seed=5).path
    assert ll1_classify(parse_integrand("const(1)"), realized_qv(bump)) == "LL1"


def test_ll1_nonfinite_coefficients_is_neither():
    grid = TimeGrid.uniform(-4.0, 1.0, 100)
    path = sample("brownian_r", grid, seed=0).path
    blow = Deterministic(lambda t: np.where(t < -3.0, np.inf, 1.0), name="blow")
    assert ll1_classify(blow, realized_qv(path)) == "neither"


# ---------------------------------------------------------------------------
# parsing


def test_parse_integrand_forms():
    grid = TimeGrid.uniform(0.0, 2.0, 4)
    path = SamplePath(grid, np.zeros(5), kind="linear")
    left = grid.times[:-1]

    assert np.allclose(parse_integrand("exp(2)").coefficients(path),
                       np.exp(2.0 * left))
    assert np.array_equal(parse_integrand("const(3.5)").coefficients(path),
                          np.full(4, 3.5))
    assert np.array_equal(parse_integrand("poly(2)").coefficients(path),
                          left ** 2)
    ind = parse_integrand("indicator(0.5,1.5)").coefficients(path)
    assert np.array_equal(ind, ((left > 0.5) & (left <= 1.5)).astype(float))


@pytest.mark.parametrize("bad", [
    "gauss(1)", "exp", "exp()", "exp(a)", "poly(-1)", "poly(1.5)",
    "indicator(2,1)", "indicator(1)", "", "exp(1) extra",
])
def test_parse_integrand_rejects(bad):
    with pytest.raises(ValueError):
        parse_integrand(bad)


# ---------------------------------------------------------------------------
# time change


def test_time_change_unit_density_is_identity():
    path = brownian_path(21)
    out = time_change_to_bm(path, lambda t: np.ones_like(t))
    assert np.array_equal(out.cells, path.cells)


def test_time_change_constant_density_scales():
    path = brownian_path(22)
    out = time_change_to_bm(path, lambda t: np.full_like(t, 4.0))
    assert np.array_equal(out.cells, path.cells / 2.0)


def test_time_change_requires_positive_density():
    path = brownian_path(23)
    with pytest.raises(ValueError):
        time_change_to_bm(path, lambda t: np.where(t > 0.5, 1.0, 0.0))


def test_time_change_rejects_jumpy_path():
    path = levy_path(24)
    jumpy = SamplePath(path.grid, path.values, jumps={3: 1.0}, kind="cadlag")
    with pytest.raises(ValueError):
        time_change_to_bm(jumpy, lambda t: np.ones_like(t))


def test_time_change_quantized_round_trip_exact():
    # quantize driver cells to 40 significant bits and the density weights to
    # 13 bits: the weighted products are then exact, and dividing them out
    # recovers the driver bitwise
    grid = TimeGrid.uniform(0.0, 5.0, 700)
    rng = np.random.default_rng(77)
    cells = np.array([round_sig(x, 40) for x in rng.standard_normal(700) * 0.05])
    driver = SamplePath.from_cells(grid, cells, kind="linear")

    def density(t):
        s = 1.0 + 0.5 * np.sin(np.asarray(t, dtype=np.float64))
        w = np.array([round_sig(x, 13) for x in np.atleast_1d(np.sqrt(s))])
        return w * w

    sig = np.sqrt(density(grid.times[:-1]))
    scaled = SamplePath.from_cells(grid, driver.cells * sig, kind="linear")
    back = time_change_to_bm(scaled, density)
    assert np.array_equal(back.cells, driver.cells)
    assert np.array_equal(back.values, driver.values)
