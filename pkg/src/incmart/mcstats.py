"""Deterministic ensembles and the statistical test battery.

An ensemble materializes per-component value matrices for vectorized
statistics and can regenerate any individual bundle bit-identically from its
per-path seed, so nothing needs to hold 10^4 bundle objects alive. Every
report here is a pure function of (model, grid, master seed, parameters);
with multiple threads the per-path work is distributed but all reductions
run in fixed index order, so thread count never changes a report.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import ModelSpec, sample
from .paths import SamplePath, TimeGrid, tail_oscillation
from .quadvar import tail_verdict

__all__ = [
    "Ensemble",
    "run_ensemble",
    "derive_path_seeds",
    "MartingaleTestReport",
    "martingale_test",
    "UIReport",
    "ui_diagnostic",
    "L2BoundReport",
    "l2_bound_diagnostic",
    "LimitReport",
    "limit_detector",
    "limit_fractions",
    "canonical_localizer",
    "probe_indices",
]


def derive_path_seeds(master_seed, n_paths):
    """Counter-based per-path seeds; position i depends only on (master, i)."""
    seeds = np.random.SeedSequence(int(master_seed)).generate_state(
        int(n_paths), dtype=np.uint64)
    if np.unique(seeds).size != n_paths:
        raise RuntimeError("per-path seed collision; change the master seed")
    return seeds


class Ensemble:
    """Sampled paths of one model as per-component value matrices.

    ``values(name)`` returns the (n_paths, n_times) matrix for a stored
    component; ``bundle(i)`` regenerates path i's full bundle (authoritative
    cells, jump records, marks) from its seed, bit-identical to the one the
    constructor saw. ``marks`` keeps the per-path marks dicts.
    """

    def __init__(self, model, grid, master_seed, seeds, matrices, marks,
                 custom=None):
        self.model = model
        self.grid = grid
        self.master_seed = int(master_seed)
        self.seeds = seeds
        self.seeds.setflags(write=False)
        self._matrices = matrices
        for m in matrices.values():
            m.setflags(write=False)
        self.marks = marks
        self.custom = custom or {}

    @property
    def n_paths(self):
        return int(self.seeds.size)

    @property
    def component_names(self):
        return tuple(sorted(self._matrices))

    def values(self, component="path"):
        try:
            return self._matrices[component]
        except KeyError:
            raise KeyError(f"component {component!r} not stored; have "
                           f"{self.component_names}")

    def bundle(self, i):
        if not 0 <= i < self.n_paths:
            raise IndexError(f"path index {i} out of range")
        return sample(self.model, self.grid, seed=int(self.seeds[i]))

    @property
    def bundles(self):
        return _BundleSeq(self)

    def summary_csv(self, f):
        """Per-path final values of every stored component, one row per path."""
        names = self.component_names
        f.write("index,seed," + ",".join(f"final_{n}" for n in names) + "\n")
        for i in range(self.n_paths):
            finals = ",".join(f"{self._matrices[n][i, -1]:.17g}" for n in names)
            f.write(f"{i},{int(self.seeds[i])},{finals}\n")


class _BundleSeq:
    def __init__(self, ensemble):
        self._e = ensemble

    def __len__(self):
        return self._e.n_paths

    def __getitem__(self, i):
        return self._e.bundle(i)


def run_ensemble(model, grid, n_paths, master_seed, components=None,
                 per_path=None, threads=1):
    """Sample n_paths bundles deterministically and stack their values.

    ``components`` names the bundle members whose value matrices to keep
    (default: all of them). ``per_path(i, bundle)`` may return a dict of
    floats collected across paths into ``ensemble.custom``; it must be pure
    per path, since with threads > 1 the call order is unspecified (results
    are still stored by index).
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    if isinstance(model, str):
        model = ModelSpec(model)
    seeds = derive_path_seeds(master_seed, n_paths)

    first = sample(model, grid, seed=int(seeds[0]))
    have = first.components()
    if components is None:
        components = tuple(sorted(have))
    missing = [c for c in components if c not in have]
    if missing:
        raise ValueError(f"model {model.name!r} has no components {missing}; "
                         f"available: {sorted(have)}")

    matrices = {c: np.empty((n_paths, grid.n)) for c in components}
    marks = [None] * n_paths
    collected = [None] * n_paths

    def fill(i, bundle):
        comps = bundle.components()
        for c in components:
            matrices[c][i, :] = comps[c].values
        marks[i] = dict(bundle.marks)
        if per_path is not None:
            collected[i] = per_path(i, bundle)

    fill(0, first)
    if threads > 1 and n_paths > 1:
        def work(i):
            fill(i, sample(model, grid, seed=int(seeds[i])))
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(work, range(1, n_paths)))
    else:
        for i in range(1, n_paths):
            fill(i, sample(model, grid, seed=int(seeds[i])))

    custom = {}
    if per_path is not None and collected[0] is not None:
        for key in sorted(collected[0]):
            custom[key] = np.array([collected[i][key] for i in range(n_paths)])
    return Ensemble(model, grid, master_seed, seeds, matrices, marks, custom)


# ---------------------------------------------------------------------------
# martingale test


@dataclass
class BucketStat:
    lo: float
    hi: float
    count: int
    mean: float
    se: float
    z: float
    included: bool


@dataclass
class MartingaleTestReport:
    """Bucketed zero-mean test for increments over (s, t].

    Paths are grouped by empirical quantiles of an adapted feature; within
    each bucket the increment mean is compared to zero at z = mean/SE.
    Buckets holding fewer than 30 paths are excluded from the verdict but
    still listed. The p-value is Bonferroni over included buckets.
    """

    s: float
    t: float
    feature_name: str
    component: str
    n_paths: int
    buckets: list
    max_abs_z: float
    p_value: float
    passed: bool

    def json_summary(self):
        return {
            "component": self.component,
            "feature": self.feature_name,
            "s": self.s,
            "t": self.t,
            "n_paths": self.n_paths,
            "n_buckets": len(self.buckets),
            "excluded_buckets": sum(1 for b in self.buckets if not b.included),
            "max_abs_z": self.max_abs_z,
            "p_value": self.p_value,
            "passed": self.passed,
            "buckets": [
                {"lo": b.lo, "hi": b.hi, "count": b.count, "mean": b.mean,
                 "se": b.se, "z": b.z, "included": b.included}
                for b in self.buckets
            ],
        }

    def text_report(self):
        lines = [
            f"martingale test: {self.component} increments over "
            f"({self.s:g}, {self.t:g}], feature = {self.feature_name}",
            f"paths = {self.n_paths}   max |z| = {self.max_abs_z:.3f}   "
            f"p = {self.p_value:.3g}   {'PASS' if self.passed else 'FAIL'}",
            f"{'bucket':>22} {'count':>7} {'mean':>12} {'se':>12} {'z':>8}",
        ]
        for b in self.buckets:
            tag = "" if b.included else "  (excluded: count < 30)"
            lines.append(f"[{b.lo:>9.4g}, {b.hi:>9.4g}] {b.count:>7} "
                         f"{b.mean:>12.4e} {b.se:>12.4e} {b.z:>8.2f}{tag}")
        return "\n".join(lines)


def _value_at_end(prefix):
    return float(prefix.values[-1])


def martingale_test(ensemble, s, t, feature=None, n_buckets=5,
                    component="path", localizer=None):
    """Test E[increment over (s, t] | feature of the path up to s] = 0.

    ``feature`` receives a SamplePath truncated at s (values only; per-path
    jump records are not materialized here), so reading past s raises inside
    the feature rather than silently leaking the future. ``localizer``
    = (anchor, level) first stops every path at its boundary-crossing time,
    turning local statements into testable bounded ones. Pass iff max |z|
    over included buckets is at most 4.
    """
    grid = ensemble.grid
    ks = grid.index_of(s)
    kt = grid.index_of(t)
    if ks >= kt:
        raise ValueError("need s < t on the grid")
    vals = ensemble.values(component)
    if localizer is not None:
        anchor, level = localizer
        vals = np.array(vals)
        crossed = np.abs(vals - float(anchor)) > float(level)
        for i in np.flatnonzero(crossed.any(axis=1)):
            j = int(np.argmax(crossed[i]))
            vals[i, j + 1:] = vals[i, j]

    if feature is None:
        feature = _value_at_end
        fname = "value at s"
    else:
        fname = getattr(feature, "__name__", "feature")

    prefix_grid = TimeGrid(grid.times[: ks + 1]) if ks >= 1 else None
    feats = np.empty(ensemble.n_paths)
    for i in range(ensemble.n_paths):
        if prefix_grid is None:
            prefix = SamplePath(TimeGrid(grid.times[:2]),
                                np.repeat(vals[i, 0], 2), kind="linear")
        else:
            prefix = SamplePath(prefix_grid, vals[i, : ks + 1], kind="cadlag")
        feats[i] = float(feature(prefix))

    incr = vals[:, kt] - vals[:, ks]
    edges = np.quantile(feats, np.linspace(0.0, 1.0, n_buckets + 1))
    which = np.searchsorted(edges[1:-1], feats, side="right")

    buckets = []
    zs = []
    for b in range(n_buckets):
        sel = incr[which == b]
        count = int(sel.size)
        if count == 0:
            buckets.append(BucketStat(float(edges[b]), float(edges[b + 1]),
                                      0, 0.0, 0.0, 0.0, False))
            continue
        mean = float(sel.mean())
        sd = float(sel.std(ddof=1)) if count > 1 else 0.0
        se = sd / math.sqrt(count)
        if se > 0.0:
            z = mean / se
        else:
            z = 0.0 if mean == 0.0 else math.inf
        included = count >= 30
        buckets.append(BucketStat(float(edges[b]), float(edges[b + 1]),
                                  count, mean, se, float(z), included))
        if included:
            zs.append(abs(z))

    if zs:
        max_abs_z = float(max(zs))
        p_each = math.erfc(max_abs_z / math.sqrt(2.0))
        p_value = min(1.0, len(zs) * p_each)
        passed = max_abs_z <= 4.0
    else:
        max_abs_z = float("nan")
        p_value = float("nan")
        passed = False

    assert sum(b.count for b in buckets) == ensemble.n_paths
    return MartingaleTestReport(
        s=float(grid.times[ks]), t=float(grid.times[kt]), feature_name=fname,
        component=component, n_paths=ensemble.n_paths, buckets=buckets,
        max_abs_z=max_abs_z, p_value=p_value, passed=passed)


# ---------------------------------------------------------------------------
# tail diagnostics


def probe_indices(grid, t_index, n_probes=16, decades=4.0):
    """Grid indices whose gaps to t are log-spaced over ``decades`` decades.

    Ascending (earliest first); earliest grid point always included; strictly
    before t_index.
    """
    times = grid.times
    span = float(times[t_index] - times[0])
    gaps = np.geomspace(span, span * 10.0 ** (-decades), int(n_probes))
    idx = np.searchsorted(times, times[t_index] - gaps, side="left")
    idx = np.clip(idx, 0, t_index - 1)
    return sorted(set(int(i) for i in idx))


@dataclass
class UIReport:
    """Uniform-integrability proxy: tail expectations of increments to t.

    ``tail_matrix[i][j]`` is E[|incr| ; |incr| > cutoff_j] with incr taken
    from probe time i up to t; ``decays`` says whether the sup over probe
    times falls with the cutoff (ratio <= 0.1 or below the absolute floor).
    """

    t: float
    probe_times: list
    cutoffs: list
    tail_matrix: list
    sup_per_cutoff: list
    decays: bool
    ratio: float

    def json_summary(self):
        return {
            "t": self.t,
            "probe_times": self.probe_times,
            "cutoffs": self.cutoffs,
            "sup_per_cutoff": self.sup_per_cutoff,
            "decays": self.decays,
            "ratio": self.ratio,
        }

    def text_report(self):
        lines = [f"uniform-integrability proxy at t = {self.t:g} "
                 f"({'decays' if self.decays else 'no decay'}, "
                 f"ratio = {self.ratio:.3g})",
                 "cutoff   sup_s E[|incr|; |incr|>c]"]
        for c, v in zip(self.cutoffs, self.sup_per_cutoff):
            lines.append(f"{c:>8.3g}   {v:.6g}")
        return "\n".join(lines)


def ui_diagnostic(ensemble, t, cutoffs, component="path", n_probes=16,
                  decades=4.0):
    """Tail expectations E[|incr|; |incr| > c] over log-spaced start times."""
    cutoffs = [float(c) for c in cutoffs]
    if not cutoffs or any(c <= 0 for c in cutoffs) or sorted(cutoffs) != cutoffs:
        raise ValueError("cutoffs must be positive and ascending")
    grid = ensemble.grid
    kt = grid.index_of(t)
    probes = probe_indices(grid, kt, n_probes, decades)
    vals = ensemble.values(component)
    tail = np.empty((len(probes), len(cutoffs)))
    for i, j in enumerate(probes):
        incr = np.abs(vals[:, kt] - vals[:, j])
        for jc, c in enumerate(cutoffs):
            tail[i, jc] = float(np.mean(np.where(incr > c, incr, 0.0)))
    sup = tail.max(axis=0)
    base = float(sup[0])
    last = float(sup[-1])
    ratio = last / base if base > 0 else 0.0
    decays = last <= max(1e-3, 0.1 * base)
    return UIReport(t=float(grid.times[kt]),
                    probe_times=[float(grid.times[j]) for j in probes],
                    cutoffs=cutoffs, tail_matrix=tail.tolist(),
                    sup_per_cutoff=[float(v) for v in sup],
                    decays=bool(decays), ratio=float(ratio))


@dataclass
class L2BoundReport:
    """Second moments of increments to t from log-spaced start times.

    ``bounded`` holds when the earliest probes have already stabilized per
    the scale-free tail criterion, the empirical stand-in for
    sup over s of E[(increment from s to t)^2] being finite.
    """

    t: float
    probe_times: list
    second_moments: list
    verdict: str
    bounded: bool

    def json_summary(self):
        return {
            "t": self.t,
            "probe_times": self.probe_times,
            "second_moments": self.second_moments,
            "verdict": self.verdict,
            "bounded": self.bounded,
        }

    def text_report(self):
        lines = [f"L2-boundedness probe at t = {self.t:g}: {self.verdict}"]
        for s, m in zip(self.probe_times, self.second_moments):
            lines.append(f"  s = {s:>12.5g}   E[incr^2] = {m:.6g}")
        return "\n".join(lines)


def l2_bound_diagnostic(ensemble, t, component="path", n_probes=16,
                        window_frac=0.2, decades=4.0):
    """Empirical E[(increment from s to t)^2] over probe times s."""
    grid = ensemble.grid
    kt = grid.index_of(t)
    probes = probe_indices(grid, kt, n_probes, decades)
    vals = ensemble.values(component)
    m2 = np.array([float(np.mean((vals[:, kt] - vals[:, j]) ** 2))
                   for j in probes])
    verdict = tail_verdict(m2, window_frac=window_frac)
    return L2BoundReport(t=float(grid.times[kt]),
                         probe_times=[float(grid.times[j]) for j in probes],
                         second_moments=[float(v) for v in m2],
                         verdict=verdict, bounded=verdict == "converges")


# ---------------------------------------------------------------------------
# convergence modes toward the far past


@dataclass
class LimitReport:
    """Almost-sure-style vs in-probability smallness toward the far past.

    ``as_fraction``: share of paths whose oscillation over the earliest
    window is within tol (trajectory-wise stabilization). ``in_prob_fraction``:
    cross-sectional share of paths with |value| within tol at the probe time
    (early, but a fixed fraction away from the anchored start so the anchor
    itself does not score). The two agree when both convergence modes hold
    and separate when only the in-probability one does.
    """

    tol: float
    window: int
    window_times: tuple
    as_fraction: float
    probe_time: float
    in_prob_fraction: float
    per_time_fractions: list

    @property
    def separation(self):
        return self.in_prob_fraction - self.as_fraction

    def json_summary(self):
        return {
            "tol": self.tol,
            "window": self.window,
            "window_times": list(self.window_times),
            "as_fraction": self.as_fraction,
            "probe_time": self.probe_time,
            "in_prob_fraction": self.in_prob_fraction,
            "separation": self.separation,
        }

    def text_report(self):
        return "\n".join([
            f"limit modes toward the far past (tol = {self.tol:g})",
            f"  per-path window [{self.window_times[0]:g}, "
            f"{self.window_times[1]:g}] ({self.window} points): "
            f"stabilized fraction = {self.as_fraction:.3f}",
            f"  cross-sectional at t = {self.probe_time:g}: "
            f"small fraction = {self.in_prob_fraction:.3f}",
            f"  separation = {self.separation:.3f}",
        ])


def limit_fractions(matrix, times, tol=1e-3, window_frac=0.1, probe_frac=0.1):
    """Core of limit_detector on a raw (n_paths, n_times) value matrix."""
    matrix = np.asarray(matrix, dtype=np.float64)
    n_times = matrix.shape[1]
    osc = tail_oscillation(matrix, window_frac)
    w = max(2, int(np.ceil(window_frac * n_times)))
    as_fraction = float(np.mean(osc <= tol))
    per_time = np.mean(np.abs(matrix) <= tol, axis=0)
    probe = min(n_times - 1, max(1, int(np.ceil(probe_frac * n_times))))
    return LimitReport(
        tol=float(tol), window=w,
        window_times=(float(times[0]), float(times[w - 1])),
        as_fraction=as_fraction, probe_time=float(times[probe]),
        in_prob_fraction=float(per_time[probe]),
        per_time_fractions=[float(v) for v in per_time])


def limit_detector(ensemble, tol=1e-3, window_frac=0.1, probe_frac=0.1,
                   component="path"):
    """Report a.s.-style and in-probability smallness toward the far past."""
    return limit_fractions(ensemble.values(component), ensemble.grid.times,
                           tol=tol, window_frac=window_frac,
                           probe_frac=probe_frac)


# ---------------------------------------------------------------------------
# localization


def canonical_localizer(path, anchor, level):
    """First grid index where the path leaves the level band around anchor.

    Returns the index of the first time with |X_t - anchor| > level, or
    len(values) (one past the last index) when the path never leaves the
    band. Nondecreasing in level; the path stopped at the returned index is
    bounded by level plus the overshoot at the crossing.
    """
    if level <= 0:
        raise ValueError("level must be positive")
    values = path.values if isinstance(path, SamplePath) else np.asarray(path)
    mask = np.abs(values - float(anchor)) > float(level)
    if not mask.any():
        return int(values.size)
    return int(np.argmax(mask))
