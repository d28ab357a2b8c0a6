"""Increment stochastic integrals with exact identity structure.

Integrals use the left-point rule: the cell (t_i, t_{i+1}] contributes
coefficient-at-t_i times the cell increment, the discrete stand-in for
predictability. Composite integrands evaluate structurally rather than by
collapsing to one coefficient array: a linear combination distributes over
the per-cell products and a product nests them. That makes the linearity,
stopping, associativity, jump and QV identities literal float-for-float
re-runs of the same operations, so their defects are exactly zero on any
data, which is what the property checker asserts.

Path-functional integrands receive only the strictly-prior portion of the
path (values up to and including the cell's left endpoint), enforced by
handing the evaluator a truncated path object.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .paths import SamplePath, TimeGrid, anchor_at_minus_infinity, increment, stop
from .quadvar import realized_qv, tail_verdict

__all__ = [
    "Integrand",
    "Deterministic",
    "PathFunctional",
    "Tabulated",
    "LinearCombination",
    "Product",
    "Masked",
    "parse_integrand",
    "increment_integral",
    "combine_paths",
    "improper_integral",
    "IntegralReport",
    "ll1_classify",
    "verify_integral_properties",
    "IntegralPropertyReport",
    "time_change_to_bm",
]


class Integrand:
    """Base integrand; subclasses fill in coefficient evaluation.

    ``coefficients(path)`` returns the per-cell left-endpoint coefficients.
    ``weighted_cells(path, cells)`` returns the per-cell contributions to the
    integral against ``cells`` (defaults to plain elementwise product);
    ``weighted_jump(path, i, size)`` transforms the recorded jump at grid
    index i the same way. Composite integrands override the weighted forms to
    keep the float operation order identical to the corresponding path
    algebra.
    """

    name = "integrand"

    def coefficients(self, path):
        raise NotImplementedError

    def weighted_cells(self, path, cells):
        return self.coefficients(path) * cells

    def weighted_jump(self, path, i, size):
        # the jump at grid index i lives in the cell starting at t_{i-1}
        return float(self.coefficients(path)[i - 1] * size)

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class Deterministic(Integrand):
    """Integrand given by a plain function of time, evaluated vectorized."""

    def __init__(self, f, name=None):
        self.f = f
        self.name = name or getattr(f, "__name__", "f")

    def coefficients(self, path):
        left = path.grid.times[:-1]
        out = np.asarray(self.f(left), dtype=np.float64)
        if out.shape != left.shape:
            out = np.full(left.shape, float(self.f(float(left[0]))))
        return out


class PathFunctional(Integrand):
    """Integrand g(prior path, t) reading only values up to the left endpoint.

    The evaluator receives a SamplePath truncated at the cell's left endpoint,
    so reading past it is impossible rather than merely discouraged.
    """

    def __init__(self, g, name="functional"):
        self.g = g
        self.name = name

    def coefficients(self, path):
        grid = path.grid
        out = np.empty(grid.n - 1)
        for j in range(grid.n - 1):
            if j == 0:
                # a grid needs two points; repeat the start value so nothing
                # later than t_0 is visible
                prefix = SamplePath(TimeGrid(grid.times[:2]),
                                    np.repeat(path.values[0], 2), kind="linear")
            else:
                jumps = {i: v for i, v in path.jumps.items() if i <= j}
                prefix = SamplePath(TimeGrid(grid.times[: j + 1]),
                                    path.values[: j + 1],
                                    jumps=jumps, kind=path.kind)
            out[j] = float(self.g(prefix, float(grid.times[j])))
        return out


class Tabulated(Integrand):
    """Coefficients frozen as an explicit array tied to one grid."""

    def __init__(self, coeffs, name="tabulated"):
        self.array = np.asarray(coeffs, dtype=np.float64)
        self.name = name

    def coefficients(self, path):
        if self.array.shape != (path.grid.n - 1,):
            raise ValueError("tabulated coefficients do not match this grid")
        return self.array


class LinearCombination(Integrand):
    """a*phi + b*psi, distributing over the per-cell products.

    weighted cells are a*(phi cells) + b*(psi cells), the same operations the
    path combination a*(phi integral) + b*(psi integral) performs, so the
    linearity identity is exact.
    """

    def __init__(self, a, phi, b, psi):
        self.a = float(a)
        self.phi = phi
        self.b = float(b)
        self.psi = psi
        self.name = f"{self.a}*{phi.name} + {self.b}*{psi.name}"

    def coefficients(self, path):
        return self.a * self.phi.coefficients(path) + self.b * self.psi.coefficients(path)

    def weighted_cells(self, path, cells):
        return (self.a * self.phi.weighted_cells(path, cells)
                + self.b * self.psi.weighted_cells(path, cells))

    def weighted_jump(self, path, i, size):
        return (self.a * self.phi.weighted_jump(path, i, size)
                + self.b * self.psi.weighted_jump(path, i, size))


class Product(Integrand):
    """outer*inner with the inner product applied first.

    weighted cells are outer coefficients times the inner weighted cells,
    matching the nested integral outer against (inner against M) float for
    float, so the associativity identity is exact.
    """

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner
        self.name = f"{outer.name} * {inner.name}"

    def coefficients(self, path):
        return self.outer.coefficients(path) * self.inner.coefficients(path)

    def weighted_cells(self, path, cells):
        return self.outer.coefficients(path) * self.inner.weighted_cells(path, cells)

    def weighted_jump(self, path, i, size):
        return float(self.outer.coefficients(path)[i - 1]
                     * self.inner.weighted_jump(path, i, size))


class Masked(Integrand):
    """phi restricted to cells before ``until_index`` (a stop mask).

    The mask zeroes finished products, exactly like stopping the integral
    path or the integrator, so the three stopping routes agree bitwise.
    """

    def __init__(self, phi, until_index):
        self.phi = phi
        self.until = int(until_index)
        self.name = f"{phi.name} [until index {self.until}]"

    def coefficients(self, path):
        out = self.phi.coefficients(path).copy()
        out[self.until:] = 0.0
        return out

    def weighted_cells(self, path, cells):
        out = np.array(self.phi.weighted_cells(path, cells))
        out[self.until:] = 0.0
        return out

    def weighted_jump(self, path, i, size):
        if i > self.until:
            return 0.0
        return self.phi.weighted_jump(path, i, size)


_INTEGRAND_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^)]*)\)\s*$")


def parse_integrand(text):
    """Integrand from a config string.

    Accepted: exp(rate), const(c), poly(k), indicator(a,b). indicator is 1 on
    the half-open window (a, b], the left-continuous convention.
    """
    m = _INTEGRAND_RE.match(text)
    if not m:
        raise ValueError(f"bad integrand {text!r}; expected name(args) with "
                         "name in exp, const, poly, indicator")
    name, argstr = m.group(1), m.group(2)
    args = [a.strip() for a in argstr.split(",")] if argstr.strip() else []
    try:
        vals = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"bad integrand arguments in {text!r}")
    if name == "exp" and len(vals) == 1:
        rate = vals[0]
        return Deterministic(lambda t: np.exp(rate * np.asarray(t, dtype=np.float64)),
                             name=f"exp({rate:g})")
    if name == "const" and len(vals) == 1:
        c = vals[0]
        return Deterministic(lambda t: np.full(np.shape(t), c), name=f"const({c:g})")
    if name == "poly" and len(vals) == 1 and vals[0] == int(vals[0]) and vals[0] >= 0:
        k = int(vals[0])
        return Deterministic(lambda t: np.asarray(t, dtype=np.float64) ** k,
                             name=f"poly({k})")
    if name == "indicator" and len(vals) == 2 and vals[0] < vals[1]:
        a, b = vals
        return Deterministic(
            lambda t: ((np.asarray(t) > a) & (np.asarray(t) <= b)).astype(np.float64),
            name=f"indicator({a:g},{b:g})")
    raise ValueError(f"bad integrand {text!r}; valid: exp(rate), const(c), "
                     "poly(k>=0 integer), indicator(a,b) with a < b")


# ---------------------------------------------------------------------------
# integral operators


def increment_integral(phi, path, s=None):
    """Integral of phi against the path's cells over (s, .], left-point rule.

    The output vanishes at grid times <= s; its jump record at index i is the
    coefficient at t_{i-1} times the integrator's recorded jump.
    """
    grid = path.grid
    k = 0 if s is None else grid.index_of(s)
    w = np.array(phi.weighted_cells(path, path.cells), dtype=np.float64)
    if k > 0:
        w[:k] = 0.0
    jumps = {}
    for i, size in path.jumps.items():
        if i > k:
            jv = phi.weighted_jump(path, i, size)
            if jv != 0.0:
                jumps[i] = jv
    kind = "cadlag" if jumps else ("linear" if path.kind == "linear" else "cadlag")
    return SamplePath.from_cells(grid, w, v0=0.0, jumps=jumps, kind=kind)


def combine_paths(a, p, b, q):
    """a*p + b*q cellwise, the float order LinearCombination integrands use."""
    if not p.grid.same_as(q.grid):
        raise ValueError("paths live on different grids")
    a = float(a)
    b = float(b)
    cells = a * p.cells + b * q.cells
    v0 = a * float(p.values[0]) + b * float(q.values[0])
    jumps = {}
    for i in sorted(set(p.jumps) | set(q.jumps)):
        jv = a * p.jumps.get(i, 0.0) + b * q.jumps.get(i, 0.0)
        if jv != 0.0:
            jumps[i] = jv
    kind = "linear" if (p.kind == "linear" and q.kind == "linear" and not jumps) else "cadlag"
    return SamplePath.from_cells(p.grid, cells, v0=v0, jumps=jumps, kind=kind)


@dataclass
class IntegralReport:
    """An improper integral anchored at -infinity.

    ``integral`` is normalized to vanish at -infinity when the anchor
    converged (tail-window mean subtracted); ``improper_value`` is its value
    at the latest grid time, present only when converged. ``verdict`` is the
    square-integrability classification of the integrand against the
    integrator's realized QV, computed independently of the anchor flag; the
    two agree with high probability on the models here but are distinct
    statistics.
    """

    integral: SamplePath
    converged: bool
    improper_value: float | None
    verdict: str
    oscillation: float
    window: int

    def json_summary(self):
        return {
            "converged": self.converged,
            "improper_value": self.improper_value,
            "oscillation": self.oscillation,
            "tail_window": self.window,
            "verdict": self.verdict,
        }


def improper_integral(phi, path, tail_window=None, tol=1e-3, window_frac=0.1):
    """Integral of phi against the path from the far past.

    Integrates from the earliest grid time, then detects a limit toward
    -infinity over the tail window; when it converges the output is
    re-anchored so the limit is 0 and the improper value is read off at the
    latest time.
    """
    raw = increment_integral(phi, path, s=None)
    anchor = anchor_at_minus_infinity(raw, tail_window=tail_window, tol=tol,
                                      window_frac=window_frac)
    verdict = ll1_classify(phi, realized_qv(path), window_frac=window_frac)
    out = anchor.path if anchor.converged else raw
    value = float(out.values[-1]) if anchor.converged else None
    return IntegralReport(integral=out, converged=anchor.converged,
                          improper_value=value, verdict=verdict,
                          oscillation=anchor.oscillation, window=anchor.window)


def ll1_classify(phi, qv_report, window_frac=0.1, rel_tol=1e-2):
    """Square-integrability verdict of phi against a realized-QV report.

    Accumulates the squared coefficients against the qv cells; 'LL1' when the
    cumulative stabilizes toward the earliest time, 'ILL1_only' when every
    window is finite but the tail keeps growing, 'neither' when the
    coefficients are unbounded (non-finite) on some cell. Functional
    integrands are evaluated along the qv path.
    """
    qv = qv_report.qv
    coeffs = np.asarray(phi.coefficients(qv), dtype=np.float64)
    if not np.all(np.isfinite(coeffs)):
        return "neither"
    g = coeffs * coeffs * qv.cells
    if not np.all(np.isfinite(g)):
        return "neither"
    cum = np.concatenate(([0.0], np.cumsum(g)))
    verdict = tail_verdict(cum, window_frac=window_frac, rel_tol=rel_tol)
    return "LL1" if verdict == "converges" else "ILL1_only"


# ---------------------------------------------------------------------------
# property suite


@dataclass
class IntegralPropertyReport:
    """Max pointwise defect per integral identity; passes iff all are 0."""

    defects: dict

    @property
    def passed(self):
        return all(v == 0.0 for v in self.defects.values())

    def json_summary(self):
        out = dict(sorted(self.defects.items()))
        out["passed"] = self.passed
        return out


def _sup_diff(p, q):
    d = float(np.max(np.abs(p.values - q.values)))
    keys = set(p.jumps) | set(q.jumps)
    jd = max((abs(p.jumps.get(i, 0.0) - q.jumps.get(i, 0.0)) for i in keys), default=0.0)
    return max(d, float(jd))


def verify_integral_properties(phi, psi, path, stop_index, s, a=2.0, b=-3.0):
    """Evaluate both sides of the integral identities on one path.

    Checks, each as a max pointwise defect over values and jump records:
    increment structure (integrating an increment vs incrementing the
    integral), linearity, the jump formula at every recorded jump, the QV
    formula (realized QV of the integral vs squared coefficients against the
    integrator's QV cells, both the same finite sum), stopping (three routes:
    stop the integral, mask the integrand, stop the integrator), and
    associativity of nested integrals. Functional integrands are frozen
    against this path first, so every identity compares integral algebra, not
    integrand re-evaluation on modified paths.
    """
    phi = Tabulated(phi.coefficients(path), name=phi.name)
    psi = Tabulated(psi.coefficients(path), name=psi.name)
    defects = {}

    full = increment_integral(phi, path)
    # increment structure: s-increment of the integral vs integral of the
    # s-increment
    lhs = increment(full, s)
    rhs = increment_integral(phi, increment(path, s))
    defects["increment"] = _sup_diff(lhs, rhs)

    # linearity with the combination distributed at the cell level
    lin = LinearCombination(a, phi, b, psi)
    lhs = increment_integral(lin, path, s)
    rhs = combine_paths(a, increment_integral(phi, path, s),
                        b, increment_integral(psi, path, s))
    defects["linearity"] = _sup_diff(lhs, rhs)

    # jump formula at every recorded jump after s
    out = increment_integral(phi, path, s)
    k = path.grid.index_of(s)
    coeffs = phi.coefficients(path)
    jd = 0.0
    for i, size in path.jumps.items():
        if i > k:
            jd = max(jd, abs(out.jumps.get(i, 0.0) - float(coeffs[i - 1] * size)))
    defects["jump_formula"] = jd

    # QV formula: realized QV of the integral vs the squared weighted cells
    # accumulated directly; both sides are the identical finite sum
    qv_lhs = realized_qv(out, s=float(path.grid.times[k])).qv
    w = np.array(phi.weighted_cells(path, path.cells))
    w[:k] = 0.0
    qv_rhs = SamplePath.from_cells(path.grid, w * w, kind="linear"
                                   if not out.jumps else "cadlag",
                                   jumps={i: v * v for i, v in out.jumps.items()})
    defects["qv_formula"] = float(np.max(np.abs(qv_lhs.values - qv_rhs.values)))

    # stopping: three routes
    r1 = stop(increment_integral(phi, path, s), stop_index)
    r2 = increment_integral(Masked(phi, stop_index), path, s)
    r3 = increment_integral(phi, stop(path, stop_index), s)
    defects["stopping"] = max(_sup_diff(r1, r2), _sup_diff(r2, r3), _sup_diff(r1, r3))

    # associativity: psi against (phi against M) vs the nested product
    inner = increment_integral(phi, path, s)
    lhs = increment_integral(psi, inner, s)
    rhs = increment_integral(Product(psi, phi), path, s)
    defects["associativity"] = _sup_diff(lhs, rhs)

    return IntegralPropertyReport(defects=defects)


# ---------------------------------------------------------------------------
# time change


def time_change_to_bm(path, sigma_sq_density):
    """Divide out a variance density to recover standard-Brownian increments.

    ``sigma_sq_density`` maps a time to the positive local variance rate;
    output cells are the input cells divided by the square root of the
    density at the cell's left endpoint. Division (not multiplication by a
    reciprocal) makes the round trip through a density-weighted integral
    exact whenever the products were exact.
    """
    if path.kind != "linear":
        raise ValueError("time change requires a continuous (linear) path")
    left = path.grid.times[:-1]
    sig2 = np.asarray(sigma_sq_density(left), dtype=np.float64)
    if sig2.shape != left.shape:
        sig2 = np.full(left.shape, float(sigma_sq_density(float(left[0]))))
    if not np.all(sig2 > 0.0) or not np.all(np.isfinite(sig2)):
        raise ValueError("variance density must be positive and finite on the grid")
    cells = path.cells / np.sqrt(sig2)
    return SamplePath.from_cells(path.grid, cells, v0=0.0, kind="linear")
