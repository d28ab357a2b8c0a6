"""Grids, sample paths and increment families on the whole real line.

Processes indexed by all of R have no natural starting point, so the basic
object here is not a path value but a windowed increment: for a path X and
times s <= t the increment over (s, t] is

    X_t - X_{t and s}   (zero for t <= s, X_t - X_s for t >= s).

A consistent family of such increments determines a path up to one additive
random constant; ``associate`` performs that reconstruction and
``anchor_at_minus_infinity`` normalizes a path that settles down far in the
past.

Numerical contract: every SamplePath stores its cell-increment array
(``cells[j]`` covers ``(times[j], times[j+1]]``) alongside its values, and the
derived operations (``increment``, ``stop``, integrals downstream) work on
masked copies of that same array, rebuilding values as sequential prefix sums.
Masking with zeros never perturbs a float accumulation, so identities that
reduce both sides to the same masked cell array hold bitwise, not just to
rounding. Identities that genuinely re-order float additions (increment
additivity across a split point) are exact on dyadic-lattice paths such as
those from ``random_lattice_path`` and hold to rounding error otherwise.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid",
    "SamplePath",
    "IncrementFamily",
    "ConsistencyReport",
    "AnchorResult",
    "increment",
    "increment_over",
    "stop",
    "associate",
    "check_consistency",
    "anchor_at_minus_infinity",
    "tail_oscillation",
    "tail_stabilizes",
    "random_lattice_path",
    "round_sig",
]


class TimeGrid:
    """Strictly increasing finite grid of float64 times, length >= 2.

    The grid is the shared coordinate system for paths, increment families
    and reports; two objects interoperate only if their grids hold bitwise
    identical time arrays.
    """

    def __init__(self, times):
        t = np.asarray(times, dtype=np.float64)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("grid needs a 1-d array of at least two times")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid times must be finite")
        if not np.all(np.diff(t) > 0):
            raise ValueError("grid times must be strictly increasing")
        self.times = t
        self.times.setflags(write=False)

    @classmethod
    def uniform(cls, t_min, t_max, n_cells):
        """Uniform grid with ``n_cells`` cells (so n_cells + 1 points)."""
        if n_cells < 1:
            raise ValueError("need at least one cell")
        return cls(np.linspace(float(t_min), float(t_max), int(n_cells) + 1))

    @classmethod
    def log_tail(cls, t_min, t_max, n_cells, ratio=50.0):
        """Grid refined near t_max with geometrically growing cells toward t_min.

        Useful when t_min is far in the past (say -1e6) and uniform spacing
        would waste points on the deep tail. ``ratio`` is the approximate
        width ratio between the widest and narrowest cell.
        """
        if n_cells < 2:
            raise ValueError("need at least two cells")
        span = float(t_max) - float(t_min)
        if span <= 0:
            raise ValueError("t_max must exceed t_min")
        r = float(ratio) ** (1.0 / (n_cells - 1))
        w = r ** np.arange(n_cells)
        offsets = np.concatenate(([0.0], np.cumsum(w)))
        times = float(t_max) - span * offsets[::-1] / offsets[-1]
        times[0] = float(t_min)
        times[-1] = float(t_max)
        return cls(times)

    @property
    def n(self):
        return self.times.size

    @property
    def t_min(self):
        return float(self.times[0])

    @property
    def t_max(self):
        return float(self.times[-1])

    def cell_widths(self):
        return np.diff(self.times)

    def index_of(self, t, snap=True):
        """Grid index of time ``t``, snapped to the nearest grid point.

        Raises if t lies outside [t_min, t_max] or, with snap, if the nearest
        grid point is further away than half the adjacent cell width.
        """
        t = float(t)
        if t < self.t_min or t > self.t_max:
            raise ValueError(f"time {t} outside grid span [{self.t_min}, {self.t_max}]")
        i = int(np.searchsorted(self.times, t))
        if i < self.n and self.times[i] == t:
            return i
        # candidates are i-1 and i; pick the closer one
        lo, hi = i - 1, min(i, self.n - 1)
        j = lo if t - self.times[lo] <= self.times[hi] - t else hi
        if not snap:
            raise ValueError(f"time {t} is not a grid point")
        gap = abs(t - self.times[j])
        width = self.times[hi] - self.times[lo] if hi > lo else np.inf
        if gap > 0.5 * width:
            raise ValueError(f"time {t} too far from any grid point to snap")
        return j

    def same_as(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"TimeGrid({self.t_min}..{self.t_max}, n={self.n})"


def _check_jumps(jumps, n):
    """Normalize jumps to a sorted dict index -> size; at most one per index."""
    if jumps is None:
        return {}
    if isinstance(jumps, dict):
        items = sorted(jumps.items())
    else:
        items = sorted((int(i), float(v)) for i, v in jumps)
    out = {}
    for i, v in items:
        i = int(i)
        v = float(v)
        if not 1 <= i <= n - 1:
            raise ValueError(f"jump index {i} outside 1..{n - 1}")
        if i in out:
            raise ValueError(f"duplicate jump at index {i}")
        if not np.isfinite(v):
            raise ValueError("jump sizes must be finite")
        if v != 0.0:
            out[i] = v
    return out


class SamplePath:
    """Path sampled on a grid, with explicit jump records.

    Parameters
    ----------
    grid : TimeGrid
    values : array of shape (grid.n,)
        Value at each grid time. Under the cadlag kind this is the
        right-continuous value (a jump at t_i is included in values[i]).
    jumps : dict or iterable of (index, size), optional
        At most one jump per grid index; the left limit at times[i] is
        values[i] - size. Zero-size records are dropped.
    kind : {"cadlag", "linear"}
        Interpolation stand-in between grid points. "linear" asserts a
        continuous path and therefore forbids jump records.
    cells : array of shape (grid.n - 1,), optional
        Authoritative cell increments; cells[j] covers (times[j], times[j+1]].
        Defaults to diff(values). Constructors that build a path from cells
        keep the exact array so increment algebra stays bit-reproducible.
    """

    def __init__(self, grid, values, jumps=None, kind="cadlag", cells=None):
        if not isinstance(grid, TimeGrid):
            grid = TimeGrid(grid)
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (grid.n,):
            raise ValueError(f"values shape {v.shape} does not match grid length {grid.n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        if kind not in ("cadlag", "linear"):
            raise ValueError(f"unknown interpolation kind {kind!r}")
        self.grid = grid
        self.values = v
        self.values.setflags(write=False)
        self.jumps = _check_jumps(jumps, grid.n)
        if kind == "linear" and self.jumps:
            raise ValueError("linear kind asserts continuity; no jump records allowed")
        self.kind = kind
        if cells is None:
            cells = np.diff(v)
        else:
            cells = np.asarray(cells, dtype=np.float64)
            if cells.shape != (grid.n - 1,):
                raise ValueError("cells length must be grid length - 1")
        self.cells = cells
        self.cells.setflags(write=False)

    @classmethod
    def from_cells(cls, grid, cells, v0=0.0, jumps=None, kind="cadlag"):
        """Build a path as sequential prefix sums of ``cells`` starting at v0.

        values[i] = v0 + cells[0] + ... + cells[i-1], accumulated left to
        right, and the given cell array is stored verbatim.
        """
        if not isinstance(grid, TimeGrid):
            grid = TimeGrid(grid)
        c = np.asarray(cells, dtype=np.float64)
        values = np.cumsum(np.concatenate(([float(v0)], c)))
        return cls(grid, values, jumps=jumps, kind=kind, cells=c)

    @property
    def n(self):
        return self.grid.n

    def value_at(self, t):
        return float(self.values[self.grid.index_of(t)])

    def jump_arrays(self):
        """Jumps as (indices, sizes) int/float arrays, sorted by index."""
        if not self.jumps:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
        idx = np.fromiter(self.jumps.keys(), dtype=np.int64)
        siz = np.fromiter(self.jumps.values(), dtype=np.float64)
        return idx, siz

    def shifted(self, offset):
        """Path with a constant added to every value; cells and jumps unchanged."""
        return SamplePath(self.grid, self.values + float(offset), jumps=self.jumps,
                          kind=self.kind, cells=self.cells)

    def to_csv(self, f):
        """Write columns time,value,jump with 17 significant digits.

        ``f`` is a path or text file object. A leading comment line records
        the interpolation kind; readers that only want the columns can skip
        lines starting with '#'.
        """
        close = False
        if not hasattr(f, "write"):
            f = open(f, "w", newline="")
            close = True
        try:
            f.write(f"# kind={self.kind}\n")
            f.write("time,value,jump\n")
            for i in range(self.n):
                j = self.jumps.get(i, 0.0)
                f.write(f"{self.grid.times[i]:.17g},{self.values[i]:.17g},{j:.17g}\n")
        finally:
            if close:
                f.close()

    @classmethod
    def from_csv(cls, f):
        close = False
        if not hasattr(f, "read"):
            f = open(f, "r")
            close = True
        try:
            kind = "cadlag"
            rows = []
            for line in f:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "kind=" in line:
                        kind = line.split("kind=", 1)[1].strip()
                    continue
                if line.lower().startswith("time,"):
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ValueError(f"expected 3 columns, got {line!r}")
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
        finally:
            if close:
                f.close()
        times = np.array([r[0] for r in rows])
        values = np.array([r[1] for r in rows])
        jumps = {i: r[2] for i, r in enumerate(rows) if r[2] != 0.0}
        return cls(TimeGrid(times), values, jumps=jumps, kind=kind)

    def csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    def __repr__(self):
        return (f"SamplePath({self.grid!r}, kind={self.kind}, "
                f"jumps={len(self.jumps)})")


def _masked_cells(cells, lo=None, hi=None):
    """Copy of cells with entries outside [lo, hi) zeroed (None = open end)."""
    out = cells.copy()
    if lo is not None and lo > 0:
        out[:lo] = 0.0
    if hi is not None and hi < out.size:
        out[hi:] = 0.0
    return out


def increment(path, s):
    """Increment path over (s, .]: zero through s, then the path's growth.

    Returns a SamplePath with value 0 at every grid point <= s and value
    X_t - X_s (as a prefix sum of the original cell array) for t >= s. Jump
    records at indices <= s are dropped; later ones are kept verbatim.
    """
    k = path.grid.index_of(s)
    cells = _masked_cells(path.cells, lo=k)
    jumps = {i: v for i, v in path.jumps.items() if i > k}
    return SamplePath.from_cells(path.grid, cells, v0=0.0, jumps=jumps, kind=path.kind)


def increment_over(path, s, t):
    """Scalar increment of the path over (s, t] (0 when t <= s).

    Computed as the left-to-right sum of the cell increments in the window,
    so it agrees bitwise with ``increment(path, s).values`` at t.
    """
    k = path.grid.index_of(s)
    m = path.grid.index_of(t)
    if m <= k:
        return 0.0
    return float(np.cumsum(path.cells[k:m])[-1])


def stop(path, at_index):
    """Path stopped at the grid index ``at_index`` (frozen from there on).

    Values satisfy stopped[i] = values[min(i, at_index)] whenever the path is
    prefix-sum consistent (always true for from_cells constructions); cells
    beyond the stop are zeroed and jump records after it dropped.
    """
    k = int(at_index)
    if not 0 <= k <= path.n - 1:
        raise ValueError(f"stop index {k} outside 0..{path.n - 1}")
    cells = _masked_cells(path.cells, hi=k)
    values = path.values.copy()
    values[k + 1:] = path.values[k]
    jumps = {i: v for i, v in path.jumps.items() if i <= k}
    return SamplePath(path.grid, values, jumps=jumps, kind=path.kind, cells=cells)


@dataclass
class IncrementFamily:
    """Family of windowed increments sharing one grid.

    Stored as the common cell-increment array plus jump records; the member
    anchored at s is reconstructed on demand. Built either directly or from a
    path via ``from_path`` (in which case reconstruct(s) equals
    increment(path, s) bitwise).
    """

    grid: TimeGrid
    cell_increments: np.ndarray
    jumps: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.cell_increments, dtype=np.float64)
        if c.shape != (self.grid.n - 1,):
            raise ValueError("cell_increments length must be grid length - 1")
        self.cell_increments = c
        self.jumps = _check_jumps(self.jumps, self.grid.n)

    @classmethod
    def from_path(cls, path):
        return cls(path.grid, path.cells, dict(path.jumps))

    def reconstruct(self, s):
        """The member anchored at s, as a SamplePath vanishing through s."""
        k = self.grid.index_of(s)
        cells = _masked_cells(self.cell_increments, lo=k)
        jumps = {i: v for i, v in self.jumps.items() if i > k}
        return SamplePath.from_cells(self.grid, cells, v0=0.0, jumps=jumps)

    def __call__(self, s):
        return self.reconstruct(s)


@dataclass
class ConsistencyReport:
    grid: TimeGrid
    probes: list
    max_splice_defect: float
    max_prefix_defect: float
    tol: float
    rows: list

    @property
    def passed(self):
        return max(self.max_splice_defect, self.max_prefix_defect) <= self.tol


def check_consistency(family, probes=None, n_probes=40, tol=1e-9, seed=0):
    """Check the two structural laws of an increment family.

    For probe triples s <= t <= u the member values must splice,
    I(s)_t + I(t)_u = I(s)_u, and each member must vanish at grid points <= s.
    ``family`` is an IncrementFamily or any callable s -> SamplePath on a
    fixed grid. Defects are reported as maxima over the probe set; the check
    passes when both maxima are within ``tol`` (families reconstructed from a
    single path show defects at rounding level, and exactly 0 on lattice
    paths).
    """
    probe_member = family(_family_grid_probe(family))
    grid = probe_member.grid
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = []
        for _ in range(int(n_probes)):
            i, j, k = np.sort(rng.integers(0, grid.n, size=3))
            probes.append((float(grid.times[i]), float(grid.times[j]), float(grid.times[k])))
    rows = []
    max_splice = 0.0
    max_prefix = 0.0
    cache = {}

    def member(s):
        key = grid.index_of(s)
        if key not in cache:
            m = family(float(grid.times[key]))
            if not m.grid.same_as(grid):
                raise ValueError("family members disagree on the grid")
            cache[key] = m
        return cache[key]

    for (s, t, u) in probes:
        ms, mt = member(s), member(t)
        i_t = grid.index_of(t)
        i_u = grid.index_of(u)
        i_s = grid.index_of(s)
        splice = abs(ms.values[i_t] + mt.values[i_u] - ms.values[i_u])
        prefix = float(np.max(np.abs(ms.values[: i_s + 1]))) if i_s >= 0 else 0.0
        rows.append({"s": s, "t": t, "u": u, "splice_defect": float(splice),
                     "prefix_defect": prefix})
        max_splice = max(max_splice, float(splice))
        max_prefix = max(max_prefix, prefix)
    return ConsistencyReport(grid, list(probes), max_splice, max_prefix, float(tol), rows)


def _family_grid_probe(family):
    """Earliest anchor usable to fetch one member and learn the grid."""
    if isinstance(family, IncrementFamily):
        return family.grid.t_min
    member = getattr(family, "grid", None)
    if member is not None:
        return member.t_min
    # generic callable: caller must accept its own t_min; try a known attribute
    raise ValueError("family must be an IncrementFamily or expose .grid")


def associate(family, kind="cadlag"):
    """Path whose windowed increments reproduce the family.

    The reconstruction is unique up to one additive constant; this anchor
    takes the value 0 at the grid time nearest 0 when the span contains 0,
    otherwise at t_min. The family's exact cell array is stored on the result,
    so taking increments of the associated path returns the family verbatim.
    """
    grid = family.grid
    cells = family.cell_increments if isinstance(family, IncrementFamily) else family.cells
    raw = np.cumsum(np.concatenate(([0.0], cells)))
    anchor = grid.index_of(0.0) if grid.t_min <= 0.0 <= grid.t_max else 0
    values = raw - raw[anchor]
    jumps = dict(family.jumps)
    return SamplePath(grid, values, jumps=jumps, kind=kind, cells=cells)


@dataclass
class AnchorResult:
    path: SamplePath
    limit: float
    oscillation: float
    converged: bool
    window: int


def anchor_at_minus_infinity(path, tail_window=None, tol=1e-3, window_frac=0.1):
    """Normalize a path by its apparent value at -infinity.

    The tail window is the earliest ``tail_window`` grid points when given
    (an integer >= 2), otherwise the earliest ``window_frac`` of the grid.
    The limit estimate is the window mean and the path converges (flag) when
    the window oscillation max - min is within ``tol``. The returned path has
    the limit subtracted from every value; cells and jumps are untouched, so
    increments are preserved exactly.
    """
    if tail_window is not None:
        w = int(tail_window)
        if w < 2 or w >= path.n:
            raise ValueError("tail_window must be in [2, grid length)")
    else:
        w = max(2, int(np.ceil(window_frac * path.n)))
    window = path.values[:w]
    limit = float(np.mean(window))
    osc = float(np.max(window) - np.min(window))
    out = path.shifted(-limit)
    return AnchorResult(out, limit, osc, osc <= tol, w)


def tail_oscillation(values, window_frac=0.1):
    """max - min over the earliest window_frac of entries (at least 2)."""
    v = np.asarray(values, dtype=np.float64)
    w = max(2, int(np.ceil(window_frac * v.shape[-1])))
    win = v[..., :w]
    return np.max(win, axis=-1) - np.min(win, axis=-1)

def tail_stabilizes(values, window_frac=0.1, rel_tol=1e-2):
    """Scale-free tail criterion: oscillation <= rel_tol * (1 + overall range).

    Works on a single value array or row-wise on a matrix of paths; returns a
    bool (or bool array) plus the oscillation and threshold actually used.
    """
    v = np.asarray(values, dtype=np.float64)
    osc = tail_oscillation(v, window_frac)
    rng_all = np.max(v, axis=-1) - np.min(v, axis=-1)
    tol = rel_tol * (1.0 + rng_all)
    return osc <= tol, osc, tol


def random_lattice_path(grid, seed, scale_bits=10, step_bound=None, jump_prob=0.0,
                        kind="cadlag"):
    """Random walk on the dyadic lattice 2**-scale_bits, for exact-arithmetic checks.

    Cell increments are random integers in [-step_bound, step_bound] scaled by
    2**-scale_bits (default bound 2**scale_bits, so cells lie in [-1, 1]).
    All prefix sums, differences and squares of these cells are exactly
    representable for desk-scale grids, so increment and QV additivity hold
    bitwise on these paths. With jump_prob > 0, selected cells are marked as
    jumps carrying the whole cell increment.
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    n = grid.n
    bound = int(step_bound) if step_bound is not None else 2 ** scale_bits
    steps = rng.integers(-bound, bound + 1, size=n - 1)
    cells = steps.astype(np.float64) * 2.0 ** (-scale_bits)
    jumps = {}
    if jump_prob > 0:
        kind = "cadlag"
        mask = rng.random(n - 1) < jump_prob
        for j in np.nonzero(mask)[0]:
            if cells[j] != 0.0:
                jumps[int(j) + 1] = float(cells[j])
    return SamplePath.from_cells(grid, cells, v0=0.0, jumps=jumps, kind=kind)


def round_sig(x, bits):
    """Round to ``bits`` significant binary digits (exactly representable)."""
    x = np.asarray(x, dtype=np.float64)
    m, e = np.frexp(x)
    return np.ldexp(np.round(m * 2.0 ** bits), e - bits)
