"""Samplers for the example processes, one PathBundle per draw.

Every sampler is a pure function of (model, grid, seed): identical inputs
give bitwise identical bundles, and independent seeds give statistically
independent draws through a counter-based generator. Bundles carry the main
path plus whatever exact side information the model affords (compensators,
drivers, event marks), so downstream checks can compare a simulated quantity
against its closed form on the same draw.

Conventions shared by the samplers:

* jumps happen at grid times and are recorded with their exact sizes; the
  within-cell diffusive flow lives in the cell increment alongside the jump;
* compensators of point processes are evaluated with the *unsnapped* event
  time, so the compensated process sampled at grid times has exactly centered
  increments in law (no discretization bias, only Monte Carlo error);
* deterministic per-grid quantities (cumulative hazards, mark compensators)
  are computed once and shared across draws, which makes cross-path
  cancellations (e.g. the difference of two identically distributed hazard
  mark processes before either event) bitwise zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize

from .paths import SamplePath, TimeGrid

__all__ = [
    "ModelSpec",
    "PathBundle",
    "MODEL_NAMES",
    "sample",
    "rng_for",
    "compensator_path",
    "heavy_tail_cdf",
    "LogisticDist",
    "ShiftedExpDist",
    "HeavyTailDist",
    "parse_hazard_dist",
]

MODEL_NAMES = (
    "brownian_r",
    "levy_r",
    "bump",
    "borel_cantelli",
    "hazard_pair",
    "inverse_bessel3",
    "moving_average",
)


def rng_for(seed, *tags):
    """Counter-based generator keyed by (seed, tags).

    Distinct tag tuples give independent streams for one seed, so ensembles
    and nested draws (one stream per bump, per path) stay reproducible and
    order-independent.
    """
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    ss = np.random.SeedSequence(entropy=entropy, spawn_key=tuple(int(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# model specs and validation


_DEFAULTS = {
    "brownian_r": {},
    "levy_r": {
        "drift": 0.0,
        "diffusion": 1.0,
        "jump_rate": 1.0,
        "jump_dist": "normal",
        "jump_scale": 1.0,
    },
    "bump": {"a": -2.0, "b": 0.0, "level": 1.0, "phi_max": 1000.0},
    "borel_cantelli": {"n_max": 200, "level": 1.0, "phi_max": 1000.0},
    "hazard_pair": {"dist1": "logistic", "dist2": "logistic"},
    "inverse_bessel3": {"eps": 0.1, "time_scale": 1.0},
    "moving_average": {"kernel": "ou", "lam": 1.0, "hurst": 0.75, "t_trunc": 10.0},
}

_JUMP_DISTS = ("normal", "uniform", "rademacher")
_KERNELS = ("ou", "fbm_increment")


@dataclass(frozen=True)
class ModelSpec:
    """Named model variant plus validated parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        errors = validate_model(self.name, self.params)
        if errors:
            raise ValueError("; ".join(errors))
        merged = dict(_DEFAULTS[self.name])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)


def validate_model(name, params):
    """All validation errors for (name, params), empty list when valid."""
    if name not in MODEL_NAMES:
        return [f"unknown model {name!r}; valid: {', '.join(MODEL_NAMES)}"]
    errors = []
    known = _DEFAULTS[name]
    for key in params:
        if key not in known:
            errors.append(f"{name}: unknown parameter {key!r}; valid: {', '.join(known) or 'none'}")
    p = dict(known)
    p.update({k: v for k, v in params.items() if k in known})
    def bad(cond, msg):
        if cond:
            errors.append(f"{name}: {msg}")
    if name == "levy_r":
        bad(p["diffusion"] < 0, "diffusion must be >= 0")
        bad(p["jump_rate"] < 0, "jump_rate must be >= 0")
        bad(p["jump_scale"] <= 0, "jump_scale must be > 0")
        bad(p["jump_dist"] not in _JUMP_DISTS,
            f"jump_dist must be one of {', '.join(_JUMP_DISTS)}")
    elif name == "bump":
        bad(not p["a"] < p["b"], "need a < b")
        bad(p["level"] <= 0, "level must be > 0")
        bad(p["phi_max"] <= 0, "phi_max must be > 0")
    elif name == "borel_cantelli":
        bad(int(p["n_max"]) < 1, "n_max must be >= 1")
        bad(p["level"] <= 0, "level must be > 0")
        bad(p["phi_max"] <= 0, "phi_max must be > 0")
    elif name == "hazard_pair":
        for key in ("dist1", "dist2"):
            if isinstance(p[key], str):
                try:
                    parse_hazard_dist(p[key])
                except ValueError as e:
                    errors.append(f"{name}: {e}")
    elif name == "inverse_bessel3":
        bad(p["eps"] <= 0, "eps must be > 0")
        bad(p["time_scale"] <= 0, "time_scale must be > 0")
    elif name == "moving_average":
        bad(p["kernel"] not in _KERNELS, f"kernel must be one of {', '.join(_KERNELS)}")
        bad(p["lam"] <= 0, "lam must be > 0")
        bad(not 0 < p["hurst"] < 1, "hurst must be in (0, 1)")
        bad(p["t_trunc"] <= 0, "t_trunc must be > 0")
    return errors


@dataclass
class PathBundle:
    """A sampled path with its exact auxiliary processes.

    ``extras`` holds named secondary paths (second hazard component, mark
    processes); every member path shares the main path's grid.
    """

    path: SamplePath
    compensator: SamplePath | None = None
    driver: SamplePath | None = None
    marks: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, member in self.components().items():
            if not member.grid.same_as(self.path.grid):
                raise ValueError(f"bundle member {name!r} is on a different grid")

    def components(self):
        """All member paths by name ('path', 'compensator', 'driver', extras)."""
        out = {"path": self.path}
        if self.compensator is not None:
            out["compensator"] = self.compensator
        if self.driver is not None:
            out["driver"] = self.driver
        out.update(self.extras)
        return out


def sample(model, grid, seed):
    """Draw one PathBundle; pure in (model, grid, seed)."""
    if isinstance(model, str):
        model = ModelSpec(model)
    fn = _SAMPLERS[model.name]
    return fn(grid, int(seed), model.params)


def compensator_path(bundle, component=1):
    """The exact predictable compensator A of a hazard component."""
    if component == 1:
        out = bundle.compensator
    else:
        out = bundle.extras.get(f"compensator{component}")
    if out is None:
        raise ValueError(f"bundle has no compensator for component {component}")
    return out


# ---------------------------------------------------------------------------
# brownian_r and levy_r


def _anchor_index(grid):
    return int(np.argmin(np.abs(grid.times)))


def _sample_brownian(grid, seed, params):
    rng = rng_for(seed)
    cells = rng.standard_normal(grid.n - 1) * np.sqrt(grid.cell_widths())
    raw = SamplePath.from_cells(grid, cells, kind="linear")
    k = _anchor_index(grid)
    path = raw.shifted(-float(raw.values[k]))
    return PathBundle(path=path, marks={"anchor_time": float(grid.times[k])})


def _sample_levy(grid, seed, params):
    rng = rng_for(seed)
    widths = grid.cell_widths()
    n = widths.size
    gauss = rng.standard_normal(n) * (params["diffusion"] * np.sqrt(widths))
    counts = rng.poisson(params["jump_rate"] * widths)
    jump_cells = np.zeros(n)
    jumps = {}
    total = int(counts.sum())
    if total:
        sizes = _jump_sizes(rng, total, params["jump_dist"], params["jump_scale"])
        # jumps landing in one cell merge into a single grid jump at its
        # right endpoint, summed in draw order
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        hot = np.nonzero(counts)[0]
        sums = np.add.reduceat(sizes, offsets[hot])
        jump_cells[hot] = sums
        for j, size in zip(hot, sums):
            if size != 0.0:
                jumps[int(j) + 1] = float(size)
    cells = params["drift"] * widths + gauss + jump_cells
    path = SamplePath.from_cells(grid, cells, jumps=jumps, kind="cadlag")
    k = _anchor_index(grid)
    path = path.shifted(-float(path.values[k]))
    # symmetric jump laws are already centered, so the drift is the whole
    # predictable trend
    trend = SamplePath.from_cells(grid, params["drift"] * widths, kind="linear")
    return PathBundle(
        path=path,
        compensator=trend.shifted(-float(trend.values[k])),
        marks={"n_jumps": total, "anchor_time": float(grid.times[k])},
    )


def _jump_sizes(rng, count, dist, scale):
    if dist == "normal":
        return rng.normal(0.0, scale, count)
    if dist == "uniform":
        return rng.uniform(-scale, scale, count)
    return scale * (2.0 * rng.integers(0, 2, count) - 1.0)


# ---------------------------------------------------------------------------
# bump and borel_cantelli


def _bump_segment(rng, seg_times, level, phi_max):
    """Stopped time-changed Brownian over one [a, b] grid segment.

    Returns (values at seg_times, forced-drop size, marks). The internal
    clock runs linearly from 0 at a to phi_max at b (a finite cap standing
    in for an unbounded stretch; the unresolved event probability decays as
    phi_max grows). The walk freezes at exactly 0.0 at the first nonpositive
    step after reaching the level; an unresolved walk is cut to 0 at b and
    the cut is recorded as a jump.
    """
    phi = phi_max * (seg_times - seg_times[0]) / (seg_times[-1] - seg_times[0])
    steps = rng.standard_normal(phi.size - 1) * np.sqrt(np.diff(phi))
    walk = np.concatenate(([0.0], np.cumsum(steps)))
    hit = np.nonzero(walk >= level)[0]
    hit_level = hit.size > 0
    vanished = False
    if hit_level:
        ret = np.nonzero(walk[hit[0]:] <= 0.0)[0]
        if ret.size:
            vanished = True
            walk[hit[0] + ret[0]:] = 0.0
    left_limit_at_b = walk[-1]
    walk[-1] = 0.0
    drop = -left_limit_at_b if left_limit_at_b != 0.0 else 0.0
    marks = {"hit_level": hit_level, "vanished": vanished, "forced_drop": drop != 0.0}
    return walk, drop, marks


def _sample_bump(grid, seed, params):
    rng = rng_for(seed)
    values, jumps, marks = _place_bump(grid, rng, params["a"], params["b"],
                                       params["level"], params["phi_max"])
    kind = "cadlag" if jumps else "linear"
    path = SamplePath(grid, values, jumps=jumps, kind=kind)
    return PathBundle(path=path, marks=marks)


def _place_bump(grid, rng, a, b, level, phi_max):
    ia = grid.index_of(a)
    ib = grid.index_of(b)
    if ib - ia < 2:
        raise ValueError("bump needs at least 2 grid cells between a and b")
    seg, drop, marks = _bump_segment(rng, grid.times[ia:ib + 1], level, phi_max)
    values = np.zeros(grid.n)
    values[ia:ib + 1] = seg
    jumps = {ib: drop} if drop != 0.0 else {}
    return values, jumps, marks


def _sample_borel_cantelli(grid, seed, params):
    n_max = int(params["n_max"])
    if grid.t_min > -n_max or grid.t_max < 0:
        raise ValueError(f"borel_cantelli grid must cover [{-n_max}, 0]")
    values = np.zeros(grid.n)
    jumps = {}
    thetas = np.zeros(n_max, dtype=bool)
    for n in range(1, n_max + 1):
        sub = rng_for(seed, n)  # stream per bump: theta first, then the walk
        thetas[n - 1] = sub.random() < 1.0 / n
        if not thetas[n - 1]:
            continue
        vals_n, jumps_n, _ = _place_bump(grid, sub, -n, -n + 1,
                                         params["level"], params["phi_max"])
        values += vals_n
        jumps.update(jumps_n)  # bump supports are disjoint, no index clashes
    kind = "cadlag" if jumps else "linear"
    path = SamplePath(grid, values, jumps=jumps, kind=kind)
    return PathBundle(path=path, marks={"thetas": thetas, "n_active": int(thetas.sum())})


# ---------------------------------------------------------------------------
# hazard models


class LogisticDist:
    """Standard logistic event time; hazard f/(1-F) equals F itself."""

    key = "logistic"

    def cdf(self, u):
        return 1.0 / (1.0 + np.exp(-np.asarray(u, dtype=np.float64)))

    def cumulative_hazard(self, u):
        # -log(1 - F(u)) = log(1 + e^u), computed without overflow
        return np.logaddexp(0.0, np.asarray(u, dtype=np.float64))

    def hazard(self, u):
        return self.cdf(u)

    def sample(self, rng):
        return float(rng.logistic())


class ShiftedExpDist:
    """Event time = start + Exp(rate): constant hazard on a half-line."""

    def __init__(self, rate=1.0, start=0.0):
        if rate <= 0:
            raise ValueError("shifted_exp rate must be > 0")
        self.rate = float(rate)
        self.start = float(start)
        self.key = f"shifted_exp:rate={self.rate!r},start={self.start!r}"

    def cdf(self, u):
        z = np.maximum(np.asarray(u, dtype=np.float64) - self.start, 0.0)
        return -np.expm1(-self.rate * z)

    def cumulative_hazard(self, u):
        return self.rate * np.maximum(np.asarray(u, dtype=np.float64) - self.start, 0.0)

    def hazard(self, u):
        return np.where(np.asarray(u, dtype=np.float64) > self.start, self.rate, 0.0)

    def sample(self, rng):
        return self.start + float(rng.exponential(1.0 / self.rate))


class HeavyTailDist:
    """Event time with tail F(s) = c / (1 + |s| log(1 + |s|)) for s <= -1.

    The constant c fixes F(-1) = 0.99; on s > -1 the CDF continues as
    1 - 0.01 e^{-beta (s+1)} with beta matched to the left density, so F is
    C^1, strictly increasing and < 1 everywhere. E|tau| = infinity: the mark
    compensator integral diverges toward -infinity (already below -10 by
    s = -1e6), which is the point of the model.
    """

    key = "heavy_tail"
    split = 0.99
    c = split * (1.0 + math.log(2.0))

    def __init__(self):
        # beta = f(-1) / (1 - F(-1)) with f from the tail branch
        g1 = 1.0 + math.log(2.0)
        dg1 = -math.log(2.0) - 0.5  # g'(−1) for g(s) = 1 − s log(1 − s)
        f1 = -self.c * dg1 / g1 ** 2
        self.beta = f1 / (1.0 - self.split)

    @staticmethod
    def _g(s):
        return 1.0 - s * np.log1p(-s)

    def cdf(self, u):
        u = np.asarray(u, dtype=np.float64)
        tail = self.c / self._g(np.minimum(u, -1.0))
        head_exp = -self.beta * (np.maximum(u, -1.0) + 1.0)  # <= 0, no overflow
        head = 1.0 - (1.0 - self.split) * np.exp(head_exp)
        return np.where(u <= -1.0, tail, head)

    def cumulative_hazard(self, u):
        u = np.asarray(u, dtype=np.float64)
        g = self._g(np.minimum(u, -1.0))
        tail = np.log(g) - np.log(g - self.c)
        h1 = math.log(1.0 + math.log(2.0)) - math.log(1.0 + math.log(2.0) - self.c)
        head = h1 + self.beta * (u + 1.0)
        return np.where(u <= -1.0, tail, head)

    def hazard(self, u):
        u = np.asarray(u, dtype=np.float64)
        s = np.minimum(u, -1.0)
        g = self._g(s)
        dg = -np.log1p(-s) + s / (1.0 - s)
        tail = -self.c * dg / (g * (g - self.c))
        return np.where(u <= -1.0, tail, self.beta)

    def sample(self, rng):
        q = float(rng.random())
        if q >= self.split:
            return -1.0 - math.log((1.0 - q) / (1.0 - self.split)) / self.beta
        target = self.c / q
        # g is increasing toward -infinity; bracket then bisect
        lo = -2.0
        while self._g(lo) < target:
            lo *= 4.0
        return float(_optimize.brentq(lambda s: self._g(s) - target, lo, -1.0, xtol=1e-12))


def heavy_tail_cdf(s):
    """CDF of the slow-tailed event-time family (module-level convenience)."""
    return HeavyTailDist().cdf(s)


def parse_hazard_dist(spec):
    """Hazard distribution from a config string.

    Accepted: 'logistic', 'heavy_tail', 'shifted_exp:rate=R,start=S'.
    """
    if not isinstance(spec, str):
        return spec  # already a distribution object
    name, _, argstr = spec.partition(":")
    name = name.strip()
    if name == "logistic":
        return LogisticDist()
    if name == "heavy_tail":
        return HeavyTailDist()
    if name == "shifted_exp":
        kwargs = {}
        for part in filter(None, (p.strip() for p in argstr.split(","))):
            key, _, val = part.partition("=")
            if key.strip() not in ("rate", "start") or not val:
                raise ValueError(f"bad shifted_exp argument {part!r}")
            kwargs[key.strip()] = float(val)
        return ShiftedExpDist(**kwargs)
    raise ValueError(f"unknown hazard distribution {name!r}; "
                     "valid: logistic, heavy_tail, shifted_exp:rate=R,start=S")


_MARK_COMP_CACHE = {}


def _mark_compensator_grid(dist, grid):
    """Cumulative integral of u * hazard(u) along the grid, 0 at t_min.

    Cached per (distribution, grid): hazard components with the same law on
    the same grid share this array bitwise, which makes their pre-event mark
    processes cancel exactly.
    """
    key = (dist.key, grid.times.tobytes())
    hit = _MARK_COMP_CACHE.get(key)
    if hit is not None:
        return hit
    times = grid.times
    pieces = np.empty(times.size)
    pieces[0] = 0.0
    f = lambda u: u * float(dist.hazard(u))
    for j in range(times.size - 1):
        val, _ = _integrate.quad(f, times[j], times[j + 1], epsabs=1e-10, limit=200)
        pieces[j + 1] = val
    out = np.cumsum(pieces)
    out.setflags(write=False)
    _MARK_COMP_CACHE[key] = out
    return out


def _hazard_component(grid, dist, tau, mark_cum):
    """All exact per-component processes for one event time.

    N jumps at the first grid time >= tau, so {N_t = 1} = {tau <= t} at
    every grid time; A and B are evaluated at the true (unsnapped) tau, which
    keeps E[increment | past] exactly zero in law.
    """
    times = grid.times
    k = int(np.searchsorted(times, tau, side="left"))
    n_vals = np.zeros(times.size)
    if k < times.size:
        n_vals[k:] = 1.0
    jumps = {k: 1.0} if 0 < k < times.size else {}
    stopped = np.minimum(times, tau)
    a_vals = np.asarray(dist.cumulative_hazard(stopped), dtype=np.float64)
    counting = SamplePath(grid, n_vals, jumps=dict(jumps), kind="cadlag")
    compensator = SamplePath(grid, a_vals, kind="linear")
    mart = SamplePath(grid, n_vals - a_vals, jumps=dict(jumps), kind="cadlag")
    # mark compensator: grid cumulative, frozen at tau by value picks plus the
    # within-cell remainder up to the true tau
    b_vals = mark_cum.copy()
    if k < times.size and k > 0:
        f = lambda u: u * float(dist.hazard(u))
        partial, _ = _integrate.quad(f, times[k - 1], tau, epsabs=1e-10, limit=200)
        b_vals[k:] = mark_cum[k - 1] + partial
    elif k == 0:
        b_vals[:] = 0.0
    b_path = SamplePath(grid, b_vals, kind="linear")
    mark_jumps = {k: tau} if 0 < k < times.size else {}
    x_vals = tau * n_vals - b_vals
    mark = SamplePath(grid, x_vals, jumps=mark_jumps, kind="cadlag")
    return {
        "counting": counting,
        "compensator": compensator,
        "martingale": mart,
        "mark_compensator": b_path,
        "mark": mark,
        "tau": tau,
        "tau_index": k if k < times.size else None,
    }


def _sample_hazard_pair(grid, seed, params):
    rng = rng_for(seed)
    d1 = parse_hazard_dist(params["dist1"])
    d2 = parse_hazard_dist(params["dist2"])
    tau1 = d1.sample(rng)
    tau2 = d2.sample(rng)
    c1 = _hazard_component(grid, d1, tau1, _mark_compensator_grid(d1, grid))
    c2 = _hazard_component(grid, d2, tau2, _mark_compensator_grid(d2, grid))
    extras = {
        "counting1": c1["counting"],
        "mark1": c1["mark"],
        "mark_compensator1": c1["mark_compensator"],
        "martingale2": c2["martingale"],
        "compensator2": c2["compensator"],
        "counting2": c2["counting"],
        "mark2": c2["mark"],
        "mark_compensator2": c2["mark_compensator"],
    }
    marks = {
        "tau1": tau1,
        "tau2": tau2,
        "tau1_index": c1["tau_index"],
        "tau2_index": c2["tau_index"],
    }
    return PathBundle(
        path=c1["martingale"],
        compensator=c1["compensator"],
        marks=marks,
        extras=extras,
    )


# ---------------------------------------------------------------------------
# inverse BES(3) and moving averages


def _sample_inverse_bessel3(grid, seed, params):
    rng = rng_for(seed)
    eps = params["eps"]
    # internal clock u = time_scale * e^t maps the boundary time 0 to
    # t = -infinity; the radius starts at eps at the earliest grid time
    clock = params["time_scale"] * np.exp(grid.times)
    du = np.diff(clock)
    steps = rng.standard_normal((du.size, 3)) * np.sqrt(du)[:, None]
    w = np.empty((grid.n, 3))
    w[0] = (eps, 0.0, 0.0)
    w[1:] = w[0] + np.cumsum(steps, axis=0)
    radius = np.sqrt(np.einsum("ij,ij->i", w, w))
    path = SamplePath(grid, 1.0 / radius, kind="linear")
    driver = SamplePath(grid, radius, kind="linear")
    marks = {"eps": eps, "clock_start": float(clock[0]), "min_radius": float(radius.min())}
    return PathBundle(path=path, driver=driver, marks=marks)


def _sample_moving_average(grid, seed, params):
    rng = rng_for(seed)
    widths = grid.cell_widths()
    dt = float(widths[0])
    if np.max(widths) - np.min(widths) > 1e-9 * dt:
        raise ValueError("moving_average requires a uniform grid")
    lag_cells = max(1, int(math.ceil(params["t_trunc"] / dt)))
    # driver cells extend lag_cells into the past of t_min
    cells_ext = rng.standard_normal(lag_cells + grid.n - 1) * math.sqrt(dt)
    if params["kernel"] == "ou":
        lam = params["lam"]
        # left-point rule: the cell ending at t - l*dt has left endpoint
        # (l+1)*dt before t and carries weight psi((l+1) dt)
        weights = np.exp(-lam * dt * (1.0 + np.arange(lag_cells)))
        full = np.convolve(cells_ext, weights)
        vals = full[lag_cells - 1: lag_cells - 1 + grid.n]
    else:
        h = params["hurst"]

        def phi_units(m):
            # phi(m * dt) = (m dt)^{h - 1/2} 1_{m > 0}; arguments arrive as
            # cell-offset counts so lattice crossings are exactly zero (a
            # float-epsilon argument under a negative exponent would blow up)
            safe = np.where(m > 0, m, 1.0) * dt
            return np.where(m > 0, np.power(safe, h - 0.5), 0.0)

        # cell i of the extended driver has left endpoint t_min + (i - lag) dt;
        # the two-sided kernel phi(t-s) - phi(-s) pins the path to 0 at time 0
        i = np.arange(cells_ext.size)
        u0 = -grid.t_min / dt  # absolute time 0, in cell units right of t_min
        if abs(u0 - round(u0)) < 1e-9:
            u0 = round(u0)
        base = phi_units(u0 + lag_cells - i)
        vals = np.empty(grid.n)
        for j in range(grid.n):
            w = phi_units((j + lag_cells) - i) - base
            vals[j] = float(np.dot(w, cells_ext))
    path = SamplePath(grid, vals, kind="linear")
    driver = SamplePath.from_cells(grid, cells_ext[lag_cells:], kind="linear")
    marks = {"kernel": params["kernel"], "lag_cells": lag_cells}
    return PathBundle(path=path, driver=driver, marks=marks)


_SAMPLERS = {
    "brownian_r": _sample_brownian,
    "levy_r": _sample_levy,
    "bump": _sample_bump,
    "borel_cantelli": _sample_borel_cantelli,
    "hazard_pair": _sample_hazard_pair,
    "inverse_bessel3": _sample_inverse_bessel3,
    "moving_average": _sample_moving_average,
}
