"""Exact filtered probability spaces on finitely many outcomes.

Conditional expectations on a finite outcome space are weighted block
averages, so martingale identities can be checked to rounding error rather
than by Monte Carlo. The filtration is a sequence of partitions, one per grid
time, each refining the previous one; a process is a matrix with one row per
outcome and one column per time.

The increment-martingale check deliberately does not require the process
itself to be adapted or integrable: only the windowed increments M_t - M_s
must be measurable at time t and conditionally centered at time s. That is
strictly weaker than the martingale property, and ``decompose`` splits any
such process into an honest martingale plus a conditionally-centered
remainder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiniteFilteredSpace",
    "AdaptedFiniteProcess",
    "FiniteStoppingTime",
    "conditional_expectation",
    "expectation",
    "adaptedness_defect",
    "is_martingale",
    "check_increment_martingale",
    "decompose",
    "stop_process",
    "variance_profile",
    "random_walk_values",
    "MartingaleReport",
    "IncrementMartingaleReport",
]


class FiniteFilteredSpace:
    """Finite outcome space with probabilities and a refining partition chain.

    Parameters
    ----------
    probabilities : (n,) positive weights summing to 1 (checked to 1e-12).
    times : (T,) strictly increasing observation times.
    blocks : (T, n) integer labels; outcomes sharing a label at time k are
        indistinguishable at that time. Each later partition must refine the
        earlier ones (labels are relabeled to 0..m-1 internally).
    """

    def __init__(self, probabilities, times, blocks):
        p = np.asarray(probabilities, dtype=np.float64)
        t = np.asarray(times, dtype=np.float64)
        b = np.asarray(blocks)
        if p.ndim != 1:
            raise ValueError("probabilities must be 1-d")
        n = p.size
        if np.any(p <= 0):
            raise ValueError("all outcomes need positive probability")
        if abs(float(np.sum(p)) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        if t.ndim != 1 or t.size < 1 or (t.size > 1 and not np.all(np.diff(t) > 0)):
            raise ValueError("times must be 1-d strictly increasing")
        if b.shape != (t.size, n):
            raise ValueError(f"blocks shape {b.shape} must be (n_times, n_outcomes)")
        compact = np.empty_like(b, dtype=np.int64)
        for k in range(t.size):
            _, compact[k] = np.unique(b[k], return_inverse=True)
        for k in range(t.size - 1):
            # refinement: outcomes sharing a block later share one earlier
            pairs = np.unique(np.stack([compact[k + 1], compact[k]], axis=1), axis=0)
            if np.unique(pairs[:, 0]).size != pairs.shape[0]:
                raise ValueError(f"partition at time index {k + 1} does not refine index {k}")
        self.p = p
        self.times = t
        self.blocks = compact
        self.n_outcomes = n
        self.n_times = t.size

    @classmethod
    def binary_tree(cls, depth, times=None, p_up=0.5):
        """Symmetric-information binary tree: outcome = sequence of coin flips.

        Outcome omega in 0..2**depth - 1 encodes flips from the highest bit
        down; the partition at time index k groups outcomes by their first k
        flips. Default times are the integers centered at zero.
        """
        if depth < 1 or depth > 20:
            raise ValueError("depth must be in 1..20")
        n = 2 ** depth
        if times is None:
            times = np.arange(depth + 1, dtype=np.float64) - depth // 2
        times = np.asarray(times, dtype=np.float64)
        if times.size != depth + 1:
            raise ValueError("need depth + 1 times")
        omega = np.arange(n)
        blocks = np.stack([omega >> (depth - k) for k in range(depth + 1)])
        ups = np.array([bin(w).count("1") for w in range(n)])
        p = p_up ** ups * (1.0 - p_up) ** (depth - ups)
        p = p / np.sum(p)
        return cls(p, times, blocks)

    def flip_signs(self):
        """(n, depth) array of +-1 flip signs for binary-tree spaces."""
        d = self.n_times - 1
        signs = np.empty((self.n_outcomes, d))
        for k in range(1, self.n_times):
            bit = self.blocks[k] - 2 * self.blocks[k - 1]
            if not np.all((bit == 0) | (bit == 1)):
                raise ValueError("space is not a binary tree in canonical labeling")
            signs[:, k - 1] = 2.0 * bit - 1.0
        return signs

    def to_json(self):
        return json.dumps(
            {
                "probabilities": self.p.tolist(),
                "times": self.times.tolist(),
                "blocks": self.blocks.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, s):
        d = json.loads(s)
        return cls(d["probabilities"], d["times"], d["blocks"])

    def __repr__(self):
        return f"FiniteFilteredSpace(n_outcomes={self.n_outcomes}, n_times={self.n_times})"


def conditional_expectation(space, x, k):
    """E[x | partition at time index k], returned outcome-wise (block-constant).

    Exact up to one float division per block: block sums accumulate in index
    order via bincount.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = space.blocks[k]
    num = np.bincount(labels, weights=space.p * x)
    den = np.bincount(labels, weights=space.p)
    return (num / den)[labels]


def expectation(space, x):
    return float(np.dot(space.p, np.asarray(x, dtype=np.float64)))


def adaptedness_defect(space, values):
    """Max within-block spread of values[:, k] over all times k."""
    v = np.asarray(values, dtype=np.float64)
    worst = 0.0
    for k in range(space.n_times):
        labels = space.blocks[k]
        hi = np.full(labels.max() + 1, -np.inf)
        lo = np.full(labels.max() + 1, np.inf)
        np.maximum.at(hi, labels, v[:, k])
        np.minimum.at(lo, labels, v[:, k])
        worst = max(worst, float(np.max(hi - lo)))
    return worst


@dataclass
class AdaptedFiniteProcess:
    """Validated adapted process: matrix (n_outcomes, n_times) on a space."""

    space: FiniteFilteredSpace
    values: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.space.n_outcomes, self.space.n_times):
            raise ValueError("values must be (n_outcomes, n_times)")
        defect = adaptedness_defect(self.space, v)
        if defect > self.tol:
            raise ValueError(f"process not adapted: within-block spread {defect:.3g}")
        self.values = v


def _as_matrix(space, values):
    if isinstance(values, AdaptedFiniteProcess):
        values = values.values
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (space.n_outcomes, space.n_times):
        raise ValueError("values must be (n_outcomes, n_times)")
    return v


@dataclass
class MartingaleReport:
    defect: float
    tol: float
    pairs_checked: int

    @property
    def passed(self):
        return self.defect <= self.tol


def is_martingale(space, values, tol=1e-10):
    """Check E[M_l | F_k] = M_k for every pair k < l; requires adaptedness.

    Raises on a non-adapted input (that is a usage error, not a failed
    check); returns the max defect over all pairs and outcomes otherwise.
    """
    v = _as_matrix(space, values)
    adefect = adaptedness_defect(space, v)
    if adefect > 1e-9:
        raise ValueError(
            f"process is not adapted (spread {adefect:.3g}); "
            "use check_increment_martingale for non-adapted processes"
        )
    worst = 0.0
    pairs = 0
    for k in range(space.n_times):
        for l in range(k + 1, space.n_times):
            ce = conditional_expectation(space, v[:, l], k)
            worst = max(worst, float(np.max(np.abs(ce - v[:, k]))))
            pairs += 1
    return MartingaleReport(worst, float(tol), pairs)


@dataclass
class IncrementMartingaleReport:
    centering_defect: float
    increment_adaptedness_defect: float
    tol: float
    pairs_checked: int

    @property
    def passed(self):
        return max(self.centering_defect, self.increment_adaptedness_defect) <= self.tol


def check_increment_martingale(space, values, tol=1e-10):
    """Increment-martingale check: windowed increments adapted and centered.

    For every pair s < t the increment M_t - M_s must be measurable at time t
    and satisfy E[M_t - M_s | F_s] = 0. The process itself may be
    non-adapted and no condition is placed on M_t alone.
    """
    v = _as_matrix(space, values)
    worst_center = 0.0
    worst_adapt = 0.0
    pairs = 0
    for s in range(space.n_times):
        for t in range(s + 1, space.n_times):
            inc = v[:, t] - v[:, s]
            labels = space.blocks[t]
            hi = np.full(labels.max() + 1, -np.inf)
            lo = np.full(labels.max() + 1, np.inf)
            np.maximum.at(hi, labels, inc)
            np.minimum.at(lo, labels, inc)
            worst_adapt = max(worst_adapt, float(np.max(hi - lo)))
            ce = conditional_expectation(space, inc, s)
            worst_center = max(worst_center, float(np.max(np.abs(ce))))
            pairs += 1
    return IncrementMartingaleReport(worst_center, worst_adapt, float(tol), pairs)


def decompose(space, values, tol=1e-10):
    """Split an increment martingale as M = K + N.

    K_t = E[M_t | F_t] is an honest martingale; the remainder N = M - K has
    E[N_t | F_t] = 0 at every time and evolves by N_t = N_s - E[N_s | F_t].
    Raises when the input fails the increment-martingale check, since the
    split is only meaningful there.
    """
    v = _as_matrix(space, values)
    report = check_increment_martingale(space, v, tol=tol)
    if not report.passed:
        raise ValueError(
            f"not an increment martingale (centering defect "
            f"{report.centering_defect:.3g}, adaptedness defect "
            f"{report.increment_adaptedness_defect:.3g})"
        )
    K = np.column_stack(
        [conditional_expectation(space, v[:, t], t) for t in range(space.n_times)]
    )
    N = v - K
    return K, N


class FiniteStoppingTime:
    """Stopping time as a per-outcome grid index; n_times means "never".

    Validated: the event {sigma <= t_k} must be measurable at time k for
    every k.
    """

    def __init__(self, space, indices):
        idx = np.asarray(indices, dtype=np.int64)
        if idx.shape != (space.n_outcomes,):
            raise ValueError("indices must have one entry per outcome")
        if np.any(idx < 0) or np.any(idx > space.n_times):
            raise ValueError(f"indices must lie in 0..{space.n_times} (n_times = never)")
        for k in range(space.n_times):
            event = (idx <= k).astype(np.float64)
            labels = space.blocks[k]
            spread = np.bincount(labels, weights=event) / np.bincount(labels)
            if np.any((spread > 0) & (spread < 1)):
                raise ValueError(f"{{sigma <= t_{k}}} is not measurable at time {k}")
        self.space = space
        self.indices = idx

    @classmethod
    def first_exceedance(cls, space, values, level):
        """First time |values| exceeds level; never, if it does not."""
        v = _as_matrix(space, values)
        hit = np.abs(v) > level
        idx = np.where(hit.any(axis=1), hit.argmax(axis=1), space.n_times)
        return cls(space, idx)


def stop_process(space, values, sigma):
    """Process frozen at sigma: exact value picks, no arithmetic."""
    v = _as_matrix(space, values)
    cols = np.minimum(np.arange(space.n_times)[None, :], sigma.indices[:, None])
    return v[np.arange(space.n_outcomes)[:, None], cols]


def variance_profile(space, values):
    """Var(M_t) per time; nondecreasing for martingales, a backward-limit probe."""
    v = _as_matrix(space, values)
    mean = space.p @ v
    return np.asarray([(space.p @ (v[:, k] - mean[k]) ** 2) for k in range(space.n_times)])


def random_walk_values(space, step=1.0, drift=0.0):
    """Partial-sum process of the flip signs on a binary-tree space.

    step scales the flips; a nonzero drift per step breaks the martingale
    property by exactly drift * (t - s) and is used to calibrate detectors.
    """
    signs = space.flip_signs()
    inc = signs * float(step) + float(drift)
    walk = np.concatenate(
        [np.zeros((space.n_outcomes, 1)), np.cumsum(inc, axis=1)], axis=1
    )
    return walk
