"""Realized quadratic variation and its jump/continuous split.

The realized QV from time s is the running sum of squared cell increments
over (s, t]; the jump sum collects the squared recorded jumps. Both are
prefix sums of per-cell arrays, so the stopping and increment identities
(stop-then-square vs square-then-stop, increment-then-square vs
square-then-increment) traverse identical float operations and their defects
are exactly zero, not merely small.

Tail behavior toward the earliest grid time is classified by a scale-free
oscillation criterion shared with the improper-integral code: oscillation
over the earliest window at or below 1e-2 * (1 + overall range) reads as
convergent, more than five times that as divergent, anything between as
inconclusive.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .paths import SamplePath, increment, stop, tail_oscillation

__all__ = [
    "QVReport",
    "QVStoppingReport",
    "ContingencyReport",
    "EXPECTED_CELL",
    "realized_qv",
    "qv_stopping_identity_check",
    "predictable_qv_hazard",
    "tail_verdict",
    "convergence_vs_qv_verdict",
]


def tail_verdict(values, window_frac=0.1, rel_tol=1e-2, margin=5.0):
    """Classify the earliest-window oscillation of a value array.

    'converges' when the oscillation is within tol = rel_tol * (1 + range),
    'diverges' beyond margin * tol, 'inconclusive' in between.
    """
    values = np.asarray(values, dtype=np.float64)
    osc = tail_oscillation(values, window_frac)
    tol = rel_tol * (1.0 + float(values.max() - values.min()))
    if osc <= tol:
        return "converges"
    if osc > margin * tol:
        return "diverges"
    return "inconclusive"


@dataclass
class QVReport:
    """Cumulative realized QV with its jump/continuous split.

    ``cont_est`` is qv minus jump sum clamped at zero; the largest clamped
    magnitude is kept in ``clamp_defect`` (discretization can make the raw
    difference dip below zero at a jump whose cell also carries opposing
    continuous flow).
    """

    qv: SamplePath
    jump_sum: SamplePath
    cont_est: SamplePath
    tail: str
    clamp_defect: float
    start_index: int

    def total(self):
        return float(self.qv.values[-1])

    def to_csv(self, f):
        close = False
        if not hasattr(f, "write"):
            f = open(f, "w", newline="")
            close = True
        try:
            f.write("time,qv,jump_sum,cont_est\n")
            t = self.qv.grid.times
            for i in range(self.qv.n):
                f.write(f"{t[i]:.17g},{self.qv.values[i]:.17g},"
                        f"{self.jump_sum.values[i]:.17g},{self.cont_est.values[i]:.17g}\n")
        finally:
            if close:
                f.close()

    def csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    def json_summary(self):
        return {
            "clamp_defect": self.clamp_defect,
            "n_jumps": len(self.jump_sum.jumps),
            "start_time": float(self.qv.grid.times[self.start_index]),
            "tail_verdict": self.tail,
            "total_cont_est": float(self.cont_est.values[-1]),
            "total_jump_sum": float(self.jump_sum.values[-1]),
            "total_qv": self.total(),
        }


def realized_qv(path, s=None, window_frac=0.1):
    """Realized QV of ``path`` over (s, t], s defaulting to the grid start.

    qv cells are the squared cell increments (zeroed through s), the jump sum
    collects squared recorded jumps after s, and the continuous estimate is
    their clamped difference. The tail verdict describes the qv path toward
    the earliest grid time.
    """
    grid = path.grid
    k = 0 if s is None else grid.index_of(s)
    sq = path.cells * path.cells
    if k > 0:
        sq = sq.copy()
        sq[:k] = 0.0
    jumps_sq = {i: v * v for i, v in path.jumps.items() if i > k}
    qv_kind = "cadlag" if jumps_sq else "linear"
    qv = SamplePath.from_cells(grid, sq, jumps=dict(jumps_sq), kind=qv_kind)
    js_cells = np.zeros(grid.n - 1)
    for i, v2 in jumps_sq.items():
        js_cells[i - 1] = v2
    jump_sum = SamplePath.from_cells(grid, js_cells, jumps=dict(jumps_sq), kind=qv_kind)
    raw = qv.values - jump_sum.values
    clamp_defect = float(max(0.0, -raw.min()))
    cont = SamplePath(grid, np.maximum(raw, 0.0), kind="linear")
    return QVReport(qv=qv, jump_sum=jump_sum, cont_est=cont,
                    tail=tail_verdict(qv.values, window_frac),
                    clamp_defect=clamp_defect, start_index=k)


@dataclass
class QVStoppingReport:
    """Max pointwise defects of the two QV identities; passes iff both are 0."""

    stop_defect: float
    increment_defect: float

    @property
    def passed(self):
        return self.stop_defect == 0.0 and self.increment_defect == 0.0


def qv_stopping_identity_check(path, stop_index, s):
    """Both QV identities evaluated both ways on one path.

    Identity 1: stopping the qv path agrees with the qv of the stopped path.
    Identity 2: the increment of the qv path from s agrees with the qv of the
    increment from s. Each side runs the ordinary library ops, and both sides
    reduce to prefix sums of identical cell arrays, so the defects are
    exactly 0.0 for any float data.
    """
    qv_full = realized_qv(path).qv
    side1a = stop(qv_full, stop_index)
    side1b = realized_qv(stop(path, stop_index)).qv
    d1 = float(np.max(np.abs(side1a.values - side1b.values)))
    side2a = increment(qv_full, s)
    side2b = realized_qv(increment(path, s)).qv
    d2 = float(np.max(np.abs(side2a.values - side2b.values)))
    return QVStoppingReport(stop_defect=d1, increment_defect=d2)


def predictable_qv_hazard(bundle, component=1):
    """The predictable QV of a hazard-model martingale is its compensator."""
    from .models import compensator_path

    return compensator_path(bundle, component)


# dominant contingency cell per model: the path value stabilizes toward the
# earliest times iff the realized QV does, so conclusive paths land on the
# diagonal; None marks models where both diagonal cells occur
EXPECTED_CELL = {
    "brownian_r": "neither",
    "bump": "both_stabilize",
    "borel_cantelli": None,
}

_CELL_NAMES = {
    (True, True): "both_stabilize",
    (True, False): "qv_only",
    (False, True): "value_only",
    (False, False): "neither",
}


@dataclass
class ContingencyReport:
    """2x2 QV-stabilizes vs value-stabilizes counts over an ensemble."""

    counts: dict
    inconclusive: int
    n_paths: int
    expected_cell: str | None = None

    @property
    def conclusive(self):
        return self.n_paths - self.inconclusive

    @property
    def off_diagonal_fraction(self):
        if self.conclusive == 0:
            return 0.0
        off = self.counts["qv_only"] + self.counts["value_only"]
        return off / self.conclusive

    def json_summary(self):
        out = dict(self.counts)
        out.update({
            "expected_cell": self.expected_cell,
            "inconclusive": self.inconclusive,
            "n_paths": self.n_paths,
            "off_diagonal_fraction": self.off_diagonal_fraction,
        })
        return out


def convergence_vs_qv_verdict(ensemble, window_frac=0.1, rel_tol=1e-2):
    """Per-path tail verdicts for realized QV and for the value, aggregated.

    ``ensemble`` provides values("path") as an (n_paths, n_times) matrix plus
    the model spec; paths are folded in index order. A path counts as
    inconclusive when either of its two verdicts is.
    """
    vals = ensemble.values("path")
    counts = {name: 0 for name in _CELL_NAMES.values()}
    inconclusive = 0
    for row in vals:
        qv_vals = np.concatenate(([0.0], np.cumsum(np.diff(row) ** 2)))
        vq = tail_verdict(qv_vals, window_frac, rel_tol)
        vx = tail_verdict(row, window_frac, rel_tol)
        if "inconclusive" in (vq, vx):
            inconclusive += 1
            continue
        counts[_CELL_NAMES[(vq == "converges", vx == "converges")]] += 1
    model = getattr(ensemble, "model", None)
    expected = EXPECTED_CELL.get(model.name) if model is not None else None
    return ContingencyReport(counts=counts, inconclusive=inconclusive,
                             n_paths=vals.shape[0], expected_cell=expected)
