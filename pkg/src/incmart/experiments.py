"""Registry of reproducible experiments with pass/fail checks.

Each experiment runs from a fixed master seed, evaluates a list of named
checks, and optionally writes artifacts (CSV tables, SVG charts, JSON
summaries) to an output directory. Reruns with the same inputs produce
byte-identical files except run_meta.json, which holds the wall-clock
timestamps and lives apart from the deterministic summary for that reason.
"""

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sciint

from .finite_space import (
    FiniteFilteredSpace,
    conditional_expectation,
    decompose,
    expectation,
    random_walk_values,
)
from .integrals import (
    Deterministic,
    Tabulated,
    improper_integral,
    increment_integral,
    parse_integrand,
    time_change_to_bm,
    verify_integral_properties,
)
from .mcstats import derive_path_seeds, martingale_test, limit_detector, run_ensemble
from .models import ModelSpec, parse_hazard_dist, rng_for, sample
from .paths import (
    IncrementFamily,
    SamplePath,
    TimeGrid,
    associate,
    increment,
    increment_over,
    random_lattice_path,
    round_sig,
    stop,
)
from .quadvar import convergence_vs_qv_verdict, realized_qv
from . import svgplot


# bump when any artifact CSV schema changes shape
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Check:
    """One named pass/fail condition with what was observed."""

    name: str
    passed: bool
    observed: str
    requirement: str

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.observed} (requires {self.requirement})"


@dataclass
class ExperimentResult:
    name: str
    passed: bool
    checks: list
    summary: dict
    artifacts: dict = field(default_factory=dict)
    elapsed_seconds: float = 0.0
    out_dir: str = ""
    files: list = field(default_factory=list)

    def text_report(self):
        lines = [f"experiment {self.name}: "
                 f"{'PASS' if self.passed else 'FAIL'} "
                 f"({self.elapsed_seconds:.2f} s)"]
        lines += [f"  {c.line()}" for c in self.checks]
        if self.files:
            lines.append("  wrote: " + ", ".join(sorted(self.files)))
        return "\n".join(lines)


def _g(x):
    return f"{float(x):.17g}"


def _csv(header, rows):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(
            cell if isinstance(cell, str) else _g(cell) for cell in row))
    return "\n".join(out) + "\n"


def _check(name, passed, observed, requirement):
    return Check(name, bool(passed), observed, requirement)


def _jump_mismatch(a, b):
    """0.0 when two jump records agree bitwise, else a positive defect."""
    if set(a) != set(b):
        return math.inf
    if not a:
        return 0.0
    return float(max(abs(a[i] - b[i]) for i in a))


# ---------------------------------------------------------------------------
# core path identities


def _run_core_identities(seed, n_paths, threads):
    grid = TimeGrid.uniform(-2.0, 3.0, 160)
    seeds = derive_path_seeds(seed, n_paths)
    rng = rng_for(seed, 9)
    names = ("additivity", "nesting", "round_trip", "stop_commute")
    worst = dict.fromkeys(names, 0.0)
    rows = []
    shown = []
    for i in range(n_paths):
        p = random_lattice_path(grid, int(seeds[i]), scale_bits=10,
                                jump_prob=0.25, kind="cadlag")
        if i < 6:
            shown.append((f"path {i}", grid.times, p.values))
        defects = dict.fromkeys(names, 0.0)

        for _ in range(4):
            ka, kb, kc = sorted(rng.choice(grid.n, size=3, replace=False))
            s, t, u = grid.times[[ka, kb, kc]]
            lhs = increment_over(p, s, t) + increment_over(p, t, u)
            defects["additivity"] = max(
                defects["additivity"], abs(lhs - increment_over(p, s, u)))

        for _ in range(3):
            ka, kb = sorted(rng.choice(grid.n, size=2, replace=False))
            s, t = grid.times[[ka, kb]]
            nested = increment(increment(p, s), t)
            direct = increment(p, t)
            defects["nesting"] = max(
                defects["nesting"],
                float(np.max(np.abs(nested.values - direct.values))),
                _jump_mismatch(nested.jumps, direct.jumps))

        fam = IncrementFamily.from_path(p)
        again = IncrementFamily.from_path(associate(fam, kind=p.kind))
        defects["round_trip"] = max(
            float(np.max(np.abs(again.cell_increments - fam.cell_increments))),
            _jump_mismatch(again.jumps, fam.jumps))

        for _ in range(2):
            k = int(rng.integers(1, grid.n))
            s = float(grid.times[int(rng.integers(0, grid.n))])
            a = stop(increment(p, s), k)
            b = increment(stop(p, k), s)
            defects["stop_commute"] = max(
                defects["stop_commute"],
                float(np.max(np.abs(a.values - b.values))),
                _jump_mismatch(a.jumps, b.jumps))

        for nm in names:
            worst[nm] = max(worst[nm], defects[nm])
        rows.append((i, int(seeds[i])) + tuple(defects[nm] for nm in names))

    checks = [
        _check(f"{nm}_exact", worst[nm] == 0.0,
               f"max defect {_g(worst[nm])}", "defect exactly 0")
        for nm in names
    ]
    summary = {"n_paths": n_paths, "max_defects": {nm: worst[nm] for nm in names}}
    artifacts = {
        "identity_defects.csv": _csv(
            ("path", "seed") + tuple(names), rows),
        "sample_paths.svg": svgplot.line_chart(
            shown, title="lattice sample paths", y_label="value"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# finite-space decomposition


def _run_prop_3_7_decomposition(seed, n_paths, threads):
    tol = 1e-12
    space = FiniteFilteredSpace.binary_tree(8)
    w = random_walk_values(space, step=1.0)
    # anchored walk plus half the terminal value: increments are the walk's,
    # so the process is an increment martingale without being adapted
    m = w + 0.5 * w[:, -1][:, None]
    k_vals, n_vals = decompose(space, m, tol=tol)

    recon = float(np.max(np.abs(m - (k_vals + n_vals))))
    centering = max(
        float(np.max(np.abs(conditional_expectation(space, n_vals[:, t], t))))
        for t in range(space.n_times))
    orth = max(
        abs(expectation(space, k_vals[:, t] * n_vals[:, t]))
        for t in range(space.n_times))
    e_m2 = [expectation(space, m[:, t] ** 2) for t in range(space.n_times)]
    e_k2 = [expectation(space, k_vals[:, t] ** 2) for t in range(space.n_times)]
    e_n2 = [expectation(space, n_vals[:, t] ** 2) for t in range(space.n_times)]
    growth = max(b - a for a, b in zip(e_n2, e_n2[1:]))
    pythagoras = max(abs(m2 - k2 - n2)
                     for m2, k2, n2 in zip(e_m2, e_k2, e_n2))

    checks = [
        _check("reconstruction", recon <= tol,
               f"max |M - (K+N)| = {_g(recon)}", f"<= {tol:g}"),
        _check("remainder_centered", centering <= tol,
               f"max |E[N_t|F_t]| = {_g(centering)}", f"<= {tol:g}"),
        _check("orthogonality", orth <= tol,
               f"max |E[K_t N_t]| = {_g(orth)}", f"<= {tol:g}"),
        _check("remainder_second_moment_nonincreasing", growth <= tol,
               f"max increase {_g(growth)}", f"<= {tol:g}"),
        _check("second_moment_pythagoras", pythagoras <= tol,
               f"max |E[M^2]-E[K^2]-E[N^2]| = {_g(pythagoras)}", f"<= {tol:g}"),
    ]
    summary = {
        "depth": 8,
        "n_outcomes": space.n_outcomes,
        "second_moments": {"m": e_m2, "k": e_k2, "n": e_n2},
    }
    times = space.times
    artifacts = {
        "second_moments.csv": _csv(
            ("time", "e_m_sq", "e_k_sq", "e_n_sq"),
            list(zip(times, e_m2, e_k2, e_n2))),
        "decomposition.svg": svgplot.line_chart(
            [("E[M^2]", times, e_m2), ("E[K^2]", times, e_k2),
             ("E[N^2]", times, e_n2)],
            title="second moments along the split", y_label="second moment"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# realized QV of Brownian paths


def _run_qv_brownian(seed, n_paths, threads):
    grid = TimeGrid.uniform(0.0, 1.0, 2 ** 14)
    ens = run_ensemble("brownian_r", grid, n_paths, seed,
                       components=("path",), threads=threads)
    matrix = ens.values("path")
    sq = np.diff(matrix, axis=1) ** 2
    totals = sq.sum(axis=1)
    mean_qv = float(totals.mean())
    frac_near = float(np.mean((totals >= 0.9) & (totals <= 1.1)))

    checks = [
        _check("ensemble_mean_qv", 0.98 <= mean_qv <= 1.02,
               f"mean {mean_qv:.5f}", "in [0.98, 1.02]"),
        _check("per_path_qv_concentration", frac_near >= 0.99,
               f"fraction in [0.9, 1.1] = {frac_near:.4f}", ">= 0.99"),
    ]
    summary = {
        "n_paths": n_paths,
        "mean_qv": mean_qv,
        "min_qv": float(totals.min()),
        "max_qv": float(totals.max()),
        "fraction_in_0p9_1p1": frac_near,
    }
    qv_curves = np.concatenate(
        [np.zeros((matrix.shape[0], 1)), np.cumsum(sq, axis=1)], axis=1)
    cols = np.unique(np.r_[0: grid.n: 256, grid.n - 1])
    artifacts = {
        "qv_totals.csv": _csv(
            ("path", "seed", "qv_total"),
            [(i, int(ens.seeds[i]), totals[i]) for i in range(n_paths)]),
        "qv_fan.svg": svgplot.fan_chart(
            grid.times[cols], qv_curves[:, cols],
            title="realized QV fan", y_label="realized QV"),
        "paths_fan.svg": svgplot.fan_chart(
            grid.times[cols], matrix[:, cols],
            title="path fan", y_label="value"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# hazard pair martingale checks


def _run_hazard_martingale(seed, n_paths, threads):
    grid = TimeGrid.uniform(-20.0, 5.0, 250)
    k0 = grid.index_of(0.0)
    probes = [("-1", grid.index_of(-1.0)), ("0", k0), ("2", grid.index_of(2.0))]
    log2 = math.log(2.0)

    def per_path(i, bundle):
        m1 = bundle.path
        n1 = bundle.extras["counting1"]
        comp = bundle.compensator
        qv = realized_qv(m1)
        match = 1.0 if np.array_equal(qv.jump_sum.values, n1.values) else 0.0
        out = {"qv_match": match}
        out["a0_defect"] = (abs(comp.values[k0] - log2)
                            if n1.values[k0] == 0.0 else np.nan)
        for label, kt in probes:
            out[f"a_at_{label}"] = comp.values[kt]
        return out

    ens = run_ensemble("hazard_pair", grid, n_paths, seed,
                       components=("path", "counting1"),
                       per_path=per_path, threads=threads)
    report = martingale_test(ens, -1.0, 2.0, component="path", n_buckets=5)

    m1 = ens.values("path")
    moment_rows = []
    moment_ok = True
    for label, kt in probes:
        diff = m1[:, kt] ** 2 - ens.custom[f"a_at_{label}"]
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / math.sqrt(n_paths))
        moment_ok = moment_ok and abs(mean) <= 4.0 * se
        moment_rows.append((label, mean, se, mean / se if se else 0.0))

    qv_match = ens.custom["qv_match"]
    a0 = ens.custom["a0_defect"]
    survivors = int(np.sum(~np.isnan(a0)))
    a0_worst = float(np.nanmax(a0)) if survivors else math.inf

    checks = [
        _check("martingale_test", report.passed,
               f"max |z| = {report.max_abs_z:.2f}", "<= 4"),
        _check("second_moment_matches_compensator", moment_ok,
               "; ".join(f"t={r[0]}: mean {r[1]:.4g} (z {r[3]:.2f})"
                         for r in moment_rows),
               "|mean| <= 4 SE at each probe time"),
        _check("realized_qv_jumps_equal_counting",
               bool(np.all(qv_match == 1.0)),
               f"{int(qv_match.sum())}/{n_paths} paths bitwise equal",
               "all paths"),
        _check("initial_compensator_log2",
               survivors > 0 and a0_worst <= 1e-6,
               f"max defect {_g(a0_worst)} over {survivors} surviving paths",
               "<= 1e-6"),
    ]
    summary = {
        "n_paths": n_paths,
        "max_abs_z": report.max_abs_z,
        "p_value": report.p_value,
        "moment_probes": {r[0]: {"mean": r[1], "se": r[2]} for r in moment_rows},
        "surviving_at_0": survivors,
        "a0_max_defect": a0_worst,
    }

    # mean compensator curve from a fixed slice of regenerated bundles
    n_show = min(200, n_paths)
    comp_mean = np.zeros(grid.n)
    for i in range(n_show):
        comp_mean += ens.bundle(i).compensator.values
    comp_mean /= n_show
    artifacts = {
        "mtest_buckets.csv": _csv(
            ("bucket_lo", "bucket_hi", "count", "mean", "se", "z", "included"),
            [(b.lo, b.hi, b.count, b.mean, b.se, b.z, int(b.included))
             for b in report.buckets]),
        "zscores.svg": svgplot.bar_chart(
            [f"b{j}" for j in range(len(report.buckets))],
            [b.z for b in report.buckets],
            title="conditional increment z scores", y_label="z",
            h_lines=(-4.0, 4.0), symmetric=True),
        "second_moments.csv": _csv(
            ("t", "mean_m2_minus_a", "se", "z"), moment_rows),
        "compensation.svg": svgplot.line_chart(
            [("mean M^2", grid.times, (m1 ** 2).mean(axis=0)),
             (f"mean A (first {n_show})", grid.times, comp_mean)],
            title="second moment vs compensator", y_label="level"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# heavy-tailed event times


def _run_heavy_tail_divergence(seed, n_paths, threads):
    dist = parse_hazard_dist("heavy_tail")
    s_far = -1.0e6
    # mark compensator level at 0 anchored far in the past, u = -e^v for the
    # slowly decaying stretch plus the plain head integral near the origin
    tail, _ = _sciint.quad(
        lambda v: -math.exp(2.0 * v) * dist.hazard(-math.exp(v)),
        0.0, math.log(-s_far), limit=200)
    head, _ = _sciint.quad(lambda u: u * dist.hazard(u), -1.0, 0.0)
    b0 = tail + head

    spec = ModelSpec("hazard_pair",
                     {"dist1": "heavy_tail", "dist2": "heavy_tail"})
    grid = TimeGrid.log_tail(s_far, 5.0, 600, ratio=1e5)
    ens = run_ensemble(spec, grid, n_paths, seed,
                       components=("mark1", "mark2"), threads=threads)
    diff = ens.values("mark1") - ens.values("mark2")
    early = int(np.searchsorted(grid.times, s_far / 10.0, side="right"))
    osc = np.ptp(diff[:, :early], axis=1)
    max_osc = float(osc.max())

    checks = [
        _check("far_past_mark_level_diverges", abs(b0) > 5.0,
               f"|B_0 from {s_far:g}| = {abs(b0):.3f}", "> 5"),
        _check("identical_marks_difference_flat", max_osc <= 1e-2,
               f"max early-window oscillation {_g(max_osc)}",
               "<= 1e-2 over the earliest decade"),
    ]
    summary = {
        "n_paths": n_paths,
        "b0_quadrature": b0,
        "early_columns": early,
        "max_difference_oscillation": max_osc,
    }
    idx = np.arange(grid.n, dtype=np.float64)
    m1 = ens.values("mark1")
    shown = [(f"path {i}", idx, m1[i]) for i in range(min(4, n_paths))]
    artifacts = {
        "difference_oscillation.csv": _csv(
            ("path", "seed", "early_oscillation"),
            [(i, int(ens.seeds[i]), osc[i]) for i in range(n_paths)]),
        "mark_paths.svg": svgplot.line_chart(
            shown, title="compensated mark paths",
            x_label="grid index (log-tail spacing)", y_label="value"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# in-probability vs almost-sure stabilization


def _run_borel_cantelli_modes(seed, n_paths, threads):
    spec = ModelSpec("borel_cantelli",
                     {"n_max": 200, "level": 1.0, "phi_max": 1000.0})
    grid = TimeGrid.uniform(-200.0, 0.0, 2000)
    ens = run_ensemble(spec, grid, n_paths, seed,
                       components=("path",), threads=threads)
    rep = limit_detector(ens, tol=1e-3, window_frac=0.95, probe_frac=0.1)
    separation = rep.in_prob_fraction - rep.as_fraction

    checks = [
        _check("in_probability_near_far_end", rep.in_prob_fraction >= 0.9,
               f"fraction {rep.in_prob_fraction:.3f} at t = {rep.probe_time:g}",
               ">= 0.9"),
        _check("almost_sure_style_fails", rep.as_fraction <= 0.5,
               f"whole-window fraction {rep.as_fraction:.3f}", "<= 0.5"),
        _check("mode_separation", separation >= 0.3,
               f"separation {separation:.3f}", ">= 0.3"),
    ]
    summary = {
        "n_paths": n_paths,
        "in_prob_fraction": rep.in_prob_fraction,
        "as_fraction": rep.as_fraction,
        "separation": separation,
        "probe_time": rep.probe_time,
    }
    matrix = ens.values("path")
    shown = [(f"path {i}", grid.times, matrix[i]) for i in range(4)]
    artifacts = {
        "per_time_fractions.csv": _csv(
            ("time", "fraction_within_tol"),
            list(zip(rep.window_times, rep.per_time_fractions))),
        "fractions.svg": svgplot.line_chart(
            [("fraction small", rep.window_times, rep.per_time_fractions)],
            title="per-time stabilization fraction", y_label="fraction",
            y_range=(0.0, 1.05)),
        "sample_paths.svg": svgplot.line_chart(
            shown, title="recurring excursions", y_label="value"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# integral identities on jumpy paths


def _run_integral_properties(seed, n_paths, threads):
    grid = TimeGrid.uniform(-5.0, 5.0, 400)
    spec = ModelSpec("levy_r", {"jump_rate": 2.0})
    seeds = derive_path_seeds(seed, n_paths)
    phi = Deterministic(lambda t: np.sin(3.0 * t) + 0.5, name="wave")
    psi = Deterministic(lambda t: np.exp(0.3 * t), name="grow")

    names = ("increment", "linearity", "jump_formula", "qv_formula",
             "stopping", "associativity")
    worst = dict.fromkeys(names, 0.0)
    rows = []
    total_jumps = 0
    min_jumps = None
    first_path = None
    for i in range(n_paths):
        path = sample(spec, grid, int(seeds[i])).path
        if first_path is None:
            first_path = path
        n_jumps = len(path.jumps)
        total_jumps += n_jumps
        min_jumps = n_jumps if min_jumps is None else min(min_jumps, n_jumps)
        rep = verify_integral_properties(phi, psi, path,
                                         stop_index=300, s=-3.0)
        for nm in names:
            worst[nm] = max(worst[nm], rep.defects[nm])
        rows.append((i, int(seeds[i]), n_jumps)
                    + tuple(rep.defects[nm] for nm in names))

    checks = [
        _check(f"{nm}_exact", worst[nm] == 0.0,
               f"max defect {_g(worst[nm])}", "defect exactly 0")
        for nm in names
    ]
    checks.append(_check(
        "every_path_has_jumps", min_jumps is not None and min_jumps >= 1,
        f"min jumps per path {min_jumps}, total {total_jumps}", ">= 1"))

    summary = {
        "n_paths": n_paths,
        "total_jumps_checked": total_jumps,
        "max_defects": {nm: worst[nm] for nm in names},
    }
    integral = increment_integral(phi, first_path)
    artifacts = {
        "identity_defects.csv": _csv(
            ("path", "seed", "n_jumps") + tuple(names), rows),
        "integral_example.svg": svgplot.line_chart(
            [("integrator", grid.times, first_path.values),
             ("integral", grid.times, integral.values)],
            title="integral against a jumpy integrator", y_label="value"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# improper integrals vs the square-summability classifier


def _run_improper_iff_ll1(seed, n_paths, threads):
    grid = TimeGrid.log_tail(-1.0e4, 0.0, 800, ratio=5.0e4)
    combos = [
        ("exp(1)", "brownian_r"),
        ("exp(1)", "bump"),
        ("const(1)", "brownian_r"),
        ("const(1)", "bump"),
    ]
    checks = []
    combo_rows = []
    summary_combos = {}
    exp_brownian_values = []
    for j, (phi_text, model_name) in enumerate(combos):
        phi = parse_integrand(phi_text)
        spec = ModelSpec(model_name)
        seeds = derive_path_seeds(seed + j, n_paths)
        agree = 0
        verdict_counts = {}
        converged_count = 0
        for sd in seeds:
            bundle = sample(spec, grid, int(sd))
            rep = improper_integral(phi, bundle.path)
            verdict_counts[rep.verdict] = verdict_counts.get(rep.verdict, 0) + 1
            converged_count += int(rep.converged)
            if (rep.verdict == "LL1") == rep.converged:
                agree += 1
            if j == 0 and rep.converged:
                exp_brownian_values.append(rep.improper_value)
        frac = agree / n_paths
        label = f"{phi_text} x {model_name}"
        checks.append(_check(
            f"agreement[{label}]", frac >= 0.95,
            f"verdict matches convergence on {frac:.3f}", ">= 0.95"))
        combo_rows.append((label, n_paths, agree, frac, converged_count))
        summary_combos[label] = {
            "agreement": frac,
            "converged": converged_count,
            "verdicts": verdict_counts,
        }

    values = np.asarray(exp_brownian_values)
    var = float(values.var(ddof=1)) if values.size > 1 else math.nan
    checks.append(_check(
        "exp_brownian_variance", 0.45 <= var <= 0.55,
        f"variance {var:.4f} over {values.size} converged paths",
        "in [0.45, 0.55]"))

    summary = {
        "n_paths_per_combo": n_paths,
        "combos": summary_combos,
        "exp_brownian_variance": var,
    }
    bins = np.linspace(-3.0, 3.0, 25)
    counts, _ = np.histogram(values, bins=bins)
    centers = (bins[:-1] + bins[1:]) / 2.0
    labels = [f"{c:.1f}" if i % 4 == 0 else "" for i, c in enumerate(centers)]
    artifacts = {
        "agreement.csv": _csv(
            ("combo", "n", "agree", "fraction", "converged"), combo_rows),
        "value_histogram.svg": svgplot.bar_chart(
            labels, counts, title="improper values, exp(1) x brownian_r",
            y_label="count"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# deterministic volatility time change


def _run_time_change_levy(seed, n_paths, threads):
    grid = TimeGrid.uniform(0.0, 5.0, 2000)
    span = grid.t_max - grid.t_min
    # 13-bit weights and 40-bit driver cells keep every product, square and
    # quotient exactly representable, so the round trip is bitwise
    weights = round_sig(np.sqrt(1.0 + 0.5 * np.sin(grid.times[:-1])), 13)
    phi = Tabulated(weights, name="vol")

    def density(t):
        return np.square(round_sig(
            np.sqrt(1.0 + 0.5 * np.sin(np.asarray(t, dtype=np.float64))), 13))

    seeds = derive_path_seeds(seed, n_paths)
    exact = 0
    qv_per_unit = np.empty(n_paths)
    rows = []
    example = None
    for i in range(n_paths):
        raw = sample("brownian_r", grid, int(seeds[i])).path
        driver = SamplePath.from_cells(grid, round_sig(raw.cells, 40),
                                       v0=0.0, kind="linear")
        scaled = increment_integral(phi, driver)
        recovered = time_change_to_bm(scaled, density)
        ok = (np.array_equal(recovered.cells, driver.cells)
              and np.array_equal(recovered.values, driver.values))
        exact += int(ok)
        qv_per_unit[i] = float(np.sum(recovered.cells ** 2)) / span
        rows.append((i, int(seeds[i]), int(ok), qv_per_unit[i]))
        if example is None:
            example = (driver, scaled)

    mean_qv = float(qv_per_unit.mean())
    frac_near = float(np.mean((qv_per_unit >= 0.9) & (qv_per_unit <= 1.1)))
    checks = [
        _check("round_trip_exact", exact == n_paths,
               f"{exact}/{n_paths} paths bitwise recovered", "all paths"),
        _check("recovered_qv_rate_mean", 0.9 <= mean_qv <= 1.1,
               f"mean QV per unit time {mean_qv:.4f}", "in [0.9, 1.1]"),
        _check("recovered_qv_rate_concentration", frac_near >= 0.95,
               f"fraction in [0.9, 1.1] = {frac_near:.3f}", ">= 0.95"),
    ]
    summary = {
        "n_paths": n_paths,
        "exact_round_trips": exact,
        "mean_qv_per_unit": mean_qv,
        "min_qv_per_unit": float(qv_per_unit.min()),
        "max_qv_per_unit": float(qv_per_unit.max()),
    }
    driver, scaled = example
    cols = np.unique(np.r_[0: grid.n: 10, grid.n - 1])
    artifacts = {
        "round_trip.csv": _csv(
            ("path", "seed", "exact", "qv_per_unit"), rows),
        "time_change.svg": svgplot.line_chart(
            [("driver", grid.times[cols], driver.values[cols]),
             ("volatility-scaled", grid.times[cols], scaled.values[cols])],
            title="driver and its volatility scaling", y_label="value"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# entrance from far above at shrinking start levels


def _run_inverse_bessel3_entrance(seed, n_paths, threads):
    grid = TimeGrid.uniform(-8.0, 0.0, 400)
    eps_levels = (0.1, 0.05)
    checks = []
    summary_eps = {}
    medians = {}
    curves = []
    z_labels = []
    z_values = []
    bucket_rows = []
    for j, eps in enumerate(eps_levels):
        spec = ModelSpec("inverse_bessel3", {"eps": eps})
        ens = run_ensemble(spec, grid, n_paths, seed + j,
                           components=("path",), threads=threads)
        # conditional-increment test away from the large-level region: the
        # localizer freezes each path at its first excursion above 30
        rep = martingale_test(ens, -7.0, -5.0, n_buckets=5,
                              localizer=(0.0, 30.0))
        matrix = ens.values("path")
        med_curve = np.median(matrix, axis=0)
        medians[eps] = float(med_curve[0])
        curves.append((f"eps={eps:g}", grid.times, med_curve))
        checks.append(_check(
            f"localized_martingale_test[eps={eps:g}]", rep.passed,
            f"max |z| = {rep.max_abs_z:.2f}", "<= 4"))
        summary_eps[f"{eps:g}"] = {
            "max_abs_z": rep.max_abs_z,
            "p_value": rep.p_value,
            "median_at_t_min": medians[eps],
        }
        for b in rep.buckets:
            z_labels.append(f"{eps:g}/b{len(z_labels) % 5}")
            z_values.append(b.z)
            bucket_rows.append((f"{eps:g}", b.lo, b.hi, b.count, b.mean,
                                b.se, b.z, int(b.included)))

    checks.append(_check(
        "entrance_level_ordering", medians[0.05] > medians[0.1],
        f"median at t_min: eps=0.05 gives {medians[0.05]:.3f}, "
        f"eps=0.1 gives {medians[0.1]:.3f}", "smaller eps starts higher"))

    summary = {"n_paths": n_paths, "levels": summary_eps}
    artifacts = {
        "mtest_buckets.csv": _csv(
            ("eps", "bucket_lo", "bucket_hi", "count", "mean", "se", "z",
             "included"), bucket_rows),
        "median_curves.svg": svgplot.line_chart(
            curves, title="median path by start level", y_label="median value"),
        "zscores.svg": svgplot.bar_chart(
            z_labels, z_values, title="localized test z scores",
            y_label="z", h_lines=(-4.0, 4.0), symmetric=True),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# value stabilization vs QV stabilization contingency


def _run_convergence_vs_qv(seed, n_paths, threads):
    cases = [
        (ModelSpec("brownian_r"), TimeGrid.uniform(-50.0, 0.0, 500)),
        (ModelSpec("bump"), TimeGrid.uniform(-8.0, 1.0, 900)),
        (ModelSpec("borel_cantelli"), TimeGrid.uniform(-200.0, 0.0, 2000)),
    ]
    checks = []
    rows = []
    summary_models = {}
    bar_labels = []
    bar_values = []
    for j, (spec, grid) in enumerate(cases):
        ens = run_ensemble(spec, grid, n_paths, seed + j,
                           components=("path",), threads=threads)
        rep = convergence_vs_qv_verdict(ens)
        off = rep.off_diagonal_fraction
        checks.append(_check(
            f"off_diagonal[{spec.name}]", off <= 0.05,
            f"fraction {off:.4f} over {rep.conclusive} conclusive paths",
            "<= 0.05"))
        rows.append((spec.name, rep.counts["both_stabilize"],
                     rep.counts["value_only"], rep.counts["qv_only"],
                     rep.counts["neither"], rep.inconclusive, off))
        summary_models[spec.name] = rep.json_summary()
        short = spec.name[:3]
        for cell in ("both_stabilize", "value_only", "qv_only", "neither"):
            bar_labels.append(f"{short}:{cell.split('_')[0]}")
            bar_values.append(rep.counts[cell])

    summary = {"n_paths_per_model": n_paths, "models": summary_models}
    artifacts = {
        "contingency.csv": _csv(
            ("model", "both_stabilize", "value_only", "qv_only", "neither",
             "inconclusive", "off_diagonal_fraction"), rows),
        "contingency.svg": svgplot.bar_chart(
            bar_labels, bar_values, title="stabilization contingency counts",
            y_label="paths"),
    }
    return checks, summary, artifacts


# ---------------------------------------------------------------------------
# registry and runner


@dataclass(frozen=True)
class ExperimentEntry:
    runner: object
    seed: int
    n_paths: int
    budget_seconds: float
    description: str


REGISTRY = {
    "core_identities": ExperimentEntry(
        _run_core_identities, 101, 100, 5.0,
        "windowed-increment algebra is exact on random lattice paths"),
    "prop_3_7_decomposition": ExperimentEntry(
        _run_prop_3_7_decomposition, 202, 256, 5.0,
        "finite-tree split into martingale plus centered remainder"),
    "qv_brownian": ExperimentEntry(
        _run_qv_brownian, 303, 256, 10.0,
        "realized QV of unit Brownian paths concentrates at t"),
    "hazard_martingale": ExperimentEntry(
        _run_hazard_martingale, 404, 20000, 30.0,
        "compensated single-jump martingale passes moment and QV checks"),
    "heavy_tail_divergence": ExperimentEntry(
        _run_heavy_tail_divergence, 606, 100, 10.0,
        "slow-tailed mark compensator diverges; identical marks cancel"),
    "borel_cantelli_modes": ExperimentEntry(
        _run_borel_cantelli_modes, 707, 1000, 60.0,
        "in-probability stabilization without the almost-sure mode"),
    "integral_properties": ExperimentEntry(
        _run_integral_properties, 808, 100, 10.0,
        "integral identities hold with defect zero on jumpy paths"),
    "improper_iff_ll1": ExperimentEntry(
        _run_improper_iff_ll1, 909, 1000, 30.0,
        "improper-integral convergence tracks the square-summability class"),
    "time_change_levy": ExperimentEntry(
        _run_time_change_levy, 1001, 100, 10.0,
        "volatility time change inverts bitwise and returns a unit-rate QV"),
    "inverse_bessel3_entrance": ExperimentEntry(
        _run_inverse_bessel3_entrance, 1717, 10000, 60.0,
        "entrance paths pass the localized conditional-increment test"),
    "convergence_vs_qv": ExperimentEntry(
        _run_convergence_vs_qv, 505, 200, 60.0,
        "path-value and QV stabilization verdicts agree per model"),
}


def list_experiments():
    """(name, description, budget_seconds) rows in registry order."""
    return [(name, e.description, e.budget_seconds)
            for name, e in REGISTRY.items()]


def run_experiment(name, out_dir="", seed=None, n_paths=None, threads=1):
    """Run one registry experiment; write artifacts when out_dir is given.

    Raises ValueError for unknown names and propagates OSError from an
    unwritable output directory after removing any partially written files.
    """
    entry = REGISTRY.get(name)
    if entry is None:
        raise ValueError(
            f"unknown experiment {name!r}; valid: {', '.join(REGISTRY)}")
    used_seed = entry.seed if seed is None else int(seed)
    used_paths = entry.n_paths if n_paths is None else int(n_paths)
    if used_paths < 1:
        raise ValueError("n_paths must be >= 1")

    started = time.time()
    t0 = time.perf_counter()
    checks, extra, artifacts = entry.runner(used_seed, used_paths, threads)
    elapsed = time.perf_counter() - t0

    summary = {
        "experiment": name,
        "schema_version": SCHEMA_VERSION,
        "seed": used_seed,
        "passed": all(c.passed for c in checks),
        "checks": [
            {"name": c.name, "passed": c.passed, "observed": c.observed,
             "requirement": c.requirement}
            for c in checks
        ],
    }
    summary.update(extra)
    result = ExperimentResult(
        name=name,
        passed=all(c.passed for c in checks),
        checks=list(checks),
        summary=summary,
        artifacts=dict(artifacts),
        elapsed_seconds=elapsed,
        out_dir=out_dir,
    )
    if out_dir:
        result.files = _write_outputs(out_dir, summary, artifacts,
                                      started, elapsed)
    return result


def _write_outputs(out_dir, summary, artifacts, started, elapsed):
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _emit(filename, text):
        target = os.path.join(out_dir, filename)
        with open(target, "w") as f:
            f.write(text)
        written.append(target)

    try:
        for filename in sorted(artifacts):
            _emit(filename, artifacts[filename])
        _emit("summary.json",
              json.dumps(summary, sort_keys=True, indent=2) + "\n")
        meta = {
            "elapsed_seconds": elapsed,
            "finished_unix": started + elapsed,
            "started_unix": started,
        }
        _emit("run_meta.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")
    except OSError:
        for target in written:
            try:
                os.remove(target)
            except OSError:
                pass
        raise
    return [os.path.basename(p) for p in written]
