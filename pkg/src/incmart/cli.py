"""Command line front end.

Subcommands: simulate, qv, integrate, mtest, experiment run/list. A config
file supplies defaults; command-line flags override it. Exit codes: 0 when
every configured check passes, 1 on check failure or IO problems, 2 on
usage or config errors.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, parse_config, parse_grid_spec
from .experiments import list_experiments, run_experiment
from .integrals import improper_integral, parse_integrand
from .mcstats import martingale_test, run_ensemble
from .models import MODEL_NAMES, ModelSpec, validate_model
from .quadvar import realized_qv
from . import svgplot


def _coerce(text):
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            pass
    return text


def _parse_params(pairs):
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"--param expects key=value, got {pair!r}")
        params[key.strip()] = _coerce(value.strip())
    return params


def build_parser():
    # the global flags live on a parent parser with SUPPRESS defaults so they
    # are accepted both before and after the subcommand without the second
    # parse clobbering the first
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS,
                   help="config file supplying defaults")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="master seed")
    g.add_argument("--paths", type=int, default=argparse.SUPPRESS,
                   help="number of sample paths")
    g.add_argument("--grid", default=argparse.SUPPRESS,
                   help="time grid as t_min:t_max:n_cells")
    g.add_argument("--spacing", choices=("uniform", "log-tail"),
                   default=argparse.SUPPRESS,
                   help="grid spacing (default uniform)")
    g.add_argument("--ratio", type=float, default=argparse.SUPPRESS,
                   help="widest/narrowest cell ratio for log-tail spacing")
    g.add_argument("--out", default=argparse.SUPPRESS,
                   help="output directory for artifacts")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads over paths")

    p = argparse.ArgumentParser(
        prog="incmart",
        parents=[common],
        allow_abbrev=False,
        description="simulation and verification toolkit for "
                    "increment processes on the whole real line")
    sub = p.add_subparsers(dest="command", required=True)

    def add_model(sp):
        sp.add_argument("--model", choices=MODEL_NAMES, help="model name")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="model parameter override (repeatable)")

    sp = sub.add_parser("simulate", parents=[common],
                        help="draw paths and write them out", allow_abbrev=False)
    add_model(sp)
    sp.add_argument("--components", default="path",
                    help="comma-separated bundle components to keep")

    sp = sub.add_parser("qv", parents=[common],
                        help="realized quadratic variation per path", allow_abbrev=False)
    add_model(sp)

    sp = sub.add_parser("integrate", parents=[common],
                        help="integrate an integrand against sampled paths", allow_abbrev=False)
    add_model(sp)
    sp.add_argument("--integrand", default="const(1)",
                    help="e.g. exp(1), const(2), poly(1), indicator(-1,0)")

    sp = sub.add_parser("mtest", parents=[common],
                        help="conditional-increment bucket test", allow_abbrev=False)
    add_model(sp)
    sp.add_argument("--s", type=float, required=True, help="window start")
    sp.add_argument("--t", type=float, required=True, help="window end")
    sp.add_argument("--buckets", type=int, default=5)
    sp.add_argument("--component", default="path")
    sp.add_argument("--localizer", metavar="ANCHOR:LEVEL",
                    help="freeze paths after |value-anchor| exceeds level")

    sp = sub.add_parser("experiment", parents=[common],
                        help="registry experiments", allow_abbrev=False)
    sub2 = sp.add_subparsers(dest="experiment_command", required=True)
    spr = sub2.add_parser("run", parents=[common],
                          help="run one registry experiment", allow_abbrev=False)
    spr.add_argument("name", nargs="?", default="",
                     help="experiment name (or set it in --config)")
    sub2.add_parser("list", parents=[common],
                    help="list registry experiments", allow_abbrev=False)
    return p


def _load_config(args):
    path = getattr(args, "config", None)
    if not path:
        return ExperimentConfig()
    with open(path) as f:
        return parse_config(f.read())


def _resolve(args, cfg):
    """Merge config defaults and flags into one effective config."""
    def opt(name):
        return getattr(args, name, None)

    if opt("grid") is not None:
        cfg.t_min, cfg.t_max, cfg.n_cells = parse_grid_spec(opt("grid"))
    if opt("spacing") is not None:
        cfg.spacing = opt("spacing")
    if opt("ratio") is not None:
        if opt("ratio") <= 1:
            raise ValueError("--ratio must be > 1")
        cfg.log_tail_ratio = opt("ratio")
    if opt("seed") is not None:
        cfg.master_seed = opt("seed")
        cfg.provided.add("seed")
    if opt("paths") is not None:
        if opt("paths") < 1:
            raise ValueError("--paths must be >= 1")
        cfg.n_paths = opt("paths")
        cfg.provided.add("paths")
    if opt("out") is not None:
        cfg.out_dir = opt("out")
    if opt("threads") is not None:
        if opt("threads") < 1:
            raise ValueError("--threads must be >= 1")
        cfg.threads = opt("threads")
    model_name = getattr(args, "model", None)
    params = _parse_params(getattr(args, "param", None))
    if model_name:
        errors = validate_model(model_name, params)
        if errors:
            raise ValueError("; ".join(errors))
        cfg.model = ModelSpec(model_name, params)
    elif params:
        if cfg.model is None:
            raise ValueError("--param given without --model")
        merged = dict(cfg.model.params)
        merged.update(params)
        cfg.model = ModelSpec(cfg.model.name, merged)
    return cfg


def _require_model(cfg):
    if cfg.model is None:
        raise ValueError(f"a model is required; valid: {', '.join(MODEL_NAMES)}")
    return cfg.model


def _g(x):
    return f"{float(x):.17g}"


def _write_files(out_dir, files):
    """Write all named text files or none of them."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    try:
        for name in sorted(files):
            target = os.path.join(out_dir, name)
            with open(target, "w") as f:
                f.write(files[name])
            written.append(target)
    except OSError:
        for target in written:
            try:
                os.remove(target)
            except OSError:
                pass
        raise
    return written


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _cmd_simulate(args, cfg, out):
    model = _require_model(cfg)
    grid = cfg.build_grid()
    components = tuple(c.strip() for c in args.components.split(",") if c.strip())
    ens = run_ensemble(model, grid, cfg.n_paths, cfg.master_seed,
                       components=components, threads=cfg.threads)
    lines = [f"model {model.name}, {cfg.n_paths} paths on "
             f"[{grid.t_min:g}, {grid.t_max:g}] with {grid.n - 1} cells"]
    for comp in components:
        final = ens.values(comp)[:, -1]
        lines.append(f"  {comp}: final mean {final.mean():.6g}, "
                     f"sd {final.std(ddof=1) if final.size > 1 else 0.0:.6g}")
    print("\n".join(lines))
    if cfg.out_dir:
        matrix = ens.values(components[0])
        header = ["time"] + [f"path_{i}" for i in range(cfg.n_paths)]
        rows = [",".join(header)]
        for k in range(grid.n):
            rows.append(",".join([_g(grid.times[k])]
                                 + [_g(matrix[i, k]) for i in range(cfg.n_paths)]))
        shown = [(f"path {i}", grid.times, matrix[i])
                 for i in range(min(6, cfg.n_paths))]
        files = {
            "paths.csv": "\n".join(rows) + "\n",
            "paths.svg": svgplot.line_chart(
                shown, title=f"{model.name} sample paths", y_label="value"),
            "summary.json": _json_text({
                "command": "simulate",
                "components": list(components),
                "model": {"name": model.name, "params": model.params},
                "n_paths": cfg.n_paths,
                "seed": cfg.master_seed,
            }),
        }
        if cfg.n_paths >= 8:
            files["paths_fan.svg"] = svgplot.fan_chart(
                grid.times, matrix, title=f"{model.name} path fan",
                y_label="value")
        out.extend(_write_files(cfg.out_dir, files))
    return 0


def _cmd_qv(args, cfg, out):
    model = _require_model(cfg)
    grid = cfg.build_grid()
    ens = run_ensemble(model, grid, cfg.n_paths, cfg.master_seed,
                       components=("path",), threads=cfg.threads)
    rows = []
    totals = np.empty(cfg.n_paths)
    tails = {}
    for i in range(cfg.n_paths):
        rep = realized_qv(ens.bundle(i).path)
        totals[i] = rep.total()
        tails[rep.tail] = tails.get(rep.tail, 0) + 1
        rows.append((i, int(ens.seeds[i]), totals[i],
                     rep.jump_sum.values[-1], rep.tail))
    print(f"model {model.name}: mean realized QV {totals.mean():.6g}, "
          f"tail verdicts {tails}")
    if cfg.out_dir:
        matrix = ens.values("path")
        sq = np.diff(matrix, axis=1) ** 2
        curves = np.concatenate(
            [np.zeros((matrix.shape[0], 1)), np.cumsum(sq, axis=1)], axis=1)
        files = {
            "qv.csv":
            "\n".join([",".join(("path", "seed", "qv_total", "jump_sum", "tail"))]
                      + [f"{i},{sd},{_g(q)},{_g(j)},{t}"
                         for i, sd, q, j, t in rows]) + "\n",
            "qv_curves.svg": svgplot.fan_chart(
                grid.times, curves, title=f"{model.name} realized QV",
                y_label="realized QV") if cfg.n_paths >= 8 else
            svgplot.line_chart(
                [(f"path {i}", grid.times, curves[i])
                 for i in range(cfg.n_paths)],
                title=f"{model.name} realized QV", y_label="realized QV"),
            "summary.json": _json_text({
                "command": "qv",
                "mean_qv": float(totals.mean()),
                "model": {"name": model.name, "params": model.params},
                "n_paths": cfg.n_paths,
                "seed": cfg.master_seed,
                "tail_verdicts": tails,
            }),
        }
        out.extend(_write_files(cfg.out_dir, files))
    return 0


def _cmd_integrate(args, cfg, out):
    model = _require_model(cfg)
    grid = cfg.build_grid()
    phi = parse_integrand(args.integrand)
    ens = run_ensemble(model, grid, cfg.n_paths, cfg.master_seed,
                       components=("path",), threads=cfg.threads)
    rows = []
    verdicts = {}
    converged_values = []
    for i in range(cfg.n_paths):
        rep = improper_integral(phi, ens.bundle(i).path)
        verdicts[rep.verdict] = verdicts.get(rep.verdict, 0) + 1
        value = rep.improper_value if rep.converged else math.nan
        if rep.converged:
            converged_values.append(rep.improper_value)
        rows.append((i, int(ens.seeds[i]), int(rep.converged), value,
                     rep.verdict))
    n_conv = sum(int(r[2]) for r in rows)
    print(f"integrand {args.integrand} against {model.name}: "
          f"{n_conv}/{cfg.n_paths} improper integrals converged, "
          f"classifier verdicts {verdicts}")
    if cfg.out_dir:
        files = {
            "integrate.csv":
            "\n".join([",".join(("path", "seed", "converged",
                                 "improper_value", "verdict"))]
                      + [f"{i},{sd},{c},{_g(v)},{t}"
                         for i, sd, c, v, t in rows]) + "\n",
            "summary.json": _json_text({
                "command": "integrate",
                "converged": n_conv,
                "integrand": args.integrand,
                "mean_converged_value": (float(np.mean(converged_values))
                                         if converged_values else None),
                "model": {"name": model.name, "params": model.params},
                "n_paths": cfg.n_paths,
                "seed": cfg.master_seed,
                "verdicts": verdicts,
            }),
        }
        out.extend(_write_files(cfg.out_dir, files))
    return 0


def _cmd_mtest(args, cfg, out):
    model = _require_model(cfg)
    grid = cfg.build_grid()
    localizer = None
    if args.localizer:
        anchor, sep, level = args.localizer.partition(":")
        if not sep:
            raise ValueError("--localizer expects ANCHOR:LEVEL")
        localizer = (float(anchor), float(level))
    n_buckets = int(cfg.test_params.get("buckets", args.buckets))
    ens = run_ensemble(model, grid, cfg.n_paths, cfg.master_seed,
                       components=(args.component,), threads=cfg.threads)
    report = martingale_test(ens, args.s, args.t, n_buckets=n_buckets,
                             component=args.component, localizer=localizer)
    print(report.text_report())
    if cfg.out_dir:
        files = {
            "mtest.json": _json_text(report.json_summary()),
            "mtest_buckets.csv":
            "\n".join([",".join(("bucket_lo", "bucket_hi", "count", "mean",
                                 "se", "z", "included"))]
                      + [f"{_g(b.lo)},{_g(b.hi)},{b.count},{_g(b.mean)},"
                         f"{_g(b.se)},{_g(b.z)},{int(b.included)}"
                         for b in report.buckets]) + "\n",
            "zscores.svg": svgplot.bar_chart(
                [f"b{j}" for j in range(len(report.buckets))],
                [b.z for b in report.buckets],
                title="conditional increment z scores", y_label="z",
                h_lines=(-4.0, 4.0), symmetric=True),
        }
        out.extend(_write_files(cfg.out_dir, files))
    return 0 if report.passed else 1


def _cmd_experiment(args, cfg, out):
    if args.experiment_command == "list":
        rows = list_experiments()
        width = max(len(name) for name, _, _ in rows)
        for name, desc, budget in rows:
            print(f"{name:<{width}}  [{budget:>4.0f} s]  {desc}")
        return 0
    name = args.name or cfg.experiment
    if not name:
        raise ValueError("experiment name required (argument or config)")
    result = run_experiment(
        name,
        out_dir=cfg.out_dir,
        seed=cfg.master_seed if "seed" in cfg.provided else None,
        n_paths=cfg.n_paths if "paths" in cfg.provided else None,
        threads=cfg.threads,
    )
    print(result.text_report())
    if not result.passed:
        failed = [c.name for c in result.checks if not c.passed]
        print(json.dumps({"failed_checks": failed}, sort_keys=True))
    out.extend(os.path.join(cfg.out_dir, f) for f in result.files)
    return 0 if result.passed else 1


def _merge_value_flags(argv, names=("--grid", "--localizer")):
    """Join 'FLAG value' into 'FLAG=value' so values may start with '-'."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in names and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_value_flags(list(argv)))
    written = []
    try:
        cfg = _resolve(args, _load_config(args))
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    handlers = {
        "simulate": _cmd_simulate,
        "qv": _cmd_qv,
        "integrate": _cmd_integrate,
        "mtest": _cmd_mtest,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args, cfg, written)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
