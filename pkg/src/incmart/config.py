"""Line-oriented experiment configuration.

Format: `key = value` lines, optional `[model]` section for model parameters,
`#` comments, blank lines ignored. Parsing collects every problem it finds and
reports them together rather than stopping at the first.
"""

from dataclasses import dataclass, field

from .models import ModelSpec, validate_model
from .paths import TimeGrid

SPACINGS = ("uniform", "log-tail")

_TOP_KEYS = (
    "experiment", "model", "grid", "spacing", "log_tail_ratio", "paths",
    "seed", "out", "threads", "buckets", "tol", "probes",
)


class ConfigError(ValueError):
    """Carries the full list of validation problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    """Validated inputs for one run: what to simulate and how to report it."""

    experiment: str = ""
    model: ModelSpec = None
    t_min: float = 0.0
    t_max: float = 1.0
    n_cells: int = 100
    spacing: str = "uniform"
    log_tail_ratio: float = 50.0
    n_paths: int = 100
    master_seed: int = 0
    out_dir: str = ""
    threads: int = 1
    test_params: dict = field(default_factory=dict)
    # keys the user actually set, so callers can tell overrides from defaults
    provided: set = field(default_factory=set)

    def build_grid(self):
        if self.spacing == "uniform":
            return TimeGrid.uniform(self.t_min, self.t_max, self.n_cells)
        return TimeGrid.log_tail(self.t_min, self.t_max, self.n_cells,
                                 ratio=self.log_tail_ratio)


def parse_grid_spec(text):
    """'t_min:t_max:n_cells' -> (float, float, int); raises ValueError."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be t_min:t_max:n_cells, got {text!r}")
    try:
        t_min, t_max = float(parts[0]), float(parts[1])
        n_cells = int(parts[2])
    except ValueError:
        raise ValueError(f"grid must be t_min:t_max:n_cells, got {text!r}")
    if not t_max > t_min:
        raise ValueError(f"grid needs t_max > t_min, got {text!r}")
    if n_cells < 2:
        raise ValueError(f"grid needs at least 2 cells, got {n_cells}")
    return t_min, t_max, n_cells


def _coerce(text):
    """Best-effort scalar: int, then float, else the stripped string."""
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            pass
    return text


def _parse_lines(text, errors):
    """Raw (section, key, value) assignment triples, syntax errors collected."""
    assignments = []
    section = ""
    for lineno, raw in enumerate(str(text).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {lineno}: unterminated section header {raw.strip()!r}")
                continue
            section = line[1:-1].strip().lower()
            if section != "model":
                errors.append(f"line {lineno}: unknown section [{section}]; valid: [model]")
                section = ""
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key = value, got {raw.strip()!r}")
            continue
        key, _, value = line.partition("=")
        assignments.append((section, key.strip().lower(), value.strip(), lineno))
    return assignments


def parse_config(text):
    """Parse and validate config text; raises ConfigError listing ALL problems."""
    errors = []
    assignments = _parse_lines(text, errors)

    top = {}
    model_params = {}
    for section, key, value, lineno in assignments:
        if section == "model":
            if key == "name":
                top.setdefault("model", value)
            else:
                model_params[key] = _coerce(value)
            continue
        if key not in _TOP_KEYS:
            errors.append(
                f"line {lineno}: unknown key {key!r}; valid: {', '.join(_TOP_KEYS)}")
            continue
        if key in top:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        top[key] = value

    cfg = ExperimentConfig()
    cfg.provided = set(top)
    cfg.experiment = top.get("experiment", "")
    cfg.out_dir = top.get("out", "")

    model_name = top.get("model", "")
    if model_name:
        model_errors = validate_model(model_name, model_params)
        if model_errors:
            errors.extend(model_errors)
        else:
            cfg.model = ModelSpec(model_name, model_params)
    elif model_params:
        errors.append("[model] parameters given without a model name")

    if "grid" in top:
        try:
            cfg.t_min, cfg.t_max, cfg.n_cells = parse_grid_spec(top["grid"])
        except ValueError as exc:
            errors.append(str(exc))

    spacing = top.get("spacing", "uniform")
    if spacing not in SPACINGS:
        errors.append(f"spacing must be one of {', '.join(SPACINGS)}, got {spacing!r}")
    else:
        cfg.spacing = spacing

    def _int_field(key, default, minimum, label):
        raw = top.get(key)
        if raw is None:
            return default
        value = _coerce(raw)
        if not isinstance(value, int):
            errors.append(f"{key} must be an integer, got {raw!r}")
            return default
        if value < minimum:
            errors.append(f"{key} must be >= {minimum} ({label}), got {value}")
            return default
        return value

    cfg.n_paths = _int_field("paths", 100, 1, "at least one path")
    cfg.master_seed = _int_field("seed", 0, -(2 ** 63), "any integer")
    cfg.threads = _int_field("threads", 1, 1, "at least one worker")

    if "log_tail_ratio" in top:
        value = _coerce(top["log_tail_ratio"])
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 1:
            errors.append(f"log_tail_ratio must be a number > 1, got {top['log_tail_ratio']!r}")
        else:
            cfg.log_tail_ratio = float(value)

    for key in ("buckets", "tol", "probes"):
        if key in top:
            value = _coerce(top[key])
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                errors.append(f"{key} must be a positive number, got {top[key]!r}")
            else:
                cfg.test_params[key] = value

    if errors:
        raise ConfigError(errors)
    return cfg
