"""incmart: simulation and verification toolkit for increment martingales on R.

The package treats processes indexed by the whole real line through their
windowed increments, provides exact finite filtered spaces for conditional
expectation identities, a zoo of example processes (compensated hazards,
time-changed bumps, entrance-boundary diffusions), realized and predictable
quadratic variation, elementary increment integrals, and Monte Carlo
statistics with a reproducible experiment runner.
"""

from .paths import (
    TimeGrid,
    SamplePath,
    IncrementFamily,
    increment,
    increment_over,
    stop,
    associate,
    check_consistency,
    anchor_at_minus_infinity,
)

__version__ = "0.1.0"

__all__ = [
    "TimeGrid",
    "SamplePath",
    "IncrementFamily",
    "increment",
    "increment_over",
    "stop",
    "associate",
    "check_consistency",
    "anchor_at_minus_infinity",
    "__version__",
]
