"""End-to-end acceptance runs.

Every registry experiment executes through the command line entry point with
its fixed default seed, writes its artifacts, and must pass all of its checks
inside the stated runtime budget. One test per experiment; each prints a
single PASS/FAIL line with the observed runtime.
"""

import json
import time

import pytest

from incmart.cli import main
from incmart.experiments import REGISTRY


@pytest.mark.parametrize("name", list(REGISTRY))
def test_criterion(name, tmp_path, capsys):
    budget = REGISTRY[name].budget_seconds
    out_dir = tmp_path / name
    t0 = time.perf_counter()
    code = main(["experiment", "run", name, "--out", str(out_dir)])
    elapsed = time.perf_counter() - t0
    stdout = capsys.readouterr().out

    passed = code == 0 and elapsed < budget
    with capsys.disabled():
        print(f"\n{'PASS' if passed else 'FAIL'} {name} "
              f"({elapsed:.1f} s, budget {budget:.0f} s)")

    assert code == 0, f"{name} checks failed:\n{stdout}"
    assert elapsed < budget, f"{name} took {elapsed:.1f} s (> {budget:.0f} s)"

    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["passed"] is True
    assert all(c["passed"] for c in summary["checks"])
    assert (out_dir / "run_meta.json").exists()
