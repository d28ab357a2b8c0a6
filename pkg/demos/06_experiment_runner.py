"""Driving the experiment registry from Python.

Every named experiment is a deterministic function of (seed, n_paths): it
returns named pass/fail checks plus artifact files (CSV tables and SVG
charts). The CLI command ``incmart experiment run NAME`` wraps exactly this
call, so scripted runs and shell runs produce identical bytes.
"""

import os
import tempfile

from incmart.experiments import list_experiments, run_experiment

print("registered experiments:")
for name, description, budget in list_experiments():
    print(f"  {name:<28} {description} (budget {budget:.0f} s)")
print()

out = os.path.join(tempfile.mkdtemp(prefix="incmart_demo_"), "qv_brownian")
result = run_experiment("qv_brownian", out_dir=out)
print(result.text_report())
print()
print(f"artifacts under {out}:")
for fname in result.files:
    size = os.path.getsize(os.path.join(out, fname))
    print(f"  {fname:<24} {size:>8} bytes")
print()
print("equivalent shell command:")
print(f"  incmart experiment run qv_brownian --out {out}")
