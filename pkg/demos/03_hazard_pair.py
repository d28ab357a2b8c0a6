"""A single-jump martingale with an exact compensator.

An event time tau with a known distribution on R gives the cleanest example
of a martingale indexed by the whole line: the counting process N_t = 1 when
tau <= t, compensated by the cumulative hazard stopped at tau. Because the
compensator is evaluated analytically, identities that would normally hold
only in the limit hold bitwise per path here.
"""

import math

import numpy as np

from incmart.models import ModelSpec, sample
from incmart.paths import TimeGrid
from incmart.quadvar import realized_qv
from incmart.mcstats import martingale_test, run_ensemble

grid = TimeGrid.uniform(-20.0, 5.0, 250)
bundle = sample("hazard_pair", grid, seed=5)

tau = bundle.marks["tau1"]
m = bundle.path
a = bundle.compensator
n = bundle.extras["counting1"]
print(f"event time tau = {tau:.4f}")
print("M jumps by exactly 1.0 there:", list(m.jumps.values()) == [1.0])

qv = realized_qv(m)
print("realized QV jump component equals the counting path bitwise:",
      np.array_equal(qv.jump_sum.values, n.values))

k0 = grid.index_of(0.0)
if n.values[k0] == 0.0:
    print("on {tau > 0} the compensator at 0 is log 2:",
          a.values[k0] == math.log(2.0))
else:
    print("this path jumped before 0; resample to see A_0 = log 2")

ens = run_ensemble("hazard_pair", grid, n_paths=4000, master_seed=404,
                   components=("path",))
report = martingale_test(ens, -1.0, 2.0, n_buckets=5)
print("\nbucketed conditional-increment test over (-1, 2]:")
print(report.text_report())
