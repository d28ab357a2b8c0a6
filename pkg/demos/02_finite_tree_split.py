"""Splitting an increment martingale on an exact finite space.

On a finite filtered space every conditional expectation is a small matrix
product, so decomposition identities can be checked to the last bit. The
process below has martingale increments but is not adapted (it carries half
of its terminal value from the start), which is exactly the situation where
the split M = K + N produces a nontrivial remainder N.
"""

from incmart.finite_space import (
    FiniteFilteredSpace,
    conditional_expectation,
    decompose,
    expectation,
    random_walk_values,
)

space = FiniteFilteredSpace.binary_tree(depth=8)
w = random_walk_values(space, step=1.0)
m = w + 0.5 * w[:, -1][:, None]

k, n = decompose(space, m)

print("times:", space.times.astype(int).tolist())
print(f"{'t':>3} {'E[M^2]':>8} {'E[K^2]':>8} {'E[N^2]':>8} {'E[KN]':>8}")
for j, t in enumerate(space.times):
    print(f"{int(t):>3}"
          f" {expectation(space, m[:, j] ** 2):>8.3f}"
          f" {expectation(space, k[:, j] ** 2):>8.3f}"
          f" {expectation(space, n[:, j] ** 2):>8.3f}"
          f" {expectation(space, k[:, j] * n[:, j]):>8.3f}")

print("\nK is the conditional expectation of M given the present:",
      all(
          abs(conditional_expectation(space, m[:, j], j) - k[:, j]).max() == 0.0
          for j in range(space.n_times)
      ))
print("remainder is centered: max |E[N_t | F_t]| =",
      max(
          abs(conditional_expectation(space, n[:, j], j)).max()
          for j in range(space.n_times)
      ))
print("E[N_t^2] shrinks toward the horizon and hits 0 at the end:",
      expectation(space, n[:, -1] ** 2) == 0.0)
