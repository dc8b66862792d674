"""Branched-covering bookkeeping for the bundled example maps.

Walks every registry map, pulls a few fibers, and checks the two
combinatorial invariants by hand: fiber indices sum to the degree,
and the critical indices satisfy sum(e - 1) = 2d - 2.
"""

import numpy as np

from ratdyn.ratmap import branch_index, critical_points, evaluate, iterate_map, preimages
from ratdyn.registry import get, list_examples

rng = np.random.default_rng(3)

for name in list_examples():
    ex = get(name)
    R = ex.map
    print(f"{name}: degree {R.degree}, Julia set {ex.julia_description}")

    # generic fiber: d simple points, indices all 1
    y = complex(rng.standard_normal(), rng.standard_normal())
    fib = preimages(R, y)
    print(f"  fiber over {y:.3f}: {len(fib.entries)} points, index sum {fib.total_index}")

    # critical data and Riemann-Hurwitz
    crit = critical_points(R)
    rh = sum(c.index - 1 for c in crit)
    print(f"  {len(crit)} critical points, sum(e-1) = {rh} = 2d-2 = {2 * R.degree - 2}")
    for c in crit[:3]:
        v = evaluate(R, c.point)
        print(f"    index {c.index} at {c.point}, critical value {v}")

    # indices multiply along orbits
    R2 = iterate_map(R, 2)
    p = crit[0].point
    lhs = branch_index(R2, p)
    rhs = branch_index(R, p) * branch_index(R, evaluate(R, p))
    print(f"  chain rule at the first critical point: "
          f"index under R^2 is {lhs}, product of step indices is {rhs}")
    print()
