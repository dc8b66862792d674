"""Fixed-point iteration for the gauge-action equilibrium state.

At inverse temperature beta = log(deg R) the weighted averaging operator
has the integral against the balanced measure as its unique fixed
constant; at any other beta the defect is bounded away from zero. The
trace below watches both happen for z^2 + 0.2.
"""

import math

from ratdyn.julia import sample_inverse_iteration
from ratdyn.measure import lyubich_exact
from ratdyn.ratmap import RationalMap
from ratdyn.transfer import TestFunction, kms_defect, kms_iterate

R = RationalMap([0.2, 0, 1], [1])    # z^2 + 0.2

cloud = sample_inverse_iteration(R, 0.9 + 0.3j, count=400, seed=0)
probes = cloud.points[::80]

a = TestFunction.monomial(1)     # a(z) = z
run = kms_iterate(R, a, 8, probes)
print(f"beta = {run.beta:.6f} = log 2, hypothesis: {run.hypothesis}")
print("level   sup variation across probes")
for t in run.traces:
    print(f"  {t.level:3d}   {t.sup_variation:.3e}")
print(f"limit constant {run.final_constant:.10f}, "
      f"gap to the balanced-measure integral {run.lyubich_gap:.2e}")

# wrong temperature: the defect is |e^-beta d - 1| no matter the test function
mu = lyubich_exact(R, 0.73, 9)
for shift in (0.1, -0.1):
    beta = math.log(R.degree) + shift
    d = kms_defect(R, mu, [TestFunction.constant(1.0)], beta=beta)
    print(f"beta = log d + {shift:+.1f}: defect {d:.6f} "
          f"(predicted {abs(math.exp(-beta) * R.degree - 1):.6f})")
