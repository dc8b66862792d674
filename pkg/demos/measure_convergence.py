"""How the balanced measure shows up numerically.

Three independent routes to the same integrals: exact preimage trees at two
different basepoints, and a backward random walk. For z^2 - 2 the limit is
the arcsine law on [-2, 2], so the moments are central binomial numbers
(2k choose k) and we can compare against a closed form.
"""

import math

from ratdyn.measure import integrate, lyubich_exact, lyubich_mc, pushforward
from ratdyn.ratmap import RationalMap

zm2 = RationalMap([-2, 0, 1], [1])

print("moments of x^(2k) against the exact depth-12 tree:")
mu = lyubich_exact(zm2, 0.37, 12)
for k in (1, 2, 3):
    got = integrate(mu, lambda p: p.z.real ** (2 * k)).real
    want = math.comb(2 * k, k)
    print(f"  k={k}: {got:.9f}  vs  C(2k,k) = {want}  (gap {abs(got - want):.2e})")

# basepoint independence: two trees started far apart
mu2 = lyubich_exact(zm2, -1.21, 12)
gap = abs(integrate(mu, lambda p: p.z.real ** 2) - integrate(mu2, lambda p: p.z.real ** 2))
print(f"cross-basepoint second-moment gap at depth 12: {gap:.2e}")

# the tree pushes forward onto the shallower tree, exactly
deep = lyubich_exact(zm2, 0.37, 6)
flat = lyubich_exact(zm2, 0.37, 5)
pushed = pushforward(zm2, deep)
print(f"pushforward of depth-6 tree: {len(pushed)} atoms "
      f"(depth-5 tree has {len(flat)}), denominators {pushed.denominator}/{flat.denominator}")

# Monte Carlo route, 10^4 samples, fluctuation should be ~ 1/sqrt(N)
mc = lyubich_mc(zm2, 0.37, depth=60, samples=10000, seed=0)
g = abs(integrate(mu, lambda p: p.z.real ** 2) - integrate(mc, lambda p: p.z.real ** 2))
print(f"MC vs exact second moment: gap {g:.4f} (budget 3/sqrt(N) = {3 / math.sqrt(10000)})")
