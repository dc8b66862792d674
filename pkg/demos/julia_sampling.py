"""Julia sets three ways: inverse iteration, escape test, PGM render."""

from ratdyn.julia import (
    escape_membership,
    render,
    sample_inverse_iteration,
    write_pgm,
)
from ratdyn.ratmap import RationalMap

z2 = RationalMap([0, 0, 1], [1])       # z^2, J = unit circle
zm2 = RationalMap([-2, 0, 1], [1])     # z^2 - 2, J = [-2, 2]

# backward orbits accumulate on J regardless of the start point
cloud = sample_inverse_iteration(z2, 0.9 + 0.3j, count=2000, seed=0)
radii = [abs(p.z) for p in cloud.points]
print(f"z^2 cloud: {len(cloud.points)} points, |z| in "
      f"[{min(radii):.8f}, {max(radii):.8f}] (circle)")

cloud2 = sample_inverse_iteration(zm2, 1.3, count=2000, seed=0)
ims = [abs(p.z.imag) for p in cloud2.points]
res = [p.z.real for p in cloud2.points]
print(f"z^2-2 cloud: max |Im| = {max(ims):.2e}, Re in "
      f"[{min(res):.4f}, {max(res):.4f}] (interval)")

# forward escape test on a few probes
for w in (0.5, 2.0 + 0j, 1j):
    print(f"z^2-2 orbit of {w}: {escape_membership(zm2, w)}")

img = render(zm2, window=(-2.4, 2.4, -1.6, 1.6), resolution=(96, 64))
write_pgm("julia_zm2.pgm", img)
print(f"wrote julia_zm2.pgm ({img.shape[1]}x{img.shape[0]})")
