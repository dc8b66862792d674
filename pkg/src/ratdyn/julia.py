"""Julia-set sampling, membership tests, and rendering.

The Julia set is approximated by backward random walks: preimages are dense
in J, and choosing each preimage x with probability e(x)/d makes the visit
law consistent with the balanced measure the rest of the package integrates
against. Escape-time classification covers the polynomial case.
"""

import math

import numpy as np
from dataclasses import dataclass
from scipy.spatial import cKDTree

from .errors import BudgetExceeded
from .numkernel import SpherePoint, _as_pair, sphere_embed, _raw_roots
from .ratmap import _DROP_TOL, _fiber_core, evaluate

BURN_IN = 20


@dataclass(frozen=True)
class JuliaCloud:
    """A sampled Julia set.

    generator names the numeric criterion the points satisfy:
    "inverse_iteration" (backward-walk samples) or "escape_boundary".
    """
    points: tuple
    generator: str
    seed: int
    depth: int
    burn_in: int

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def finite_values(self):
        """Finite points as a complex array (infinite samples dropped)."""
        return np.array([p.z for p in self.points if not p.is_infinity],
                        dtype=complex)

    def embedded(self):
        """All points embedded on the unit sphere in R^3."""
        zs = np.array([p.z for p in self.points], dtype=complex)
        isinf = np.array([p.is_infinity for p in self.points], dtype=bool)
        return sphere_embed(zs, isinf)


# ---------------------------------------------------------------------------
# batched backward walk
# ---------------------------------------------------------------------------

def _batched_quadratic(f):
    # rows of f are [c0, c1, c2]; stable q-form, both roots returned
    c0, c1, c2 = f[:, 0], f[:, 1], f[:, 2]
    s = np.sqrt(c1 * c1 - 4.0 * c2 * c0)
    flip = (c1.real * s.real + c1.imag * s.imag) < 0.0
    s = np.where(flip, -s, s)
    q = -0.5 * (c1 + s)
    qz = q == 0
    qsafe = np.where(qz, 1.0, q)
    r1 = q / c2
    r2 = np.where(qz, 0.0, c0 / qsafe)
    return np.stack([r1, r2], axis=1)


def _batched_companion_roots(f):
    d = f.shape[1] - 1
    monic = f / f[:, -1:]
    comp = np.zeros((f.shape[0], d, d), dtype=complex)
    idx = np.arange(d - 1)
    comp[:, idx + 1, idx] = 1.0
    comp[:, :, -1] = -monic[:, :-1]
    return np.linalg.eigvals(comp)


def _scalar_backstep(R, z, isinf, rng):
    # fallback covering degree drops and walkers sitting at infinity
    centers, counts, infcount = _fiber_core(R, z, isinf)
    total = int(np.sum(counts)) + infcount
    pick = int(rng.integers(total))
    if pick >= total - infcount:
        return 0j, True
    acc = 0
    for t in range(centers.size):
        acc += int(counts[t])
        if pick < acc:
            return complex(centers[t]), False
    return complex(centers[-1]), False


def backward_walk(R, start, steps, walkers, rng):
    """Lockstep backward chains: returns (steps, walkers) complex points.

    Each chain independently picks one of the d preimages of its current
    point uniformly with multiplicity, i.e. x with probability e(x)/d.
    Also returns the matching is-infinity flags.
    """
    d = R.degree
    zv, zinf = _as_pair(start)
    z = np.full(walkers, zv, dtype=complex)
    isinf = np.full(walkers, zinf, dtype=bool)
    out = np.empty((steps, walkers), dtype=complex)
    out_inf = np.empty((steps, walkers), dtype=bool)
    p_pad, q_pad = R._p_pad, R._q_pad
    ap, aq = np.abs(p_pad), np.abs(q_pad)
    for k in range(steps):
        pick = rng.integers(0, d, size=walkers)
        big = np.abs(z) > 1.0
        w = np.where(isinf | big, 0j, z)
        iw = np.where(big & ~isinf, 1.0 / np.where(z == 0, 1.0, z), 1.0)
        # fiber polynomial per walker, scaled for conditioning when |z| > 1
        f = np.where(big[:, None],
                     iw[:, None] * p_pad[None, :] - q_pad[None, :],
                     p_pad[None, :] - w[:, None] * q_pad[None, :])
        s = np.where(big[:, None],
                     np.abs(iw)[:, None] * ap[None, :] + aq[None, :],
                     ap[None, :] + np.abs(w)[:, None] * aq[None, :])
        slow = isinf | (np.abs(f[:, -1]) <= _DROP_TOL * (s[:, -1] + 1e-300))
        fast = ~slow
        if np.any(fast):
            ff = f[fast]
            if d == 1:
                roots = (-ff[:, :1] / ff[:, 1:])
            elif d == 2:
                roots = _batched_quadratic(ff)
            else:
                roots = _batched_companion_roots(ff)
            z[fast] = roots[np.arange(roots.shape[0]), pick[fast]]
            isinf[fast] = False
        if np.any(slow):
            for j in np.nonzero(slow)[0]:
                z[j], isinf[j] = _scalar_backstep(R, z[j], isinf[j], rng)
        out[k] = z
        out_inf[k] = isinf
    return out, out_inf


def sample_inverse_iteration(R, start, depth=60, count=2000, seed=0,
                             burn_in=BURN_IN, walkers=8):
    """Backward-walk sample of the Julia set.

    Runs `walkers` lockstep chains from `start`, discards the first
    `burn_in` levels of each, and returns `count` points concatenated in
    walker order. Identical seeds give bit-identical clouds.
    """
    if R.degree < 2:
        raise ValueError("inverse iteration needs degree >= 2")
    if count <= 0:
        return JuliaCloud((), "inverse_iteration", seed, depth, burn_in)
    walkers = max(1, min(walkers, count))
    tail = -(-count // walkers)
    steps = max(depth, burn_in + tail)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chains, chain_inf = backward_walk(R, start, steps, walkers, rng)
    pts = []
    for wk in range(walkers):  # walker-major order
        zs = chains[steps - tail:, wk]
        fl = chain_inf[steps - tail:, wk]
        for t in range(tail):
            if len(pts) >= count:
                break
            if fl[t]:
                pts.append(SpherePoint.infinity())
            else:
                pts.append(SpherePoint.finite(zs[t]))
    return JuliaCloud(tuple(pts[:count]), "inverse_iteration", seed, depth,
                      burn_in)


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

def default_escape_radius(R):
    """max(2, largest numerator coefficient magnitude + 1)."""
    return max(2.0, float(np.max(np.abs(R._p))) + 1.0)


def escape_membership(R, z, max_iter=256, escape_radius=None):
    """'escapes' iff some iterate of the polynomial map leaves the radius."""
    if not R.is_polynomial:
        raise ValueError("escape classification is for polynomial maps")
    if escape_radius is None:
        escape_radius = default_escape_radius(R)
    zv, zinf = _as_pair(z)
    if zinf:
        return "escapes"
    c = R._p / R._q[0]
    w = complex(zv)
    for _ in range(max_iter):
        if abs(w) > escape_radius:
            return "escapes"
        w = complex(np.polynomial.polynomial.polyval(w, c))
    return "bounded"


def mandelbrot_member(c, max_iter=256):
    """True iff the orbit of 0 under z^2 + c stays within radius 2."""
    c = complex(c)
    z = 0j
    for _ in range(max_iter):
        z = z * z + c
        if abs(z) > 2.0:
            return False
    return True


def critical_points_in_julia(R, cloud, tol=1e-3):
    """Critical points whose chordal distance to the cloud is below tol."""
    from .ratmap import critical_points
    if len(cloud) == 0:
        raise ValueError("need a nonempty Julia sample")
    tree = cKDTree(cloud.embedded())
    hits = []
    for cd in critical_points(R):
        v = sphere_embed(np.array([cd.point.z]),
                         np.array([cd.point.is_infinity]))
        dist, _ = tree.query(v[0])
        if dist < tol:
            hits.append(cd)
    return tuple(hits)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

MAX_PIXELS = 8192 * 8192


def render(R, window, resolution, mode="auto", max_iter=96, samples=40000,
           depth=60, seed=0):
    """Grayscale image of the dynamics over a rectangular window.

    window = (re_min, re_max, im_min, im_max); resolution int or (w, h).
    Escape-time shading for polynomial maps (interior white, exterior shaded
    by escape speed); inverse-iteration density histogram otherwise. Row 0
    is the top of the window. Deterministic for a fixed seed.
    """
    if isinstance(resolution, int):
        w = h = resolution
    else:
        w, h = resolution
    if w * h > MAX_PIXELS:
        raise BudgetExceeded(f"{w}x{h} exceeds the pixel budget")
    if w <= 0 or h <= 0:
        return np.zeros((max(h, 0), max(w, 0)), dtype=np.uint8)
    x0, x1, y0, y1 = (float(t) for t in window)
    if not (x1 > x0 and y1 > y0):
        return np.zeros((h, w), dtype=np.uint8)
    if mode == "auto":
        mode = "escape" if R.is_polynomial else "density"
    if mode == "escape":
        if not R.is_polynomial:
            raise ValueError("escape rendering is for polynomial maps")
        xs = x0 + (np.arange(w) + 0.5) * (x1 - x0) / w
        ys = y1 - (np.arange(h) + 0.5) * (y1 - y0) / h
        z = xs[None, :] + 1j * ys[:, None]
        c = R._p / R._q[0]
        radius = default_escape_radius(R)
        count = np.zeros(z.shape, dtype=np.int32)
        alive = np.ones(z.shape, dtype=bool)
        for k in range(max_iter):
            out = alive & (np.abs(z) > radius)
            count[out] = k
            alive &= ~out
            if not alive.any():
                break
            z[alive] = np.polynomial.polynomial.polyval(z[alive], c)
        img = np.where(alive, 255,
                       (254.0 * count / max_iter)).astype(np.uint8)
        return img
    if mode != "density":
        raise ValueError(f"unknown render mode: {mode!r}")
    cloud = sample_inverse_iteration(
        R, _render_start(R), depth=depth, count=samples, seed=seed)
    zs = cloud.finite_values()
    hist, _, _ = np.histogram2d(
        zs.real, zs.imag, bins=(w, h), range=((x0, x1), (y0, y1)))
    hist = hist.T[::-1]  # row 0 at the top
    top = hist.max()
    if top <= 0:
        return np.zeros((h, w), dtype=np.uint8)
    return np.rint(255.0 * hist / top).astype(np.uint8)


def _render_start(R):
    # a generic non-exceptional start: a repelling-ish point found by a few
    # forward iterates of a fixed irrational-angle seed
    z = SpherePoint.finite(0.4242 + 0.2718j)
    for _ in range(4):
        z = evaluate(R, z)
        if z.is_infinity or abs(z.z) > 1e6:
            return SpherePoint.finite(0.4242 + 0.2718j)
    return z


def write_pgm(path, image):
    """Binary PGM (P5, maxval 255)."""
    image = np.asarray(image, dtype=np.uint8)
    h, wd = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{wd} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def write_cloud_csv(path, cloud):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("re,im,is_infinity\n")
        for p in cloud:
            if p.is_infinity:
                fh.write("0,0,1\n")
            else:
                fh.write("%.17g,%.17g,0\n" % (p.z.real, p.z.imag))


def read_cloud_csv(path):
    """Points from a cloud CSV (header re,im,is_infinity)."""
    pts = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header.split(",")[:3] != ["re", "im", "is_infinity"]:
            raise ValueError(f"unexpected cloud header: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            re_s, im_s, inf_s = line.strip().split(",")[:3]
            if inf_s.strip() == "1":
                pts.append(SpherePoint.infinity())
            else:
                # complex(re, im) keeps negative-zero components intact
                pts.append(SpherePoint.finite(complex(float(re_s),
                                                      float(im_s))))
    return tuple(pts)


def circle_neighbor_stats(points, anchors=64):
    """Fraction of net anchors with exactly two net neighbors.

    Heuristic check that a planar cloud traces a simple closed curve: thin
    the cloud to a well-separated net, order it by angle about the centroid,
    and ask each anchor for its neighbors within a radius just beyond the
    adjacent gaps. On a topological circle nearly every anchor sees exactly
    its two arc neighbors.
    """
    zs = np.asarray(points, dtype=complex)
    center = np.mean(zs)
    order = np.argsort(np.angle(zs - center))
    zs = zs[order]
    # greedy angular net
    step = max(1, zs.size // anchors)
    net = zs[::step]
    n = net.size
    if n < 4:
        return 0.0
    good = 0
    for i in range(n):
        prev_d = abs(net[i] - net[(i - 1) % n])
        next_d = abs(net[i] - net[(i + 1) % n])
        r = 1.05 * max(prev_d, next_d)
        cnt = int(np.sum(np.abs(net - net[i]) <= r)) - 1
        if cnt == 2:
            good += 1
    return good / n
