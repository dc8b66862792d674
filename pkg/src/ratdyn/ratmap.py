"""Rational self-maps of the Riemann sphere as branched coverings.

A map R = P/Q in lowest terms has degree d = max(deg P, deg Q). Every point
w has exactly d preimages counted with branch indices: the index e(x) is the
local multiplicity of R at x, equal to 1 + (order of x as a zero of the
derivative numerator W = P'Q - PQ'). Work near infinity happens in the
reciprocal chart w = 1/z throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, CoprimalityError
from .numkernel import (
    CLUSTER_FACTOR,
    Polynomial,
    RootSet,
    SpherePoint,
    _as_pair,
    local_multiplicity,
    poly_add,
    poly_derivative,
    poly_eval,
    poly_mul,
    poly_trim,
    roots_with_multiplicity,
    _cluster_points,
    _raw_roots,
)

# budget for polynomial degrees produced by composition
DEGREE_BUDGET = 256
# budget for preimage-tree nodes
NODE_BUDGET = 10 ** 6

_DROP_TOL = 1e-12


@dataclass(frozen=True)
class CriticalDatum:
    """A critical point with its branch index and critical value."""

    point: SpherePoint
    index: int
    value: SpherePoint


@dataclass(frozen=True)
class Fiber:
    """Preimage set of a base point under R^depth, with branch indices.

    entries are (point, index) pairs, pairwise distinct points; the indices
    sum to degree^depth.
    """

    base: SpherePoint
    depth: int
    entries: tuple

    @property
    def total_index(self):
        return sum(m for _, m in self.entries)

    def points(self):
        return [p for p, _ in self.entries]

    def indices(self):
        return [m for _, m in self.entries]


class RationalMap:
    """R = P/Q with coprime polynomial numerator and denominator.

    Construction trims exact leading zeros, rejects a vanishing denominator,
    and checks coprimality (a common factor above tolerance is an error).
    """

    def __init__(self, numerator, denominator=(1,), check=True):
        p = numerator.coeffs if isinstance(numerator, Polynomial) else \
            np.atleast_1d(np.asarray(numerator, dtype=complex))
        q = denominator.coeffs if isinstance(denominator, Polynomial) else \
            np.atleast_1d(np.asarray(denominator, dtype=complex))
        p = poly_trim(p)
        q = poly_trim(q)
        if np.all(q == 0):
            raise ValueError("denominator is the zero polynomial")
        if np.all(p == 0) and p.size > 1:
            p = np.zeros(1, dtype=complex)
        self._p = p
        self._q = q
        d = max(p.size, q.size) - 1
        self.degree = d
        # padded to a common length d+1; reversed copies serve the 1/z chart
        self._p_pad = np.zeros(d + 1, dtype=complex)
        self._p_pad[: p.size] = p
        self._q_pad = np.zeros(d + 1, dtype=complex)
        self._q_pad[: q.size] = q
        self._rp = self._p_pad[::-1].copy()
        self._rq = self._q_pad[::-1].copy()
        self.is_polynomial = q.size == 1
        self._w = None
        self._wt = None
        if check:
            self._check_coprime()

    # -- construction helpers ------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs):
        """The polynomial map z -> p(z)."""
        return cls(coeffs, (1,), check=False)

    @classmethod
    def _raw(cls, p, q):
        """Internal: build without the coprimality check (trusted inputs)."""
        return cls(p, q, check=False)

    def _check_coprime(self):
        dp, dq = self._p.size - 1, self._q.size - 1
        if min(dp, dq) < 1:
            return
        low, high = (self._p, self._q) if dp <= dq else (self._q, self._p)
        rs = _raw_roots(low / np.max(np.abs(low)))
        vals = np.abs(poly_eval(high, rs))
        scale = np.max(np.abs(high)) * np.maximum(1.0, np.abs(rs)) ** (high.size - 1)
        if np.any(vals <= 1e-10 * scale):
            raise CoprimalityError(
                "numerator and denominator share a root within tolerance")

    # -- basic data ----------------------------------------------------------

    @property
    def numerator(self):
        return Polynomial(self._p)

    @property
    def denominator(self):
        return Polynomial(self._q)

    def derivative_numerator(self):
        """W = P'Q - PQ', whose zero orders are branch indices minus 1."""
        if self._w is None:
            w = poly_add(poly_mul(poly_derivative(self._p), self._q),
                         -poly_mul(self._p, poly_derivative(self._q)))
            self._w = poly_trim(w, rel_tol=1e-12)
        return self._w

    def _chart_w(self):
        """W of the conjugated map (1/R(1/z)), for branch data at infinity."""
        if self._wt is None:
            w = poly_add(poly_mul(poly_derivative(self._rq), self._rp),
                         -poly_mul(self._rq, poly_derivative(self._rp)))
            self._wt = poly_trim(w, rel_tol=1e-12)
        return self._wt

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        return (f"RationalMap(degree={self.degree}, "
                f"P={list(self._p)}, Q={list(self._q)})")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _eval_ratio(num_c, den_c, z):
    """Evaluate num/den at z with l'Hopital fallback for exact 0/0."""
    num = poly_eval(num_c, z)
    den = poly_eval(den_c, z)
    while num == 0 and den == 0 and (len(num_c) > 1 or len(den_c) > 1):
        num_c = poly_derivative(num_c)
        den_c = poly_derivative(den_c)
        num = poly_eval(num_c, z)
        den = poly_eval(den_c, z)
    if den == 0:
        return SpherePoint.infinity()
    return SpherePoint.from_value(num / den)


def evaluate(R, z):
    """Apply the map; accepts complex or SpherePoint, returns SpherePoint.

    Moduli above 1 are evaluated through the reciprocal chart, so the result
    is stable arbitrarily close to (and at) infinity.
    """
    zv, isinf = _as_pair(z)
    if isinf:
        return _eval_ratio(R._rp, R._rq, 0j)
    if abs(zv) <= 1.0:
        return _eval_ratio(R._p_pad, R._q_pad, zv)
    return _eval_ratio(R._rp, R._rq, 1.0 / zv)


def value_at_infinity(R):
    return evaluate(R, SpherePoint.infinity())


# ---------------------------------------------------------------------------
# branch data
# ---------------------------------------------------------------------------

def branch_index(R, x):
    """Multiplicity of x in the fiber over evaluate(R, x); 1 off criticals.

    Computed as 1 + (order of x as a zero of W = P'Q - PQ'), which matches
    the fiber multiplicity at every finite point, poles included; infinity
    goes through the reciprocal chart.
    """
    xv, isinf = _as_pair(x)
    if isinf:
        return 1 + local_multiplicity(R._chart_w(), 0j)
    if abs(xv) <= 1.0:
        return 1 + local_multiplicity(R.derivative_numerator(), xv)
    return 1 + local_multiplicity(R._chart_w(), 1.0 / xv)


def critical_points(R):
    """All critical points with branch indices and critical values.

    Finite critical points are the roots of W = P'Q - PQ' (index = order + 1);
    the chart map covers infinity. The returned data satisfies the branched
    covering count sum(e - 1) = 2 deg(R) - 2.
    """
    out = []
    w = R.derivative_numerator()
    if w.size > 1:
        rs = roots_with_multiplicity(w)
        for pt, mult in rs.entries:
            out.append(CriticalDatum(pt, mult + 1, evaluate(R, pt)))
    wt = R._chart_w()
    scale = np.max(np.abs(wt))
    k = 0
    while k < wt.size - 1 and abs(wt[k]) <= _DROP_TOL * scale:
        k += 1
    if k >= 1:
        inf = SpherePoint.infinity()
        out.append(CriticalDatum(inf, k + 1, evaluate(R, inf)))
    out.sort(key=lambda cd: cd.point.sort_key())
    return out


# ---------------------------------------------------------------------------
# fibers
# ---------------------------------------------------------------------------

def _fiber_poly(R, w):
    """Coefficients whose roots are the finite preimages of finite w.

    Returns (coeffs, inf_index): leading coefficients that cancel against w
    drop the degree, and each dropped level adds one to the index carried by
    the preimage at infinity.
    """
    if abs(w) <= 1.0:
        f = R._p_pad - w * R._q_pad
        s = np.abs(R._p_pad) + abs(w) * np.abs(R._q_pad)
    else:
        iw = 1.0 / w
        f = iw * R._p_pad - R._q_pad
        s = abs(iw) * np.abs(R._p_pad) + np.abs(R._q_pad)
    n = f.size
    while n > 1 and abs(f[n - 1]) <= _DROP_TOL * s[n - 1]:
        n -= 1
    return f[:n], (f.size - n)


def _fiber_core(R, z, isinf):
    """Lean fiber solve: (finite points, counts, infinity index).

    Multiplicities come from single-linkage clustering of the raw roots;
    points are sorted by (re, im).
    """
    if isinf:
        drop = (R._p.size - 1) - (R._q.size - 1)
        if R._q.size > 1:
            pts = _raw_roots(R._q / np.max(np.abs(R._q)))
            centers, counts = _cluster_points(pts)
        else:
            centers = np.zeros(0, dtype=complex)
            counts = np.zeros(0, dtype=int)
        return centers, counts, max(drop, 0)
    f, drop = _fiber_poly(R, z)
    if f.size <= 1:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=int), drop
    pts = _raw_roots(f / np.max(np.abs(f)))
    centers, counts = _cluster_points(pts)
    return centers, counts, drop


def preimages(R, w):
    """The fiber over w: distinct preimage points with branch indices.

    Indices sum to deg(R) exactly. The preimage at infinity appears when the
    fiber polynomial loses degree (w = R(infinity)) or, over w = infinity,
    when deg P exceeds deg Q; finite preimages of infinity are the poles
    with their orders.
    """
    wv, isinf = _as_pair(w)
    entries = []
    if isinf:
        drop = (R._p.size - 1) - (R._q.size - 1)
        if R._q.size > 1:
            rs = roots_with_multiplicity(R._q)
            entries.extend((pt, m) for pt, m in rs.entries)
        if drop > 0:
            entries.append((SpherePoint.infinity(), drop))
    else:
        f, drop = _fiber_poly(R, wv)
        if f.size > 1:
            rs = roots_with_multiplicity(f)
            entries.extend((pt, m) for pt, m in rs.entries)
        if drop > 0:
            entries.append((SpherePoint.infinity(), drop))
    entries.sort(key=lambda e: e[0].sort_key())
    return Fiber(SpherePoint.from_value(w), 1, tuple(entries))


# ---------------------------------------------------------------------------
# preimage trees
# ---------------------------------------------------------------------------

def _expand_level_d2(R, pts):
    """Batched one-step fibers for a degree-2 map over finite parents.

    Returns (points, isinf, counts, parent) or None when some fiber drops
    degree; callers fall back to the scalar path for that level. Children of
    a parent are contiguous and sorted by (re, im).
    """
    if pts.size == 0:
        return (np.zeros(0, dtype=complex), np.zeros(0, dtype=bool),
                np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    w = pts
    aw = np.abs(w)
    small = aw <= 1.0
    iw = np.where(small, 1.0 + 0j, 1.0 / np.where(small, 1.0 + 0j, w))
    p = R._p_pad[None, :]
    q = R._q_pad[None, :]
    f = np.where(small[:, None], p - w[:, None] * q, iw[:, None] * p - q)
    s = np.where(small[:, None],
                 np.abs(p) + aw[:, None] * np.abs(q),
                 np.abs(iw)[:, None] * np.abs(p) + np.abs(q))
    if np.any(np.abs(f[:, 2]) <= _DROP_TOL * s[:, 2]):
        return None
    c0 = f[:, 0] / f[:, 2]
    c1 = f[:, 1] / f[:, 2]
    disc = c1 * c1 - 4.0 * c0
    sq = np.sqrt(disc)
    sq = np.where(c1.real * sq.real + c1.imag * sq.imag < 0.0, -sq, sq)
    qq = -0.5 * (c1 + sq)
    degen = qq == 0  # double root at the origin
    r1 = np.where(degen, 0j, qq)
    r2 = np.where(degen, 0j, c0 / np.where(degen, 1.0 + 0j, qq))
    swap = (r2.real < r1.real) | ((r2.real == r1.real) & (r2.imag < r1.imag))
    a = np.where(swap, r2, r1)
    b = np.where(swap, r1, r2)
    merged = (np.abs(a - b)
              <= CLUSTER_FACTOR * (1.0 + 0.5 * (np.abs(a) + np.abs(b))))
    k = np.where(merged, 1, 2).astype(np.int64)
    off = np.concatenate(([0], np.cumsum(k)[:-1]))
    tot = int(k.sum())
    cp = np.empty(tot, dtype=complex)
    cc = np.empty(tot, dtype=np.int64)
    par = np.empty(tot, dtype=np.int64)
    cp[off] = np.where(merged, 0.5 * (a + b), a)
    cc[off] = np.where(merged, 2, 1)
    par[off] = np.arange(pts.size)
    sec = off[~merged] + 1
    cp[sec] = b[~merged]
    cc[sec] = 1
    par[sec] = np.flatnonzero(~merged)
    return cp, np.zeros(tot, dtype=bool), cc, par


def _expand_level(R, pts, inf):
    """One backward step for a batch of points.

    Returns (points, isinf, counts, parent): the children of every input
    point with their local branch counts and parent positions. Children of
    one parent are contiguous, sorted by (re, im), infinity last.
    """
    if R.degree == 2 and not inf.any():
        out = _expand_level_d2(R, pts)
        if out is not None:
            return out
    cp, cn, cc, par = [], [], [], []
    for j in range(pts.size):
        centers, counts, infcount = _fiber_core(R, pts[j], inf[j])
        for t in range(centers.size):
            cp.append(centers[t])
            cn.append(False)
            cc.append(counts[t])
            par.append(j)
        if infcount:
            cp.append(0j)
            cn.append(True)
            cc.append(infcount)
            par.append(j)
    return (np.array(cp, dtype=complex), np.array(cn, dtype=bool),
            np.array(cc, dtype=np.int64), np.array(par, dtype=np.int64))


def tree_levels(R, y, n, node_budget=NODE_BUDGET):
    """Yield the depth-k fibers of y for k = 1..n as parallel arrays.

    Each yielded triple is (points, isinf, indices): the full preimage set of
    y under R^k with chain-rule indices (integer arrays). Order within a
    level is deterministic: parents in order, children sorted by (re, im)
    with infinity last.
    """
    if R.degree < 1:
        raise ValueError("preimage trees need a nonconstant map")
    yv, yinf = _as_pair(y)
    pts = np.array([yv], dtype=complex)
    inf = np.array([yinf], dtype=bool)
    idx = np.array([1], dtype=np.int64)
    d = R.degree
    for _ in range(n):
        if pts.size * d > node_budget:
            raise BudgetExceeded(
                f"preimage tree would exceed {node_budget} nodes")
        cp, cn, cc, par = _expand_level(R, pts, inf)
        idx = cc * idx[par]
        pts, inf = cp, cn
        yield pts, inf, idx


def preimage_tree(R, y, n, node_budget=NODE_BUDGET):
    """Depth-n preimage fiber of y with chain-rule branch indices.

    Indices are products e(x) e(R x) ... e(R^{n-1} x) and sum to deg(R)^n
    exactly (integer bookkeeping).
    """
    if n < 1:
        raise ValueError("depth must be at least 1")
    pts = inf = idx = None
    for pts, inf, idx in tree_levels(R, y, n, node_budget):
        pass
    entries = tuple(
        (SpherePoint.infinity() if inf[j] else SpherePoint.finite(pts[j]),
         int(idx[j]))
        for j in range(pts.size)
    )
    return Fiber(SpherePoint.from_value(y), n, entries)


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def compose(R, S, degree_budget=DEGREE_BUDGET):
    """The composite map z -> R(S(z)).

    Degrees multiply; a result above degree_budget raises BudgetExceeded.
    """
    d = R.degree * S.degree
    if d > degree_budget:
        raise BudgetExceeded(
            f"composition degree {d} exceeds budget {degree_budget}")
    dr = R.degree
    u = np.zeros(S.degree + 1, dtype=complex)
    u[: S._p.size] = S._p
    v = np.zeros(S.degree + 1, dtype=complex)
    v[: S._q.size] = S._q
    # powers of the inner numerator and denominator up to dr
    upow = [np.array([1.0 + 0j])]
    vpow = [np.array([1.0 + 0j])]
    for _ in range(dr):
        upow.append(poly_mul(upow[-1], u))
        vpow.append(poly_mul(vpow[-1], v))
    pc = np.zeros(1, dtype=complex)
    qc = np.zeros(1, dtype=complex)
    for k in range(dr + 1):
        lift = poly_mul(upow[k], vpow[dr - k])
        if R._p_pad[k] != 0:
            pc = poly_add(pc, R._p_pad[k] * lift)
        if R._q_pad[k] != 0:
            qc = poly_add(qc, R._q_pad[k] * lift)
    return RationalMap._raw(pc, qc)


def iterate_map(R, n, degree_budget=DEGREE_BUDGET):
    """The n-fold composition R^n (n >= 1)."""
    if n < 1:
        raise ValueError("iterate count must be >= 1")
    if R.degree ** n > degree_budget:
        raise BudgetExceeded(
            f"iterate degree {R.degree ** n} exceeds budget {degree_budget}")
    acc = R
    for _ in range(n - 1):
        acc = compose(R, acc, degree_budget)
    return acc


def periodic_points(R, n, include_nonrepelling=False, degree_budget=DEGREE_BUDGET):
    """Finite fixed points of R^n, by default only the repelling ones.

    Repelling periodic points all lie on the Julia set, which makes them a
    well-spread, forward-invariant probe set. Returns a sorted complex array.
    """
    rn = iterate_map(R, n, degree_budget)
    f = poly_trim(poly_add(rn._p_pad, -poly_mul(np.array([0, 1.0]), rn._q_pad)),
                  rel_tol=1e-14)
    if f.size <= 1:
        return np.zeros(0, dtype=complex)
    rs = roots_with_multiplicity(f)
    pts = np.array([p.z for p, _ in rs.entries], dtype=complex)
    if not include_nonrepelling:
        w = rn.derivative_numerator()
        qv = poly_eval(rn._q_pad, pts)
        ok = qv != 0
        mult = np.zeros(pts.shape, dtype=float)
        mult[ok] = np.abs(poly_eval(w, pts[ok]) / qv[ok] ** 2)
        pts = pts[mult > 1.0 + 1e-9]
    order = np.lexsort((pts.imag, pts.real))
    return pts[order]
