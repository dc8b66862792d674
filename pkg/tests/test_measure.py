"""Balanced-measure clouds: exact trees, Monte Carlo, invariance, io."""

import json
import math

import numpy as np
import pytest

from ratdyn.measure import (
    WeightedCloud,
    convergence_diagnostic,
    integrate,
    invariance_defect,
    lyubich_exact,
    lyubich_mc,
    pushforward,
    read_weighted_csv,
    write_diagnostics_json,
    write_weighted_csv,
)
from ratdyn.numkernel import SpherePoint


def _moment(cloud, k):
    return integrate(cloud, lambda p: p.z.real ** k).real


def test_exact_tree_bookkeeping(t3):
    mu = lyubich_exact(t3, 0.1, 6)
    assert len(mu) == 729                      # 3^6 simple atoms
    assert mu.denominator == 3 ** 6
    assert sum(mu.int_weights) == mu.denominator
    assert sum(mu.weights()) == pytest.approx(1.0, abs=1e-12)
    assert mu.provenance[0] == "exact_tree"


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightedCloud(((SpherePoint.finite(0j), 0.5),), ("file", "x"))


def test_arcsine_moments_chebyshev(t3):
    # the invariant measure of T_n on [-1, 1] is dx / (pi sqrt(1 - x^2));
    # theta substitution gives moment k as C(k, k/2) / 2^k for even k
    mu = lyubich_exact(t3, 0.1, 7)
    for k in range(1, 7):
        want = math.comb(k, k // 2) / 2 ** k if k % 2 == 0 else 0.0
        assert _moment(mu, k) == pytest.approx(want, abs=1e-9)


def test_central_binomial_moments(zm2):
    # on [-2, 2] the arcsine moments are the central binomials
    mu = lyubich_exact(zm2, 0.37, 12)
    assert _moment(mu, 2) == pytest.approx(2.0, abs=1e-9)
    assert _moment(mu, 4) == pytest.approx(6.0, abs=1e-9)
    assert _moment(mu, 6) == pytest.approx(20.0, abs=1e-9)


def test_pushforward_exact_identity(zm2, z2):
    # pushing the depth-n tree forward gives the depth-(n-1) tree; integer
    # weights agree after cross-multiplying the denominators
    for R, y in ((zm2, 0.37), (z2, 0.73 + 0.2j)):
        n = 6
        deep = lyubich_exact(R, y, n)
        flat = lyubich_exact(R, y, n - 1)
        pushed = pushforward(R, deep)
        assert pushed.int_weights is not None
        assert len(pushed) == len(flat)
        key = lambda t: (round(t[0].z.real, 8), round(t[0].z.imag, 8),
                         t[0].is_infinity)
        got = sorted(zip(pushed.points(), pushed.int_weights), key=key)
        want = sorted(zip(flat.points(), flat.int_weights), key=key)
        for (p, iw), (q, jw) in zip(got, want):
            assert iw * flat.denominator == jw * pushed.denominator
            assert p.is_infinity == q.is_infinity


def test_cross_basepoint_stability(zm2):
    a = lyubich_exact(zm2, 0.37, 12)
    b = lyubich_exact(zm2, -1.21, 12)
    for k in (1, 2, 3):
        assert abs(_moment(a, k) - _moment(b, k)) < 1e-2


def test_mc_determinism_and_agreement(zm2):
    m1 = lyubich_mc(zm2, 1.0, depth=60, samples=4000, seed=2)
    m2 = lyubich_mc(zm2, 1.0, depth=60, samples=4000, seed=2)
    assert [p.z for p in m1.points()] == [p.z for p in m2.points()]
    ex = lyubich_exact(zm2, 1.0, 12)
    assert _moment(m1, 2) == pytest.approx(_moment(ex, 2), abs=3 / math.sqrt(4000))
    assert m1.provenance[0] == "monte_carlo"


def test_invariance_defect_shrinks(z2):
    # at depth n the defect equals the level n-1 -> n integral gap, so it
    # is truncation-sized and halves with each extra level
    tests = [lambda p: p.z.real, lambda p: abs(p.z) ** 2,
             lambda p: (p.z ** 2).real]
    shallow = invariance_defect(z2, lyubich_exact(z2, 0.73 + 0.2j, 8), tests)
    deep = invariance_defect(z2, lyubich_exact(z2, 0.73 + 0.2j, 12), tests)
    assert deep < 1e-3
    assert deep < shallow / 4


def test_convergence_diagnostic_shape(z2):
    tests = [lambda p: abs(p.z) ** 2]
    recs = convergence_diagnostic(z2, 0.73 + 0.2j, 8, tests, y2=1.4 - 0.2j)
    # 8 per-level gaps plus one cross-basepoint record
    assert len(recs) == 9
    assert recs[-1]["test"].endswith("cross-basepoint")
    assert recs[-1]["gap"] < 1e-2
    # gaps shrink with depth
    assert recs[6]["gap"] < recs[0]["gap"]


def test_weighted_csv_roundtrip(tmp_path, zm2):
    mu = lyubich_exact(zm2, 0.37, 5)
    p = tmp_path / "mu.csv"
    write_weighted_csv(p, mu)
    back = read_weighted_csv(p)
    assert len(back) == len(mu)
    assert back.provenance[0] == "file"
    for (a, wa), (b, wb) in zip(mu.atoms, back.atoms):
        assert wa == wb
        assert a.is_infinity == b.is_infinity
        if not a.is_infinity:
            assert a.z == b.z
    # rewriting the file reproduces it byte for byte
    q = tmp_path / "mu2.csv"
    write_weighted_csv(q, back)
    assert p.read_bytes() == q.read_bytes()


def test_diagnostics_json(tmp_path, z2):
    recs = convergence_diagnostic(z2, 0.73, 4, [lambda p: p.z.real])
    f = tmp_path / "diag.json"
    write_diagnostics_json(f, recs)
    data = json.loads(f.read_text())
    assert data["schema"] == 1
    assert len(data["records"]) == len(recs)
