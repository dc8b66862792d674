"""Acceptance gate: one test per criterion, pinned tolerances.

Each test prints a single `criterion NN <label>: PASS` line on success;
a failure shows up as the test's own failure line. Run with -v to see
the per-criterion status even when everything is green.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from ratdyn.errors import FrameUnavailable
from ratdyn.numkernel import SpherePoint
from ratdyn.ratmap import (
    RationalMap,
    branch_index,
    critical_points,
    evaluate,
    iterate_map,
    preimages,
)
from ratdyn.julia import sample_inverse_iteration
from ratdyn.measure import integrate, lyubich_exact, lyubich_mc, pushforward
from ratdyn.transfer import TestFunction, kms_defect, kms_iterate, lemma31_defect
from ratdyn.bimodule import (
    GraphFunction,
    build_frame,
    frame_delta_defect,
    frame_reconstruction_defect,
    inner_product,
    norm_sup,
    norm_two,
    normalized_witness,
    tensor_embed,
)
from ratdyn.registry import get, list_examples, verify, verify_all

CLI = [sys.executable, "-m", "ratdyn.cli"]


def _ok(num, label):
    print(f"criterion {num:02d} {label}: PASS")


@pytest.fixture(scope="module")
def quad02():
    return RationalMap([0.2, 0, 1], [1])


def test_01_fiber_sums():
    # 1000 seeded points per registry map; indices sum to deg R exactly
    gen = np.random.default_rng(7)
    for name in list_examples():
        R = get(name).map
        t0 = time.time()
        pts = gen.standard_normal(1000) + 1j * gen.standard_normal(1000)
        for y in pts:
            assert preimages(R, y).total_index == R.degree, (name, y)
        assert time.time() - t0 < 10.0, name
    _ok(1, "fiber index sums")


def test_02_riemann_hurwitz():
    for name in list_examples():
        R = get(name).map
        cds = critical_points(R)
        assert sum(c.index - 1 for c in cds) == 2 * R.degree - 2, name
        if name == "lattes":
            assert len(cds) == 6 and R.degree == 4
    _ok(2, "Riemann-Hurwitz count")


def test_03_chain_rule():
    gen = np.random.default_rng(7)
    for name in list_examples():
        R = get(name).map
        R2 = iterate_map(R, 2)
        pts = [c.point for c in critical_points(R)]
        pts += [SpherePoint.finite(complex(z)) for z in
                gen.standard_normal(100) + 1j * gen.standard_normal(100)]
        for p in pts:
            assert branch_index(R2, p) == (
                branch_index(R, p) * branch_index(R, evaluate(R, p))), (name, p)
    _ok(3, "branch index chain rule")


def test_04_norm_sandwich(z2, zm2):
    # |f|_inf <= |f|_2 <= sqrt(d) |f|_inf over probe fibers, slack 1e-9
    for R, start in ((z2, 0.9 + 0.3j), (zm2, 1.3)):
        cloud = sample_inverse_iteration(R, start, count=600, seed=0)
        probes = cloud.points[::20]
        fiber_pts = [q for y in probes for q, _ in preimages(R, y).entries]
        gen = np.random.default_rng(11)
        for _ in range(200):
            f = GraphFunction(1, TestFunction.monomial(
                int(gen.integers(0, 4)), int(gen.integers(0, 3)),
                complex(gen.uniform(-2, 2), gen.uniform(-2, 2))))
            ninf = norm_sup(f, fiber_pts)
            n2 = norm_two(R, 1, f, probes)
            assert ninf <= n2 + 1e-9
            assert n2 <= math.sqrt(R.degree) * ninf + 1e-9
    _ok(4, "norm sandwich")


def test_05_tensor_isometry(z2, t2):
    for R, ys in ((z2, (0.9 + 0.3j, -0.4 + 0.8j)), (t2, (0.3, -0.6))):
        gen = np.random.default_rng(13)
        for trial in range(50):
            n = 2 if trial % 2 == 0 else 3
            def mono():
                return GraphFunction(1, TestFunction.monomial(
                    int(gen.integers(0, 3)), int(gen.integers(0, 2)),
                    complex(gen.uniform(-1, 1), gen.uniform(-1, 1))))
            fs = [mono() for _ in range(n)]
            gs = [mono() for _ in range(n)]
            F, G = tensor_embed(R, fs), tensor_embed(R, gs)

            def nest(k, yy):
                tot = 0j
                for q, e in preimages(R, yy).entries:
                    inner = nest(k - 1, q) if k > 0 else 1.0 + 0j
                    tot += (e * np.conj(complex(fs[k](q)))
                            * complex(gs[k](q)) * inner)
                return tot

            for y in ys:
                direct = inner_product(R, n, F, G, y)
                val = nest(n - 1, SpherePoint.from_value(y))
                assert abs(direct - val) <= 1e-10
    _ok(5, "tensor inner-product isometry")


def test_06_expectation_module_relation():
    mono3 = [(j, k) for j in range(4) for k in range(4) if j + k <= 3]
    gen = np.random.default_rng(17)
    for name in list_examples():
        R = get(name).map
        probes = gen.standard_normal(100) + 1j * gen.standard_normal(100)
        pairs = [(mono3[i % len(mono3)], mono3[(i * 3 + 1) % len(mono3)])
                 for i in range(10)]
        for (ja, ka), (jb, kb) in pairs:
            dft = lemma31_defect(R, TestFunction.monomial(ja, ka),
                                 TestFunction.monomial(jb, kb), probes)
            assert dft <= 1e-9, (name, (ja, ka), (jb, kb), dft)
    _ok(6, "expectation module relation")


def test_07_lyubich_invariance_and_convergence(z2, zm2, quad02, full_shift):
    t0 = time.time()
    # pushforward of the depth-n tree is the depth-(n-1) tree, exactly,
    # after cross-multiplying the integer weight denominators
    for R, y in ((z2, 0.73 + 0.2j), (zm2, 0.37)):
        deep, flat = lyubich_exact(R, y, 6), lyubich_exact(R, y, 5)
        pushed = pushforward(R, deep)
        assert len(pushed) == len(flat)
        key = lambda t: (t[0].is_infinity, round(t[0].z.real, 8),
                         round(t[0].z.imag, 8))
        got = sorted(zip(pushed.points(), pushed.int_weights), key=key)
        want = sorted(zip(flat.points(), flat.int_weights), key=key)
        for (p, iw), (q, jw) in zip(got, want):
            assert iw * flat.denominator == jw * pushed.denominator

    tests = [lambda p: p.z.real, lambda p: abs(p.z) ** 2,
             lambda p: (p.z ** 2).real]
    deg2 = ((z2, 0.73 + 0.2j, 1.4 - 0.2j), (zm2, 0.37, -1.21),
            (quad02, 0.73 + 0.2j, 1.4 - 0.2j), (full_shift, 0.9 + 0.3j, 1.7 - 0.4j))
    for R, y1, y2 in deg2:
        a, b = lyubich_exact(R, y1, 14), lyubich_exact(R, y2, 14)
        for t in tests:
            assert abs(integrate(a, t) - integrate(b, t)) < 1e-2

    # Monte Carlo moments vs the exact tree, 3/sqrt(N) at N = 1e4
    budget = 3 / math.sqrt(10000)
    ex = lyubich_exact(zm2, 1.0, 14)
    mc = lyubich_mc(zm2, 1.0, depth=60, samples=10000, seed=0)
    for t in (lambda p: p.z.real, lambda p: p.z.real ** 2,
              lambda p: abs(p.z) ** 2):
        assert abs(integrate(ex, t) - integrate(mc, t)) <= budget
    ex2 = lyubich_exact(z2, 1.3, 14)
    mc2 = lyubich_mc(z2, 1.3, depth=60, samples=10000, seed=0)
    for t in (lambda p: p.z.real, lambda p: abs(p.z) ** 2):
        assert abs(integrate(ex2, t) - integrate(mc2, t)) <= budget

    assert time.time() - t0 < 60.0
    _ok(7, "balanced measure invariance and convergence")


def test_08_chebyshev_moment_oracle(t2):
    # theta substitution: integrals of x and x^2 against the arcsine law
    mu = lyubich_exact(t2, 0.3, 12)
    assert abs(integrate(mu, lambda p: p.z.real ** 2).real - 0.5) < 1e-2
    assert abs(integrate(mu, lambda p: p.z.real).real) < 1e-2
    _ok(8, "degree-2 interval moment oracle")


def test_09_kms_fixed_point(z2, t2, t3, quad02):
    cases = ((z2, 0.9 + 0.3j), (t2, 0.3), (t3, 0.3), (quad02, 0.9 + 0.3j))
    for R, start in cases:
        d = R.degree
        nmax = 8 if d == 2 else 6
        cloud = sample_inverse_iteration(R, start, count=400, seed=0)
        probes = cloud.points[::80]
        for j in range(4):   # monomials z^j, degree <= 3
            run = kms_iterate(R, TestFunction.monomial(j), nmax, probes)
            lv = next((t.level for t in run.traces
                       if t.sup_variation < 1e-6), None)
            assert lv is not None and lv <= 20, (R, j)
            assert run.lyubich_gap < 1e-3, (R, j, run.lyubich_gap)
        # falsification: beta' = log d + 0.1 forces defect |e^-beta' d - 1|
        mu = lyubich_exact(R, 0.73, 9 if d == 2 else 6)
        bad = math.log(d) + 0.1
        dfct = kms_defect(R, mu, [TestFunction.constant(1.0)], beta=bad)
        assert abs(dfct - abs(math.exp(-bad) * d - 1.0)) < 1e-12
    _ok(9, "KMS fixed point at log d")


def test_10_frames(z2, zm2, quad02, cloud_z2, cloud_zm2):
    f = GraphFunction(1, TestFunction.monomial(1))
    for R, cloud in ((z2, cloud_z2),
                     (quad02, sample_inverse_iteration(
                         quad02, 0.9 + 0.3j, count=4000, seed=0))):
        frame = build_frame(R, cloud)
        assert frame_delta_defect(R, frame, cloud.points[::100]) < 1e-9
        assert frame_reconstruction_defect(
            R, frame, f, cloud.points[::200]) < 1e-8
    with pytest.raises(FrameUnavailable):
        build_frame(zm2, cloud_zm2)
    _ok(10, "finite frames where criticals avoid the Julia set")


def test_11_simplicity_witnesses(z2, zm2, cloud_z2, cloud_zm2):
    def random_positive(gen, scale):
        c0 = float(gen.uniform(2.5, 4.0))
        b1 = complex(gen.uniform(-scale, scale), gen.uniform(-scale, scale))
        b2 = complex(gen.uniform(-scale / 2, scale / 2),
                     gen.uniform(-scale / 2, scale / 2))
        return TestFunction.from_table({
            (0, 0): c0,
            (1, 0): b1, (0, 1): b1.conjugate(),
            (2, 0): b2, (0, 2): b2.conjugate(),
        })

    for R, cloud, scale, seed in ((z2, cloud_z2, 0.25, 101),
                                  (zm2, cloud_zm2, 0.10, 202)):
        probes = cloud.points[::max(1, len(cloud.points) // 200)]
        gen = np.random.default_rng(seed)
        for _ in range(10):
            a = random_positive(gen, scale)
            vals = [complex(a(p)).real for p in cloud.points]
            assert min(vals) > 0
            eps = 0.1 * max(vals)
            u, rep = normalized_witness(R, a, eps, cloud, probe_ys=probes)
            na = rep["norm_a"]
            assert rep["passed"] is True
            assert abs(rep["ff_min"] - 1.0) <= 1e-8
            assert abs(rep["ff_max"] - 1.0) <= 1e-8
            assert rep["faf_min"] >= na - rep["eps"] - 1e-8
            assert rep["faf_max"] <= na + 1e-8
            assert abs(rep["uau_min"] - 1.0) <= 1e-8
            assert abs(rep["uau_max"] - 1.0) <= 1e-8
            assert rep["norm_two_u"] <= (na - rep["eps"]) ** -0.5 + 1e-8
    _ok(11, "simplicity witnesses")


def test_12_registry_verification():
    out = verify_all()
    assert out["passed"] is True
    z = {c["check"]: c for c in verify("z2_minus_2")["checks"]}
    assert z["tent_conjugacy"]["conjugacy_defect"] < 1e-10
    assert z["critical_points_in_julia"]["measured"] == 1
    t = {c["check"]: c for c in verify("tchebychev_n")["checks"]}
    assert t["critical_points_in_julia"]["measured"] == 2
    l = {c["check"]: c for c in verify("lattes")["checks"]}
    assert l["critical_count"]["distinct"] == 6
    # the command-line path agrees
    r = subprocess.run(CLI + ["verify", "--all"], capture_output=True,
                       text=True, timeout=600)
    assert r.returncode == 0, r.stdout + r.stderr
    _ok(12, "registry verify --all")


def test_13_determinism(tmp_path):
    def cli(*args):
        r = subprocess.run(CLI + list(args), capture_output=True, text=True,
                           timeout=600, env=dict(os.environ))
        assert r.returncode == 0, r.stdout + r.stderr
        return r.stdout

    jobs = {
        "cloud.csv": ["julia", "z^2 - 2", "--count", "300", "--out"],
        "img.pgm": ["julia", "z^2", "--res", "24",
                    "--window=-1.2,1.2,-1.2,1.2", "--render"],
        "mu.csv": ["measure", "z^2 - 2", "--method", "mc", "--samples",
                   "400", "--out"],
        "trace.csv": ["kms", "z^2", "--test", "z", "--levels", "5", "--out"],
        "wit.json": ["witness", "z^2", "--a", "2 + 0.25*z + 0.25*conj(z)",
                     "--eps", "0.2", "--out"],
    }
    outs = {}
    for fname, args in jobs.items():
        pair = []
        for tag in ("a", "b"):
            path = tmp_path / f"{tag}_{fname}"
            cli(*args, str(path))
            pair.append(path.read_bytes())
        assert pair[0] == pair[1], fname
        outs[fname] = pair[0]
    assert len(outs) == 5
    _ok(13, "byte-identical artifacts under fixed seeds")
