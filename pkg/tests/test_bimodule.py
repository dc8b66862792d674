"""Inner products, frames, expansion time, simplicity witnesses."""

import cmath
import math

import numpy as np
import pytest

from ratdyn.errors import BudgetExceeded, FrameUnavailable
from ratdyn.numkernel import SpherePoint
from ratdyn.ratmap import preimages
from ratdyn.bimodule import (
    GraphFunction,
    ProductOnGraph,
    build_frame,
    expansion_time,
    frame_delta_defect,
    frame_reconstruction_defect,
    inner_product,
    norm_sup,
    norm_two,
    normalized_witness,
    simplicity_witness,
    tensor_embed,
    write_witness_json,
)
from ratdyn.transfer import TestFunction


def _mono(j, k=0, c=1.0):
    return GraphFunction(1, TestFunction.monomial(j, k, c))


def test_inner_product_brute_force(z2, rng):
    # depth-2 inner product vs a hand-rolled double fiber loop
    f = GraphFunction(2, lambda p: p.z + 0.5)
    g = GraphFunction(2, lambda p: p.z ** 2 - 1j)
    for _ in range(5):
        y = complex(rng.standard_normal(), rng.standard_normal())
        got = inner_product(z2, 2, f, g, y)
        want = 0j
        for q1, e1 in preimages(z2, y).entries:
            for q2, e2 in preimages(z2, q1).entries:
                want += e1 * e2 * np.conj(f(q2)) * g(q2)
        assert got == pytest.approx(want, abs=1e-10)


def test_inner_product_arity_checked(z2):
    with pytest.raises(ValueError):
        inner_product(z2, 2, _mono(1), _mono(1), 0.5)


def test_constant_inner_product_counts_degree(z2, lattes):
    one = GraphFunction(1, TestFunction.constant(1.0))
    for R in (z2, lattes):
        v = inner_product(R, 1, one, one, 0.73 + 0.2j)
        assert v.real == pytest.approx(R.degree, abs=1e-9)


def test_norm_sandwich_spot(z2, cloud_z2):
    probes = cloud_z2.points[::400]
    fiber_pts = [q for y in probes for q, _ in preimages(z2, y).entries]
    for f in (_mono(1), _mono(2, 1, 0.7), _mono(0, 0, -2.0)):
        ninf = norm_sup(f, fiber_pts)
        n2 = norm_two(z2, 1, f, probes)
        assert ninf <= n2 + 1e-9
        assert n2 <= math.sqrt(2.0) * ninf + 1e-9


def test_tensor_embed_values(z2):
    F = tensor_embed(z2, [_mono(1), _mono(1)])
    x = 0.5 + 0.25j
    assert F(x) == pytest.approx(x * x ** 2)     # f1(x) f2(R x)
    assert F.arity == 2
    with pytest.raises(ValueError):
        tensor_embed(z2, [])
    with pytest.raises(ValueError):
        tensor_embed(z2, [GraphFunction(2, lambda p: 1.0)])


def test_product_on_graph():
    a = TestFunction.constant(2.0)
    f = GraphFunction(3, TestFunction.monomial(1))
    af = ProductOnGraph(a, f)
    assert af.arity == 3
    assert af(1 + 1j) == pytest.approx(2 * (1 + 1j))


# --- frames ---------------------------------------------------------------

def test_frame_on_circle(z2, cloud_z2):
    frame = build_frame(z2, cloud_z2)
    assert len(frame.members) >= 2
    probes = cloud_z2.points[::400]
    assert frame_delta_defect(z2, frame, probes) < 1e-9
    recon = frame_reconstruction_defect(z2, frame, _mono(1),
                                        cloud_z2.points[::200])
    assert recon < 1e-8


def test_frame_refuses_interval(zm2, cloud_zm2):
    # the critical point 0 lies on J(z^2-2): no continuous arc frame
    with pytest.raises(FrameUnavailable):
        build_frame(zm2, cloud_zm2)


# --- expansion time -------------------------------------------------------

def test_expansion_time_quarter_arc(z2, cloud_z2):
    # V = arc of angular radius pi/8 at 1: doubling needs 3 steps to cover
    # the circle, matching the hand-computed covering exponent
    radius = abs(cmath.exp(1j * math.pi / 8) - 1.0)
    n = expansion_time(z2, (1.0 + 0j, radius), cloud_z2, 1e-3)
    assert n == 3


def test_expansion_time_whole_set_is_zero(z2, cloud_z2):
    n = expansion_time(z2, (1.0 + 0j, 2.0), cloud_z2, 1e-3)
    assert n == 0


def test_expansion_time_interval_disc(zm2, cloud_zm2):
    n = expansion_time(zm2, (0.0 + 0j, 0.1), cloud_zm2, 1e-2)
    assert n == 7


def test_expansion_time_requires_overlap(z2, cloud_z2):
    with pytest.raises(ValueError):
        expansion_time(z2, (5.0 + 0j, 0.05), cloud_z2, 1e-3)


def test_expansion_time_budget(z2, cloud_z2):
    # center the tiny disc on an actual sample so V is nonempty
    c = cloud_z2.points[0].z
    with pytest.raises(BudgetExceeded):
        expansion_time(z2, (c, 1e-4), cloud_z2, 1e-6, budget=2)


# --- witnesses ------------------------------------------------------------

def test_witness_frozen_case(z2, cloud_z2):
    # a = 2 + Re z, maximum 3 at x0 = 1
    a = TestFunction.from_table({(0, 0): 2.0, (1, 0): 0.5, (0, 1): 0.5})
    n, f, rep = simplicity_witness(z2, a, 0.2, cloud_z2)
    assert n == 6
    assert rep["norm_a"] == pytest.approx(3.0, abs=1e-6)
    assert rep["passed"] is True
    assert abs(rep["ff_min"] - 1.0) <= 1e-8 and abs(rep["ff_max"] - 1.0) <= 1e-8
    assert rep["faf_min"] >= rep["norm_a"] - 0.2 - 1e-8
    assert rep["faf_max"] <= rep["norm_a"] + 1e-8
    # the witness is supported near the maximizer and normalized there
    assert abs(complex(f(1.0 + 0j))) > 0.1


def test_witness_constant_function(z2, cloud_z2):
    # for a = 1 the bump passes through exactly: (f|af) = (f|f) = 1
    a = TestFunction.constant(1.0)
    n, f, rep = simplicity_witness(z2, a, 0.1, cloud_z2)
    assert rep["faf_min"] == pytest.approx(1.0, abs=1e-12)
    assert rep["faf_max"] == pytest.approx(1.0, abs=1e-12)


def test_witness_interval_case(zm2, cloud_zm2):
    class AbsRe:
        label = "2 - |Re x|"
        def __call__(self, p):
            return 2.0 - abs(p.z.real)
    n, f, rep = simplicity_witness(zm2, AbsRe(), 0.3, cloud_zm2)
    assert n == 8
    assert rep["passed"] is True
    assert rep["faf_min"] >= rep["norm_a"] - 0.3 - 1e-8
    assert rep["faf_max"] <= rep["norm_a"] + 1e-8


def test_witness_rejects_bad_inputs(z2, cloud_z2):
    with pytest.raises(ValueError):
        simplicity_witness(z2, TestFunction.monomial(1), 0.1, cloud_z2)
    with pytest.raises(ValueError):
        simplicity_witness(z2, TestFunction.constant(1.0), 2.0, cloud_z2)


def test_normalized_witness(z2, cloud_z2, tmp_path):
    a = TestFunction.from_table({(0, 0): 2.0, (1, 0): 0.5, (0, 1): 0.5})
    u, rep = normalized_witness(z2, a, 0.2, cloud_z2)
    assert rep["passed"] is True
    assert abs(rep["uau_min"] - 1.0) <= 1e-8
    assert abs(rep["uau_max"] - 1.0) <= 1e-8
    bound = (rep["norm_a"] - rep["eps"]) ** -0.5
    assert rep["norm_two_u"] <= bound + 1e-8
    p = tmp_path / "wit.json"
    write_witness_json(p, rep)
    q = tmp_path / "wit2.json"
    write_witness_json(q, rep)
    assert p.read_bytes() == q.read_bytes()
    assert b'"passed": true' in p.read_bytes()
