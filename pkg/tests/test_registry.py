"""Example catalog: metadata, builders, verification checks."""

import pytest

from ratdyn.errors import UnknownExample
from ratdyn.registry import get, list_examples, verify, verify_all

EXPECTED = [
    "power_map_n",
    "z2_minus_2",
    "quadratic_family",
    "full_shift_example",
    "tchebychev_n",
    "lattes",
    "ushiki_gasket",
]


def test_catalog_names():
    assert list_examples() == tuple(EXPECTED)


def test_get_unknown():
    with pytest.raises(UnknownExample):
        get("does_not_exist")


def test_metadata_literals():
    rec = get("power_map_n")
    assert rec.k0 == "Z + Z/(n-1)Z"
    assert rec.k1 == "Z"
    assert rec.default_param == 2
    assert get("z2_minus_2").k1 == "0"
    assert "O_2" in get("full_shift_example").algebra_identification
    assert get("lattes").critical_in_julia_count == 6


def test_family_builders():
    assert get("power_map_n").build(5).degree == 5
    assert get("tchebychev_n").build(4).degree == 4
    # T_3 = 4z^3 - 3z through the recurrence
    t3 = get("tchebychev_n").build(3)
    from ratdyn.ratmap import evaluate
    assert evaluate(t3, 0.3).z == pytest.approx(4 * 0.3 ** 3 - 3 * 0.3)
    c = get("quadratic_family").build(0.1 + 0.05j)
    assert evaluate(c, 0.0).z == pytest.approx(0.1 + 0.05j)


def test_default_map_property():
    assert get("lattes").map.degree == 4
    assert get("ushiki_gasket").map.degree == 3


def test_verify_single_example():
    rep = verify("z2_minus_2")
    assert rep["passed"] is True
    names = [c["check"] for c in rep["checks"]]
    assert names == ["julia_interval_band", "critical_points_in_julia",
                     "tent_conjugacy"]
    by_name = {c["check"]: c for c in rep["checks"]}
    assert by_name["critical_points_in_julia"]["measured"] == 1
    assert by_name["tent_conjugacy"]["conjugacy_defect"] < 1e-10


def test_verify_with_param():
    rep = verify("power_map_n", param=3)
    assert rep["passed"] is True


def test_verify_unknown_raises():
    with pytest.raises(UnknownExample):
        verify("nope")


def test_verify_all_shapes():
    out = verify_all()
    assert out["passed"] is True
    assert [r["name"] for r in out["reports"]] == EXPECTED
    assert all(r["passed"] for r in out["reports"])
