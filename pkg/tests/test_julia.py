"""Julia sampling, membership tests, rendering, cloud io."""

import numpy as np
import pytest

from ratdyn.julia import (
    circle_neighbor_stats,
    critical_points_in_julia,
    escape_membership,
    mandelbrot_member,
    read_cloud_csv,
    render,
    sample_inverse_iteration,
    write_cloud_csv,
    write_pgm,
)


def test_cloud_shape_and_determinism(z2):
    c1 = sample_inverse_iteration(z2, 0.9 + 0.3j, count=500, seed=3)
    c2 = sample_inverse_iteration(z2, 0.9 + 0.3j, count=500, seed=3)
    assert len(c1) == 500
    assert c1.generator == "inverse_iteration"
    assert [(p.z, p.is_infinity) for p in c1] == [
        (p.z, p.is_infinity) for p in c2]
    c3 = sample_inverse_iteration(z2, 0.9 + 0.3j, count=500, seed=4)
    assert [p.z for p in c1] != [p.z for p in c3]


def test_unit_circle_oracle(cloud_z2):
    # J(z^2) is the unit circle; the walk contracts the start's modulus
    # error by sqrt each backstep, so burn-in leaves ~1e-8
    mods = np.abs(cloud_z2.finite_values())
    assert np.max(np.abs(mods - 1.0)) < 1e-6


def test_interval_oracle(cloud_zm2):
    # J(z^2 - 2) = [-2, 2] on the real axis
    zs = cloud_zm2.finite_values()
    assert np.max(np.abs(zs.imag)) < 1e-9
    assert np.min(zs.real) > -2.0 - 1e-9
    assert np.max(zs.real) < 2.0 + 1e-9
    # both halves of the interval get visited
    assert np.min(zs.real) < -1.5 and np.max(zs.real) > 1.5


def test_escape_membership(z2):
    assert escape_membership(z2, 3.0) == "escapes"
    assert escape_membership(z2, 0.2) == "bounded"
    assert escape_membership(z2, 1.0) == "bounded"   # on the Julia set


def test_mandelbrot_member():
    assert mandelbrot_member(0.0) is True
    assert mandelbrot_member(-1.0) is True
    assert mandelbrot_member(0.26 + 0j) is False
    assert mandelbrot_member(1.5 + 1.5j) is False


def test_critical_points_in_julia_counts(z2, zm2, t3, cloud_z2, cloud_zm2):
    from ratdyn.julia import sample_inverse_iteration as sample
    assert len(critical_points_in_julia(z2, cloud_z2)) == 0
    assert len(critical_points_in_julia(zm2, cloud_zm2)) == 1
    cloud_t3 = sample(t3, 0.3, count=4000, seed=0)
    hits = critical_points_in_julia(t3, cloud_t3)
    assert len(hits) == 2
    assert sorted(c.point.z.real for c in hits) == pytest.approx(
        [-0.5, 0.5], abs=1e-6)


def test_circle_stats_discriminate(cloud_z2, cloud_zm2):
    on_circle = circle_neighbor_stats(cloud_z2.finite_values())
    on_interval = circle_neighbor_stats(cloud_zm2.finite_values())
    assert on_circle > 0.9
    assert on_interval < on_circle


def test_render_escape_mode(z2, tmp_path):
    img = render(z2, (-1.4, 1.4, -1.4, 1.4), 48, mode="escape", max_iter=40)
    assert img.shape == (48, 48)
    assert img.dtype == np.uint8
    # the window straddles the basin boundary: both shades present
    assert img.min() < 128 < img.max() or (img.min() == 0 and img.max() == 255)
    p = tmp_path / "z2.pgm"
    write_pgm(p, img)
    raw = p.read_bytes()
    assert raw.startswith(b"P5\n48 48\n255\n")
    assert len(raw) == len(b"P5\n48 48\n255\n") + 48 * 48


def test_render_density_mode_deterministic(full_shift):
    kw = dict(mode="density", samples=4000, depth=40, seed=9)
    a = render(full_shift, (-2.0, 2.0, -2.0, 2.0), 32, **kw)
    b = render(full_shift, (-2.0, 2.0, -2.0, 2.0), 32, **kw)
    assert np.array_equal(a, b)
    assert a.max() > 0


def test_cloud_csv_roundtrip(tmp_path, zm2):
    cloud = sample_inverse_iteration(zm2, 1.3, count=200, seed=5)
    p = tmp_path / "cloud.csv"
    write_cloud_csv(p, cloud)
    back = read_cloud_csv(p)
    assert len(back) == 200
    for a, b in zip(cloud, back):
        assert a.is_infinity == b.is_infinity
        if not a.is_infinity:
            assert a.z == b.z   # %.17g round-trips doubles exactly
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n1,2\n")
        read_cloud_csv(bad)
