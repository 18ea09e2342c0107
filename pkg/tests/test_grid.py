import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from folschwarz.grid import (
    Direction,
    Kind,
    ScalarField,
    build_grid,
    half_mask,
    norms,
    on_hyperplane,
    read_field_csv,
    reflect_field,
    reflect_indices,
    sigma_indices,
    write_field_csv,
)


def test_disk_spacing():
    g = build_grid(Kind.DISK, 0.0, 8.0, 64, 128)
    assert g.dr == pytest.approx(8 / 65, rel=1e-15)
    assert g.dtheta == pytest.approx(2 * math.pi / 128, rel=1e-15)
    assert g.n_unknowns == 64 * 128 + 1


def test_annulus_first_node():
    g = build_grid("annulus", 1.0, 10.0, 90, 128)
    assert g.r[0] == pytest.approx(1 + 9 / 91, rel=1e-15)
    assert not g.has_center


@pytest.mark.parametrize(
    "args, msg",
    [
        (("disk", 0.5, 8.0, 64, 128), "r_inner = 0"),
        (("disk", 0.0, 8.0, 64, 127), "even"),
        (("disk", 0.0, 0.0, 64, 128), "exceed"),
        (("annulus", 2.0, 1.0, 64, 128), "exceed"),
        (("annulus", 0.0, 1.0, 64, 128), "r_inner > 0"),
    ],
)
def test_build_grid_rejects(args, msg):
    with pytest.raises(ValueError, match=msg):
        build_grid(*args)


def test_reflect_examples():
    g = build_grid("disk", 0.0, 1.0, 4, 8)
    assert reflect_indices(g, Direction(0, 8))[1] == 7
    # angle pi/2 is half-index n_theta / 2
    assert reflect_indices(g, Direction(4, 8))[0] == 4


@given(n=st.integers(4, 64).map(lambda k: 2 * k), k=st.integers(0, 1000))
def test_reflection_is_involution_and_lands_on_grid(n, k):
    g = build_grid("disk", 0.0, 1.0, 3, n)
    e = Direction(k, n)
    p = reflect_indices(g, e)
    assert np.array_equal(p[p], np.arange(n))
    want = (2 * e.angle - g.theta) % (2 * math.pi)
    got = g.theta[p]
    assert np.allclose(np.minimum(abs(got - want), 2 * math.pi - abs(got - want)), 0, atol=1e-12)


def test_half_mask_examples():
    g = build_grid("disk", 0.0, 1.0, 3, 8)
    e = Direction(0, 8)
    m = half_mask(g, e)
    assert m[0, 1]  # theta = pi/4
    assert not m[0, 2]  # theta = pi/2 lies on H(e)
    assert on_hyperplane(g, e)[0, 2]


@pytest.mark.parametrize("n", [8, 10, 32])
def test_half_masks_partition_off_hyperplane(n):
    g = build_grid("annulus", 1.0, 2.0, 3, n)
    for e in g.directions():
        a, b, h = half_mask(g, e), half_mask(g, e.opposite()), on_hyperplane(g, e)
        assert not np.any(a & b)
        assert np.array_equal(a | b, ~h)


def test_sigma_maps_half_to_opposite_half():
    g = build_grid("disk", 0.0, 1.0, 3, 16)
    for e in g.directions():
        s = sigma_indices(g, e)
        a = half_mask(g, e)[0]
        b = half_mask(g, e.opposite())[0]
        assert np.array_equal(a[s], b)


def test_radial_field_invariant_under_every_reflection():
    g = build_grid("disk", 0.0, 2.0, 6, 16)
    u = ScalarField(g, np.repeat(np.exp(-g.r**2)[:, None], 16, axis=1), 1.0)
    for e in g.directions():
        assert np.array_equal(reflect_field(u, reflect_indices(g, e)).values, u.values)


def test_norms_examples():
    g = build_grid("annulus", 1.0, 2.0, 200, 64)
    assert norms(ScalarField.zeros(g)) == (0.0, 0.0)
    one = ScalarField(g, np.ones((200, 64)))
    # cell-centred midpoint rule misses the half cells next to both boundaries
    assert norms(one)[1] ** 2 == pytest.approx(3 * math.pi, rel=2 / 201)
    s, l2 = norms(one.scaled(-2.5))
    assert s == pytest.approx(2.5) and l2 == pytest.approx(2.5 * norms(one)[1])


def test_field_rejects_bad_values():
    g = build_grid("annulus", 1.0, 2.0, 3, 8)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((3, 7)))
    with pytest.raises(ValueError):
        ScalarField(g, np.full((3, 8), np.nan))
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((3, 8)), center=1.0)


def test_vector_round_trip_puts_centre_last():
    g = build_grid("disk", 0.0, 1.0, 3, 8)
    u = ScalarField(g, np.arange(24.0).reshape(3, 8), center=-1.0)
    v = u.vector()
    assert v[-1] == -1.0 and v.size == g.n_unknowns
    back = ScalarField.from_vector(g, v)
    assert np.array_equal(back.values, u.values) and back.center == -1.0


@pytest.mark.parametrize("kind, r0", [("disk", 0.0), ("annulus", 0.3)])
def test_csv_round_trip_is_exact(tmp_path, kind, r0):
    g = build_grid(kind, r0, 1.7, 5, 12)
    rng = np.random.default_rng(1)
    u = ScalarField(g, rng.normal(size=(5, 12)), 0.123456789 if g.has_center else None)
    path = tmp_path / "u.csv"
    write_field_csv(u, path)
    assert path.read_text().splitlines()[0] == "r,theta,value"
    back = read_field_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, u.values)
    assert back.center == u.center
