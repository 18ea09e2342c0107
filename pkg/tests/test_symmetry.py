import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from folschwarz.grid import Direction, ScalarField, build_grid, half_mask, on_hyperplane, sigma_indices
from folschwarz.symmetry import (
    analyze,
    best_axis,
    circle_lemma_check,
    delta_bound,
    fs_deficit,
    fs_deficits,
    fs_symmetrize,
    hat_profile,
    hat_transform,
    m_arc,
    neg_deficit,
    polar_monotonicity_deficit,
    polar_monotonicity_margin,
    radial_deficit,
    subsolution_verify,
    symmetrize_circle,
    w_field,
    write_symmetry_csv,
)

G = build_grid("disk", 0.0, 1.0, 6, 16)


def field_of(fn, grid=G):
    return ScalarField.from_function(grid, fn)


def radial(grid=G):
    return ScalarField(grid, np.repeat(np.cos(grid.r)[:, None], grid.n_theta, axis=1),
                       1.0 if grid.has_center else None)


def test_w_field_examples():
    assert all(not np.any(w_field(radial(), e).values) for e in G.directions())
    u = field_of(lambda x, y: x)
    e = Direction(0, 16)
    w = w_field(u, e)
    mask = half_mask(G, e)
    x, _ = G.xy
    assert np.allclose(w.values[mask], 2 * x[mask], atol=1e-14)
    assert np.all(w.values[mask] > 0)


def test_w_field_antisymmetric_in_direction():
    rng = np.random.default_rng(5)
    u = ScalarField(G, rng.normal(size=(6, 16)), 0.0)
    for e in G.directions():
        perm = sigma_indices(G, e)
        a = w_field(u, e).values
        b = w_field(u, e.opposite()).values
        assert np.array_equal(a, -b[:, perm])


def test_neg_deficit_matches_brute_force():
    rng = np.random.default_rng(6)
    u = ScalarField(G, rng.normal(size=(6, 16)), 0.0)
    x, y = G.xy
    for e in G.directions():
        ex, ey = e.vector()
        worst = 0.0
        # independent route: reflect through Cartesian coordinates and look the node up by angle
        for i in range(G.n_r):
            for j in range(G.n_theta):
                dot = x[i, j] * ex + y[i, j] * ey
                if dot <= 1e-12 * G.r[i]:
                    continue
                rx, ry = x[i, j] - 2 * dot * ex, y[i, j] - 2 * dot * ey
                jr = int(round((math.atan2(ry, rx) % (2 * math.pi)) / G.dtheta)) % G.n_theta
                worst = max(worst, u.values[i, jr] - u.values[i, j])
        assert neg_deficit(u, e) == pytest.approx(worst, abs=1e-15)
    assert neg_deficit(radial(), Direction(3, 16)) == 0.0
    assert neg_deficit(field_of(lambda x, y: x), Direction(0, 16)) == 0.0


def test_zero_deficits_both_ways_detect_symmetry_plane():
    rng = np.random.default_rng(7)
    base = rng.normal(size=(6, 16))
    for k in range(32):
        e = Direction(k, 16)
        perm = sigma_indices(G, e)
        sym = ScalarField(G, 0.5 * (base + base[:, perm]), 0.0)
        assert neg_deficit(sym, e) == 0.0 and neg_deficit(sym, e.opposite()) == 0.0
        asym = ScalarField(G, base, 0.0)
        off = ~on_hyperplane(G, e)
        symmetric = np.array_equal(asym.values[off], asym.values[:, perm][off])
        both_zero = neg_deficit(asym, e) == 0.0 and neg_deficit(asym, e.opposite()) == 0.0
        assert both_zero == symmetric


def test_m_arc_radial_and_linear():
    arc, m_set, deficits = m_arc(radial())
    assert arc.width == pytest.approx(2 * math.pi) and len(m_set) == 32
    arc, m_set, _ = m_arc(field_of(lambda x, y: x))
    assert arc.width == pytest.approx(math.pi)
    assert arc.reference == 0
    assert arc.lo == pytest.approx(-math.pi / 2 % (2 * math.pi))


@pytest.mark.parametrize("k", [0, 5, 13])
def test_m_arc_of_strictly_foliated_field(k):
    phi = k * G.dtheta / 2
    u = field_of(lambda x, y: np.hypot(x, y) * np.exp(np.cos(np.arctan2(y, x) - phi)))
    arc, _, _ = m_arc(u)
    assert abs(arc.width - math.pi) <= G.dtheta / 2 + 1e-12
    centre = arc.lo + arc.width / 2
    assert abs((centre - phi + math.pi) % (2 * math.pi) - math.pi) <= G.dtheta / 2 + 1e-12


def test_m_arc_empty_without_members():
    rng = np.random.default_rng(8)
    u = ScalarField(G, rng.normal(size=(6, 16)), 0.0)
    arc, m_set, _ = m_arc(u)
    assert arc.empty and arc.reference is None and not m_set


def test_symmetrize_small_circle():
    out = symmetrize_circle(np.array([3.0, 1.0, 2.0, 0.0]), 0)
    assert out.tolist() == [3.0, 2.0, 0.0, 1.0]
    # brute force over all 4! placements for the unique nonincreasing-in-slot-order one
    order = [0, 1, 3, 2]
    hits = {p for p in itertools.permutations([3.0, 1.0, 2.0, 0.0]) if all(
        p[a] >= p[b] for a, b in zip(order, order[1:]))}
    assert hits == {tuple(out)}


circles = st.integers(4, 16).flatmap(
    lambda h: arrays(np.float64, 2 * h, elements=st.sampled_from([-1.0, 0.0, 0.5, 2.0, 3.25])))


@settings(max_examples=200, deadline=None)
@given(v=circles, k=st.integers(0, 63))
def test_symmetrize_idempotent_and_multiset_preserving(v, k):
    once = symmetrize_circle(v, k)
    assert np.array_equal(symmetrize_circle(once, k), once)
    assert np.array_equal(np.sort(once), np.sort(v))


@settings(max_examples=50, deadline=None)
@given(vals=arrays(np.float64, (3, 16), elements=st.floats(-5, 5)), k=st.integers(0, 31))
def test_symmetrized_field_has_zero_deficits(vals, k):
    g = build_grid("annulus", 1.0, 2.0, 3, 16)
    p = Direction(k, 16)
    s = fs_symmetrize(ScalarField(g, vals), p)
    assert fs_deficit(s, p) == 0.0
    assert polar_monotonicity_deficit(s, p) <= 0.0


def test_symmetrize_fixes_foliated_field_and_preserves_norms():
    p = Direction(4, 16)
    u = field_of(lambda x, y: np.cos(np.arctan2(y, x) - p.angle) + np.hypot(x, y))
    s = fs_symmetrize(u, p)
    assert np.allclose(s.values, u.values, atol=1e-14)
    rng = np.random.default_rng(9)
    v = ScalarField(G, rng.normal(size=(6, 16)), 0.0)
    sv = fs_symmetrize(v, p)
    assert np.allclose(np.sort(sv.values, axis=1), np.sort(v.values, axis=1))
    assert sv.sup() == v.sup()


def test_best_axis_is_exhaustive_argmin():
    rng = np.random.default_rng(10)
    for _ in range(20):
        u = ScalarField(G, rng.normal(size=(6, 16)), 0.0)
        d = fs_deficits(u)
        # independent route: deficit by explicit per-direction rearrangement
        alt = np.array([np.max(np.abs(u.values - fs_symmetrize(u, Direction(k, 16)).values)) for k in range(32)])
        assert np.allclose(d, alt, rtol=0, atol=0)
        b = best_axis(u)
        assert all(fs_deficit(u, b) <= fs_deficit(u, q) for q in G.directions())


def test_deficits_of_radial_and_foliated_fields():
    assert np.all(fs_deficits(radial()) == 0)
    u = field_of(lambda x, y: x)
    assert fs_deficit(u, Direction(0, 16)) <= 1e-15
    assert best_axis(u).half_index == 0


@pytest.mark.parametrize("k", [0, 7])
def test_polar_monotonicity_examples(k):
    p = Direction(k, 16)
    c1 = field_of(lambda x, y: np.cos(np.arctan2(y, x) - p.angle))
    c2 = field_of(lambda x, y: np.cos(2 * (np.arctan2(y, x) - p.angle)))
    assert polar_monotonicity_deficit(c1, p) <= 1e-15
    assert polar_monotonicity_deficit(c2, p) > 0.5
    if k == 0:
        assert polar_monotonicity_margin(c1, p) > 0


def test_radial_deficit_examples():
    assert radial_deficit(radial()) == 0.0
    eps = 0.125
    u = field_of(lambda x, y: eps * np.cos(np.arctan2(y, x)))
    assert radial_deficit(u) == pytest.approx(2 * eps, rel=1e-14)
    rng = np.random.default_rng(11)
    v = rng.normal(size=(6, 16))
    want = max(max(row) - min(row) for row in v.tolist())
    assert radial_deficit(ScalarField(G, v, 0.0)) == want


def test_analyze_and_csv(tmp_path):
    u = field_of(lambda x, y: x + 0.1 * y)
    rep = analyze(u)
    assert rep.best_axis == best_axis(u)
    write_symmetry_csv(rep, tmp_path)
    rows = (tmp_path / "symmetry.csv").read_text().splitlines()
    assert rows[0] == "e_half_index,deficit" and len(rows) == 33
    summary = (tmp_path / "symmetry_summary.csv").read_text().splitlines()
    assert summary[0] == "best_axis,fs_deficit,arc_lo,arc_hi,radial_deficit"


# --------------------------------------------------------------------------- quotient transform

ANN = build_grid("annulus", 1.0, 6.0, 40, 64)


def test_hat_profile_range():
    t = np.linspace(0, 3, 301)
    v, d1, _ = hat_profile(t, 0.0, 0.2)
    assert v[0] == pytest.approx(0.5, abs=1e-15)
    assert np.all((v >= 0.5 - 1e-15) & (v < 1)) and np.all(d1 >= 0)


def test_hat_transform_zero_and_constant():
    w0 = ScalarField.zeros(ANN)
    ht, out = hat_transform(w0, 2.0, 4.0, 3.0)
    assert not np.any(out.values)
    w1 = ScalarField(ANN, np.ones((40, 64)))
    ht, out = hat_transform(w1, 2.0, 4.0, 3.0)
    x, _ = ANN.xy
    far = ht.sigma & (x > ht.delta) & (ANN.rr > 1.0 + ht.delta)
    top = 0.5 * ht.delta + 0.5
    assert np.allclose(out.values[far], 1.0 / top**2)
    assert np.all((out.values[ht.sigma] > 1.0) & (out.values[ht.sigma] <= 4.0))


def test_hat_transform_rejects_bad_delta():
    w = ScalarField.zeros(ANN)
    bound = delta_bound(2.0, 3.0, 1.0)
    with pytest.raises(ValueError, match="delta"):
        hat_transform(w, 2.0, 4.0, 3.0, delta=bound)
    with pytest.raises(ValueError):
        hat_transform(w, 2.0, 4.0, 3.0, delta=-0.1)


@pytest.mark.parametrize("grid", [ANN, build_grid("disk", 0.0, 6.0, 40, 64)], ids=["annulus", "disk"])
def test_hat_transform_predicates_on_random_fields(grid):
    rng = np.random.default_rng(12)
    for _ in range(5):
        vals = rng.normal(size=(grid.n_r, grid.n_theta))
        w = ScalarField(grid, vals, 0.0 if grid.has_center else None)
        c = np.where(grid.rr < 4.0, rng.uniform(-2.9, 2.9, vals.shape), rng.uniform(-7, -2.01, vals.shape))
        masks = [rng.random(vals.shape) < 0.3 for _ in range(5)]
        ht, out = hat_transform(w, 2.0, 4.0, 3.0, c_field=c, submasks=masks)
        assert ht.holds, ht.checks
        assert np.array_equal(np.sign(out.values[ht.sigma]), np.sign(vals[ht.sigma]))


# --------------------------------------------------------------------------- ball subsolution

def test_subsolution_constant_coefficient():
    from folschwarz.examples import RADIAL, eigensolve

    unit = build_grid("disk", 0.0, 1.0, 32, 16)
    pair = eigensolve(unit, RADIAL, 1)
    radius, gamma = 0.5, 30.0
    rep = subsolution_verify(pair.eigenfunction, pair.eigenvalue, (1.5, 0.0), radius, gamma,
                             lambda x, y: np.zeros_like(x))
    assert rep.worst_margin == pytest.approx(pair.eigenvalue / radius**2 - gamma, rel=1e-12)
    assert rep.holds
    assert rep.agreement <= 1e-6 * pair.eigenvalue / radius**2
    weak = subsolution_verify(pair.eigenfunction, pair.eigenvalue, (1.5, 0.0), radius, 1.0,
                              lambda x, y: np.zeros_like(x))
    assert not weak.holds


# --------------------------------------------------------------------------- circle inequalities

def test_circle_checks_on_cosine_and_constant():
    m = 12
    c = np.cos(2 * np.pi * np.arange(m) / m)  # sampled cos is even only up to roundoff
    assert circle_lemma_check(c, "premises", orientation="decreasing", tol=1e-12).passed
    assert circle_lemma_check(c, "conclusion", orientation="decreasing", tol=1e-12).passed
    assert circle_lemma_check(-c, "premises", strict=True, tol=1e-12).passed
    assert circle_lemma_check(-c, "sign", tol=1e-12).passed
    k = np.full(m, 2.0)
    assert circle_lemma_check(k, "premises").passed and circle_lemma_check(k, "conclusion").passed
    assert not circle_lemma_check(k, "sign").passed


def test_circle_check_catches_broken_monotonicity():
    v = np.array([0.0, 1.0, 2.0, 3.0, 2.0, 1.0])
    bad = v.copy()
    bad[[1, 2]] = bad[[2, 1]]
    bad[[5, 4]] = bad[[4, 5]]
    assert circle_lemma_check(v, "conclusion").passed
    out = circle_lemma_check(bad, "conclusion")
    assert not out.passed and any("monotone" in s for s in out.violations)


def test_circle_check_rejects_bad_length():
    with pytest.raises(ValueError):
        circle_lemma_check([1.0, 2.0, 3.0], "premises")
    with pytest.raises(ValueError):
        circle_lemma_check([1.0, 2.0, 3.0, 4.0], "nonsense")
