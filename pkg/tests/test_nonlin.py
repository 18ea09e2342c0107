import math

import numpy as np
import pytest

from folschwarz.grid import build_grid
from folschwarz.nonlin import (
    Constant,
    Henon,
    Potential,
    Sinusoid,
    Translation,
    build_example1,
    check_example1,
    check_f2_strong,
    check_potential_condition,
    eval_f,
    eval_fu,
    henon_proof_constants,
    lipschitz_bound,
    smoothstep5,
    smoothstep5_prime,
)

LAM1 = 5.7832  # classical first Dirichlet eigenvalue of the unit disk; the checks only need a positive scale

SPECS = {
    "henon": Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0),
    "henon_periodic": Henon(Sinusoid(1.0, 0.3, 2.0), Sinusoid(2.0, 0.5, 3.0), 0.5, 2.5, 2.5),
    "translation": Translation(Constant(1.0), Constant(1.0), 3.0),
    "potential": Potential(0.5, 1.0, 2.0, 1.0),
    "example1": build_example1(),
}


def test_henon_direct_substitution():
    assert eval_f(SPECS["henon"], 0.7, 2.0, 1.0) == pytest.approx(-2.0)


@pytest.mark.parametrize("name", ["henon", "henon_periodic", "translation"])
def test_zero_is_an_equilibrium(name):
    r = np.linspace(0, 10, 51)
    for t in (0.0, 0.3, 7.0):
        assert np.all(eval_f(SPECS[name], t, r, 0.0) == 0.0)


@pytest.mark.parametrize("name", sorted(SPECS))
def test_fu_matches_central_differences(name):
    spec = SPECS[name]
    rng = np.random.default_rng(3)
    r = rng.uniform(0.0, 6.0, 400)
    u = rng.uniform(-4.0, 4.0, 400)
    u = u[np.abs(u) > 0.05]  # stay off the |u|^(p-1) kink
    r = r[: u.size]
    h = 1e-6
    for t in (0.0, 1.3):
        fd = (eval_f(spec, t, r, u + h) - eval_f(spec, t, r, u - h)) / (2 * h)
        ex = eval_fu(spec, t, r, u)
        assert np.all(np.abs(fd - ex) <= 1e-5 * np.maximum(1.0, np.abs(ex)))


@pytest.mark.parametrize("name", ["henon", "henon_periodic", "translation"])
def test_fu_bounds_enclose_all_times(name):
    spec = SPECS[name]
    r = np.linspace(0, 4, 9)[:, None]
    u = np.linspace(-2, 2, 11)[None, :]
    lo, hi = spec.fu_bounds(r, u)
    for t in np.linspace(0, 6, 61):
        v = spec.fu(t, r, u)
        assert np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)


def test_translation_stability_radius():
    spec = Translation(Sinusoid(0.5, 1.5, 1.0), Sinusoid(2.0, 1.0, 2.0), 3.0)
    eps = spec.stability_radius()
    assert eps == pytest.approx((spec.eta / (2 * 3 * 2.0)) ** 0.5)
    u = np.linspace(-eps, eps, 201) * (1 - 1e-12)
    for t in np.linspace(0, 4, 81):
        assert np.all(spec.fu(t, 0.0, u) <= -spec.eta / 2 + 1e-12)


def test_sinusoid_rejects_nonpositive_b():
    with pytest.raises(ValueError):
        Henon(b=Sinusoid(1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        Henon(alpha=2.0, beta=2.0)


def test_smoothstep_ends():
    s = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    assert np.allclose(smoothstep5(s), [0, 0, 0.5, 1, 1])
    assert np.allclose(smoothstep5_prime(np.array([0.0, 1.0])), 0.0)
    x = np.linspace(0.01, 0.99, 50)
    assert np.allclose((smoothstep5(x + 1e-7) - smoothstep5(x - 1e-7)) / 2e-7, smoothstep5_prime(x), atol=1e-6)


def test_f2_strong_holds_with_proof_radius():
    spec = SPECS["henon"]
    M = 1.0
    c = henon_proof_constants(spec, M, lambda1=LAM1)
    assert c["eps"] == pytest.approx((spec.eta / spec.p) ** 0.5)
    rep = check_f2_strong(spec, M, c["rho_M"], c["eps"], (1.0, 2.0), lambda1=LAM1)
    assert rep.holds and rep.margin > 0 and rep.tail_certified
    fine = check_f2_strong(spec, M, c["rho_M"], c["eps"], (1.0, 2.0), lambda1=LAM1, refine=10)
    assert fine.holds == rep.holds
    assert fine.margin == pytest.approx(rep.margin, rel=1e-2)


def test_f2_strong_fails_without_damping():
    spec = Henon(Constant(1.0), Constant(0.0), 1.0, 2.0, 3.0)
    rep = check_f2_strong(spec, 1.0, 5.0, 0.5, (1.0, 2.0), lambda1=LAM1)
    assert not rep.holds and rep.margin < 0


def test_potential_condition():
    grow = Potential(0.0, 1.0, 2.0, 0.5)
    r1 = check_potential_condition(grow, 20.0, (0.0, 2.0), lambda1=LAM1)
    r10 = check_potential_condition(grow, 20.0, (0.0, 2.0), lambda1=LAM1, refine=10)
    assert r1.holds and r10.holds and r1.tail_certified
    flat = Potential(0.0, 0.0, 2.0, 0.5)
    assert not check_potential_condition(flat, 20.0, (0.0, 2.0), lambda1=LAM1).holds


def test_example1_structure():
    spec = SPECS["example1"]
    rep = check_example1(spec)
    assert rep.holds
    assert rep.odd_error == 0.0
    assert rep.band_error <= 1e-12 * spec.M_star**3
    assert rep.f4_worst < 0 and rep.f5_worst < 0
    # inside the band and below M*/2 the composite is u^p - lambda u
    u = 0.1 * spec.M_star
    assert spec.f(0.0, 2.0, u) == pytest.approx(u**3 - spec.lam * u, rel=1e-14)
    assert spec.M_star * spec.f(0.0, 7.3, spec.M_star) < 0


def test_example1_oddness_random():
    spec = SPECS["example1"]
    rng = np.random.default_rng(4)
    r = rng.uniform(0, 10, 10_000)
    u = rng.uniform(-2 * spec.M_star, 2 * spec.M_star, 10_000)
    assert np.array_equal(spec.f(0.0, r, -u), -spec.f(0.0, r, u))


def test_example1_rejects_even_power_and_sharp_cutoff():
    with pytest.raises(ValueError):
        build_example1(p=4)
    # a cutoff band too narrow for the outer damping cannot reach f_u < -Lambda_out
    with pytest.raises(ValueError):
        build_example1(Lambda_out=4.0, b_out=4.0)


def test_lipschitz_bound_is_max_abs_fu():
    g = build_grid("disk", 0.0, 2.0, 8, 8)
    spec = SPECS["henon"]
    L = lipschitz_bound(spec, g, 1.0)
    r = np.unique(g.r_vec)
    want = max(abs(3 * r.max() - r.max() ** 2), r.max() ** 2)
    assert L == pytest.approx(want, rel=1e-12)
    assert math.isfinite(L)
