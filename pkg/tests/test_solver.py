import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from folschwarz.examples import RADIAL, eigensolve
from folschwarz.grid import Direction, ScalarField, build_grid, reflect_indices
from folschwarz.nonlin import Constant, Henon, Translation
from folschwarz.solver import (
    BlowUpError,
    LinearSolveError,
    SectorSolver,
    SolverConfig,
    Stepper,
    Trajectory,
    apply_laplacian,
    assemble_laplacian,
    explicit_cfl_limit,
    fitted_decay_rate,
    simulate,
    step,
)
from folschwarz.profiles import bumps_on_circle

HEAT = Translation(Constant(0.0), Constant(0.0), 3.0)


def test_laplacian_of_r_squared():
    g = build_grid("disk", 0.0, 1.0, 40, 16)
    u = ScalarField(g, np.repeat((g.r**2)[:, None], 16, axis=1), 0.0)
    lap = apply_laplacian(u)
    # flux-form differences are exact on r^2 away from the Dirichlet ghost ring
    assert np.allclose(lap.values[:-1], 4.0, atol=1e-9)
    # centre row 4 (mean(ring 0) - u_c) / dr^2 with ring 0 at r = dr
    assert lap.center == pytest.approx(4.0, rel=1e-12)


def test_laplacian_weight_symmetric_and_m_matrix():
    g = build_grid("disk", 0.0, 2.0, 9, 12)
    L = assemble_laplacian(g)
    W = sp.diags(g.weights)
    S = (W @ L).toarray()
    assert np.allclose(S, S.T, atol=1e-10)
    A = -L.toarray()
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0) and np.all(np.diag(A) > 0)
    assert np.all(A.sum(axis=1) >= -1e-9)


def test_constant_on_annulus_pulled_down_at_both_boundaries():
    g = build_grid("annulus", 1.0, 2.0, 10, 16)
    lap = apply_laplacian(ScalarField(g, np.ones((10, 16))))
    assert np.all(lap.values[0] < 0) and np.all(lap.values[-1] < 0)
    assert np.allclose(lap.values[1:-1], 0.0, atol=1e-9)


def test_rayleigh_quotient_of_radial_mode():
    g = build_grid("disk", 0.0, 3.0, 128, 16)
    phi = eigensolve(g, RADIAL, 1).eigenfunction
    v = phi.vector()
    rq = -np.sum(g.weights * v * (assemble_laplacian(g) @ v)) / np.sum(g.weights * v * v)
    assert rq == pytest.approx(5.7832 / 9.0, rel=0.01)


@pytest.mark.parametrize("kind, r0", [("disk", 0.0), ("annulus", 0.5)])
def test_sector_solver_is_exact(kind, r0):
    g = build_grid(kind, r0, 2.0, 11, 12)
    dt = 0.03
    A = (sp.identity(g.n_unknowns) - dt * assemble_laplacian(g)).tocsc()
    b = np.random.default_rng(0).normal(size=g.n_unknowns)
    assert np.allclose(SectorSolver(g, dt).solve(b), spsolve(A, b), rtol=1e-12, atol=1e-12)


def test_heat_step_keeps_sup_nonincreasing():
    g = build_grid("disk", 0.0, 4.0, 24, 32)
    u = bumps_on_circle(g, (1.0, 0.4), (10.0, 200.0), 2.0)
    cfg = SolverConfig(dt=0.01, t_end=0.5)
    traj = simulate(HEAT, u, cfg)
    sups = [h[1] for h in traj.history]
    assert all(b <= a * (1 + 1e-10) for a, b in zip(sups, sups[1:]))
    assert min(u.values.min() for u in traj.fields) >= -1e-10


@pytest.mark.parametrize("k", [0, 3, 17, 40])
def test_step_is_reflection_equivariant(k):
    g = build_grid("disk", 0.0, 5.0, 20, 24)
    spec = Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0)
    u = bumps_on_circle(g, (1.0, 0.5), (20.0, 130.0), 2.0)
    perm = reflect_indices(g, Direction(k, 24))
    cfg = SolverConfig(dt=0.01, t_end=0.01, linear_solve_tol=1e-12)
    a = step(u.with_values(u.values[:, perm]), 0.0, spec, cfg)
    b = step(u, 0.0, spec, cfg)
    assert np.max(np.abs(a.values - b.values[:, perm])) <= 1e-10 * u.sup()
    assert a.center == pytest.approx(b.center, abs=1e-10)


def test_discrete_comparison():
    g = build_grid("disk", 0.0, 5.0, 20, 24)
    spec = Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0)
    v0 = bumps_on_circle(g, (0.8, 0.3), (0.0, 180.0), 2.0)
    u0 = v0 + bumps_on_circle(g, (0.3,), (90.0,), 2.0)
    cfg = SolverConfig(dt=0.01, t_end=1.0, snapshot_stride=10, M1=1.2)
    tu, tv = simulate(spec, u0, cfg), simulate(spec, v0, cfg)
    for a, b in zip(tu.fields, tv.fields):
        assert np.all(a.vector() >= b.vector() - 1e-12)


@pytest.mark.parametrize("gamma", [0.5, 2.0])
def test_linear_decay_rate(gamma):
    g = build_grid("disk", 0.0, 10.0, 40, 16)
    spec = Translation(Constant(0.0), Constant(gamma), 3.0)
    u0 = eigensolve(g, RADIAL, 1).eigenfunction
    traj = simulate(spec, u0, SolverConfig(dt=0.01, t_end=3.0))
    t, s = np.array(traj.history)[:, 0], np.array(traj.history)[:, 1]
    rate, _ = fitted_decay_rate(t[t >= 0.5], s[t >= 0.5])
    assert rate >= gamma * 0.95


def test_zero_stays_zero_and_radial_stays_radial():
    g = build_grid("disk", 0.0, 4.0, 16, 16)
    spec = Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0)
    cfg = SolverConfig(dt=0.02, t_end=0.4, snapshot_stride=5, M1=1.0)
    zero = simulate(spec, ScalarField.zeros(g), cfg)
    assert all(not np.any(u.vector()) for u in zero.fields)
    prof = np.exp(-g.r**2)
    radial = simulate(spec, ScalarField(g, np.repeat(prof[:, None], 16, axis=1), 1.0), cfg)
    for u in radial.fields:
        assert np.ptp(u.values, axis=1).max() <= 1e-13


def test_config_restrictions():
    g = build_grid("disk", 0.0, 4.0, 16, 16)
    spec = Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0)
    u0 = bumps_on_circle(g, (1.0,), (0.0,), 2.0)
    with pytest.raises(ValueError, match="explicit"):
        simulate(spec, u0, SolverConfig(dt=2 * explicit_cfl_limit(g), t_end=0.1, scheme="explicit"))
    with pytest.raises(ValueError, match="L_f"):
        simulate(spec, u0, SolverConfig(dt=0.5, t_end=1.0))
    with pytest.raises(ValueError, match="M1"):
        simulate(spec, u0, SolverConfig(dt=0.01, t_end=0.1, M1=0.5))
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0, t_end=1.0)


def test_explicit_scheme_matches_imex_at_small_dt():
    g = build_grid("annulus", 1.0, 2.0, 8, 16)
    u0 = ScalarField(g, np.sin(np.pi * (g.rr - 1.0)) * (1 + 0.3 * np.cos(g.theta)))
    dt = 0.5 * explicit_cfl_limit(g)
    t_end = 200 * dt
    a = simulate(HEAT, u0, SolverConfig(dt=dt, t_end=t_end, scheme="explicit")).fields[-1]
    b = simulate(HEAT, u0, SolverConfig(dt=dt, t_end=t_end)).fields[-1]
    assert np.max(np.abs(a.values - b.values)) <= 0.02 * u0.sup()


def test_blow_up_guard_keeps_partial_trajectory():
    g = build_grid("disk", 0.0, 3.0, 12, 16)
    spec = Translation(Constant(1.0), Constant(0.0), 3.0)
    u0 = ScalarField(g, np.repeat((3.0 * np.cos(np.pi * g.r / 6))[:, None], 16, axis=1), 3.0)
    with pytest.raises(BlowUpError) as info:
        simulate(spec, u0, SolverConfig(dt=1e-3, t_end=5.0, check_lipschitz=False))
    traj = info.value.trajectory
    assert traj.fields[-1].sup() > 10 * 3.0
    assert len(traj) >= 2


def test_linear_solve_cap_raises():
    g = build_grid("disk", 0.0, 3.0, 12, 16)
    u0 = bumps_on_circle(g, (1.0,), (0.0,), 1.0)
    cfg = SolverConfig(dt=0.05, t_end=0.05, preconditioner="jacobi", max_iter=1, linear_solve_tol=1e-14)
    with pytest.raises(LinearSolveError, match="relative residual"):
        simulate(HEAT, u0, cfg)


def test_snapshots_and_persistence(tmp_path):
    g = build_grid("disk", 0.0, 3.0, 8, 8)
    u0 = bumps_on_circle(g, (1.0,), (45.0,), 1.0)
    traj = simulate(HEAT, u0, SolverConfig(dt=0.01, t_end=0.2, snapshot_times=(0.05, 0.1)))
    assert traj.times == pytest.approx([0.0, 0.05, 0.1, 0.2])
    traj.save(tmp_path / "run")
    back = Trajectory.load(tmp_path / "run")
    assert back.times == pytest.approx(traj.times)
    assert all(np.array_equal(a.vector(), b.vector()) for a, b in zip(traj.fields, back.fields))
    assert back.meta["spec"]["variant"] == "translation"
    assert len(back.history) == 21
    with pytest.raises(ValueError):
        traj.add(traj.fields[0])


def test_stepper_sector_needs_few_iterations():
    g = build_grid("disk", 0.0, 8.0, 64, 64)
    st = Stepper(g, SolverConfig(dt=0.01, t_end=1.0))
    b = np.random.default_rng(2).normal(size=g.n_unknowns)
    st.linear_solve(b, np.zeros_like(b))
    assert st.last_iterations <= 2


def test_fitted_decay_rate_on_exact_exponential():
    t = np.linspace(0, 3, 31)
    rate, res = fitted_decay_rate(t, 2.0 * np.exp(-1.7 * t))
    assert rate == pytest.approx(1.7, rel=1e-12) and res < 1e-12
    assert fitted_decay_rate(t, np.zeros_like(t))[0] == math.inf
