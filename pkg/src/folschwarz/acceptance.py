"""The twelve acceptance checks, shared by the test suite and ``folschwarz selftest``.

Every check returns a :class:`CriterionResult`; none of them raises on a failed
property, so a runner can report all outcomes in one pass.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .examples import (
    FIRST_ANGULAR,
    RADIAL,
    build_example1_setup,
    build_schedule,
    eigensolve,
    example1_run,
    example2_run,
    richardson_eigenvalue,
)
from .grid import ScalarField, build_grid
from .nonlin import Constant, Henon, Translation, envelope_radius, lipschitz_bound
from .omega import envelope_check
from .profiles import bumps_on_circle
from .solver import BlowUpError, SolverConfig, fitted_decay_rate, simulate
from .symmetry import (
    analyze,
    circle_lemma_check,
    gamma_from_stability,
    hat_transform,
    max_abs_fu,
    subsolution_verify,
    symmetrize_circle,
)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    values: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} criterion {self.number:2d} [{self.title}] {self.detail} ({self.seconds:.1f}s)"


def _timed(number: int, title: str, fn: Callable[[], tuple[bool, str, dict[str, Any]]]) -> CriterionResult:
    start = time.perf_counter()
    passed, detail, values = fn()
    return CriterionResult(number, title, bool(passed), detail, values, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# shared scenario data

SWITCH_GRID = (128, 128)
HENON_M1 = 1.2
HENON_GAMMA_EXP = 0.5


def switching_schedule(k_max: int = 10, A1_min: float = 0.25):
    grid = build_grid("disk", 0.0, 1.0, *SWITCH_GRID)
    lam1 = eigensolve(grid, FIRST_ANGULAR, 1).eigenvalue
    lam2 = eigensolve(grid, RADIAL, 2).eigenvalue
    return build_schedule(lam1, lam2, k_max=k_max, A1_min=A1_min)


def henon_two_bump(grid) -> ScalarField:
    """Two plateau bumps of different heights on the circle of radius 3; no reflection symmetry."""
    return bumps_on_circle(grid, (1.2, 0.6), (30.0, 150.0), 3.0, 0.5, 0.5)


def henon_run(b: float = 1.0, t_end: float = 20.0, dt: float = 0.01, stride: int = 100):
    """(trajectory, blow-up message or None) for the reference Hénon problem on the disk of radius 8."""
    grid = build_grid("disk", 0.0, 8.0, 64, 64)
    spec = Henon(Constant(1.0), Constant(b), 1.0, 2.0, 3.0)
    u0 = henon_two_bump(grid)
    cfg = SolverConfig(dt=dt, t_end=t_end, snapshot_stride=stride, M1=HENON_M1)
    try:
        return simulate(spec, u0, cfg), None
    except BlowUpError as exc:
        return exc.trajectory, str(exc)


# ---------------------------------------------------------------------------
# 1-3: switching construction

def criterion_1() -> CriterionResult:
    def run():
        sched = switching_schedule(k_max=10)
        worst = {"alpha_T": 0.0, "beta_T": 0.0, "alpha_Tbar": 0.0, "beta_Tbar": 0.0}
        ok = True
        for k in range(1, 11):
            a, b = sched.alpha_beta(sched.T[k - 1])
            ab, bb = sched.alpha_beta(sched.Tbar[k - 1])
            bound = 2.0**-k
            ok &= abs(a - 1.0) <= 1e-10 and abs(b) <= bound and abs(ab) <= bound and abs(bb - 1.0) <= bound
            worst["alpha_T"] = max(worst["alpha_T"], abs(a - 1.0))
            worst["beta_T"] = max(worst["beta_T"], abs(b) / bound)
            worst["alpha_Tbar"] = max(worst["alpha_Tbar"], abs(ab) / bound)
            worst["beta_Tbar"] = max(worst["beta_Tbar"], abs(bb - 1.0) / bound)
        detail = (f"max|alpha(T_k)-1| = {worst['alpha_T']:.2e}; worst ratios to 2^-k: "
                  f"beta(T_k) {worst['beta_T']:.3f}, alpha(Tbar_k) {worst['alpha_Tbar']:.3f}, "
                  f"beta(Tbar_k)-1 {worst['beta_Tbar']:.3f}")
        return ok, detail, worst | {"mu": sched.mu, "lambda1": sched.lambda1, "lambda2": sched.lambda2}

    return _timed(1, "switching schedule targets", run)


def criterion_2(dt: float = 1e-3) -> CriterionResult:
    def run():
        grid = build_grid("disk", 0.0, 1.0, *SWITCH_GRID)
        coarse = example2_run(grid, k_max=2, config=SolverConfig(dt=dt, t_end=1.0))
        fine = example2_run(grid, k_max=2, config=SolverConfig(dt=dt / 2, t_end=1.0))
        e1, e2 = coarse.max_error, fine.max_error
        ratio = e1 / e2 if e2 > 0 else math.inf
        small = e1 <= 1e-2
        halves = abs(ratio / 2.0 - 1.0) <= 0.2
        detail = (f"sup error {e1:.3e} at dt={dt:g} (limit 1e-2: {'ok' if small else 'exceeded'}), "
                  f"{e2:.3e} at dt={dt / 2:g}, ratio {ratio:.3f} (halving {'ok' if halves else 'off'})")
        return small and halves, detail, {"error": e1, "error_half": e2, "ratio": ratio,
                                          "window": coarse.error_window}

    return _timed(2, "switching PDE vs closed form", run)


def criterion_3(n: int = SWITCH_GRID[0], dt: float = 1e-3) -> CriterionResult:
    def run():
        grid = build_grid("disk", 0.0, 1.0, n, n)
        res = example2_run(grid, k_max=6, config=SolverConfig(dt=dt, t_end=1.0))
        diag = res.verdict.diagnostics
        detail = (f"verdict {res.verdict}; min radial deficit {min(diag['radial_deficit']):.2e}, "
                  f"worst fs deficit at axis {diag['worst_fs_deficit']:.2e}")
        return res.verdict.kind == "Mixed", detail, {"verdict": str(res.verdict)}

    return _timed(3, "switching omega verdict", run)


# ---------------------------------------------------------------------------
# 4-6: decay and symmetry of parabolic runs

def _monotone_late(values: list[float], scales: list[float]) -> bool:
    """Nonincreasing up to 10 eps of the running sup at each step."""
    eps = np.finfo(float).eps
    return all(b <= a + 10 * eps * s for a, b, s in zip(values, values[1:], scales))


def criterion_4() -> CriterionResult:
    def run():
        traj, err = henon_run()
        if err:
            return False, f"unexpected blow-up: {err}", {}
        reports = [analyze(u) for u in traj.fields]
        final = reports[-1]
        late = reports[-10:]
        late_fields = traj.fields[-10:]
        d_late = [r.fs_deficit for r in late]
        mono = _monotone_late(d_late, [u.sup() for u in late_fields])
        below = final.fs_deficit < 1e-3 * HENON_M1
        width_needed = math.pi - 2 * traj.grid.dtheta
        widths = [r.arc.width for r in reports if not r.arc.empty]
        arc_ok = final.arc.width >= width_needed
        detail = (f"final fs_deficit {final.fs_deficit:.2e} (< {1e-3 * HENON_M1:.1e}), late decade "
                  f"{'monotone' if mono else 'not monotone'}, final arc width {final.arc.width:.4f} "
                  f"(need {width_needed:.4f}), axis at t=5 {reports[5].best_axis.half_index}")
        return below and mono and arc_ok, detail, {"fs_deficit": final.fs_deficit, "arc_widths": widths}

    return _timed(4, "Henon asymptotic symmetry", run)


def criterion_5() -> CriterionResult:
    def run():
        spec = Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0)
        r1 = envelope_radius(spec, HENON_GAMMA_EXP, HENON_M1)
        traj, err = henon_run()
        rep = envelope_check(traj, HENON_GAMMA_EXP, r1, HENON_M1)
        ctrl_traj, ctrl_err = henon_run(b=0.0)
        ctrl = envelope_check(ctrl_traj, HENON_GAMMA_EXP, r1, HENON_M1)
        ok = err is None and rep.holds and not ctrl.holds
        detail = (f"stable run: {rep.violations} violations, worst ratio {rep.worst_ratio:.3f}; "
                  f"b=0 control: {ctrl.violations} violations"
                  + (f" ({ctrl_err})" if ctrl_err else ""))
        return ok, detail, {"r1": r1, "worst_ratio": rep.worst_ratio, "control_violations": ctrl.violations}

    return _timed(5, "Henon decay envelope", run)


def criterion_6(gamma: float = 1.0) -> CriterionResult:
    def run():
        grid = build_grid("disk", 0.0, 16.0, 64, 32)
        spec = Translation(Constant(0.0), Constant(gamma), 3.0)
        u0 = eigensolve(grid, RADIAL, 1).eigenfunction
        traj = simulate(spec, u0, SolverConfig(dt=0.01, t_end=5.0, snapshot_stride=50))
        t = np.array([h[0] for h in traj.history])
        s = np.array([h[1] for h in traj.history])
        keep = t >= 1.0
        rate, res = fitted_decay_rate(t[keep], s[keep])
        ok = abs(rate - gamma) <= 0.05 * gamma
        return ok, f"fitted rate {rate:.4f} vs {gamma} (residual {res:.1e})", {"rate": rate}

    return _timed(6, "linear decay rate", run)


# ---------------------------------------------------------------------------
# 7-10: verifiers for the supporting estimates

def _synthetic_c(grid, rng, gamma: float, beta: float, rho1: float) -> np.ndarray:
    rr = grid.rr
    inner = rng.uniform(-0.99 * beta, 0.99 * beta, size=rr.shape)
    outer = rng.uniform(-gamma - 5.0, -gamma - 0.01, size=rr.shape)
    return np.where(rr < rho1, inner, outer)


def criterion_7(n_fields: int = 100, seed: int = 7) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        grids = [build_grid("annulus", 1.0, 6.0, 40, 64), build_grid("disk", 0.0, 6.0, 40, 64)]
        gamma, beta, rho1 = 2.0, 3.0, 4.0
        failures: dict[str, int] = {}
        for k in range(n_fields):
            grid = grids[k % 2]
            vals = rng.normal(size=(grid.n_r, grid.n_theta))
            vals[rng.random(vals.shape) < 0.1] = 0.0
            w = ScalarField(grid, vals, 0.0 if grid.has_center else None, 0.0)
            masks = [rng.random(vals.shape) < rng.uniform(0.05, 0.6) for _ in range(20)]
            c = _synthetic_c(grid, rng, gamma, beta, rho1)
            ht, _ = hat_transform(w, gamma, rho1, beta, c_field=c, submasks=masks)
            for name, ok in ht.checks.items():
                if not ok:
                    failures[name] = failures.get(name, 0) + 1
        detail = "all predicates hold" if not failures else f"failures {failures}"
        return not failures, f"{n_fields} fields: {detail}", {"failures": failures}

    return _timed(7, "boundary-adapted quotient", run)


def criterion_8() -> CriterionResult:
    def run():
        spec = Henon(Constant(1.0), Constant(1.0), 1.0, 2.0, 3.0)
        J = (1.0, 2.0)
        unit = build_grid("disk", 0.0, 1.0, 64, 32)
        pair = eigensolve(unit, RADIAL, 1)
        gamma = gamma_from_stability(max_abs_fu(spec, J, HENON_M1), pair.eigenvalue, J)
        nodes, weights = np.polynomial.legendre.leggauss(8)
        s = 0.5 * (nodes + 1.0)

        def U(x, y):
            return HENON_M1 * np.exp(-((x - 1.2) ** 2 + (y - 0.3) ** 2)) * np.cos(y)

        def c_field(x, y):
            # difference quotient coefficient of f between u(x) and u(sigma x), sigma: x1 -> -x1
            a, b = U(x, y), U(-x, y)
            r = np.hypot(x, y)
            vals = sum(wq * spec.fu(0.0, r, sq * a + (1 - sq) * b) for sq, wq in zip(s, 0.5 * weights))
            return vals

        rep = subsolution_verify(pair.eigenfunction, pair.eigenvalue, (0.5 * (J[0] + J[1]), 0.0),
                                 0.5 * (J[1] - J[0]), gamma, c_field)
        ok = rep.holds and rep.operator_worst_margin < 0
        detail = (f"gamma {gamma:.4f}, worst margin {rep.worst_margin:.4f}, operator route "
                  f"{rep.operator_worst_margin:.4f} over {rep.n_nodes} nodes")
        return ok, detail, {"gamma": gamma, "worst_margin": rep.worst_margin}

    return _timed(8, "ball subsolution", run)


def premise_sequence(rng, m: int, strict: bool = False) -> np.ndarray:
    """Even circle profile, nondecreasing (or increasing) from theta = 0 to theta = pi."""
    half = m // 2 + 1
    if strict:
        steps = rng.uniform(0.05, 1.0, half - 1)
    else:
        steps = rng.choice([0.0, 0.5, 1.0], size=half - 1) * rng.uniform(0.1, 1.0, half - 1)
    top = np.concatenate([[rng.normal()], steps]).cumsum()
    return np.concatenate([top, top[-2:0:-1]])


def adversarial_swap(rng, v: np.ndarray) -> np.ndarray:
    """Swap two distinct values at interior slots of (0, pi) and mirror the swap."""
    m = v.size
    interior = np.arange(1, m // 2)
    for _ in range(200):
        i, j = np.sort(rng.choice(interior, 2, replace=False))
        if v[i] < v[j]:
            break
    else:
        raise ValueError("profile has no strictly increasing interior pair")
    out = v.copy()
    out[i], out[j] = v[j], v[i]
    out[m - i], out[m - j] = v[j], v[i]
    return out


def criterion_9(n: int = 1000, seed: int = 9) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        stats = {"premise_gen_failed": 0, "conclusion_failed": 0, "adversary_passed": 0, "sign_failed": 0}
        for _ in range(n):
            m = 2 * int(rng.integers(3, 33))
            v = premise_sequence(rng, m)
            if np.all(np.diff(v[: m // 2 + 1]) == 0):
                v[m // 2] += 1.0
            if not circle_lemma_check(v, "premises").passed:
                stats["premise_gen_failed"] += 1
            if not circle_lemma_check(v, "conclusion").passed:
                stats["conclusion_failed"] += 1
            bad = adversarial_swap(rng, v) if np.unique(v[1: m // 2]).size > 1 else None
            if bad is None:
                # too few distinct interior values: build a strict one so an adversary exists
                bad = adversarial_swap(rng, premise_sequence(rng, m, strict=True))
            if circle_lemma_check(bad, "conclusion").passed:
                stats["adversary_passed"] += 1
            vs = premise_sequence(rng, m, strict=True)
            if not (circle_lemma_check(vs, "premises", strict=True).passed
                    and circle_lemma_check(vs, "sign").passed):
                stats["sign_failed"] += 1
        ok = not any(stats.values())
        return ok, f"{n} sequences each: {stats}", stats

    return _timed(9, "circle rigidity", run)


def _placements(m: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(m))))


def brute_force_arrangement(values: np.ndarray, half_index: int) -> np.ndarray:
    """Among all m! placements, the distinct ones that are nonincreasing along the slot order.

    Slot order: increasing |psi|, the positive side first when |psi| ties.  Returns the
    unique such arrangement (raises if there is not exactly one).
    """
    m = values.size
    s = (2 * np.arange(m) - half_index) % (2 * m)
    s = np.where(s > m, s - 2 * m, s)
    ranked = sorted(range(m), key=lambda j: (abs(int(s[j])), s[j] < 0))
    arrs = values[_placements(m)]
    good = np.all(np.diff(arrs[:, ranked], axis=1) <= 0, axis=1)
    found = np.unique(arrs[good], axis=0)
    if found.shape[0] != 1:
        raise AssertionError(f"expected one arrangement, found {found.shape[0]}")
    return found[0]


def _even_monotone_exists(values: np.ndarray, half_index: int) -> bool:
    """Is some arrangement even about the axis and nonincreasing in |psi|?"""
    m = values.size
    s = (2 * np.arange(m) - half_index) % (2 * m)
    dist = np.minimum(s, 2 * m - s)
    refl = (half_index - np.arange(m)) % m
    arrs = values[_placements(m)]
    even = np.all(arrs == arrs[:, refl], axis=1)
    closer = dist[:, None] < dist[None, :]
    mono = np.all((arrs[:, :, None] >= arrs[:, None, :]) | ~closer, axis=(1, 2))
    return bool(np.any(even & mono))


def criterion_10(n_multisets: int = 200, m: int = 6, seed: int = 10) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        mismatches = 0
        even_broken = 0
        checked = 0
        for _ in range(n_multisets):
            vals = rng.integers(0, 4, size=m).astype(float)
            if rng.random() < 0.3:
                vals = rng.normal(size=m)
            even_exists = [_even_monotone_exists(vals, p) for p in (0, 1)]
            for p in range(2 * m):
                got = symmetrize_circle(vals, p)
                want = brute_force_arrangement(vals, p)
                checked += 1
                if not np.array_equal(got, want):
                    mismatches += 1
                # when an even nonincreasing arrangement exists, the output must be it
                refl = (p - np.arange(m)) % m
                if even_exists[p % 2] and not np.array_equal(got, got[refl]):
                    even_broken += 1
        ok = mismatches == 0 and even_broken == 0
        detail = f"{checked} (multiset, axis) cases: {mismatches} mismatches, {even_broken} non-even outputs"
        return ok, detail, {"mismatches": mismatches, "even_broken": even_broken}

    return _timed(10, "rearrangement oracle", run)


# ---------------------------------------------------------------------------
# 11-12: odd data and eigenvalues

def criterion_11(n: int = 64, t_end: float = 4.0) -> CriterionResult:
    def run():
        grid = build_grid("disk", 0.0, 8.0, n, n)
        setup = build_example1_setup(grid)
        lf = lipschitz_bound(setup.spec, grid, setup.spec.M_star)
        res = example1_run(setup, SolverConfig(dt=0.5 / lf, t_end=t_end, snapshot_stride=max(1, round(0.25 * lf / 0.5))))
        ch = res.checks
        failed = [k for k, v in ch.passed.items() if not v]
        detail = (f"verdict {res.verdict}; odd {ch.odd_error:.1e}, u/zeta min {ch.zeta_ratio_min:.3f}, "
                  f"tail ratio {ch.tail_ratio_max:.3f}, sup {ch.sup_max:.3f} <= M* {setup.spec.M_star:.3f}, "
                  f"polar margin {ch.polar_margin:.2e}" + (f"; failed {failed}" if failed else ""))
        return ch.holds, detail, dict(ch.passed)

    return _timed(11, "odd-data conclusions", run)


def criterion_12() -> CriterionResult:
    def run():
        rad, rad_fine, _ = richardson_eigenvalue(RADIAL, 1)
        ang, ang_fine, _ = richardson_eigenvalue(FIRST_ANGULAR, 1)
        bound = (math.sqrt(2.0) + 1.0) ** 2
        ok = abs(rad / 5.7832 - 1) <= 0.01 and abs(ang / 14.682 - 1) <= 0.01 and rad <= 5.829 and rad <= bound
        detail = (f"radial {rad:.5f} (n_r=256: {rad_fine:.5f}), m=1 {ang:.5f} (n_r=256: {ang_fine:.5f}), "
                  f"bound {bound:.4f}")
        return ok, detail, {"radial": rad, "angular": ang}

    return _timed(12, "disk eigenvalues", run)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}


def run_criterion(number: int) -> CriterionResult:
    try:
        return CRITERIA[number]()
    except Exception as exc:  # report, never abort the whole suite
        return CriterionResult(number, "error", False, f"{type(exc).__name__}: {exc}")
