"""Eigenpairs of the discrete Dirichlet Laplacian, and the two worked constructions.

Eigenpairs are found per angular Fourier sector: a radial (m = 0) or first angular (m = 1)
field reduces the 2D operator to a tridiagonal radial problem, which is symmetrised by the
quadrature weights and attacked with deflated inverse iteration.

The switching construction drives ``u = alpha(t) phi1 + beta(t) phi2`` with
``f = mu zeta(t) u + psi(t) phi2``.  Each cycle has four phases (ramp down, plateau of
length A1, ramp up, top of length A2) and the amplitudes have closed forms on every phase.

The odd-data construction uses a positive steady profile on a ball, found by Newton's
method on the radial discrete system.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg as sla
from scipy import special

from .grid import Direction, Kind, PolarGrid, ScalarField, build_grid, sigma_indices
from .nonlin import Example1, Example2, build_example1, smoothstep5
from .omega import OmegaSample, Verdict, asymptotic_fs_verdict, collect_omega
from .solver import SolverConfig, Trajectory, apply_laplacian, sector_matrix, simulate
from .symmetry import polar_monotonicity_deficit, polar_monotonicity_margin

RADIAL = "Radial"
FIRST_ANGULAR = "FirstAngular"
_SECTOR = {RADIAL: 0, FIRST_ANGULAR: 1}


class EigenConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# eigenpairs

@dataclass(frozen=True)
class EigenPair:
    eigenvalue: float
    eigenfunction: ScalarField = field(repr=False)
    symmetry_class: str
    index: int
    residual: float
    profile: np.ndarray = field(repr=False)
    profile_r: np.ndarray = field(repr=False)


def sector_weights(grid: PolarGrid, m: int) -> np.ndarray:
    """Weights making the sector operator symmetric (area / (2 pi dr))."""
    w = grid.r.copy()
    if grid.has_center and m == 0:
        w = np.concatenate([[grid.dr / 8.0], w])
    return w


def _symmetric_sector(grid: PolarGrid, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(diagonal, off-diagonal, sqrt weights) of D^1/2 A D^-1/2."""
    a = sector_matrix(grid, m)
    s = np.sqrt(sector_weights(grid, m))
    diag = np.diag(a).copy()
    off = np.diag(a, 1) * s[:-1] / s[1:]
    return diag, off, s


def _sector_eigen(grid: PolarGrid, m: int, index: int, max_iter: int = 5000) -> tuple[float, np.ndarray]:
    """index-th smallest eigenpair of the symmetric sector matrix by deflated inverse iteration."""
    diag, off, s = _symmetric_sector(grid, m)
    n = diag.size
    if index > n:
        raise ValueError(f"sector has only {n} eigenvalues")
    ab = np.zeros((2, n))
    ab[0, 1:] = off
    ab[1] = diag
    chol = sla.cholesky_banded(ab)
    scale = float(np.max(np.abs(diag)) + 2 * np.max(np.abs(off), initial=0.0))
    tol = max(1e-9, 1e3 * np.finfo(float).eps * scale)

    def apply(x):
        y = diag * x
        y[:-1] += off * x[1:]
        y[1:] += off * x[:-1]
        return y

    rng = np.random.default_rng(20240601 + 97 * m + index)
    found: list[np.ndarray] = []
    lam = math.nan
    for k in range(index):
        x = rng.standard_normal(n)
        converged = False
        for _ in range(max_iter):
            for q in found:
                x -= (q @ x) * q
            x /= np.linalg.norm(x)
            y = apply(x)
            lam = float(x @ y)
            if np.linalg.norm(y - lam * x) <= tol:
                converged = True
                break
            x = sla.cho_solve_banded((chol, False), x)
        if not converged:
            raise EigenConvergenceError(f"inverse iteration stalled for sector {m}, index {k + 1}")
        found.append(x)
    return lam, found[-1] / s


def _normalise(profile: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(profile)))
    return profile / profile[k]


def _cache_path(cache_dir: Path, grid: PolarGrid, which: str, index: int) -> Path:
    digest = hashlib.sha1(grid.key().encode()).hexdigest()[:16]
    return cache_dir / f"eig_{digest}_{which}_{index}.npz"


def eigensolve(grid: PolarGrid, which: str, index: int = 1, cache_dir: str | Path | None = None) -> EigenPair:
    """index-th Dirichlet eigenpair of -Lap_h in the radial or first angular sector.

    The eigenfunction has sup norm 1 and is positive where its modulus peaks; the first
    angular one is rho(r) cos(theta).
    """
    if which not in _SECTOR:
        raise ValueError(f"which must be one of {sorted(_SECTOR)}")
    if index < 1:
        raise ValueError("index starts at 1")
    m = _SECTOR[which]
    cached = None
    if cache_dir is not None:
        path = _cache_path(Path(cache_dir), grid, which, index)
        if path.exists():
            data = np.load(path)
            cached = (float(data["eigenvalue"]), data["profile"])
    if cached is None:
        lam, prof = _sector_eigen(grid, m, index)
        prof = _normalise(prof)
        if cache_dir is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savez(path, eigenvalue=lam, profile=prof)
    else:
        lam, prof = cached
    if m == 0:
        if grid.has_center:
            center, rings = float(prof[0]), prof[1:]
            profile_r = np.concatenate([[0.0], grid.r])
        else:
            center, rings = None, prof
            profile_r = grid.r.copy()
        values = np.repeat(rings[:, None], grid.n_theta, axis=1)
    else:
        center = 0.0 if grid.has_center else None
        values = prof[:, None] * np.cos(grid.theta)[None, :]
        profile_r = grid.r.copy()
    phi = ScalarField(grid, values, center)
    res = apply_laplacian(phi).vector() + lam * phi.vector()
    w = grid.weights
    residual = float(np.sqrt(np.sum(w * res**2)) / np.sqrt(np.sum(w * phi.vector() ** 2)))
    return EigenPair(lam, phi, which, index, residual, prof, profile_r)


def richardson_eigenvalue(which: str, index: int = 1, n_r: Sequence[int] = (128, 256),
                          n_theta: int = 64, r_outer: float = 1.0) -> tuple[float, float, float]:
    """(extrapolated, fine, coarse) eigenvalue on disks, assuming an O(dr^2) error."""
    coarse_grid = build_grid(Kind.DISK, 0.0, r_outer, n_r[0], n_theta)
    fine_grid = build_grid(Kind.DISK, 0.0, r_outer, n_r[1], n_theta)
    lc = eigensolve(coarse_grid, which, index).eigenvalue
    lf = eigensolve(fine_grid, which, index).eigenvalue
    hc, hf = coarse_grid.dr**2, fine_grid.dr**2
    return (hc * lf - hf * lc) / (hc - hf), lf, lc


@lru_cache(maxsize=8)
def unit_disk_eigenpair(n_r: int = 256, n_theta: int = 8) -> EigenPair:
    return eigensolve(build_grid(Kind.DISK, 0.0, 1.0, n_r, n_theta), RADIAL, 1)


def unit_disk_lambda1(n_r: int = 256) -> float:
    """Principal discrete Dirichlet eigenvalue of the unit disk."""
    return unit_disk_eigenpair(n_r).eigenvalue


# ---------------------------------------------------------------------------
# switching schedule

def _k_integral(a: float, b: float, s: float) -> float:
    """int_0^s exp(q(x) - q(s)) dx with q(x) = a x^2 + b x, a != 0, without overflow."""
    if s == 0:
        return 0.0
    q_s = a * s * s + b * s
    if a > 0:
        ra = math.sqrt(a)
        y0 = b / (2 * a)
        y1 = s + y0
        return (special.dawsn(ra * y1) - math.exp(-q_s) * special.dawsn(ra * y0)) / ra
    c = -a
    rc = math.sqrt(c)
    x0 = b / (2 * c)
    z1 = rc * (s - x0)
    z0 = -rc * x0
    pref = math.sqrt(math.pi) / (2 * rc)
    # exp(z1^2) * (erf(z1) - erf(z0)), arranged to avoid cancellation and overflow
    if z0 >= 0:
        val = math.exp(z1 * z1 - z0 * z0) * special.erfcx(z0) - special.erfcx(z1)
    elif z1 <= 0:
        val = special.erfcx(-z1) - math.exp(z1 * z1 - z0 * z0) * special.erfcx(-z0)
    else:
        val = math.exp(z1 * z1) * (math.erf(z1) - math.erf(z0))
    return pref * val


def _k1_integral(a: float, b: float, s: float) -> float:
    """int_0^s x exp(q(x) - q(s)) dx, from d/dx exp(q) = (2 a x + b) exp(q)."""
    q_s = a * s * s + b * s
    return ((1.0 - math.exp(-q_s)) - b * _k_integral(a, b, s)) / (2 * a)


PHASES = ("down", "plateau", "up", "top")


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    phase: str
    alpha0: float
    beta0: float


@dataclass(frozen=True)
class Schedule:
    lambda1: float
    lambda2: float
    mu: float
    k_max: int
    segments: tuple[Segment, ...]
    T: tuple[float, ...]
    Tbar: tuple[float, ...]
    A1: tuple[float, ...]
    A2: tuple[float, ...]
    constants: dict[str, float] = field(default_factory=dict)

    def _segment(self, t: float) -> Segment:
        if t < 0:
            raise ValueError("t must be nonnegative")
        starts = [s.t0 for s in self.segments]
        k = int(np.searchsorted(starts, t, side="right")) - 1
        return self.segments[max(k, 0)]

    def zeta(self, t: float) -> float:
        seg = self._segment(t)
        s = t - seg.t0
        return {"down": 1.0 - s, "plateau": 0.0, "up": s, "top": 1.0}[seg.phase]

    def psi(self, t: float) -> float:
        seg = self._segment(t)
        s = t - seg.t0
        lam2 = self.lambda2
        return {"down": lam2 * s, "plateau": lam2, "up": lam2 * (1.0 - s), "top": 0.0}[seg.phase]

    def alpha_beta(self, t: float) -> tuple[float, float]:
        seg = self._segment(t)
        return _phase_state(seg.phase, t - seg.t0, seg.alpha0, seg.beta0, self.lambda1, self.lambda2, self.mu)

    @property
    def markers(self) -> list[tuple[str, int, float]]:
        out = []
        for k in range(self.k_max):
            out.append(("T", k + 1, self.T[k]))
            out.append(("Tbar", k + 1, self.Tbar[k]))
        out.append(("T", self.k_max + 1, self.T[self.k_max]))
        return out


def _phase_state(phase: str, s: float, a0: float, b0: float, lam1: float, lam2: float, mu: float) -> tuple[float, float]:
    if phase == "down":
        alpha = a0 * math.exp(mu * (s - 0.5 * s * s) - lam1 * s)
        a, b = 0.5 * mu, lam2 - mu
        beta = b0 * math.exp(-(a * s * s + b * s)) + lam2 * _k1_integral(a, b, s)
    elif phase == "plateau":
        alpha = a0 * math.exp(-lam1 * s)
        beta = b0 * math.exp(-lam2 * s) + (1.0 - math.exp(-lam2 * s))
    elif phase == "up":
        alpha = a0 * math.exp(0.5 * mu * s * s - lam1 * s)
        a, b = -0.5 * mu, lam2
        beta = b0 * math.exp(-(a * s * s + b * s)) + lam2 * (_k_integral(a, b, s) - _k1_integral(a, b, s))
    elif phase == "top":
        alpha = a0 * math.exp((mu - lam1) * s)
        beta = b0 * math.exp((mu - lam2) * s)
    else:
        raise ValueError(phase)
    return alpha, beta


def alpha_beta(schedule: Schedule, t: float) -> tuple[float, float]:
    return schedule.alpha_beta(t)


def _cycle(alpha: float, beta: float, A1: float, lam1: float, lam2: float, mu: float):
    """States at T+1, Tbar, Tbar+1 and the next T for plateau length A1."""
    A2 = (lam1 * A1 + 2 * lam1 - mu) / (mu - lam1)
    s1 = _phase_state("down", 1.0, alpha, beta, lam1, lam2, mu)
    s2 = _phase_state("plateau", A1, *s1, lam1, lam2, mu)
    s3 = _phase_state("up", 1.0, *s2, lam1, lam2, mu)
    s4 = _phase_state("top", A2, *s3, lam1, lam2, mu)
    return A2, s1, s2, s3, s4


def build_schedule(lambda1: float, lambda2: float, mu: float | None = None, k_max: int = 10,
                   A1_min: float = 0.0, margin: float = 2.0) -> Schedule:
    """Cycle-by-cycle plateau lengths meeting the target bounds with a safety factor.

    For cycle n the plateau A1 is the smallest value (found by bisection) with
    |alpha(Tbar_n)| and |beta(Tbar_n) - 1| at most 2^-n / margin and |beta(T_{n+1})| at
    most 2^-(n+1) / margin.  The top phase length A2 = (lambda1 A1 + 2 lambda1 - mu) /
    (mu - lambda1) returns alpha to its value at T_n.
    """
    mu = 0.5 * (lambda1 + lambda2) if mu is None else mu
    if not (0 < lambda1 < mu < lambda2):
        raise ValueError("need 0 < lambda1 < mu < lambda2")
    lam1, lam2 = lambda1, lambda2

    def ok(n, alpha, beta, A1):
        _, _, s2, _, s4 = _cycle(alpha, beta, A1, lam1, lam2, mu)
        tgt = 2.0**-n / margin
        return (0 < abs(s2[0]) <= tgt and abs(s2[1] - 1.0) <= tgt
                and abs(s4[1]) <= 2.0 ** -(n + 1) / margin)

    t, alpha, beta = 0.0, 1.0, 0.0
    segs: list[Segment] = []
    T, Tbar, A1s, A2s = [0.0], [], [], []
    for n in range(1, k_max + 1):
        lo = max(A1_min, 0.0)
        if ok(n, alpha, beta, lo):
            A1 = lo
        else:
            hi = max(1.0, 2 * lo)
            while not ok(n, alpha, beta, hi):
                hi *= 2.0
                if hi > 1e4:
                    raise ValueError("no plateau length meets the targets")
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if ok(n, alpha, beta, mid):
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-13 * max(1.0, hi):
                    break
            A1 = hi
        A2, s1, s2, s3, s4 = _cycle(alpha, beta, A1, lam1, lam2, mu)
        if A2 <= 0:
            raise ValueError("top phase length must be positive")
        segs.append(Segment(t, t + 1.0, "down", alpha, beta))
        segs.append(Segment(t + 1.0, t + 1.0 + A1, "plateau", *s1))
        tb = t + 1.0 + A1
        segs.append(Segment(tb, tb + 1.0, "up", *s2))
        segs.append(Segment(tb + 1.0, tb + 1.0 + A2, "top", *s3))
        t = tb + 1.0 + A2
        alpha, beta = s4
        Tbar.append(tb)
        T.append(t)
        A1s.append(A1)
        A2s.append(A2)
    # hold zeta = 1, psi = 0 after the last cycle so the segments cover [0, inf)
    segs.append(Segment(t, math.inf, "top", alpha, beta))
    consts = {
        "c1": _phase_state("down", 1.0, 0.0, 0.0, lam1, lam2, mu)[1],
        "c2": math.exp(0.5 * mu - lam2),
        "c3": _phase_state("up", 1.0, 0.0, 0.0, lam1, lam2, mu)[1],
    }
    return Schedule(lam1, lam2, mu, k_max, tuple(segs), tuple(T), tuple(Tbar), tuple(A1s), tuple(A2s), consts)


def write_schedule_csv(schedule: Schedule, path: str | Path, samples_per_unit: int = 20,
                       t_end: float | None = None) -> None:
    t_end = schedule.T[-1] if t_end is None else t_end
    n = max(2, int(math.ceil(t_end * samples_per_unit)) + 1)
    times = sorted(set(np.linspace(0.0, t_end, n).tolist()) | {m[2] for m in schedule.markers if m[2] <= t_end})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "zeta", "psi", "alpha", "beta"])
        for t in times:
            a, b = schedule.alpha_beta(t)
            w.writerow([repr(float(v)) for v in (t, schedule.zeta(t), schedule.psi(t), a, b)])


# ---------------------------------------------------------------------------
# switching construction on a disk

@dataclass
class Example2Setup:
    spec: Example2
    schedule: Schedule
    phi1: EigenPair
    phi2: EigenPair


def build_example2(grid: PolarGrid, mu: float | None = None, k_max: int = 6,
                   cache_dir: str | Path | None = None, A1_min: float = 0.0) -> Example2Setup:
    """phi1 from the m = 1 sector, phi2 the second radial eigenfunction, and the schedule."""
    phi1 = eigensolve(grid, FIRST_ANGULAR, 1, cache_dir)
    phi2 = eigensolve(grid, RADIAL, 2, cache_dir)
    sched = build_schedule(phi1.eigenvalue, phi2.eigenvalue, mu, k_max, A1_min=A1_min)
    spec = Example2(sched.mu, phi2.profile_r, phi2.profile, sched)
    return Example2Setup(spec, sched, phi1, phi2)


@dataclass
class Example2Result:
    setup: Example2Setup
    trajectory: Trajectory
    sample: OmegaSample
    verdict: Verdict
    max_error: float
    error_window: float
    marker_errors: list[tuple[str, int, float, float]]
    max_removed: float


def closed_form(setup: Example2Setup, t: float) -> np.ndarray:
    a, b = setup.schedule.alpha_beta(t)
    return a * setup.phi1.eigenfunction.vector() + b * setup.phi2.eigenfunction.vector()


def example2_run(
    grid: PolarGrid,
    mu: float | None = None,
    k_max: int = 6,
    config: SolverConfig | None = None,
    error_window: float | None = None,
    fs_tol: float = 1e-2,
    radial_tol: float = 1e-2,
    cache_dir: str | Path | None = None,
    A1_min: float = 0.25,
    suppress_ground: bool = True,
) -> Example2Result:
    """Simulate the switching construction from u0 = phi1 and compare with the closed form.

    Snapshots are taken at every T_k and Tbar_k up to cycle k_max.  The sup error against
    alpha phi1 + beta phi2 is tracked at every step up to ``error_window`` (default: the
    end of the second cycle).

    The radial ground mode has eigenvalue below mu, so during the top phases it grows
    like exp((mu - lambda_ground) t) from roundoff.  The exact solution has no component
    along it; with ``suppress_ground`` that component is projected out after every step
    and the largest removed amplitude is reported.
    """
    setup = build_example2(grid, mu, k_max, cache_dir, A1_min)
    sched = setup.schedule
    window = sched.T[min(2, len(sched.T) - 1)] if error_window is None else error_window
    t_end = max(sched.Tbar[-1], window)
    marks = [m for m in sched.markers if m[2] <= t_end + 1e-12]
    base = config if config is not None else SolverConfig(dt=1e-3, t_end=t_end)
    probe = np.linspace(0.0, t_end, 4001)
    M1 = 1.1 * max(abs(a) + abs(b) for a, b in (sched.alpha_beta(t) for t in probe))
    cfg = dataclasses.replace(base, t_end=t_end, snapshot_times=tuple(m[2] for m in marks),
                              snapshot_stride=None, M1=M1)
    worst = [0.0]

    def observe(t, vec):
        if t <= window + 1e-12:
            worst[0] = max(worst[0], float(np.max(np.abs(vec - closed_form(setup, t)))))

    removed = [0.0]
    project = None
    if suppress_ground:
        ground = eigensolve(grid, RADIAL, 1, cache_dir).eigenfunction.vector()
        w = grid.weights
        wg = w * ground / float(np.sum(w * ground * ground))

        def projection(vec):
            c = float(wg @ vec)
            removed[0] = max(removed[0], abs(c))
            return vec - c * ground

        project = projection

    u0 = setup.phi1.eigenfunction
    traj = simulate(setup.spec, u0, cfg, meta={"example": "switching", "mu": sched.mu, "k_max": k_max,
                                               "A1": list(sched.A1), "A2": list(sched.A2)},
                    observer=observe, projection=project)
    marker_errors = []
    for name, k, t in marks:
        u = traj.at(t)
        err = float(np.max(np.abs(u.vector() - closed_form(setup, u.time_tag))))
        marker_errors.append((name, k, u.time_tag, err))
    sample = collect_omega(traj, 0.0, times=[m[2] for m in marks], M1=M1)
    phi2_sup = setup.phi2.eigenfunction.sup()
    verdict = asymptotic_fs_verdict(sample, fs_tol=fs_tol, radial_tol=radial_tol * phi2_sup)
    return Example2Result(setup, traj, sample, verdict, worst[0], window, marker_errors, removed[0])


# ---------------------------------------------------------------------------
# positive steady profile on a ball

@dataclass(frozen=True)
class GroundState:
    field: ScalarField
    profile_r: np.ndarray
    profile: np.ndarray
    residual: float
    iterations: int
    galerkin_amplitude: float


def galerkin_amplitude(phi_profile: np.ndarray, weights: np.ndarray, lambda1: float, lam: float, p: int) -> float:
    """One-mode amplitude c with c phi an approximate solution of -Lap z = z^p - lam z.

    Testing the equation against phi gives c^(p-1) = (lambda1 + lam) <phi^2> / <phi^(p+1)>.
    """
    num = (lambda1 + lam) * np.sum(weights * phi_profile**2)
    den = np.sum(weights * phi_profile ** (p + 1))
    return float((num / den) ** (1.0 / (p - 1)))


def solve_elliptic_ground(ball: PolarGrid, p: int, lam: float, tol: float = 1e-10,
                          max_iter: int = 60) -> GroundState:
    """Positive radial solution of -Lap_h z = z^p - lam z on a disk grid with zero boundary data.

    Newton's method runs on the radial reduction of the discrete system (centre value and one
    value per ring), which is invariant for radial fields.  It starts from the one-mode
    Galerkin guess and, should Newton fail, retries from rescaled guesses.
    """
    if not ball.has_center:
        raise ValueError("the ball grid must be a disk")
    ep = eigensolve(ball, RADIAL, 1)
    if not (0 < lam < ep.eigenvalue):
        raise ValueError(f"lambda = {lam} must lie in (0, {ep.eigenvalue})")
    a = sector_matrix(ball, 0)
    w = sector_weights(ball, 0)
    c0 = galerkin_amplitude(ep.profile, w, ep.eigenvalue, lam, p)

    def resid(z):
        return -a @ z + z**p - lam * z

    last_err = None
    for factor in (1.0, 1.5, 0.75, 2.0, 0.5, 3.0):
        z = factor * c0 * ep.profile
        for it in range(1, max_iter + 1):
            F = resid(z)
            J = -a + np.diag(p * z ** (p - 1) - lam)
            try:
                z = z - np.linalg.solve(J, F)
            except np.linalg.LinAlgError as exc:
                last_err = exc
                break
            if not np.all(np.isfinite(z)):
                break
            r = float(np.max(np.abs(resid(z))))
            if r <= tol:
                if np.all(z > 0):
                    values = np.repeat(z[1:, None], ball.n_theta, axis=1)
                    fld = ScalarField(ball, values, float(z[0]))
                    return GroundState(fld, np.concatenate([[0.0], ball.r]), z, r, it, c0)
                break
    raise RuntimeError(f"Newton did not reach a positive solution (last error: {last_err})")


# ---------------------------------------------------------------------------
# odd data with a persistent positive bump

@dataclass
class Example1Setup:
    spec: Example1
    grid: PolarGrid
    u0: ScalarField
    ground: GroundState
    ball_center: tuple[float, float]
    ball_radius: float
    lam: float
    lambda1_ball: float
    M: float
    theta_tail: float


def _smooth_bump(grid: PolarGrid, center: tuple[float, float], radius: float, width: float, height: float) -> ScalarField:
    def fn(x, y):
        d = np.hypot(x - center[0], y - center[1])
        return height * (1.0 - smoothstep5((d - radius) / width))
    return ScalarField.from_function(grid, fn)


def build_example1_setup(
    grid: PolarGrid,
    p: int = 3,
    lam_fraction: float = 0.5,
    ball_distance: float = 2.0,
    ball_angle: float = math.pi / 4,
    ball_radius: float = 1.0,
    R_star: float = 3.6,
    Lambda_out: float = 4.0,
    b_out: float = 5.0,
    bump_width: float = 0.3,
    ball_n_r: int = 64,
    M_star_factor: float = 1.25,
) -> Example1Setup:
    """Nonlinearity, steady ball profile and odd initial data for the odd-data construction.

    The ball sits in the open quadrant x1, x2 > 0.  The initial datum is a bump equal to
    2 sup(z) on the ball (z the ball profile) minus its mirror image in x1 = 0.
    """
    ball = build_grid(Kind.DISK, 0.0, ball_radius, ball_n_r, 16)
    lam1_b = eigensolve(ball, RADIAL, 1).eigenvalue
    lam = lam_fraction * lam1_b
    ground = solve_elliptic_ground(ball, p, lam)
    zmax = float(np.max(ground.profile))
    M = 4.0 * zmax
    M_star = M_star_factor * M
    center = (ball_distance * math.cos(ball_angle), ball_distance * math.sin(ball_angle))
    reach = ball_radius + bump_width
    if min(center) - reach <= 0 or ball_distance + reach >= R_star:
        raise ValueError("the bump support must lie in the open quadrant inside r < R_star")
    spec = build_example1(p, lam, Lambda_out, b_out, M_star, R_star,
                          (ball_distance - ball_radius, ball_distance + ball_radius))
    bump = _smooth_bump(grid, center, ball_radius, bump_width, 2.0 * zmax)
    mirror = bump.values[:, sigma_indices(grid, Direction(0, grid.n_theta))]
    u0 = bump.with_values(bump.values - mirror, 0.0 if grid.has_center else None)
    return Example1Setup(spec, grid, u0, ground, center, ball_radius, lam, lam1_b, M,
                         math.sqrt(Lambda_out / 2.0))


@dataclass
class Example1Checks:
    odd_error: float
    zeta_ratio_min: float
    tail_ratio_max: float
    positivity_min: float
    sup_max: float
    polar_margin: float
    late_polar_deficit: float
    fs_axis: int | None
    passed: dict[str, bool]

    @property
    def holds(self) -> bool:
        return all(self.passed.values())


def ball_profile_at(setup: Example1Setup) -> tuple[np.ndarray, np.ndarray]:
    """(mask of main-grid nodes strictly inside the ball, interpolated ball profile there)."""
    x, y = setup.grid.xy
    d = np.hypot(x - setup.ball_center[0], y - setup.ball_center[1])
    inside = d < setup.ball_radius
    r = np.append(setup.ground.profile_r, setup.ball_radius)
    v = np.append(setup.ground.profile, 0.0)
    return inside, np.interp(d, r, v)


def example1_checks(setup: Example1Setup, traj: Trajectory, verdict: Verdict,
                    odd_tol: float = 1e-6, zeta_tol: float = 1e-3, polar_tol: float = 1e-3) -> Example1Checks:
    grid = setup.grid
    spec = setup.spec
    perm = sigma_indices(grid, Direction(0, grid.n_theta))
    inside, zeta = ball_profile_at(setup)
    x, _ = grid.xy
    rr = grid.rr
    tail = rr >= spec.R_star
    bound = spec.M_star * np.exp(-setup.theta_tail * (rr - spec.R_star))
    odd = ratio_min = tail_max = 0.0
    ratio_min = math.inf
    pos_min = math.inf
    sup_max = 0.0
    for u in traj.fields:
        v = u.values
        odd = max(odd, float(np.max(np.abs(v + v[:, perm]))))
        if u.time_tag > 0:
            pos_min = min(pos_min, float(np.min(v[x > 0])))
        ratio_min = min(ratio_min, float(np.min(v[inside] / zeta[inside])))
        if tail.any():
            tail_max = max(tail_max, float(np.max(np.abs(v[tail]) / bound[tail])))
        sup_max = max(sup_max, u.sup())
    last = traj.fields[-1]
    axis = verdict.axis
    margin = polar_monotonicity_margin(last, axis) if axis is not None else -math.inf
    t_late = verdict.diagnostics.get("window", (traj.times[0],))[0]
    late_polar = (max(polar_monotonicity_deficit(u, axis) for u in traj.fields if u.time_tag >= t_late)
                  if axis is not None else math.inf)
    passed = {
        "odd": odd <= odd_tol * spec.M_star,
        "above_ground": ratio_min >= 1.0 - zeta_tol,
        "tail": tail_max <= 1.0,
        "bounded": sup_max <= spec.M_star,
        "verdict_fs": verdict.kind == "FS",
        "late_polar": late_polar <= polar_tol * spec.M_star,
        "strict_margin": margin > 0,
    }
    return Example1Checks(odd, ratio_min, tail_max, pos_min, sup_max, margin, late_polar,
                          axis.half_index if axis is not None else None, passed)


@dataclass
class Example1Result:
    setup: Example1Setup
    trajectory: Trajectory
    sample: OmegaSample
    verdict: Verdict
    checks: Example1Checks


def example1_run(setup: Example1Setup, config: SolverConfig, t_min: float | None = None,
                 fs_tol: float | None = None) -> Example1Result:
    """Run from the odd datum, sample the late snapshots and check every conclusion."""
    cfg = config if config.M1 is not None else dataclasses.replace(config, M1=setup.spec.M_star)
    traj = simulate(setup.spec, setup.u0, cfg, meta={"example": "odd-data", "lambda": setup.lam,
                                                     "M": setup.M, "theta_tail": setup.theta_tail})
    t_min = 0.5 * cfg.t_end if t_min is None else t_min
    sample = collect_omega(traj, t_min, M1=setup.spec.M_star)
    verdict = asymptotic_fs_verdict(sample, fs_tol=fs_tol)
    checks = example1_checks(setup, traj, verdict)
    return Example1Result(setup, traj, sample, verdict, checks)
