"""Time integration of u_t - Lap u = f(t, |x|, u) on a polar grid with Dirichlet data.

The Laplacian is the flux-form five point stencil

    (Lap u)_ij = [r_{i+1/2}(u_{i+1,j} - u_ij) - r_{i-1/2}(u_ij - u_{i-1,j})] / (r_i dr^2)
                 + (u_{i,j+1} - 2 u_ij + u_{i,j-1}) / (r_i^2 dtheta^2),

with a disk centre row 4 (mean(ring 0) - u_c) / dr^2.  It is symmetric with respect to the
area weights ``grid.weights`` and -Lap is an M-matrix, so ``I - dt Lap`` is monotone.

The default IMEX step solves (I - dt Lap) u^{n+1} = u^n + dt f(t_n, r, u^n) by conjugate
gradients on the weight-symmetrized system.  The preconditioner is the exact angular-Fourier
sector solve (one tridiagonal system per mode), so CG typically stops after one iteration.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .grid import PolarGrid, ScalarField, norms, read_field_csv, write_field_csv

if TYPE_CHECKING:
    from .nonlin import NonlinearitySpec

IMEX = "imex"
EXPLICIT = "explicit"


class LinearSolveError(RuntimeError):
    pass


class BlowUpError(RuntimeError):
    """Raised when the sup norm leaves the declared bound; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def _radial_coefficients(grid: PolarGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r, dr = grid.r, grid.dr
    cp = (r + dr / 2) / (r * dr**2)
    cm = (r - dr / 2) / (r * dr**2)
    ca = 1.0 / (r**2 * grid.dtheta**2)
    return cp, cm, ca


def assemble_laplacian(grid: PolarGrid) -> sp.csr_matrix:
    """Sparse discrete Laplacian acting on ``ScalarField.vector()`` ordering."""
    n_r, n = grid.n_r, grid.n_theta
    cp, cm, ca = _radial_coefficients(grid)
    idx = np.arange(n_r * n).reshape(n_r, n)
    rows, cols, vals = [], [], []

    def add(rr, cc, vv):
        rows.append(np.ravel(rr))
        cols.append(np.ravel(cc))
        vals.append(np.ravel(vv) * np.ones(np.size(rr)))

    diag = -(cp + cm + 2 * ca)[:, None] * np.ones((1, n))
    add(idx, idx, diag)
    add(idx[:-1], idx[1:], np.repeat(cp[:-1, None], n, axis=1))
    add(idx[1:], idx[:-1], np.repeat(cm[1:, None], n, axis=1))
    add(idx, np.roll(idx, -1, axis=1), np.repeat(ca[:, None], n, axis=1))
    add(idx, np.roll(idx, 1, axis=1), np.repeat(ca[:, None], n, axis=1))
    size = grid.n_unknowns
    if grid.has_center:
        c = n_r * n
        add(idx[0], np.full(n, c), np.full(n, cm[0]))
        add(np.full(n, c), idx[0], np.full(n, 4.0 / (grid.dr**2 * n)))
        add(np.array([c]), np.array([c]), np.array([-4.0 / grid.dr**2]))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )


def apply_laplacian(u: ScalarField, lap: sp.csr_matrix | None = None) -> ScalarField:
    lap = assemble_laplacian(u.grid) if lap is None else lap
    return ScalarField.from_vector(u.grid, lap @ u.vector(), u.time_tag)


def sector_symbol(grid: PolarGrid, m: np.ndarray | int) -> np.ndarray:
    """Eigenvalue of the discrete -d^2/dtheta^2 on angular mode m."""
    return (2.0 - 2.0 * np.cos(2.0 * np.pi * np.asarray(m) / grid.n_theta)) / grid.dtheta**2


def sector_matrix(grid: PolarGrid, m: int) -> np.ndarray:
    """Dense radial operator of -Lap restricted to angular mode m.

    For m = 0 on a disk the first unknown is the centre value, and the ring-0 row couples
    to it; for m != 0 the centre does not enter.
    """
    cp, cm, ca = _radial_coefficients(grid)
    k = sector_symbol(grid, m) * ca * grid.dtheta**2
    n_r = grid.n_r
    a = np.diag(cp + cm + k) - np.diag(cp[:-1], 1) - np.diag(cm[1:], -1)
    if grid.has_center and m == 0:
        full = np.zeros((n_r + 1, n_r + 1))
        full[1:, 1:] = a
        full[1, 0] = -cm[0]
        full[0, 0] = 4.0 / grid.dr**2
        full[0, 1] = -4.0 / grid.dr**2
        return full
    return a


class SectorSolver:
    """Exact solver for (I - dt Lap) x = b via angular rFFT plus batched Thomas sweeps."""

    def __init__(self, grid: PolarGrid, dt: float):
        self.grid = grid
        self.dt = dt
        n = grid.n_theta
        cp, cm, ca = _radial_coefficients(grid)
        modes = np.arange(n // 2 + 1)
        k = sector_symbol(grid, modes)[None, :] * (ca * grid.dtheta**2)[:, None]
        lower = -dt * np.repeat(cm[:, None], modes.size, axis=1)
        diag = 1.0 + dt * ((cp + cm)[:, None] + k)
        upper = -dt * np.repeat(cp[:, None], modes.size, axis=1)
        if grid.has_center:
            # centre row carries n * u_c, which is what rfft puts in mode 0 of a constant ring
            c = 4.0 * dt / grid.dr**2
            lower = np.vstack([np.zeros(modes.size), lower])
            diag = np.vstack([np.where(modes == 0, 1.0 + c, 1.0), diag])
            upper = np.vstack([np.where(modes == 0, -c, 0.0), upper])
            lower[1] = np.where(modes == 0, lower[1], 0.0)
        lower[0] = 0.0
        upper[-1] = 0.0
        # forward elimination factors, shared by every solve
        size = diag.shape[0]
        cprime = np.empty_like(diag)
        denom = np.empty_like(diag)
        denom[0] = diag[0]
        cprime[0] = upper[0] / denom[0]
        for i in range(1, size):
            denom[i] = diag[i] - lower[i] * cprime[i - 1]
            cprime[i] = upper[i] / denom[i]
        self._lower, self._cprime, self._denom = lower, cprime, denom

    def solve(self, b: np.ndarray) -> np.ndarray:
        g = self.grid
        n_r, n = g.n_r, g.n_theta
        rhs = np.fft.rfft(b[: n_r * n].reshape(n_r, n), axis=1)
        if g.has_center:
            top = np.zeros((1, rhs.shape[1]), dtype=complex)
            top[0, 0] = n * b[-1]
            rhs = np.vstack([top, rhs])
        lower, cprime, denom = self._lower, self._cprime, self._denom
        y = np.empty_like(rhs)
        y[0] = rhs[0] / denom[0]
        for i in range(1, rhs.shape[0]):
            y[i] = (rhs[i] - lower[i] * y[i - 1]) / denom[i]
        for i in range(rhs.shape[0] - 2, -1, -1):
            y[i] -= cprime[i] * y[i + 1]
        if g.has_center:
            center = y[0, 0].real / n
            rings = np.fft.irfft(y[1:], n=n, axis=1)
            return np.append(rings.ravel(), center)
        return np.fft.irfft(y, n=n, axis=1).ravel()


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping parameters.

    ``snapshot_times`` takes precedence over ``snapshot_stride`` (in steps).  ``M1`` is the
    declared sup bound; when omitted the sup of the initial datum is used.
    """

    dt: float
    t_end: float
    scheme: str = IMEX
    linear_solve_tol: float = 1e-10
    snapshot_stride: int | None = None
    snapshot_times: tuple[float, ...] | None = None
    M1: float | None = None
    preconditioner: str = "sector"
    max_iter: int = 500
    check_lipschitz: bool = True

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in (IMEX, EXPLICIT):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.preconditioner not in ("sector", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if self.snapshot_times is not None:
            object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))


def explicit_cfl_limit(grid: PolarGrid) -> float:
    r_min = grid.r[0]
    return 0.25 * min(grid.dr**2, (r_min * grid.dtheta) ** 2)


def validate_config(spec: NonlinearitySpec, grid: PolarGrid, config: SolverConfig, M1: float) -> float:
    """Check the scheme restriction; returns the sampled Lipschitz bound L_f."""
    from .nonlin import lipschitz_bound

    lf = lipschitz_bound(spec, grid, M1)
    if config.scheme == EXPLICIT and config.dt > explicit_cfl_limit(grid):
        raise ValueError(f"explicit scheme needs dt <= {explicit_cfl_limit(grid):.3e}")
    if config.scheme == IMEX and config.check_lipschitz and config.dt * lf >= 1.0:
        raise ValueError(f"IMEX needs dt * L_f < 1 (L_f = {lf:.4g}, dt = {config.dt:g})")
    return lf


class Stepper:
    """Holds the assembled operators for one (grid, dt) pair."""

    def __init__(self, grid: PolarGrid, config: SolverConfig):
        self.grid = grid
        self.config = config
        self.lap = assemble_laplacian(grid)
        w = grid.weights
        self._w = w
        if config.scheme == IMEX:
            a = sp.identity(grid.n_unknowns, format="csr") - config.dt * self.lap
            wa = sp.diags(w) @ a
            self._wa = ((wa + wa.T) * 0.5).tocsr()
            size = grid.n_unknowns
            if config.preconditioner == "sector":
                sector = SectorSolver(grid, config.dt)
                self._prec = LinearOperator((size, size), matvec=lambda v: sector.solve(v / w))
            else:
                dinv = 1.0 / self._wa.diagonal()
                self._prec = LinearOperator((size, size), matvec=lambda v: dinv * v)
        self.last_iterations = 0

    def linear_solve(self, rhs: np.ndarray, x0: np.ndarray) -> np.ndarray:
        count = [0]

        def cb(_):
            count[0] += 1

        b = self._w * rhs
        if self.config.preconditioner == "sector":
            # warm-starting from the old iterate stalls once per-step updates fall under rtol
            x0 = self._prec @ b
        x, info = cg(
            self._wa, b, x0=x0, rtol=self.config.linear_solve_tol, atol=0.0,
            maxiter=self.config.max_iter, M=self._prec, callback=cb,
        )
        self.last_iterations = count[0]
        if info != 0:
            res = np.linalg.norm(self._wa @ x - b) / max(np.linalg.norm(b), 1e-300)
            raise LinearSolveError(
                f"CG did not reach rtol={self.config.linear_solve_tol:g} in {self.config.max_iter} "
                f"iterations (relative residual {res:.3e})"
            )
        return x

    def advance(self, vec: np.ndarray, t: float, spec: NonlinearitySpec) -> np.ndarray:
        dt = self.config.dt
        react = spec.f(t, self.grid.r_vec, vec)
        if self.config.scheme == EXPLICIT:
            return vec + dt * (self.lap @ vec + react)
        return self.linear_solve(vec + dt * react, vec)


def step(u: ScalarField, t: float, spec: NonlinearitySpec, config: SolverConfig, stepper: Stepper | None = None) -> ScalarField:
    stepper = Stepper(u.grid, config) if stepper is None else stepper
    vec = stepper.advance(u.vector(), t, spec)
    return ScalarField.from_vector(u.grid, vec, t + config.dt)


@dataclass
class Trajectory:
    grid: PolarGrid
    times: list[float] = field(default_factory=list)
    fields: list[ScalarField] = field(default_factory=list)
    history: list[tuple[float, float, float]] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def add(self, u: ScalarField) -> None:
        if self.times and u.time_tag <= self.times[-1]:
            raise ValueError("snapshot times must increase")
        self.times.append(u.time_tag)
        self.fields.append(u)

    def __len__(self) -> int:
        return len(self.fields)

    def at(self, t: float) -> ScalarField:
        """Snapshot whose time is nearest to t."""
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.fields[k]

    def save(self, directory: str | Path) -> None:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        (out / "meta").write_text(json.dumps(self.meta, indent=2, sort_keys=True, default=str) + "\n")
        with open(out / "norms.csv", "w") as fh:
            fh.write("t,sup,l2\n")
            for t, s, l2 in self.history:
                fh.write(f"{t!r},{s!r},{l2!r}\n")
        for u in self.fields:
            write_field_csv(u, out / f"snap_{u.time_tag:.6f}.csv")

    @classmethod
    def load(cls, directory: str | Path) -> Trajectory:
        src = Path(directory)
        meta = json.loads((src / "meta").read_text()) if (src / "meta").exists() else {}
        paths = sorted(src.glob("snap_*.csv"), key=lambda p: float(p.stem[5:]))
        fields = [read_field_csv(p, float(p.stem[5:])) for p in paths]
        if not fields:
            raise ValueError(f"no snapshots in {src}")
        traj = cls(fields[0].grid, meta=meta)
        for u in fields:
            traj.add(ScalarField(fields[0].grid, u.values, u.center, u.time_tag))
        if (src / "norms.csv").exists():
            rows = (src / "norms.csv").read_text().splitlines()[1:]
            traj.history = [tuple(float(x) for x in row.split(",")) for row in rows if row]
        return traj


def _snapshot_steps(config: SolverConfig, n_steps: int) -> set[int]:
    if config.snapshot_times is not None:
        steps = {min(n_steps, max(0, int(round(t / config.dt)))) for t in config.snapshot_times}
    elif config.snapshot_stride:
        steps = set(range(0, n_steps + 1, config.snapshot_stride))
    else:
        steps = set()
    return steps | {0, n_steps}


def simulate(
    spec: NonlinearitySpec,
    u0: ScalarField,
    config: SolverConfig,
    meta: dict[str, Any] | None = None,
    observer: Callable[[float, np.ndarray], None] | None = None,
    projection: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Trajectory:
    """March u0 to config.t_end, recording snapshots and the per-step norm history.

    ``observer(t, vec)`` is called after every step, which lets callers monitor
    quantities at full time resolution without storing every field.  ``projection``
    maps the new state after every step (used to remove modes the exact solution
    never contains).
    """
    grid = u0.grid
    sup0 = norms(u0)[0]
    m1 = config.M1 if config.M1 is not None else sup0
    if sup0 > m1 * (1 + 1e-12):
        raise ValueError(f"initial sup {sup0:.6g} exceeds declared M1 = {m1:.6g}")
    lf = validate_config(spec, grid, config, max(m1, 1e-300))
    stepper = Stepper(grid, config)
    n_steps = int(round(config.t_end / config.dt))
    wanted = _snapshot_steps(config, n_steps)
    info = {
        "grid": dataclasses.asdict(grid) | {"kind": grid.kind.value},
        "config": dataclasses.asdict(config),
        "spec": spec.describe(),
        "M1": m1,
        "L_f": lf,
        "truncation": f"Dirichlet disk/annulus truncated at r_outer = {grid.r_outer}",
    }
    traj = Trajectory(grid, meta=info | (meta or {}))
    vec = u0.vector().copy()
    s, l2 = norms(u0)
    traj.history.append((0.0, s, l2))
    traj.add(ScalarField.from_vector(grid, vec, 0.0))
    guard = 10.0 * m1
    for n in range(n_steps):
        t = n * config.dt
        vec = stepper.advance(vec, t, spec)
        if projection is not None:
            vec = projection(vec)
        t_new = (n + 1) * config.dt
        if not np.all(np.isfinite(vec)):
            raise BlowUpError(f"non-finite values at t = {t_new:.6g}", traj)
        u = ScalarField.from_vector(grid, vec, t_new)
        s, l2 = norms(u)
        traj.history.append((t_new, s, l2))
        if observer is not None:
            observer(t_new, vec)
        if s > guard:
            traj.add(u)
            raise BlowUpError(f"sup norm {s:.4g} exceeded 10*M1 = {guard:.4g} at t = {t_new:.6g}", traj)
        if (n + 1) in wanted:
            traj.add(u)
    return traj


def fitted_decay_rate(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Least-squares fit of log(values) = c - rate * t; returns (rate, rms residual)."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if keep.sum() < 2:
        return math.inf, 0.0
    coef, res, *_ = np.polyfit(t[keep], np.log(v[keep]), 1, full=True)
    rms = math.sqrt(float(res[0]) / keep.sum()) if res.size else 0.0
    return -float(coef[0]), rms
