"""Symmetry diagnostics on polar grids.

Reflection differences ``w_e = u - u o sigma_e`` live on the open half ``x.e > 0``.  The set
of directions where ``w_e`` has no negative part (up to a tolerance) is scanned over all
``2 * n_theta`` half-grid directions, and its contiguous arc around the most clearly
positive direction is reported.  Foliated Schwarz symmetry about an axis ``p`` means each
circle profile is even in ``psi = theta - phi`` and nonincreasing in ``|psi|``; it is
measured against an explicit rearrangement.

The module also carries three constructive checks used by the reflection argument:
the boundary-adapted quotient ``w / (g(|x|) h(x1))``, the decaying eigenfunction
subsolution on a ball, and the discrete circle inequalities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grid import Direction, ScalarField, half_mask, sigma_indices
from .solver import assemble_laplacian


# ---------------------------------------------------------------------------
# reflection differences

def w_field(u: ScalarField, e: Direction) -> ScalarField:
    """u - u o sigma_e on the half x.e > 0, zero elsewhere (centre included)."""
    g = u.grid
    perm = sigma_indices(g, e)
    mask = half_mask(g, e)
    vals = np.where(mask, u.values - u.values[:, perm], 0.0)
    return u.with_values(vals, 0.0 if g.has_center else None)


def neg_deficit(u: ScalarField, e: Direction) -> float:
    g = u.grid
    perm = sigma_indices(g, e)
    mask = half_mask(g, e)
    w = u.values - u.values[:, perm]
    if not mask.any():
        return 0.0
    return float(max(0.0, -np.min(w[mask])))


def _direction_scan(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Per half-index (negative deficit, area-weighted integral of w_e over its half)."""
    g = u.grid
    area = g.area
    k_all = np.arange(2 * g.n_theta)
    deficits = np.empty(k_all.size)
    integrals = np.empty(k_all.size)
    for k in k_all:
        e = Direction(int(k), g.n_theta)
        perm = sigma_indices(g, e)
        mask = half_mask(g, e)
        w = u.values - u.values[:, perm]
        deficits[k] = max(0.0, -float(np.min(w[mask]))) if mask.any() else 0.0
        integrals[k] = float(np.sum(np.where(mask, w, 0.0) * area))
    return deficits, integrals


def default_tol(u: ScalarField) -> float:
    return 10.0 * np.finfo(float).eps * max(u.sup(), np.finfo(float).tiny)


@dataclass(frozen=True)
class Arc:
    lo: float
    hi: float
    half_indices: tuple[int, ...]
    reference: int | None

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def empty(self) -> bool:
        return not self.half_indices


def m_arc(u: ScalarField, tol: float | None = None) -> tuple[Arc, list[Direction], np.ndarray]:
    """Maximal cyclic arc of directions with neg_deficit <= tol.

    The arc is grown around the member direction whose reflection difference has the
    largest weighted integral (ties go to the smallest half-index).  Returns the arc,
    the full member set and the per-direction deficits.  An empty member set yields an
    empty arc with ``reference = None``.
    """
    g = u.grid
    n2 = 2 * g.n_theta
    tol = default_tol(u) if tol is None else tol
    deficits, integrals = _direction_scan(u)
    member = deficits <= tol
    m_set = [Direction(int(k), g.n_theta) for k in np.flatnonzero(member)]
    if not member.any():
        return Arc(math.nan, math.nan, (), None), m_set, deficits
    half = g.dtheta / 2.0
    if member.all():
        return Arc(0.0, 2.0 * math.pi, tuple(range(n2)), 0), m_set, deficits
    score = np.where(member, integrals, -np.inf)
    ref = int(np.argmax(score))
    lo = ref
    while member[(lo - 1) % n2]:
        lo -= 1
    hi = ref
    while member[(hi + 1) % n2]:
        hi += 1
    members = tuple(k % n2 for k in range(lo, hi + 1))
    lo_angle = (lo % n2) * half
    return Arc(lo_angle, lo_angle + (hi - lo) * half, members, ref), m_set, deficits


# ---------------------------------------------------------------------------
# foliated Schwarz rearrangement

def _signed_offsets(n_theta: int, p: Direction) -> np.ndarray:
    """theta_j - phi in half-steps, in (-n_theta, n_theta]."""
    s = (2 * np.arange(n_theta) - p.half_index) % (2 * n_theta)
    return np.where(s > n_theta, s - 2 * n_theta, s)


def slot_order(n_theta: int, p: Direction) -> np.ndarray:
    """Angular slots sorted by |psi|, the positive side first on ties."""
    s = _signed_offsets(n_theta, p)
    return np.lexsort((s < 0, np.abs(s)))


def symmetrize_circle(values: np.ndarray, half_index: int) -> np.ndarray:
    """Rearrange the last axis (equally spaced circle samples) about the given half-index axis."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if n % 2:
        raise ValueError("circle length must be even")
    order = slot_order(n, Direction(half_index % (2 * n), n))
    out = np.empty_like(values)
    out[..., order] = -np.sort(-values, axis=-1)
    return out


def fs_symmetrize(u: ScalarField, p: Direction) -> ScalarField:
    return u.with_values(symmetrize_circle(u.values, p.half_index))


def fs_deficit(u: ScalarField, p: Direction) -> float:
    order = slot_order(u.grid.n_theta, p)
    desc = -np.sort(-u.values, axis=1)
    return float(np.max(np.abs(u.values[:, order] - desc))) if u.values.size else 0.0


def fs_deficits(u: ScalarField) -> np.ndarray:
    desc = -np.sort(-u.values, axis=1)
    n = u.grid.n_theta
    return np.array([
        float(np.max(np.abs(u.values[:, slot_order(n, Direction(k, n))] - desc)))
        for k in range(2 * n)
    ])


def argmin_with_ties(values: np.ndarray, scale: float) -> int:
    """Smallest index whose value is within roundoff (64 eps * scale) of the minimum."""
    values = np.asarray(values)
    floor = float(np.min(values)) + 64.0 * np.finfo(float).eps * scale
    return int(np.flatnonzero(values <= floor)[0])


def axis_asymmetries(u: ScalarField) -> np.ndarray:
    """sup |u - u o R_p| per half-index p, R_p the reflection about the line through p."""
    n = u.grid.n_theta
    j = np.arange(n)
    return np.array([float(np.max(np.abs(u.values - u.values[:, (k - j) % n]))) if u.values.size else 0.0
                     for k in range(2 * n)])


def axis_scores(u: ScalarField) -> np.ndarray:
    """Per half-index max(fs_deficit, axis asymmetry).

    The sorted-slot deficit alone cannot separate a node axis from the neighbouring
    half-step axis when values tie in pairs; requiring evenness about the axis does.
    """
    return np.maximum(fs_deficits(u), axis_asymmetries(u))


def best_axis(u: ScalarField) -> Direction:
    """Direction of least fs_deficit; values equal up to roundoff go to the smallest half-index."""
    return Direction(argmin_with_ties(fs_deficits(u), u.sup()), u.grid.n_theta)


def _abs_groups(n_theta: int, p: Direction) -> list[np.ndarray]:
    a = np.abs(_signed_offsets(n_theta, p))
    return [np.flatnonzero(a == v) for v in np.unique(a)]


def polar_monotonicity_deficit(u: ScalarField, p: Direction) -> float:
    """Largest increase of a circle profile as |psi| grows from 0 to pi."""
    groups = _abs_groups(u.grid.n_theta, p)
    worst = 0.0
    for near, far in zip(groups[:-1], groups[1:]):
        jump = np.max(u.values[:, far], axis=1) - np.min(u.values[:, near], axis=1)
        worst = max(worst, float(np.max(jump)))
    return worst


def polar_monotonicity_margin(u: ScalarField, p: Direction) -> float:
    """Smallest strict drop between consecutive |psi| groups over all circles.

    Positive iff every circle profile is strictly decreasing in |psi| on [0, pi].
    """
    groups = _abs_groups(u.grid.n_theta, p)
    margin = math.inf
    for near, far in zip(groups[:-1], groups[1:]):
        drop = np.min(u.values[:, near], axis=1) - np.max(u.values[:, far], axis=1)
        margin = min(margin, float(np.min(drop)))
    return margin


def radial_deficit(u: ScalarField) -> float:
    v = u.values
    return float(np.max(np.max(v, axis=1) - np.min(v, axis=1))) if v.size else 0.0


@dataclass(frozen=True)
class SymmetryReport:
    deficits: np.ndarray
    m_set: list[Direction]
    arc: Arc
    best_axis: Direction
    fs_deficit: float
    polar_deficit: float
    polar_margin: float
    radial_deficit: float
    tol: float


def analyze(u: ScalarField, tol: float | None = None) -> SymmetryReport:
    tol = default_tol(u) if tol is None else tol
    arc, m_set, deficits = m_arc(u, tol)
    fsd = fs_deficits(u)
    p = Direction(argmin_with_ties(fsd, u.sup()), u.grid.n_theta)
    return SymmetryReport(
        deficits=deficits,
        m_set=m_set,
        arc=arc,
        best_axis=p,
        fs_deficit=float(fsd[p.half_index]),
        polar_deficit=polar_monotonicity_deficit(u, p),
        polar_margin=polar_monotonicity_margin(u, p),
        radial_deficit=radial_deficit(u),
        tol=tol,
    )


def write_symmetry_csv(report: SymmetryReport, directory: str | Path, suffix: str = "") -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"symmetry{suffix}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["e_half_index", "deficit"])
        for k, d in enumerate(report.deficits):
            w.writerow([k, repr(float(d))])
    with open(out / f"symmetry_summary{suffix}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["best_axis", "fs_deficit", "arc_lo", "arc_hi", "radial_deficit"])
        w.writerow([report.best_axis.half_index, repr(report.fs_deficit), repr(report.arc.lo),
                    repr(report.arc.hi), repr(report.radial_deficit)])


# ---------------------------------------------------------------------------
# boundary-adapted quotient

def hat_profile(t: np.ndarray, start: float, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concave C^1 profile rising from 1/2 at ``start`` to (delta + 1)/2 at ``start + delta``.

    Returns value, first and second derivative.  The second derivative is taken as
    -1/delta on the closed interval [start, start + delta].
    """
    s = np.asarray(t, dtype=float) - start
    inside = s <= delta
    top = 0.5 * delta + 0.5
    val = np.where(inside, -((s - delta) ** 2) / (2.0 * delta) + top, top)
    d1 = np.where(inside, -(s - delta) / delta, 0.0)
    d2 = np.where(inside, -1.0 / delta, 0.0)
    return val, d1, d2


def delta_bound(gamma: float, beta: float, R: float, N: int = 2) -> float:
    """Upper bound on delta from the admissibility condition (also capped at 1)."""
    bound = 1.0 / (gamma + beta)
    if R > 0:
        bound = min(bound, R / (8.0 * R + 2.0 * (N - 1)))
    return min(bound, 1.0)


def default_delta(gamma: float, beta: float, R: float, N: int = 2) -> float:
    """A delta that also keeps c_hat < -gamma on the inner collar once |c| < beta is added."""
    extra = 8.0 + 2.0 * (N - 1) / R if R > 0 else 0.0
    return 0.9 / (gamma + beta + extra)


@dataclass
class HatTransform:
    delta: float
    gamma: float
    rho1: float
    beta: float
    R: float
    sigma: np.ndarray
    G: np.ndarray
    g: np.ndarray
    h: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c_hat: np.ndarray | None
    checks: dict[str, bool] = field(default_factory=dict)
    worst: dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(self.checks.values())


def hat_transform(
    w: ScalarField,
    gamma: float,
    rho1: float,
    c_bound_interior: float,
    c_field: np.ndarray | None = None,
    delta: float | None = None,
    submasks: Sequence[np.ndarray] = (),
    N: int = 2,
) -> tuple[HatTransform, ScalarField]:
    """Divide w (supported on x1 > 0) by g(|x|) h(x1) and check the resulting bounds.

    ``c_field`` is an (n_r, n_theta) zero-order coefficient; when given, the transformed
    coefficient is formed and checked against its bound and against -gamma outside G.
    """
    grid = w.grid
    R = grid.r_inner
    beta = c_bound_interior
    if delta is None:
        delta = default_delta(gamma, beta, R, N)
    bound = delta_bound(gamma, beta, R, N)
    if not (0 < delta < bound):
        raise ValueError(f"delta = {delta!r} must lie in (0, {bound!r})")
    if R > 0 and not R + delta < rho1:
        raise ValueError("need R + delta < rho1")

    x, _ = grid.xy
    rr = grid.rr
    sigma = half_mask(grid, Direction(0, grid.n_theta))
    h, h1, h2 = hat_profile(np.maximum(x, 0.0), 0.0, delta)
    if R > 0:
        g, g1, g2 = hat_profile(rr, R, delta)
    else:
        g, g1, g2 = np.full_like(rr, 0.5), np.zeros_like(rr), np.zeros_like(rr)
    cos_t = x / rr
    b1 = 2.0 * h1 / h + 2.0 * (g1 / g) * cos_t
    b2 = 2.0 * (g1 / g) * np.sqrt(np.maximum(0.0, 1.0 - cos_t**2))
    G = sigma & (x > delta) & (rr > R + delta) & (rr < rho1)

    w_hat = np.where(sigma, w.values / (g * h), 0.0)
    out = w.with_values(w_hat, 0.0 if grid.has_center else None)

    ht = HatTransform(delta, gamma, rho1, beta, R, sigma, G, g, h, b1, b2, None)
    in_x = (x >= 0) & (x <= delta)
    in_r = (rr >= R) & (rr <= R + delta) if R > 0 else np.zeros_like(sigma)
    wv = w.values[sigma]
    wh = w_hat[sigma]
    ht.checks["sign"] = bool(np.array_equal(np.sign(wv), np.sign(wh)))
    ht.checks["gh_range"] = bool(np.all((g[sigma] >= 0.5) & (g[sigma] < 1) & (h[sigma] >= 0.5) & (h[sigma] < 1)))
    eq_ok = True
    worst_ratio = 0.0
    for q in [sigma, *submasks]:
        q = q & sigma
        if not q.any():
            continue
        nw = float(np.max(np.abs(w.values[q])))
        nh = float(np.max(np.abs(w_hat[q])))
        eq_ok &= 0.25 * nh <= nw <= nh
        if nh > 0:
            worst_ratio = max(worst_ratio, nw / nh)
    ht.checks["equivalence"] = bool(eq_ok)
    ht.worst["equivalence_ratio"] = worst_ratio
    b1_cap = 4.0 * in_x + 4.0 * in_r
    b2_cap = 4.0 * in_r
    ht.checks["b_bounds"] = bool(np.all(np.abs(b1[sigma]) <= b1_cap[sigma] + 1e-12)
                                 and np.all(np.abs(b2[sigma]) <= b2_cap[sigma] + 1e-12))
    if c_field is not None:
        c = np.asarray(c_field, dtype=float)
        r_term = (g2 + (N - 1) * g1 / rr) / g
        c_hat = h2 / h + 2.0 * (h1 / h) * (g1 / g) * cos_t + r_term + c
        ht.c_hat = c_hat
        cap = np.abs(c) + (2.0 / delta) * in_x
        if R > 0:
            cap = cap + 8.0 * in_x * in_r + (2.0 / delta + 2.0 * (N - 1) / R) * in_r
        ht.checks["c_bound"] = bool(np.all(np.abs(c_hat[sigma]) <= cap[sigma] + 1e-9))
        outside = sigma & ~G
        worst = float(np.max(c_hat[outside] + gamma)) if outside.any() else -math.inf
        ht.worst["c_hat_plus_gamma_outside_G"] = worst
        ht.checks["c_below_outside_G"] = worst < 0
    return ht, out


# ---------------------------------------------------------------------------
# ball subsolution

def gamma_from_stability(fu_abs_max: float, lambda1: float, J: tuple[float, float]) -> float:
    """max |f_u| over J x [-M1, M1] plus 4 lambda1 / |J|^2."""
    return fu_abs_max + 4.0 * lambda1 / (J[1] - J[0]) ** 2


def max_abs_fu(spec, J: tuple[float, float], M1: float, n_r: int = 401, n_u: int = 401) -> float:
    r = np.linspace(J[0], J[1], n_r)[:, None]
    u = np.linspace(-M1, M1, n_u)[None, :]
    lo, hi = spec.fu_bounds(r, u)
    return float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))


@dataclass(frozen=True)
class SubsolutionReport:
    worst_margin: float
    operator_worst_margin: float
    agreement: float
    n_nodes: int
    holds: bool
    margin: np.ndarray = field(repr=False)


def subsolution_verify(
    eta: ScalarField,
    lambda1: float,
    center: tuple[float, float],
    radius: float,
    gamma: float,
    c_field: Callable[[np.ndarray, np.ndarray], np.ndarray],
) -> SubsolutionReport:
    """Check -gamma + lambda1/radius^2 - c < 0 at the nodes of the ball.

    ``eta`` lives on a unit-disk grid; its nodes are mapped by x = center + radius * y.
    The second route recovers the eigenvalue nodewise from the assembled discrete
    Laplacian, -Lap_h eta / eta, instead of using ``lambda1``.
    """
    grid = eta.grid
    xs, ys = grid.xy
    px = np.append(xs.ravel(), 0.0) if grid.has_center else xs.ravel()
    py = np.append(ys.ravel(), 0.0) if grid.has_center else ys.ravel()
    X = center[0] + radius * px
    Y = center[1] + radius * py
    c = np.asarray(c_field(X, Y), dtype=float)
    margin = -gamma + lambda1 / radius**2 - c
    vec = eta.vector()
    lam_nodes = -(assemble_laplacian(grid) @ vec) / vec
    op_margin = -gamma + lam_nodes / radius**2 - c
    worst = float(np.max(margin))
    op_worst = float(np.max(op_margin))
    return SubsolutionReport(worst, op_worst, float(np.max(np.abs(margin - op_margin))),
                             int(margin.size), worst < 0, margin)


# ---------------------------------------------------------------------------
# circle inequalities

@dataclass
class CircleVerdict:
    passed: bool
    violations: list[str] = field(default_factory=list)


def _pairs(m: int, a: int) -> list[tuple[int, int]]:
    """Slot pairs (i, k) with theta_i = eta + t, theta_k = eta - t, eta = a*pi/m, t in (0, pi)."""
    return [((a + d) // 2 % m, (a - d) // 2 % m) for d in range(1, m) if (d - a) % 2 == 0]


def _cmp(x: float, y: float, sign: int, strict: bool, tol: float) -> bool:
    # sign=+1: x >= y (or >); sign=-1: x <= y (or <)
    diff = sign * (x - y)
    return diff > tol if strict else diff >= -tol


def circle_lemma_check(
    v: Sequence[float],
    mode: str = "conclusion",
    band: int = 1,
    orientation: str = "increasing",
    strict: bool = False,
    tol: float = 0.0,
) -> CircleVerdict:
    """Check an even circle profile sampled at theta_j = 2 pi j / m.

    Modes:
      premises    evenness and v(eta + t) >= v(eta - t) for eta = a*pi/m, a = 1..band
      conclusion  monotone on [0, pi] and the reflected inequality for every a = 1..m-1
      sign        strict sign pattern: > for eta in (0, pi), < for eta in (-pi, 0)
    ``orientation="decreasing"`` flips every inequality (profiles like cos).
    """
    v = np.asarray(v, dtype=float)
    m = v.size
    if m % 2 or m < 4:
        raise ValueError("m must be even and at least 4")
    sign = 1 if orientation == "increasing" else -1
    out: list[str] = []
    if mode == "premises":
        for j in range(m):
            if abs(v[j] - v[(m - j) % m]) > tol:
                out.append(f"even: v[{j}] != v[{(m - j) % m}]")
        for a in range(1, band + 1):
            for i, k in _pairs(m, a):
                if not _cmp(v[i], v[k], sign, strict, tol):
                    out.append(f"local a={a}: v[{i}] vs v[{k}]")
    elif mode == "conclusion":
        for j in range(m // 2):
            if not _cmp(v[j + 1], v[j], sign, strict, tol):
                out.append(f"monotone: v[{j + 1}] vs v[{j}]")
        for a in range(1, m):
            for i, k in _pairs(m, a):
                if not _cmp(v[i], v[k], sign, strict, tol):
                    out.append(f"global a={a}: v[{i}] vs v[{k}]")
    elif mode == "sign":
        for a in range(1, m):
            for i, k in _pairs(m, a):
                if not _cmp(v[i], v[k], sign, True, tol):
                    out.append(f"positive side a={a}: v[{i}] vs v[{k}]")
            for i, k in _pairs(m, -a):
                if not _cmp(v[i], v[k], -sign, True, tol):
                    out.append(f"negative side a={-a}: v[{i}] vs v[{k}]")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return CircleVerdict(not out, out)
