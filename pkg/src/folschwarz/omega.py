"""Late-time sampling of trajectories and symmetry verdicts over the sample."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .grid import Direction, ScalarField
from .solver import Trajectory, fitted_decay_rate
from .symmetry import argmin_with_ties, axis_scores, fs_deficits, neg_deficit, radial_deficit

FS = "FS"
RADIAL = "Radial"
ZERO = "Zero"
MIXED = "Mixed"
UNDECIDED = "Undecided"
VERDICTS = (FS, RADIAL, ZERO, MIXED, UNDECIDED)


@dataclass
class OmegaSample:
    times: list[float]
    fields: list[ScalarField] = field(repr=False)
    distances: np.ndarray = field(repr=False)
    contains_zero: bool
    labels: list[int]
    M1: float
    cluster_tol: float
    zero_tol: float

    @property
    def window(self) -> tuple[float, float]:
        return self.times[0], self.times[-1]

    @property
    def n_clusters(self) -> int:
        return len(set(self.labels))


def _clusters(dist: np.ndarray, tol: float) -> list[int]:
    """Connected components of the graph 'distance <= tol', labelled in order of first member."""
    n = dist.shape[0]
    labels = [-1] * n
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = current
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(dist[i] <= tol):
                if labels[j] < 0:
                    labels[j] = current
                    stack.append(int(j))
        current += 1
    return labels


def sample_from_fields(
    fields: Sequence[ScalarField],
    M1: float | None = None,
    cluster_tol: float | None = None,
    zero_tol: float | None = None,
) -> OmegaSample:
    if len(fields) < 2:
        raise ValueError("an omega sample needs at least two snapshots")
    order = np.argsort([u.time_tag for u in fields], kind="stable")
    fields = [fields[k] for k in order]
    vecs = np.array([u.vector() for u in fields])
    sups = np.max(np.abs(vecs), axis=1)
    M1 = float(np.max(sups)) if M1 is None else float(M1)
    cluster_tol = 1e-3 * M1 if cluster_tol is None else cluster_tol
    zero_tol = 1e-6 * M1 if zero_tol is None else zero_tol
    dist = np.max(np.abs(vecs[:, None, :] - vecs[None, :, :]), axis=2)
    return OmegaSample(
        times=[u.time_tag for u in fields],
        fields=list(fields),
        distances=dist,
        contains_zero=bool(np.min(sups) <= zero_tol),
        labels=_clusters(dist, cluster_tol),
        M1=M1,
        cluster_tol=cluster_tol,
        zero_tol=zero_tol,
    )


def collect_omega(
    traj: Trajectory,
    t_min: float,
    stride: int = 1,
    M1: float | None = None,
    cluster_tol: float | None = None,
    zero_tol: float | None = None,
    times: Sequence[float] | None = None,
) -> OmegaSample:
    """Snapshots with t >= t_min (every ``stride``-th), or the snapshots nearest to ``times``."""
    if times is not None:
        picked = [traj.at(t) for t in times if t >= t_min]
        seen: dict[float, ScalarField] = {u.time_tag: u for u in picked}
        picked = [seen[t] for t in sorted(seen)]
    else:
        if traj.times and t_min >= traj.times[-1]:
            raise ValueError("t_min must precede the final snapshot")
        picked = [u for u in traj.fields if u.time_tag >= t_min][:: max(1, stride)]
    if M1 is None:
        M1 = traj.meta.get("M1")
    return sample_from_fields(picked, M1, cluster_tol, zero_tol)


@dataclass(frozen=True)
class Verdict:
    kind: str
    axis: Direction | None
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)

    def __str__(self) -> str:
        if self.axis is not None and self.kind in (FS, MIXED):
            return f"{self.kind}(axis={self.axis.half_index})"
        return self.kind

    def matches(self, expected: str) -> bool:
        """'FS', 'fs', 'FS(axis=3)' and 'Mixed' style expectations."""
        want = expected.strip()
        if "(" in want:
            return str(self) == want
        return self.kind.lower() == want.lower()


def asymptotic_fs_verdict(
    sample: OmegaSample,
    fs_tol: float | None = None,
    radial_tol: float | None = None,
    relative: bool = False,
) -> Verdict:
    """Classify a sample: Zero, FS about a common axis, Radial, Mixed or Undecided.

    Zero wins when any snapshot is below zero_tol.  Otherwise a common axis is the
    direction minimising the worst of fs_deficit and reflection asymmetry about the axis
    over all snapshots; the threshold is applied to fs_deficit alone.  With a common axis the
    sample is Radial if every snapshot is radial, Mixed if radial and non-radial snapshots
    coexist, and FS otherwise.  Without one, any radial snapshot gives Radial.

    With ``relative`` each snapshot's deficits are divided by its sup norm, which
    classifies the shape of decaying solutions (Zero still takes precedence).
    """
    tol_default = 1e-3 * sample.M1
    fs_tol = tol_default if fs_tol is None else fs_tol
    radial_tol = tol_default if radial_tol is None else radial_tol
    n_theta = sample.fields[0].grid.n_theta
    sups = np.array([z.sup() for z in sample.fields])
    norm = np.where(sups > 0, sups, 1.0) if relative else np.ones_like(sups)
    table = np.array([fs_deficits(z) for z in sample.fields]) / norm[:, None]
    worst = np.max(table, axis=0)
    score = np.max([axis_scores(z) / n for z, n in zip(sample.fields, norm)], axis=0)
    k = argmin_with_ties(score, max(sups / norm))
    rad = np.array([radial_deficit(z) for z in sample.fields]) / norm
    is_radial = rad <= radial_tol
    diag = {
        "window": sample.window,
        "times": list(sample.times),
        "fs_deficit_at_axis": table[:, k].tolist(),
        "radial_deficit": rad.tolist(),
        "axis_candidate": k,
        "worst_fs_deficit": float(worst[k]),
        "fs_tol": fs_tol,
        "radial_tol": radial_tol,
        "n_clusters": sample.n_clusters,
        "relative": relative,
    }
    if sample.contains_zero:
        return Verdict(ZERO, None, diag)
    if worst[k] <= fs_tol:
        axis = Direction(k, n_theta)
        if is_radial.all():
            return Verdict(RADIAL, None, diag)
        if is_radial.any():
            return Verdict(MIXED, axis, diag)
        return Verdict(FS, axis, diag)
    if is_radial.any():
        return Verdict(RADIAL, None, diag)
    return Verdict(UNDECIDED, None, diag)


def write_omega_csv(sample: OmegaSample, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "t_i", "t_j", "distance"])
        n = len(sample.times)
        for i in range(n):
            for j in range(n):
                w.writerow([i, j, repr(sample.times[i]), repr(sample.times[j]), repr(float(sample.distances[i, j]))])


@dataclass(frozen=True)
class EnvelopeReport:
    worst_ratio: float
    worst_time: float
    worst_radius: float
    violations: int
    n_checked: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def envelope_bound(r: np.ndarray, t: float, gamma_exp: float, r1: float, M: float) -> np.ndarray:
    """M exp(r1^g - |x|^g min(t, 1))."""
    return M * np.exp(r1**gamma_exp - np.asarray(r) ** gamma_exp * min(t, 1.0))


def envelope_check(traj: Trajectory, gamma_exp: float, r1: float, M: float) -> EnvelopeReport:
    r = traj.grid.r_vec
    worst, worst_t, worst_r = 0.0, math.nan, math.nan
    violations = checked = 0
    for u in traj.fields:
        ratio = np.abs(u.vector()) / envelope_bound(r, u.time_tag, gamma_exp, r1, M)
        violations += int(np.count_nonzero(ratio > 1.0))
        checked += ratio.size
        k = int(np.argmax(ratio))
        if ratio[k] > worst:
            worst, worst_t, worst_r = float(ratio[k]), u.time_tag, float(r[k])
    return EnvelopeReport(worst, worst_t, worst_r, violations, checked)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    residual: float
    n_points: int
    flagged: bool


def reflection_decay_fit(traj: Trajectory, e: Direction, tau: float) -> DecayFit:
    """Exponential fit of the negative reflection deficit over snapshots with t >= tau.

    A deficit that vanishes at every snapshot returns rate = +inf; a fitted rate <= 0
    is flagged as non-decaying.
    """
    picked = [u for u in traj.fields if u.time_tag >= tau]
    if len(picked) < 2:
        raise ValueError("need at least two snapshots beyond tau")
    t = np.array([u.time_tag for u in picked])
    d = np.array([neg_deficit(u, e) for u in picked])
    if np.all(d == 0):
        return DecayFit(math.inf, 0.0, len(picked), False)
    rate, res = fitted_decay_rate(t, d)
    return DecayFit(rate, res, int(np.count_nonzero(d > 0)), not rate > 0)
