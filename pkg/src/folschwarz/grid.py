"""Polar grids on disks and annuli, fields sampled on them, and exact index reflections.

Radial nodes are cell centred: node ``i`` sits at ``r_inner + (i + 1) * dr`` so both
Dirichlet boundaries are ghost positions carrying an implicit zero.  A disk grid has one
extra unknown at the origin.  Angles are ``theta_j = j * dtheta`` with an even number of
angular nodes, so every axis through a half-grid angle ``k * dtheta / 2`` maps grid
angles onto grid angles and reflections are exact permutations.

Angles of directions are handled in *half-steps* (units of ``dtheta / 2``).  Working with
integers there keeps every mask and reflection free of floating point ties.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path

import numpy as np


class Kind(enum.Enum):
    DISK = "disk"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class PolarGrid:
    """Cell-centred polar grid.

    Attributes:
        kind: disk (carries a centre unknown) or annulus.
        r_inner: inner radius, 0 for a disk.
        r_outer: truncation radius where the outer Dirichlet ghost sits.
        n_r: number of radial nodes strictly between the boundaries.
        n_theta: number of angular nodes, even.
    """

    kind: Kind
    r_inner: float
    r_outer: float
    n_r: int
    n_theta: int

    @property
    def dr(self) -> float:
        return (self.r_outer - self.r_inner) / (self.n_r + 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    @property
    def has_center(self) -> bool:
        return self.kind is Kind.DISK

    @cached_property
    def r(self) -> np.ndarray:
        """Node radii, shape (n_r,)."""
        return self.r_inner + (np.arange(self.n_r) + 1.0) * self.dr

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    @cached_property
    def rr(self) -> np.ndarray:
        """Radius of every ring node, shape (n_r, n_theta)."""
        return np.repeat(self.r[:, None], self.n_theta, axis=1)

    @cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian coordinates of the ring nodes."""
        return self.rr * np.cos(self.theta)[None, :], self.rr * np.sin(self.theta)[None, :]

    @cached_property
    def area(self) -> np.ndarray:
        """Quadrature weights r_i * dr * dtheta of the ring nodes."""
        return self.rr * (self.dr * self.dtheta)

    @property
    def center_area(self) -> float:
        """Area of the centre control volume (disk of radius dr / 2)."""
        return math.pi * self.dr**2 / 4.0 if self.has_center else 0.0

    @property
    def n_unknowns(self) -> int:
        return self.n_r * self.n_theta + (1 if self.has_center else 0)

    @cached_property
    def r_vec(self) -> np.ndarray:
        """Radius of every unknown in vector order (centre at r = 0 last)."""
        r = self.rr.ravel()
        return np.append(r, 0.0) if self.has_center else r

    @cached_property
    def weights(self) -> np.ndarray:
        """Area weights of the flattened unknown vector (rings first, centre last)."""
        w = self.area.ravel()
        if self.has_center:
            w = np.append(w, self.center_area)
        return w

    def key(self) -> str:
        return f"{self.kind.value}:{self.r_inner!r}:{self.r_outer!r}:{self.n_r}:{self.n_theta}"

    def directions(self) -> list[Direction]:
        return [Direction(k, self.n_theta) for k in range(2 * self.n_theta)]


def build_grid(kind: Kind | str, r_inner: float, r_outer: float, n_r: int, n_theta: int) -> PolarGrid:
    kind = Kind(kind) if not isinstance(kind, Kind) else kind
    if n_theta % 2 != 0:
        raise ValueError("n_theta must be even")
    if n_theta < 8:
        raise ValueError("n_theta must be at least 8")
    if n_r < 3:
        raise ValueError("n_r must be at least 3")
    if not (r_inner >= 0.0):
        raise ValueError("r_inner must be non-negative")
    if not (r_outer > r_inner):
        raise ValueError("r_outer must exceed r_inner (non-positive radial spacing)")
    if kind is Kind.DISK and r_inner != 0.0:
        raise ValueError("a disk grid must have r_inner = 0")
    if kind is Kind.ANNULUS and r_inner <= 0.0:
        raise ValueError("an annulus grid needs r_inner > 0")
    return PolarGrid(kind, float(r_inner), float(r_outer), int(n_r), int(n_theta))


@dataclass(frozen=True)
class ScalarField:
    """Values on the ring nodes plus the optional centre value; Dirichlet zeros are implicit."""

    grid: PolarGrid
    values: np.ndarray
    center: float | None = None
    time_tag: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_r, self.grid.n_theta):
            raise ValueError(f"values shape {vals.shape} does not match grid")
        if self.grid.has_center and self.center is None:
            object.__setattr__(self, "center", 0.0)
        if not self.grid.has_center and self.center is not None:
            raise ValueError("annulus fields carry no centre value")
        if not np.all(np.isfinite(vals)) or (self.center is not None and not math.isfinite(self.center)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)
        if self.center is not None:
            object.__setattr__(self, "center", float(self.center))

    def vector(self) -> np.ndarray:
        v = self.values.ravel()
        if self.grid.has_center:
            v = np.append(v, self.center)
        return v

    @classmethod
    def from_vector(cls, grid: PolarGrid, vec: np.ndarray, time_tag: float = 0.0) -> ScalarField:
        n = grid.n_r * grid.n_theta
        vals = np.asarray(vec[:n], dtype=float).reshape(grid.n_r, grid.n_theta)
        center = float(vec[n]) if grid.has_center else None
        return cls(grid, vals, center, time_tag)

    @classmethod
    def zeros(cls, grid: PolarGrid, time_tag: float = 0.0) -> ScalarField:
        return cls(grid, np.zeros((grid.n_r, grid.n_theta)), 0.0 if grid.has_center else None, time_tag)

    @classmethod
    def from_function(cls, grid: PolarGrid, fn, time_tag: float = 0.0) -> ScalarField:
        """Sample ``fn(x, y)`` (vectorized) at every node."""
        x, y = grid.xy
        vals = np.asarray(fn(x, y), dtype=float) * np.ones_like(x)
        center = float(fn(np.zeros(1), np.zeros(1))[0]) if grid.has_center else None
        return cls(grid, vals, center, time_tag)

    def with_values(self, values: np.ndarray, center: float | None = None, time_tag: float | None = None) -> ScalarField:
        return ScalarField(
            self.grid,
            values,
            self.center if center is None else center,
            self.time_tag if time_tag is None else time_tag,
        )

    def scaled(self, c: float) -> ScalarField:
        return ScalarField(self.grid, c * self.values, None if self.center is None else c * self.center, self.time_tag)

    def __sub__(self, other: ScalarField) -> ScalarField:
        center = None if self.center is None else self.center - other.center
        return ScalarField(self.grid, self.values - other.values, center, self.time_tag)

    def __add__(self, other: ScalarField) -> ScalarField:
        center = None if self.center is None else self.center + other.center
        return ScalarField(self.grid, self.values + other.values, center, self.time_tag)

    def sup(self) -> float:
        return norms(self)[0]


@dataclass(frozen=True)
class Direction:
    """Unit vector at angle ``half_index * dtheta / 2``."""

    half_index: int
    n_theta: int = dc_field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "half_index", int(self.half_index) % (2 * self.n_theta))

    @property
    def angle(self) -> float:
        return self.half_index * math.pi / self.n_theta

    def opposite(self) -> Direction:
        return Direction(self.half_index + self.n_theta, self.n_theta)

    def normal_axis(self) -> Direction:
        """Direction spanning the hyperplane H(e), a quarter turn from e."""
        return Direction(self.half_index + self.n_theta // 2, self.n_theta)

    def vector(self) -> tuple[float, float]:
        return math.cos(self.angle), math.sin(self.angle)


def reflect_indices(grid: PolarGrid, e: Direction) -> np.ndarray:
    """Angular permutation of the reflection about the axis through ``e``.

    Returns ``jp`` with ``theta[jp[j]] = 2 * phi - theta[j]`` (mod 2 pi).  Radial indices are
    unchanged, so a field reflects as ``values[:, jp]``.
    """
    # 2 * phi = half_index full steps, so theta_jp = (half_index - j) * dtheta
    j = np.arange(grid.n_theta)
    return (e.half_index - j) % grid.n_theta


def sigma_indices(grid: PolarGrid, e: Direction) -> np.ndarray:
    """Angular permutation of sigma_e(x) = x - 2 (x.e) e, the reflection across H(e)."""
    return reflect_indices(grid, e.normal_axis())


def _half_offsets(grid: PolarGrid, e: Direction) -> np.ndarray:
    """(theta_j - phi) in half-steps, reduced to [0, 2 n_theta)."""
    n = grid.n_theta
    return (2 * np.arange(n) - e.half_index) % (2 * n)


def half_mask(grid: PolarGrid, e: Direction) -> np.ndarray:
    """Boolean (n_r, n_theta) mask of nodes with x.e > 0; nodes on H(e) and the centre excluded."""
    n = grid.n_theta
    s = _half_offsets(grid, e)
    inside = (2 * s < n) | (2 * s > 3 * n)
    return np.repeat(inside[None, :], grid.n_r, axis=0)


def on_hyperplane(grid: PolarGrid, e: Direction) -> np.ndarray:
    n = grid.n_theta
    s = _half_offsets(grid, e)
    on = (2 * s == n) | (2 * s == 3 * n)
    return np.repeat(on[None, :], grid.n_r, axis=0)


def reflect_field(u: ScalarField, perm: np.ndarray) -> ScalarField:
    return u.with_values(u.values[:, perm])


def norms(u: ScalarField) -> tuple[float, float]:
    """(sup norm, area-weighted l2 norm) over all unknowns."""
    vec = u.vector()
    sup = float(np.max(np.abs(vec))) if vec.size else 0.0
    l2 = float(np.sqrt(np.sum(u.grid.weights * vec**2)))
    return sup, l2


def write_field_csv(u: ScalarField, path: str | Path) -> None:
    """Rows ``r,theta,value`` in (i, j) order; a disk centre comes first at r = 0."""
    g = u.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "theta", "value"])
        if g.has_center:
            w.writerow(["0.0", "0.0", repr(float(u.center))])
        for i in range(g.n_r):
            ri = repr(float(g.r[i]))
            for j in range(g.n_theta):
                w.writerow([ri, repr(float(g.theta[j])), repr(float(u.values[i, j]))])


def read_field_csv(path: str | Path, time_tag: float = 0.0) -> ScalarField:
    """Inverse of write_field_csv; the grid is reconstructed from the node coordinates."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["r", "theta", "value"]:
        raise ValueError(f"{path}: expected header r,theta,value")
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    center = None
    if data.shape[0] and data[0, 0] == 0.0:
        center = float(data[0, 2])
        data = data[1:]
    radii = np.unique(data[:, 0])
    n_r = radii.size
    n_theta = data.shape[0] // n_r
    if n_r * n_theta != data.shape[0]:
        raise ValueError(f"{path}: rows do not form a tensor grid")
    dr = (radii[-1] - radii[0]) / (n_r - 1)
    r_outer = float(f"{radii[-1] + dr:.12g}")
    if center is not None:
        grid = build_grid(Kind.DISK, 0.0, r_outer, n_r, n_theta)
    else:
        grid = build_grid(Kind.ANNULUS, float(f"{radii[0] - dr:.12g}"), r_outer, n_r, n_theta)
    return ScalarField(grid, data[:, 2].reshape(n_r, n_theta), center, time_tag)
