"""Catalog of reaction terms f(t, r, u) with exact u-derivatives and sampled assumption checks."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .grid import PolarGrid


# --------------------------------------------------------------------------- time coefficients


@dataclass(frozen=True)
class Constant:
    c: float

    def __call__(self, t):
        return self.c + 0.0 * np.asarray(t, dtype=float)

    def bounds(self) -> tuple[float, float]:
        return self.c, self.c

    def describe(self) -> dict[str, Any]:
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class Sinusoid:
    mean: float
    amplitude: float
    period: float

    def __post_init__(self) -> None:
        if not self.period > 0:
            raise ValueError("period must be positive")

    def __call__(self, t):
        return self.mean + self.amplitude * np.sin(2 * np.pi * np.asarray(t, dtype=float) / self.period)

    def bounds(self) -> tuple[float, float]:
        return self.mean - abs(self.amplitude), self.mean + abs(self.amplitude)

    def describe(self) -> dict[str, Any]:
        return {"kind": "sinusoid", "mean": self.mean, "amplitude": self.amplitude, "period": self.period}


TimeCoeff = Constant | Sinusoid


def smoothstep5(s):
    """6 s^5 - 15 s^4 + 10 s^3 clipped to [0, 1]; C^2 at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (s * (6 * s - 15) + 10)


def smoothstep5_prime(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    return np.where(inside, 30 * s**2 * (s - 1) ** 2, 0.0)


# --------------------------------------------------------------------------- specs


class NonlinearitySpec(ABC):
    """f(t, r, u) evaluated elementwise on broadcastable arrays."""

    @abstractmethod
    def f(self, t: float, r, u): ...

    @abstractmethod
    def fu(self, t: float, r, u): ...

    @abstractmethod
    def fu_bounds(self, r, u) -> tuple[np.ndarray, np.ndarray]:
        """Exact (min, max) of f_u over all t >= 0 at each (r, u)."""

    @abstractmethod
    def describe(self) -> dict[str, Any]: ...


@dataclass(frozen=True)
class Henon(NonlinearitySpec):
    """a(t) r^alpha |u|^{p-1} u - b(t) r^beta u."""

    a: TimeCoeff = Constant(1.0)
    b: TimeCoeff = Constant(1.0)
    alpha: float = 1.0
    beta: float = 2.0
    p: float = 3.0

    def __post_init__(self) -> None:
        if not (0 <= self.alpha < self.beta):
            raise ValueError("Henon needs 0 <= alpha < beta")
        if not self.p > 1:
            raise ValueError("Henon needs p > 1")
        if isinstance(self.b, Sinusoid) and self.b.bounds()[0] <= 0:
            raise ValueError("b needs mean - |amplitude| > 0")

    @property
    def eta(self) -> float:
        """inf_t b(t); the stability argument needs this positive."""
        return self.b.bounds()[0]

    @property
    def a_sup(self) -> float:
        lo, hi = self.a.bounds()
        return max(abs(lo), abs(hi))

    def f(self, t, r, u):
        u = np.asarray(u, dtype=float)
        r = np.asarray(r, dtype=float)
        return self.a(t) * r**self.alpha * np.abs(u) ** (self.p - 1) * u - self.b(t) * r**self.beta * u

    def fu(self, t, r, u):
        r = np.asarray(r, dtype=float)
        return self.p * self.a(t) * r**self.alpha * np.abs(u) ** (self.p - 1) - self.b(t) * r**self.beta

    def fu_bounds(self, r, u):
        r = np.asarray(r, dtype=float)
        pos = self.p * r**self.alpha * np.abs(u) ** (self.p - 1)
        neg = r**self.beta
        alo, ahi = self.a.bounds()
        blo, bhi = self.b.bounds()
        return alo * pos - bhi * neg, ahi * pos - blo * neg

    def describe(self):
        return {"variant": "henon", "a": self.a.describe(), "b": self.b.describe(),
                "alpha": self.alpha, "beta": self.beta, "p": self.p}


@dataclass(frozen=True)
class Translation(NonlinearitySpec):
    """a(t) |u|^{p-1} u - b(t) u."""

    a: TimeCoeff = Constant(1.0)
    b: TimeCoeff = Constant(1.0)
    p: float = 3.0

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError("Translation needs p > 1")
        if isinstance(self.b, Sinusoid) and self.b.bounds()[0] <= 0:
            raise ValueError("b needs mean - |amplitude| > 0")

    @property
    def eta(self) -> float:
        return self.b.bounds()[0]

    def f(self, t, r, u):
        u = np.asarray(u, dtype=float)
        return self.a(t) * np.abs(u) ** (self.p - 1) * u - self.b(t) * u + 0.0 * np.asarray(r)

    def fu(self, t, r, u):
        return self.p * self.a(t) * np.abs(u) ** (self.p - 1) - self.b(t) + 0.0 * np.asarray(r)

    def fu_bounds(self, r, u):
        pos = self.p * np.abs(u) ** (self.p - 1) + 0.0 * np.asarray(r)
        alo, ahi = self.a.bounds()
        blo, bhi = self.b.bounds()
        return alo * pos - bhi, ahi * pos - blo

    def stability_radius(self) -> float:
        """Amplitude below which f_u <= -eta/2 for all t."""
        a_sup = max(abs(v) for v in self.a.bounds())
        return (self.eta / (2 * self.p * max(a_sup, 1.0))) ** (1.0 / (self.p - 1))

    def describe(self):
        return {"variant": "translation", "a": self.a.describe(), "b": self.b.describe(), "p": self.p}


@dataclass(frozen=True)
class Potential(NonlinearitySpec):
    """-V(r) u + g_scale tanh(u) with V(r) = v0 + v2 r^q; the core has |g_u| <= g_scale."""

    v0: float = 0.0
    v2: float = 1.0
    q: float = 2.0
    g_scale: float = 1.0

    def V(self, r):
        return self.v0 + self.v2 * np.asarray(r, dtype=float) ** self.q

    @property
    def C0(self) -> float:
        return abs(self.g_scale)

    def f(self, t, r, u):
        return -self.V(r) * u + self.g_scale * np.tanh(u)

    def fu(self, t, r, u):
        return -self.V(r) + self.g_scale / np.cosh(u) ** 2

    def fu_bounds(self, r, u):
        v = self.fu(0.0, r, u)
        return v, v

    def describe(self):
        return {"variant": "potential", "v0": self.v0, "v2": self.v2, "q": self.q, "g_scale": self.g_scale}


@dataclass(frozen=True)
class Example1(NonlinearitySpec):
    """a(r) u^p eta_M(u) - b(r) u, equal to u^p - lambda u on the band for |u| < M*/2.

    eta_M is 1 on |u| <= M*/2 and 0 on |u| >= M*; a is 1 up to band_hi and 0 past R*;
    b is lambda up to band_hi and b_out past R*.  All three cutoffs are quintic smoothsteps.
    """

    p: int = 3
    lam: float = 1.0
    Lambda_out: float = 4.0
    b_out: float = 5.0
    M_star: float = 10.0
    R_star: float = 3.6
    band_lo: float = 1.0
    band_hi: float = 3.0

    def __post_init__(self) -> None:
        if self.p < 3 or self.p % 2 != 1:
            raise ValueError("p must be an odd integer >= 3")
        if not (0 <= self.band_lo < self.band_hi < self.R_star):
            raise ValueError("band must lie strictly inside r < R_star")
        if not (self.lam > 0 and self.M_star > 0):
            raise ValueError("lambda and M_star must be positive")

    def _s_r(self, r):
        return (np.asarray(r, dtype=float) - self.band_hi) / (self.R_star - self.band_hi)

    def a_of_r(self, r):
        return 1.0 - smoothstep5(self._s_r(r))

    def b_of_r(self, r):
        return self.lam + (self.b_out - self.lam) * smoothstep5(self._s_r(r))

    def eta(self, u):
        half = 0.5 * self.M_star
        return 1.0 - smoothstep5((np.abs(u) - half) / half)

    def eta_prime(self, u):
        half = 0.5 * self.M_star
        return -np.sign(u) * smoothstep5_prime((np.abs(u) - half) / half) / half

    def f(self, t, r, u):
        # evaluated on |u| and signed afterwards so oddness holds bit for bit
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        return np.sign(u) * (self.a_of_r(r) * au**self.p * self.eta(au) - self.b_of_r(r) * au)

    def fu(self, t, r, u):
        au = np.abs(np.asarray(u, dtype=float))
        core = self.p * au ** (self.p - 1) * self.eta(au) + au**self.p * self.eta_prime(au)
        return self.a_of_r(r) * core - self.b_of_r(r)

    def fu_bounds(self, r, u):
        v = self.fu(0.0, r, u)
        return v, v

    def describe(self):
        return {"variant": "example1", "p": self.p, "lambda": self.lam, "Lambda_out": self.Lambda_out,
                "b_out": self.b_out, "M_star": self.M_star, "R_star": self.R_star,
                "band": [self.band_lo, self.band_hi]}


@dataclass(frozen=True)
class Example2(NonlinearitySpec):
    """mu zeta(t) u + psi(t) phi2(r) with a radial profile phi2 given at node radii."""

    mu: float
    phi2_r: np.ndarray = field(repr=False)
    phi2_v: np.ndarray = field(repr=False)
    schedule: Any = field(repr=False)

    def phi2(self, r):
        return np.interp(np.asarray(r, dtype=float), self.phi2_r, self.phi2_v, right=0.0)

    def f(self, t, r, u):
        return self.mu * self.schedule.zeta(t) * np.asarray(u, dtype=float) + self.schedule.psi(t) * self.phi2(r)

    def fu(self, t, r, u):
        return self.mu * self.schedule.zeta(t) + 0.0 * np.asarray(u, dtype=float) + 0.0 * np.asarray(r)

    def fu_bounds(self, r, u):
        z = 0.0 * np.asarray(u, dtype=float) + 0.0 * np.asarray(r)
        return z + min(0.0, self.mu), z + max(0.0, self.mu)

    def describe(self):
        return {"variant": "example2", "mu": self.mu, "lambda1": self.schedule.lambda1,
                "lambda2": self.schedule.lambda2, "k_max": self.schedule.k_max}


def eval_f(spec: NonlinearitySpec, t, r, u):
    return spec.f(t, r, u)


def eval_fu(spec: NonlinearitySpec, t, r, u):
    return spec.fu(t, r, u)


def lipschitz_bound(spec: NonlinearitySpec, grid: PolarGrid, M1: float, n_u: int = 401) -> float:
    """max |f_u| over all t, node radii and u in [-M1, M1] (uniform u lattice)."""
    radii = np.unique(grid.r_vec)
    u = np.linspace(-M1, M1, n_u)
    lo, hi = spec.fu_bounds(radii[:, None], u[None, :])
    return float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))


# --------------------------------------------------------------------------- assumption checks


def _unit_disk_lambda1() -> float:
    from .examples import unit_disk_lambda1

    return unit_disk_lambda1()


@dataclass(frozen=True)
class StabilityReport:
    holds: bool
    margin: float
    lhs: float
    rhs: float
    tail_certified: bool
    lattice: dict[str, Any]
    note: str = ""


def check_f2_strong(
    spec: NonlinearitySpec,
    M: float,
    rho: float,
    eps: float,
    J: tuple[float, float],
    lambda1: float | None = None,
    refine: int = 1,
) -> StabilityReport:
    """Sampled check of max_{r>rho,|u|<=eps} f_u < -max_{r in J,|u|<=M} |f_u| - 4 lambda1/|J|^2.

    r beyond rho is sampled on a geometric lattice with ratio 1 + 0.01/refine up to r_cut.
    For the Henon family f_u(r, u) <= p a_sup eps^{p-1} r^alpha - eta r^beta, whose right side
    is decreasing past r* = (alpha p a_sup eps^{p-1} / (beta eta))^{1/(beta-alpha)}; choosing
    r_cut >= r* and sampling |u| = eps at r_cut certifies the tail analytically.
    """
    a_, b_ = J
    if not (a_ < b_ < rho):
        raise ValueError("J must lie below rho")
    lam1 = _unit_disk_lambda1() if lambda1 is None else lambda1
    n_u = 200 * refine + 1
    n_j = 200 * refine + 1
    ratio = 1.0 + 0.01 / refine
    tail_certified = False
    note = ""
    r_cut = 4.0 * rho
    if isinstance(spec, Henon) and spec.eta > 0:
        c = spec.p * spec.a_sup * eps ** (spec.p - 1)
        r_star = (spec.alpha * c / (spec.beta * spec.eta)) ** (1.0 / (spec.beta - spec.alpha)) if spec.alpha > 0 else 0.0
        r_cut = max(r_cut, 2.0 * r_star)
        tail_certified = True
        note = f"tail certified: p a eps^(p-1) r^alpha - eta r^beta decreasing for r > {r_star:.6g}"
    else:
        note = "no analytic tail certificate for this variant; sampled verdict only"
    n_geo = int(math.ceil(math.log(r_cut / rho) / math.log(ratio))) + 1
    r_out = rho * ratio ** np.arange(n_geo)
    u_eps = np.linspace(-eps, eps, n_u)
    lhs = float(np.max(spec.fu_bounds(r_out[:, None], u_eps[None, :])[1]))
    r_j = np.linspace(a_, b_, n_j)
    u_m = np.linspace(-M, M, n_u)
    lo, hi = spec.fu_bounds(r_j[:, None], u_m[None, :])
    interior = float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))
    rhs = -interior - 4.0 * lam1 / (b_ - a_) ** 2
    margin = rhs - lhs
    lattice = {"r_tail": [rho, float(r_out[-1]), n_geo, ratio], "u_points": n_u, "J_points": n_j,
               "lambda1": lam1}
    return StabilityReport(margin > 0, margin, lhs, rhs, tail_certified, lattice, note)


def henon_proof_constants(spec: Henon, M: float, lambda1: float | None = None, slack: float = 1e-3) -> dict[str, float]:
    """eps, C_M and rho_M as chosen in the decay argument for the Henon family with J = [1, 2].

    rho_M is the root of eta (rho^alpha - rho^beta) = -C_M - 4 lambda1 enlarged by ``slack``
    so that the inequality is strict.
    """
    from scipy.optimize import brentq

    lam1 = _unit_disk_lambda1() if lambda1 is None else lambda1
    eta = spec.eta
    if eta <= 0:
        raise ValueError("Henon spec needs inf b > 0")
    b_sup = max(abs(v) for v in spec.b.bounds())
    eps = (eta / (spec.p * max(spec.a_sup, 1.0))) ** (1.0 / (spec.p - 1))
    c_m = 2.0**spec.beta * max(spec.a_sup, b_sup) * M ** (spec.p - 1)
    g = lambda r: eta * (r**spec.alpha - r**spec.beta) + c_m + 4 * lam1
    hi = 2.0
    while g(hi) > 0:
        hi *= 2
    root = brentq(g, 1.0, hi)
    return {"eps": eps, "C_M": c_m, "rho_M": root * (1 + slack), "lambda1": lam1}


def envelope_radius(spec: Henon, gamma_exp: float, M: float, factor: float = 1.01) -> float:
    """r1 strictly above max{(2(g^2+1)/eta)^{1/(beta-g)}, (2 a_sup M^{p-1}/eta)^{1/(beta-alpha)}, 1}."""
    if not (0 < gamma_exp < min(spec.beta, 1.0)):
        raise ValueError("gamma_exp must lie in (0, min(beta, 1))")
    eta = spec.eta
    if eta <= 0:
        raise ValueError("envelope radius needs inf b > 0")
    t1 = (2.0 / eta * (gamma_exp**2 + 1)) ** (1.0 / (spec.beta - gamma_exp))
    t2 = (2.0 / eta * spec.a_sup * M ** (spec.p - 1)) ** (1.0 / (spec.beta - spec.alpha))
    return factor * max(t1, t2, 1.0)


def check_potential_condition(
    spec: Potential | Callable,
    rho: float,
    J: tuple[float, float],
    C0: float | None = None,
    lambda1: float | None = None,
    refine: int = 1,
) -> StabilityReport:
    """Sampled check of min_{r>rho} V > max_J |V| + 4 lambda1/|J|^2 + 2 C0.

    For the Potential family with v2 >= 0 and q > 0, V is nondecreasing, so the infimum over
    r > rho is V(rho) and the tail is certified.
    """
    a_, b_ = J
    if not (a_ < b_ <= rho):
        raise ValueError("J must lie in [0, rho)")
    lam1 = _unit_disk_lambda1() if lambda1 is None else lambda1
    if isinstance(spec, Potential):
        V = spec.V
        c0 = spec.C0 if C0 is None else C0
        certified = spec.v2 >= 0 and spec.q > 0
    else:
        V = spec
        if C0 is None:
            raise ValueError("C0 is required for a bare potential")
        c0 = C0
        certified = False
    n = 400 * refine + 1
    ratio = 1.0 + 0.01 / refine
    n_geo = int(math.ceil(math.log(8.0) / math.log(ratio))) + 1
    r_out = rho * ratio ** np.arange(n_geo)
    lhs = float(np.min(V(r_out)))
    rhs = float(np.max(np.abs(V(np.linspace(a_, b_, n))))) + 4 * lam1 / (b_ - a_) ** 2 + 2 * c0
    margin = lhs - rhs
    note = "V nondecreasing, infimum attained at rho" if certified else "sampled verdict only"
    lattice = {"r_tail": [rho, float(r_out[-1]), n_geo, ratio], "J_points": n, "lambda1": lam1}
    return StabilityReport(margin > 0, margin, lhs, rhs, certified, lattice, note)


# --------------------------------------------------------------------------- Example 1 checks


@dataclass(frozen=True)
class Example1Report:
    odd_error: float
    band_error: float
    f4_worst: float
    f5_worst: float
    holds: bool
    lattice: dict[str, Any]


def build_example1(
    p: int = 3,
    lam: float = 1.0,
    Lambda_out: float = 4.0,
    b_out: float | None = None,
    M_star: float = 10.0,
    R_star: float = 3.6,
    band: tuple[float, float] = (1.0, 3.0),
) -> Example1:
    b_out = 1.25 * Lambda_out if b_out is None else b_out
    spec = Example1(p, lam, Lambda_out, b_out, M_star, R_star, band[0], band[1])
    report = check_example1(spec)
    if not report.holds:
        raise ValueError(f"Example-1 construction fails its checks: {report}")
    return spec


def check_example1(spec: Example1, r_max: float | None = None, n_r: int = 401, n_u: int = 801) -> Example1Report:
    """Oddness, agreement with u^p - lambda u on the band, u f < 0 for |u| >= M*,
    and f_u < -Lambda_out past R*, each on a dense lattice; reports worst values."""
    r_max = 3.0 * spec.R_star if r_max is None else r_max
    r = np.linspace(0.0, r_max, n_r)[:, None]
    u = np.linspace(-1.5 * spec.M_star, 1.5 * spec.M_star, n_u)[None, :]
    f = spec.f(0.0, r, u)
    odd_error = float(np.max(np.abs(spec.f(0.0, r, -u) + f)))
    band = (r >= spec.band_lo) & (r <= spec.band_hi) & (np.abs(u) < spec.M_star / 2)
    g = u**spec.p - spec.lam * u
    band_error = float(np.max(np.where(band, np.abs(f - g), 0.0)))
    outer = np.abs(u) >= spec.M_star
    f4_worst = float(np.max(np.where(outer, u * f, -np.inf)))
    tail = (r > spec.R_star) & (np.abs(u) <= spec.M_star)
    f5_worst = float(np.max(np.where(tail, spec.fu(0.0, r, u) + spec.Lambda_out, -np.inf)))
    scale = max(1.0, float(np.max(np.abs(f))))
    holds = odd_error <= 1e-12 * scale and band_error <= 1e-12 * scale and f4_worst < 0 and f5_worst < 0
    return Example1Report(odd_error, band_error, f4_worst, f5_worst, holds,
                          {"r": [0.0, r_max, n_r], "u": [-1.5 * spec.M_star, 1.5 * spec.M_star, n_u]})
