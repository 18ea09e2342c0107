"""Initial data used by the command line and the acceptance runs."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .grid import PolarGrid, ScalarField
from .nonlin import smoothstep5


def plateau_bumps(
    grid: PolarGrid,
    centres: Sequence[tuple[float, float]],
    heights: Sequence[float],
    radius: float = 0.5,
    width: float = 0.5,
) -> ScalarField:
    """Sum of bumps equal to their height within ``radius`` and vanishing beyond ``radius + width``."""
    if len(centres) != len(heights):
        raise ValueError("need one height per centre")
    if not (radius >= 0 and width > 0):
        raise ValueError("bump radius must be >= 0 and width > 0")

    def fn(x, y):
        out = np.zeros_like(x)
        for h, (cx, cy) in zip(heights, centres):
            out = out + h * (1.0 - smoothstep5((np.hypot(x - cx, y - cy) - radius) / width))
        return out

    return ScalarField.from_function(grid, fn)


def bumps_on_circle(
    grid: PolarGrid,
    heights: Sequence[float],
    angles_deg: Sequence[float],
    distance: float,
    radius: float = 0.5,
    width: float = 0.5,
) -> ScalarField:
    centres = [(distance * math.cos(math.radians(a)), distance * math.sin(math.radians(a))) for a in angles_deg]
    return plateau_bumps(grid, centres, heights, radius, width)


def gaussian(grid: PolarGrid, amplitude: float, centre: tuple[float, float], width: float) -> ScalarField:
    cx, cy = centre
    return ScalarField.from_function(
        grid, lambda x, y: amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / width**2)
    )
