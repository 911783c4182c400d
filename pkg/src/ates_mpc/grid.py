"""Radial geometry, physical parameters and the stacked state layout.

The state vector convention used everywhere: for a grid with ``nu`` cells each
aquifer contributes ``nu + 1`` temperatures (borehole value first, then the
cell midpoints), and the stacked state is ``[warm, cold]`` with length
``2 * (nu + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ParameterError


@dataclass(frozen=True)
class RadialGrid:
    """Uniformly spaced 1-D radial grid for one aquifer."""

    r0: float
    r_inf: float
    nu: int
    l: float
    edges: np.ndarray = field(repr=False)
    midpoints: np.ndarray = field(repr=False)
    volumes: np.ndarray = field(repr=False)

    @property
    def dr(self) -> float:
        return (self.r_inf - self.r0) / self.nu

    @property
    def n_states(self) -> int:
        """Stacked warm+cold state dimension, 2 * (nu + 1)."""
        return 2 * (self.nu + 1)


def build_grid(r0: float, r_inf: float, nu: int, l: float) -> RadialGrid:
    """Build a uniformly spaced radial grid with exact cylindrical-shell volumes."""
    if not (0.0 < r0 < r_inf):
        raise GeometryError(f"need 0 < r0 < r_inf, got r0={r0}, r_inf={r_inf}")
    if nu < 1:
        raise GeometryError(f"cell count must be >= 1, got {nu}")
    if l <= 0.0:
        raise GeometryError(f"filter length must be positive, got {l}")
    edges = np.linspace(r0, r_inf, nu + 1)
    midpoints = 0.5 * (edges[:-1] + edges[1:])
    volumes = math.pi * (edges[1:] ** 2 - edges[:-1] ** 2) * l
    return RadialGrid(float(r0), float(r_inf), int(nu), float(l),
                      edges=edges, midpoints=midpoints, volumes=volumes)


@dataclass(frozen=True)
class AquiferParams:
    """Volumetric heat capacities, porosity, conduction and ambient temperature."""

    c_a: float
    c_w: float
    c_r: float
    phi: float
    lam: float
    t_amb: float

    def __post_init__(self):
        if min(self.c_a, self.c_w, self.c_r, self.lam) <= 0.0:
            raise ParameterError("heat capacities and conduction coefficient must be positive")
        if not (0.0 <= self.phi <= 1.0):
            raise ParameterError(f"porosity must lie in [0, 1], got {self.phi}")

    @classmethod
    def from_constituents(cls, phi: float, c_w: float, c_r: float,
                          lam: float, t_amb: float) -> "AquiferParams":
        return cls(effective_heat_capacity(phi, c_w, c_r), c_w, c_r, phi, lam, t_amb)


def effective_heat_capacity(phi: float, c_w: float, c_r: float) -> float:
    """Porosity-weighted mix of water and rock volumetric heat capacities."""
    if not (0.0 <= phi <= 1.0):
        raise ParameterError(f"porosity must lie in [0, 1], got {phi}")
    return phi * c_w + (1.0 - phi) * c_r


def radial_velocity(q: float, r: float, l: float) -> float:
    """Radial flow velocity at radius r induced by volume flow q through the filter."""
    if r <= 0.0:
        raise GeometryError(f"radius must be positive, got {r}")
    if l <= 0.0:
        raise GeometryError(f"filter length must be positive, got {l}")
    return q / (2.0 * math.pi * r * l)


def stack_state(warm: np.ndarray, cold: np.ndarray) -> np.ndarray:
    """Concatenate per-aquifer profiles into the stacked state."""
    warm = np.asarray(warm, dtype=float)
    cold = np.asarray(cold, dtype=float)
    if warm.shape != cold.shape or warm.ndim != 1:
        raise ParameterError("warm and cold profiles must be 1-D and equally sized")
    return np.concatenate([warm, cold])


def split_state(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a stacked state into (warm, cold) profiles."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size % 2 != 0:
        raise ParameterError(f"stacked state must be 1-D with even length, got shape {x.shape}")
    half = x.size // 2
    return x[:half], x[half:]


def validate_state(x: np.ndarray, nu: int) -> np.ndarray:
    """Check length 2*(nu+1) and finiteness; returns the array as float."""
    x = np.asarray(x, dtype=float)
    n = 2 * (nu + 1)
    if x.shape != (n,):
        raise ParameterError(f"stacked state must have length {n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("stacked state contains non-finite values")
    return x
