"""Per-prediction-instant affine subsystems of a single aquifer.

Each builder performs one explicit-Euler step of the radial heat transport
equation with the convection gradient frozen at the reference profile, so the
resulting map is affine in the flow u.  Conduction is a conservative
finite-volume stencil on cylindrical shells; the far-field cell couples to an
ambient Dirichlet value and the borehole entry depends on the operating
regime:

* extraction/storage: no conductive flux through the inner face, and the
  borehole entry tracks the first cell (zero spatial gradient outflow);
* injection: the borehole entry is written externally (by the heat exchanger),
  the cells conduct and advect against it as a Dirichlet value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ParameterError, StabilityError
from .grid import AquiferParams, RadialGrid

Regime = Literal["extraction_or_storage", "injection"]


@dataclass(frozen=True)
class AffineSubsystem:
    """One aquifer's discrete-time affine map x(k+1) = A x(k) + b u(k) + f."""

    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    regime: Regime
    built_at: float = 0.0

    @property
    def rows(self) -> int:
        return self.A.shape[0]


def _check_stability(grid: RadialGrid, params: AquiferParams, dt: float) -> None:
    number = params.lam * dt / (params.c_a * grid.dr**2)
    if number >= 0.5:
        raise StabilityError(
            f"diffusion number {number:.3g} >= 0.5 "
            f"(lambda={params.lam}, dt={dt}, c_a={params.c_a}, dr={grid.dr:.3g})"
        )


def _conduction_stencil(grid: RadialGrid, params: AquiferParams, dt: float,
                        inner_coupled: bool) -> tuple[np.ndarray, np.ndarray]:
    """Cell rows of the conduction update.

    Returns (A_cells, f_cells) with A_cells of shape (nu, nu+1) acting on the
    full per-aquifer state (borehole + cells) and f_cells holding the far-field
    Dirichlet contribution.  ``inner_coupled`` switches the conductive flux
    through the inner face of cell 1 (on during injection, off otherwise).
    """
    nu = grid.nu
    dr = grid.dr
    lam = params.lam
    coeff = 2.0 * np.pi * grid.l * lam * dt / (params.c_a * grid.volumes)

    A = np.zeros((nu, nu + 1))
    f = np.zeros(nu)
    A[np.arange(nu), np.arange(1, nu + 1)] = 1.0

    for i in range(nu):  # cell index i, state column i + 1
        c = i + 1
        if i > 0:
            k_in = coeff[i] * grid.edges[i] / dr
            A[i, c] -= k_in
            A[i, c - 1] += k_in
        elif inner_coupled:
            k_in = coeff[i] * grid.edges[0] / (grid.midpoints[0] - grid.r0)
            A[i, c] -= k_in
            A[i, 0] += k_in
        if i < nu - 1:
            k_out = coeff[i] * grid.edges[i + 1] / dr
            A[i, c] -= k_out
            A[i, c + 1] += k_out
        else:
            k_out = coeff[i] * grid.edges[nu] / (grid.r_inf - grid.midpoints[nu - 1])
            A[i, c] -= k_out
            f[i] += k_out * params.t_amb
    return A, f


def _frozen_gradient(grid: RadialGrid, x_ref: np.ndarray, t_amb: float,
                     regime: Regime) -> np.ndarray:
    """Upwind one-sided difference quotients of the reference profile per cell.

    Extraction draws fluid inward, so the upwind neighbor is the outer one
    (far cell sees the ambient Dirichlet value); injection pushes outward and
    upwinds against the inner neighbor (cell 1 sees the borehole entry).
    """
    nu = grid.nu
    dr = grid.dr
    g = np.zeros(nu)
    cells = x_ref[1:]
    # Boundary cells use the full cell spacing so the convection term is the
    # conservative upwind flux difference (enthalpy fluxes telescope exactly).
    if regime == "extraction_or_storage":
        g[:-1] = (cells[1:] - cells[:-1]) / dr
        g[-1] = (t_amb - cells[-1]) / dr
    else:
        g[0] = (cells[0] - x_ref[0]) / dr
        g[1:] = (cells[1:] - cells[:-1]) / dr
    return g


def _build(grid: RadialGrid, params: AquiferParams, x_ref: np.ndarray,
           flow_sign: int, dt: float, regime: Regime, built_at: float) -> AffineSubsystem:
    x_ref = np.asarray(x_ref, dtype=float)
    if x_ref.shape != (grid.nu + 1,):
        raise ParameterError(
            f"reference profile must have length {grid.nu + 1}, got shape {x_ref.shape}")
    if flow_sign not in (-1, 1):
        raise ParameterError(f"flow_sign must be +1 or -1, got {flow_sign}")
    _check_stability(grid, params, dt)

    A_cells, f_cells = _conduction_stencil(grid, params, dt,
                                           inner_coupled=(regime == "injection"))
    g = _frozen_gradient(grid, x_ref, params.t_amb, regime)
    # q = flow_sign * u enters the convection term -c_w/(c_a 2 pi r l) * g * q
    b_cells = -dt * params.c_w * flow_sign * g / (
        params.c_a * 2.0 * np.pi * grid.midpoints * grid.l)

    if regime == "injection":
        return AffineSubsystem(A_cells, b_cells, f_cells, regime, built_at)

    # Extraction/storage keeps the borehole entry, which follows cell 1.
    A = np.vstack([A_cells[:1], A_cells])
    b = np.concatenate([b_cells[:1], b_cells])
    f = np.concatenate([f_cells[:1], f_cells])
    return AffineSubsystem(A, b, f, regime, built_at)


def build_extraction_system(grid: RadialGrid, params: AquiferParams,
                            x_ref: np.ndarray, flow_sign: int,
                            dt: float, built_at: float = 0.0) -> AffineSubsystem:
    """Affine step of one aquifer while fluid is extracted or stored.

    Produces nu+1 rows covering the borehole entry and all cells; q = flow_sign * u.
    """
    return _build(grid, params, x_ref, flow_sign, dt, "extraction_or_storage", built_at)


def build_injection_system(grid: RadialGrid, params: AquiferParams,
                           x_ref: np.ndarray, flow_sign: int,
                           dt: float, built_at: float = 0.0) -> AffineSubsystem:
    """Affine step of one aquifer while fluid is injected.

    Produces only the nu cell rows; the borehole entry is supplied by the heat
    exchanger and appears as a regular column of A.
    """
    return _build(grid, params, x_ref, flow_sign, dt, "injection", built_at)
