"""Delivered power in bilinear and state-linear form, plus the energy ledger.

The bilinear form meters the enthalpy carried between the boreholes; the
state-linear form re-expresses the same power through the change of stored
internal energy plus the far-field conduction loss, which keeps the MPC cost
quadratic.  The ledger accumulates the running energy balance from the
bilinear (metered) power.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import AquiferParams, RadialGrid, validate_state


def power_bilinear(x: np.ndarray, u: float, c_w: float) -> float:
    """Delivered power c_w * u * (warm borehole - cold borehole) in watts."""
    x = np.asarray(x, dtype=float)
    nu = x.size // 2 - 1
    return c_w * u * (x[0] - x[nu + 1])


def storage_weights(grid: RadialGrid) -> np.ndarray:
    """Volume weights pairing each per-aquifer state entry in the linear power form.

    The borehole entry carries the water column inside the well; the cells
    carry their exact shell volumes.
    """
    well = np.pi * grid.r0**2 * grid.l
    return np.concatenate([[well], grid.volumes])


def power_linear(x_now: np.ndarray, x_next: np.ndarray, grid: RadialGrid,
                 params: AquiferParams, dt: float) -> float:
    """State-linear delivered power: far-field loss minus stored-energy change."""
    nu = grid.nu
    x_now = validate_state(x_now, nu)
    x_next = validate_state(x_next, nu)
    m = nu + 1
    loss = (params.lam * 2.0 * np.pi * grid.r_inf * grid.l
            * (2.0 * params.t_amb - x_now[m - 1] - x_now[2 * m - 1])
            / (grid.r_inf - grid.midpoints[-1]))
    w = storage_weights(grid)
    delta = (x_next[:m] - x_now[:m]) + (x_next[m:] - x_now[m:])
    storage = float(np.dot(params.c_a * w / dt, delta))
    return loss - storage


def delivered_energy(powers, dt: float) -> float:
    """Sum of powers times the sampling time, in joules."""
    return dt * float(np.sum(np.asarray(powers, dtype=float))) if len(powers) else 0.0


@dataclass
class LedgerRecord:
    t: float
    u: float
    p_bilinear: float
    p_linear: float
    demand: float


@dataclass
class EnergyLedger:
    """Running energy balance B_past [J] with per-step history."""

    dt: float
    b_past: float = 0.0
    history: list[LedgerRecord] = field(default_factory=list)

    def last_time(self) -> float | None:
        return self.history[-1].t if self.history else None


def update_balance(ledger: EnergyLedger, p: float, d: float, u: float, t: float,
                   p_linear: float = float("nan")) -> EnergyLedger:
    """Accumulate one step of delivered (bilinear) power into the balance."""
    last = ledger.last_time()
    if last is not None and t <= last:
        raise ParameterError(f"time must be strictly increasing, got {t} after {last}")
    ledger.b_past += p * ledger.dt
    ledger.history.append(LedgerRecord(t, u, p, p_linear, d))
    return ledger
