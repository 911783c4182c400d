"""Projected unscented Kalman filter over the piecewise-affine model.

The dynamics seen by the filter are affine for any fixed applied flow, so the
unscented transform is exact here and the filter coincides with a Kalman
filter on each branch; the sigma-point machinery keeps the implementation
independent of that structure.  State bounds are enforced by iterated
perfect-measurement updates (projection).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError

_PERFECT_MEAS_VAR = 1e-12


@dataclass(frozen=True)
class GaussianEstimate:
    mean: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class UkfConfig:
    """Sigma-point spread, noise variances and the sensor selection matrix."""

    kappa: float = 5.0
    process_var: float = 0.05**2
    measurement_var: float = 0.01**2
    C: np.ndarray | None = None

    @staticmethod
    def sensor_matrix(nu: int) -> np.ndarray:
        """Unit selectors of warm borehole, warm far cell, cold borehole, cold far cell."""
        n = 2 * (nu + 1)
        C = np.zeros((4, n))
        for row, idx in enumerate((0, nu, nu + 1, 2 * nu + 1)):
            C[row, idx] = 1.0
        return C

    @classmethod
    def for_grid(cls, nu: int, kappa: float = 5.0, process_var: float = 0.05**2,
                 measurement_var: float = 0.01**2) -> "UkfConfig":
        return cls(kappa, process_var, measurement_var, cls.sensor_matrix(nu))


@dataclass(frozen=True)
class PredictedMoments:
    mean: np.ndarray
    cov: np.ndarray
    y_hat: np.ndarray
    cov_xy: np.ndarray
    cov_yy: np.ndarray


def repair_psd(cov: np.ndarray, jitter: float = 1e-9) -> np.ndarray:
    """Symmetrize and, if needed, push tiny negative eigenvalues back to zero."""
    cov = 0.5 * (cov + cov.T)
    eigmin = float(np.linalg.eigvalsh(cov).min())
    if eigmin < 0.0:
        cov = cov + (jitter - eigmin) * np.eye(cov.shape[0])
    return cov


def sigma_points(est: GaussianEstimate, kappa: float
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric Julier sigma set: (2n+1, n) points and their weights."""
    n = est.n
    scale = n + kappa
    cov = 0.5 * (est.cov + est.cov.T)
    try:
        L = np.linalg.cholesky(scale * cov)
    except np.linalg.LinAlgError:
        # Singular or slightly indefinite: use an eigenvalue square root.
        w, V = np.linalg.eigh(scale * repair_psd(cov, jitter=0.0))
        L = V * np.sqrt(np.clip(w, 0.0, None))
    points = np.empty((2 * n + 1, n))
    points[0] = est.mean
    points[1:n + 1] = est.mean + L.T
    points[n + 1:] = est.mean - L.T
    weights = np.full(2 * n + 1, 0.5 / scale)
    weights[0] = kappa / scale
    return points, weights


def predict(est: GaussianEstimate, step_fn: Callable[[np.ndarray], np.ndarray],
            cfg: UkfConfig) -> PredictedMoments:
    """Propagate the estimate through one model step and form output moments.

    ``step_fn`` maps a single state vector to its successor (the applied input
    is baked in by the caller, so every sigma point traverses the same branch).
    """
    if cfg.C is None:
        raise ParameterError("UkfConfig.C must be set; use UkfConfig.for_grid")
    points, weights = sigma_points(est, cfg.kappa)
    propagated = np.stack([step_fn(p) for p in points])
    mean = weights @ propagated
    centered = propagated - mean
    cov = (centered.T * weights) @ centered
    cov = repair_psd(cov + cfg.process_var * np.eye(est.n), jitter=0.0)
    y_hat = cfg.C @ mean
    cov_xy = cov @ cfg.C.T
    cov_yy = cfg.C @ cov @ cfg.C.T + cfg.measurement_var * np.eye(cfg.C.shape[0])
    return PredictedMoments(mean, cov, y_hat, cov_xy, cov_yy)


def update(predicted: PredictedMoments, y: np.ndarray) -> GaussianEstimate:
    """Measurement update with gain W = cov_xy cov_yy^{-1}."""
    y = np.asarray(y, dtype=float)
    gain = np.linalg.solve(predicted.cov_yy, predicted.cov_xy.T).T
    mean = predicted.mean + gain @ (y - predicted.y_hat)
    cov = predicted.cov - gain @ predicted.cov_yy @ gain.T
    return GaussianEstimate(mean, repair_psd(cov, jitter=0.0))


def project(est: GaussianEstimate, x_min: np.ndarray, x_max: np.ndarray,
            max_passes: int = 10) -> GaussianEstimate:
    """Move bound-violating mean components onto their bounds.

    Each violated component is treated as a perfect measurement at the bound,
    so correlated components shift along the covariance.  Falls back to plain
    clipping if the pass cap is exhausted.
    """
    x_min = np.asarray(x_min, dtype=float)
    x_max = np.asarray(x_max, dtype=float)
    if np.any(x_min > x_max):
        raise ParameterError("state bounds must be ordered")
    mean = est.mean.copy()
    cov = est.cov.copy()
    for _ in range(max_passes):
        below = mean < x_min - 1e-12
        above = mean > x_max + 1e-12
        if not (below.any() or above.any()):
            return GaussianEstimate(mean, cov)
        targets = np.where(below, x_min, x_max)
        for j in np.nonzero(below | above)[0]:
            s = cov[j, j] + _PERFECT_MEAS_VAR
            k = cov[:, j] / s
            mean = mean + k * (targets[j] - mean[j])
            cov = repair_psd(cov - np.outer(k, cov[j, :]), jitter=0.0)
    mean = np.clip(mean, x_min, x_max)
    return GaussianEstimate(mean, cov)
