"""Weight families h(f) solving dh_a/df_b = delta_ab h_b - h_a h_b.

The general solution is h_a = e^(f_a - sigma_a) / (gamma + sum_b e^(f_b -
sigma_b)) with structural constants sigma (sigma_1 = 0) and gamma >= 0;
gamma = 0 recovers the Gibbs weights.  The PDE can also be integrated as an
ODE along straight segments in f-space, and the result is path independent,
which is what ``integrate_weight_pde`` plus composition exercises.
``fit_params`` inverts the closed form from one sample (f, h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InternalCheckError, PotentialInputError


@dataclass(frozen=True)
class PotentialParams:
    sigma: tuple[float, ...]  # per-member offsets, sigma[0] = 0
    gamma: float  # nonnegative background constant

    def __post_init__(self):
        if len(self.sigma) < 1:
            raise PotentialInputError("sigma needs at least one entry")
        if self.sigma[0] != 0.0:
            raise PotentialInputError("sigma is normalized so sigma_1 = 0")
        if not all(math.isfinite(s) for s in self.sigma):
            raise PotentialInputError("sigma entries must be finite")
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise PotentialInputError("gamma must be finite and nonnegative")

    @property
    def m(self) -> int:
        return len(self.sigma)


def gibbs_params(m: int) -> PotentialParams:
    return PotentialParams(sigma=(0.0,) * m, gamma=0.0)


def closed_form_weights(f, params: PotentialParams) -> np.ndarray:
    """h_a = e^(f_a - sigma_a) / (gamma + sum_b e^(f_b - sigma_b))."""
    f = np.asarray(f, dtype=float)
    if f.shape != (params.m,):
        raise PotentialInputError(f"f needs {params.m} entries, got {f.shape}")
    if not np.isfinite(f).all():
        raise PotentialInputError("f entries must be finite")
    sigma = np.asarray(params.sigma)
    t = f - sigma
    c = float(t.max())
    e = np.exp(t - c)
    denom = params.gamma * math.exp(-c) + float(e.sum())
    if not (math.isfinite(denom) and denom > 0.0):
        raise PotentialInputError("weight denominator underflowed to zero")
    return e / denom


def weight_jacobian(f, params: PotentialParams) -> np.ndarray:
    """Analytic dh_a/df_b = delta_ab h_b - h_a h_b."""
    h = closed_form_weights(f, params)
    return np.diag(h) - np.outer(h, h)


def log_weight_ratios(h) -> np.ndarray:
    """l_ab = ln h_a - ln h_b; the additive structure behind sigma."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0.0):
        raise PotentialInputError("weights must be positive to take log ratios")
    lh = np.log(h)
    return lh[:, None] - lh[None, :]


def integrate_weight_pde(f_start, f_end, h_start, steps: int) -> np.ndarray:
    """Transport weights along the straight segment f_start -> f_end.

    Fourth-order Runge-Kutta on dh/dt = (diag(h) - h h^T) (f_end - f_start);
    the right side is the defining PDE contracted with the segment velocity.
    """
    f_start = np.asarray(f_start, dtype=float)
    f_end = np.asarray(f_end, dtype=float)
    h = np.asarray(h_start, dtype=float).copy()
    if f_start.shape != f_end.shape or f_start.shape != h.shape:
        raise PotentialInputError("f_start, f_end and h_start must share a shape")
    if steps < 1:
        raise InputError("steps must be >= 1")
    if not (
        np.isfinite(f_start).all() and np.isfinite(f_end).all() and np.isfinite(h).all()
    ):
        raise PotentialInputError("inputs must be finite")
    df = f_end - f_start
    if not np.any(df):
        return h
    dt = 1.0 / steps

    def rhs(hv: np.ndarray) -> np.ndarray:
        return hv * df - hv * float(hv @ df)

    for _ in range(steps):
        k1 = rhs(h)
        k2 = rhs(h + 0.5 * dt * k1)
        k3 = rhs(h + 0.5 * dt * k2)
        k4 = rhs(h + dt * k3)
        h = h + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return h


def integrate_along(points, h_start, steps_per_leg: int) -> np.ndarray:
    """Compose straight-segment transports along a polyline in f-space."""
    pts = [np.asarray(p, dtype=float) for p in points]
    if len(pts) < 2:
        raise InputError("a path needs at least two points")
    h = np.asarray(h_start, dtype=float)
    for a, b in zip(pts[:-1], pts[1:]):
        h = integrate_weight_pde(a, b, h, steps_per_leg)
    return h


def fit_params(f, h) -> PotentialParams:
    """Recover (sigma, gamma) from one sample of f and its weights.

    Requires every h_a in (0, 1] and sum h <= 1; sigma_a = f_a - f_1 -
    ln(h_a/h_1) and gamma = (1 - sum h) e^(f_1) / h_1.  The closed form is
    re-evaluated as a guard.
    """
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    if f.shape != h.shape or f.ndim != 1:
        raise PotentialInputError("f and h must be vectors of equal length")
    if not (np.isfinite(f).all() and np.isfinite(h).all()):
        raise PotentialInputError("f and h must be finite")
    if np.any(h <= 0.0):
        raise PotentialInputError("every weight must be positive")
    total = float(h.sum())
    if total > 1.0 + 1e-10:
        raise PotentialInputError(f"weights sum to {total} > 1")
    sigma = f - f[0] - (np.log(h) - math.log(h[0]))
    sigma[0] = 0.0
    gamma = (1.0 - total) * math.exp(f[0]) / h[0]
    if gamma < 0.0:
        # rounding when sum h = 1; the structural constant is exactly zero
        gamma = 0.0
    params = PotentialParams(sigma=tuple(sigma), gamma=gamma)
    back = closed_form_weights(f, params)
    gap = float(np.max(np.abs(back - h)))
    if gap > 1e-12 * max(1.0, float(np.max(np.abs(h)))):
        raise InternalCheckError(f"fitted parameters reproduce h only to {gap}")
    return params
