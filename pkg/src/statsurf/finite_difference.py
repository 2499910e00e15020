"""Central finite differences for validating analytic variations.

The convention used everywhere: perturb the model bodies to f + eps delta f,
measure a quantity at the fixed point, and form the centred difference.
``order_check`` runs it at eps = 1e-4 and 1e-5 and reports the observed
convergence order against the analytic value; quantities already at the
rounding floor are treated as converged, since the order is then noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .deformation import Deformation, perturbed_model
from .model import StatisticalModel, evaluate

EPS_COARSE = 1e-4
EPS_FINE = 1e-5
MIN_ORDER = 1.8


def central_difference(fun: Callable[[float], np.ndarray], eps: float) -> np.ndarray:
    return (np.asarray(fun(eps), dtype=float) - np.asarray(fun(-eps), dtype=float)) / (
        2.0 * eps
    )


def variation_fd(
    model: StatisticalModel,
    x,
    d: Deformation,
    quantity: Callable,
    eps: float,
) -> np.ndarray:
    """Centred difference of quantity(evaluation) under f -> f + eps delta f."""

    def at(e: float):
        return quantity(evaluate(perturbed_model(model, d, e), x))

    return central_difference(at, eps)


@dataclass(frozen=True)
class OrderCheck:
    ok: bool
    order: float  # observed convergence order (inf when at the floor)
    err_coarse: float
    err_fine: float
    floor: float


def order_check(
    analytic,
    fd_fun: Callable[[float], np.ndarray],
    floor: float = 1e-10,
) -> OrderCheck:
    """Observed order of the centred difference against the analytic value."""
    analytic = np.asarray(analytic, dtype=float)
    err_c = float(np.max(np.abs(np.asarray(fd_fun(EPS_COARSE)) - analytic)))
    err_f = float(np.max(np.abs(np.asarray(fd_fun(EPS_FINE)) - analytic)))
    if err_f <= floor:
        return OrderCheck(ok=True, order=float("inf"), err_coarse=err_c, err_fine=err_f, floor=floor)
    if err_c == 0.0:
        return OrderCheck(ok=True, order=float("inf"), err_coarse=err_c, err_fine=err_f, floor=floor)
    order = float(np.log(err_c / err_f) / np.log(EPS_COARSE / EPS_FINE))
    return OrderCheck(
        ok=order >= MIN_ORDER, order=order, err_coarse=err_c, err_fine=err_f, floor=floor
    )


def variation_order_check(
    model: StatisticalModel,
    x,
    d: Deformation,
    quantity: Callable,
    analytic,
    floor: float = 1e-10,
) -> OrderCheck:
    return order_check(
        analytic, lambda e: variation_fd(model, x, d, quantity, e), floor=floor
    )
