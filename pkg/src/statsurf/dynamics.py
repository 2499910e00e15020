"""Replicator dynamics on the Gibbs weights and the induced graph view.

One replicator step multiplies each weight by its fitness and renormalizes.
Starting from the Gibbs weights of a model at a point with fitness
f_a(x) + M, the first step reproduces the exponent-tilted distribution
e^f f / sum e^f f when M = 0.  Stationarity of the entropy under a
deformation is equivalent to two expectation matches, which are checked
through independent numerical routes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .deformation import delta_entropy, zero_scale, _as_values
from .errors import GraphBalanceError, InputError, InternalCheckError, ZeroMeanFitnessError
from .model import Evaluation, StatisticalModel, evaluate


class NegativeFitnessWarning(UserWarning):
    """Fitness with negative entries: updated weights may leave the simplex."""


def replicator_step(w, fitness) -> np.ndarray:
    """w'_a = w_a fitness_a / sum_b fitness_b w_b, renormalized."""
    w = np.asarray(w, dtype=float)
    fitness = np.asarray(fitness, dtype=float)
    if w.shape != fitness.shape:
        raise InputError("weights and fitness must have the same length")
    if not (np.isfinite(w).all() and np.isfinite(fitness).all()):
        raise InputError("weights and fitness must be finite")
    mean = float(fitness @ w)
    scale = max(1.0, float(np.max(np.abs(fitness))))
    if abs(mean) <= 1e-300 * scale or mean == 0.0:
        raise ZeroMeanFitnessError("mean fitness vanishes; replicator step undefined")
    if np.any(fitness < 0.0):
        warnings.warn(
            "negative fitness entries; positivity of the update is not guaranteed",
            NegativeFitnessWarning,
            stacklevel=2,
        )
    ratio = fitness / mean
    w_next = w * ratio
    increment = w * (ratio - float(ratio @ w))
    gap = float(np.max(np.abs((w + increment) - w_next)))
    if gap > 1e-14 * max(1.0, float(np.max(np.abs(w_next)))):
        raise InternalCheckError(f"replicator increment form deviates by {gap}")
    total = float(w_next.sum())
    if total == 0.0:
        raise ZeroMeanFitnessError("replicator step produced an all-zero weight vector")
    return w_next / total


@dataclass(frozen=True, eq=False)
class WeightTrajectory:
    weights: np.ndarray  # (T+1, m)
    fitness: np.ndarray  # (T+1, m) fitness in effect at each step
    entropies: np.ndarray  # (T+1,)
    shift: float  # additive constant M applied to the exponents


def _entropy(w: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0.0, w * np.log(w), 0.0)
    return float(-terms.sum())


def replicator_orbit(
    model: StatisticalModel,
    x,
    steps: int,
    shift: float | str | None = "auto",
    fitness_update: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> WeightTrajectory:
    """Iterate the replicator map from the Gibbs weights at x.

    Fitness is f(x) + M with static exponents by default; ``shift="auto"``
    picks M = 1 - min f so every fitness entry is positive, ``shift=None``
    or 0 uses the raw exponents.  ``fitness_update(fitness, w)`` may evolve
    the fitness between steps.
    """
    if steps < 1:
        raise InputError("steps must be >= 1")
    ev = evaluate(model, x)
    if shift == "auto":
        M = 1.0 - float(ev.f.min())
    elif shift is None:
        M = 0.0
    else:
        M = float(shift)
    fitness = ev.f + M
    weights = np.empty((steps + 1, model.m))
    fits = np.empty((steps + 1, model.m))
    entropies = np.empty(steps + 1)
    weights[0] = ev.w
    fits[0] = fitness
    entropies[0] = _entropy(ev.w)
    w = ev.w
    for t in range(steps):
        w = replicator_step(w, fitness)
        if fitness_update is not None:
            fitness = np.asarray(fitness_update(fitness, w), dtype=float)
        weights[t + 1] = w
        fits[t + 1] = fitness
        entropies[t + 1] = _entropy(w)
    return WeightTrajectory(weights=weights, fitness=fits, entropies=entropies, shift=M)


@dataclass(frozen=True, eq=False)
class StationarityReport:
    delta_S: float
    delta_S_zero: bool
    fitness_expectation_matches: bool | None  # <df>_{w1} = <df>_w
    tilted_expectation_matches: bool | None  # <f>_{w-hat} = <f>_w
    fitness_gap: float | None
    tilted_gap: float | None
    mean_f: float
    mean_df: float
    tol: float

    @property
    def all_equivalent(self) -> bool:
        checks = [
            self.delta_S_zero,
            self.fitness_expectation_matches,
            self.tilted_expectation_matches,
        ]
        defined = [c for c in checks if c is not None]
        return all(defined) or not any(defined)


def stationarity_equivalence(
    ev: Evaluation,
    d,
    tol_factor: float = 1e-10,
    denom_tol: float = 1e-8,
) -> StationarityReport:
    """Three equivalent readings of delta S = 0 at one point.

    Every route is rescaled to delta-S units (the expectation gaps are
    multiplied by their own denominators) so all booleans share one
    tolerance.  A route whose denominator is too small is reported None.
    """
    dv = _as_values(d, ev)
    df = dv.values
    w, f = ev.w, ev.f
    tol = tol_factor * zero_scale(ev, df)
    dS = delta_entropy(ev, dv).value

    mean_f = float(w @ f)
    mean_df = float(w @ df)
    fscale = max(1.0, float(np.max(np.abs(f))))
    dscale = max(1.0, float(np.max(np.abs(df))))

    fit_matches = None
    fit_gap = None
    if abs(mean_f) > denom_tol * fscale:
        w1 = w * f / mean_f  # e^f f / sum e^f f, computed through the weights
        fit_gap = float(w1 @ df) - mean_df
        fit_matches = abs(fit_gap * mean_f) <= tol

    tilt_matches = None
    tilt_gap = None
    if abs(mean_df) > denom_tol * dscale:
        w_hat = w * df / mean_df  # e^f df / sum e^f df
        tilt_gap = float(w_hat @ f) - mean_f
        tilt_matches = abs(tilt_gap * mean_df) <= tol

    return StationarityReport(
        delta_S=dS,
        delta_S_zero=abs(dS) <= tol,
        fitness_expectation_matches=fit_matches,
        tilted_expectation_matches=tilt_matches,
        fitness_gap=fit_gap,
        tilted_gap=tilt_gap,
        mean_f=mean_f,
        mean_df=mean_df,
        tol=tol,
    )


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Nonnegative edge weights with per-node weights they must balance."""

    edge_weights: np.ndarray  # (m, m)
    node_weights: np.ndarray  # (m,)

    def __post_init__(self):
        E = np.asarray(self.edge_weights, dtype=float)
        v = np.asarray(self.node_weights, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise InputError("edge weights must be a square matrix")
        if v.shape != (E.shape[0],):
            raise InputError("node weights must match the matrix size")
        if not (np.isfinite(E).all() and np.isfinite(v).all()):
            raise InputError("graph weights must be finite")
        if np.any(E < 0.0):
            raise InputError("edge weights must be nonnegative")
        object.__setattr__(self, "edge_weights", E)
        object.__setattr__(self, "node_weights", v)

    @property
    def m(self) -> int:
        return self.edge_weights.shape[0]

    def balance_residual(self) -> np.ndarray:
        """node weight minus the row sum of edge weights, per node."""
        return self.node_weights - self.edge_weights.sum(axis=1)


def product_graph(node_weights) -> WeightedGraph:
    """Joint weights w_ab = w_a w_b; balanced whenever sum w = 1."""
    v = np.asarray(node_weights, dtype=float)
    return WeightedGraph(edge_weights=np.outer(v, v), node_weights=v)


def laplacian(graph: WeightedGraph, balance_tol: float = 1e-10) -> np.ndarray:
    """L = D - W with degrees D_a = sum_b w_ab; rows sum to zero."""
    resid = float(np.max(np.abs(graph.balance_residual())))
    if resid > balance_tol:
        raise GraphBalanceError(
            f"node weights do not balance edge sums (residual {resid})"
        )
    D = np.diag(graph.edge_weights.sum(axis=1))
    return D - graph.edge_weights
