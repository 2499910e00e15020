"""First-order deformations f -> f + delta f and their effects.

A deformation is one of: a constant vector (one number per family member),
per-member expression trees, or a coordinate shift x -> x + tau v, which
induces delta f_a = tau v . grad f_a.  Shifts on expression bodies are
resolved symbolically, so higher derivatives of delta f reuse the same
differentiation path as everything else.

Entropy variation is computed along three routes (mean shift, covariance,
bilinear form) that must agree; weight variations use the pairwise
double-sum form, which vanishes exactly on the kernel direction
delta f = const.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DeformationFormatError,
    DegeneratePointError,
    DomainEvaluationError,
    InputError,
    InternalCheckError,
    SingularPivotError,
)
from .expressions import Node, Num, Var, parse_expression
from .model import Evaluation, StatisticalModel, evaluate
from . import expressions as ex


@dataclass(frozen=True)
class CoordinateShift:
    v: tuple[float, ...]
    tau: float


@dataclass(frozen=True, eq=False)
class Deformation:
    values: tuple[float, ...] | None = None
    exprs: tuple[Node, ...] | None = None
    shift: CoordinateShift | None = None

    def __post_init__(self):
        given = sum(x is not None for x in (self.values, self.exprs, self.shift))
        if given != 1:
            raise DeformationFormatError(
                "deformation needs exactly one of: values, expressions, shift"
            )


def constant_deformation(values: Sequence[float]) -> Deformation:
    vals = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in vals):
        raise DeformationFormatError("delta_f entries must be finite")
    return Deformation(values=vals)


def expression_deformation(sources: Sequence[str | Node]) -> Deformation:
    trees = tuple(parse_expression(s) if isinstance(s, str) else s for s in sources)
    return Deformation(exprs=trees)


def shift_deformation(v: Sequence[float], tau: float) -> Deformation:
    vv = tuple(float(c) for c in v)
    if not (all(math.isfinite(c) for c in vv) and math.isfinite(tau)):
        raise DeformationFormatError("shift vector and tau must be finite")
    return Deformation(shift=CoordinateShift(v=vv, tau=float(tau)))


def parse_deformation(doc) -> Deformation:
    """Build a deformation from a JSON document (text or dict)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise DeformationFormatError(f"deformation document is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DeformationFormatError("deformation document must be a JSON object")
    has_df = "delta_f" in doc
    has_shift = "shift" in doc
    if has_df and has_shift:
        raise DeformationFormatError("give either delta_f or shift, not both")
    if has_df:
        df = doc["delta_f"]
        if not isinstance(df, list) or not df:
            raise DeformationFormatError("delta_f must be a non-empty list")
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in df):
            return constant_deformation(df)
        if all(isinstance(v, str) for v in df):
            return expression_deformation(df)
        raise DeformationFormatError("delta_f must be all numbers or all strings")
    if has_shift:
        sh = doc["shift"]
        if not isinstance(sh, dict) or "v" not in sh or "tau" not in sh:
            raise DeformationFormatError("shift needs fields v and tau")
        return shift_deformation(sh["v"], sh["tau"])
    raise DeformationFormatError("deformation document needs delta_f or shift")


@dataclass(frozen=True, eq=False)
class DeformationValues:
    """delta f and its derivatives at one point."""

    values: np.ndarray  # (m,)
    grad: np.ndarray  # (m, n)
    hess: np.ndarray  # (m, n, n)
    constant: bool


def _shift_trees(model: StatisticalModel, shift: CoordinateShift) -> tuple[Node, ...]:
    # delta f_a = tau * sum_i v_i d f_a / d x_i, built symbolically
    trees = []
    for a in range(model.m):
        acc: Node = Num(0.0)
        for i, vi in enumerate(shift.v):
            acc = ex._add(acc, ex._mul(Num(vi), model._grad_trees[a][i]))
        trees.append(ex._mul(Num(shift.tau), acc))
    return tuple(trees)


def resolve_deformation(d: Deformation, ev: Evaluation) -> DeformationValues:
    model = ev.model
    m, n = model.m, model.n
    if d.values is not None:
        if len(d.values) != m:
            raise DeformationFormatError(f"delta_f needs {m} entries, got {len(d.values)}")
        return DeformationValues(
            values=np.asarray(d.values, dtype=float),
            grad=np.zeros((m, n)),
            hess=np.zeros((m, n, n)),
            constant=True,
        )
    if d.shift is not None:
        if len(d.shift.v) != n:
            raise DeformationFormatError(
                f"shift vector needs {n} entries, got {len(d.shift.v)}"
            )
        if model.is_affine:
            vals = d.shift.tau * (model.A @ np.asarray(d.shift.v))
            return DeformationValues(
                values=vals,
                grad=np.zeros((m, n)),
                hess=np.zeros((m, n, n)),
                constant=True,
            )
        trees = _shift_trees(model, d.shift)
    else:
        trees = d.exprs
        if len(trees) != m:
            raise DeformationFormatError(f"delta_f needs {m} expressions, got {len(trees)}")
        for t in trees:
            if t.max_var() + 1 > n:
                raise DeformationFormatError(
                    f"deformation references x{t.max_var() + 1} but n = {n}"
                )
    values = np.empty(m)
    grad = np.empty((m, n))
    hess = np.empty((m, n, n))
    with np.errstate(all="ignore"):
        for a, tree in enumerate(trees):
            values[a] = tree.value(ev.x)
            for i in range(n):
                gi = tree.deriv(i)
                grad[a, i] = gi.value(ev.x)
                for k in range(n):
                    hess[a, i, k] = gi.deriv(k).value(ev.x)
    if not (np.isfinite(values).all() and np.isfinite(grad).all() and np.isfinite(hess).all()):
        raise DomainEvaluationError("deformation is non-finite at the requested point")
    return DeformationValues(values=values, grad=grad, hess=hess, constant=False)


def _as_values(d, ev: Evaluation) -> DeformationValues:
    if isinstance(d, DeformationValues):
        return d
    if isinstance(d, Deformation):
        return resolve_deformation(d, ev)
    return resolve_deformation(constant_deformation(np.asarray(d, dtype=float)), ev)


def zero_scale(ev: Evaluation, values: np.ndarray) -> float:
    """Shared tolerance scale max(1, |f|, |delta f|)^2."""
    return max(1.0, float(np.max(np.abs(ev.f))), float(np.max(np.abs(values)))) ** 2


def gibbs_kernel(w: np.ndarray) -> np.ndarray:
    """H = diag(w) - w w^T; kernel is spanned by (1, ..., 1)."""
    return np.diag(w) - np.outer(w, w)


def delta_weights(ev: Evaluation, d) -> np.ndarray:
    """delta w_a = w_a sum_b w_b (delta f_a - delta f_b).

    The pairwise form is exactly zero when delta f is constant.
    """
    dv = _as_values(d, ev)
    D = dv.values[:, None] - dv.values[None, :]
    return ev.w * (D @ ev.w)


class DeltaEntropy(NamedTuple):
    value: float
    via_mean: float  # mean of delta f minus variation of the mean
    via_covariance: float  # minus covariance of f with delta f
    via_bilinear: float  # -f^T H delta f


def delta_entropy(ev: Evaluation, d) -> DeltaEntropy:
    """First-order entropy change along delta f, three ways.

    The three routes are algebraically equal; disagreement beyond
    1e-12 * scale^2 raises InternalCheckError.
    """
    dv = _as_values(d, ev)
    df = dv.values
    w, f = ev.w, ev.f
    dw = delta_weights(ev, dv)
    mean_df = float(w @ df)
    dfbar = float(dw @ f + mean_df)
    via_mean = mean_df - dfbar
    D_f = f[:, None] - f[None, :]
    D_df = df[:, None] - df[None, :]
    via_cov = -0.5 * float(np.einsum("a,b,ab,ab->", w, w, D_f, D_df))
    via_bil = -float(f @ gibbs_kernel(w) @ df)
    tol = 1e-12 * zero_scale(ev, df)
    worst = max(
        abs(via_mean - via_cov), abs(via_mean - via_bil), abs(via_cov - via_bil)
    )
    if worst > tol:
        raise InternalCheckError(
            f"entropy variation routes disagree by {worst} (tol {tol})"
        )
    return DeltaEntropy(
        value=via_cov, via_mean=via_mean, via_covariance=via_cov, via_bilinear=via_bil
    )


@dataclass(frozen=True)
class ClassificationResult:
    label: str  # "increasing" | "decreasing" | "reversible"
    delta_S: float
    tol: float
    quadratic_residual: float  # mean of delta(f^2) minus delta of the squared mean
    balance_residual: float  # fbar E[delta f] - E[f delta f]


def classify(ev: Evaluation, d, tol: float | None = None) -> ClassificationResult:
    """Label a deformation by the sign of delta S at tolerance tol."""
    dv = _as_values(d, ev)
    df = dv.values
    if tol is None:
        tol = 1e-12 * zero_scale(ev, df)
    dS = delta_entropy(ev, dv).value
    if dS > tol:
        label = "increasing"
    elif dS < -tol:
        label = "decreasing"
    else:
        label = "reversible"
    w, f = ev.w, ev.f
    dw = delta_weights(ev, dv)
    mean_df = float(w @ df)
    dfbar = float(dw @ f + mean_df)
    quad = float(np.sum(w * 2.0 * f * df)) - 2.0 * ev.fbar * dfbar
    balance = ev.fbar * mean_df - float(w @ (f * df))
    return ClassificationResult(
        label=label,
        delta_S=dS,
        tol=tol,
        quadratic_residual=quad,
        balance_residual=balance,
    )


def solve_reversible_component(
    ev: Evaluation, partial: Sequence[float], pivot: int | None = None
) -> np.ndarray:
    """Complete delta f so that delta S = 0, solving for entry ``pivot``.

    ``partial`` lists the other m-1 entries in index order.  Singular when
    f_pivot coincides with the weighted mean.
    """
    m = ev.model.m
    if pivot is None:
        pivot = m - 1
    if not 0 <= pivot < m:
        raise InputError(f"pivot must be in [0, {m - 1}]")
    partial = np.asarray(partial, dtype=float)
    if partial.shape != (m - 1,):
        raise InputError(f"partial deformation needs {m - 1} entries")
    f, w = ev.f, ev.w
    fscale = max(1.0, float(np.max(np.abs(f))))
    gap = f[pivot] - ev.fbar
    if abs(gap) <= 1e-12 * fscale or w[pivot] == 0.0:
        raise SingularPivotError(
            "f at the pivot equals the weighted mean; delta S does not depend on it"
        )
    others = [a for a in range(m) if a != pivot]
    df = np.zeros(m)
    df[others] = partial
    numer = ev.fbar * float(w[others] @ partial) - float(
        (w[others] * f[others]) @ partial
    )
    df[pivot] = numer / (w[pivot] * gap)
    dS = delta_entropy(ev, constant_deformation(df)).value
    if abs(dS) > 1e-12 * zero_scale(ev, df):
        raise InternalCheckError(f"reversible completion left delta S = {dS}")
    return df


def moment_correlation(ev: Evaluation, d, u: int) -> float:
    """Correlation of the u-th power of f with delta f under the weights."""
    if u < 1:
        raise InputError("moment order u must be >= 1")
    dv = _as_values(d, ev)
    fu = ev.f**u
    D_fu = fu[:, None] - fu[None, :]
    D_df = dv.values[:, None] - dv.values[None, :]
    return 0.5 * float(np.einsum("a,b,ab,ab->", ev.w, ev.w, D_fu, D_df))


@dataclass(frozen=True)
class UncorrelationReport:
    uncorrelated: bool
    witness_u: int | None
    correlations: np.ndarray  # (m,) for u = 1..m
    tolerances: np.ndarray  # (m,)


def total_uncorrelation_test(
    ev: Evaluation, d, tol_factor: float = 1e-10
) -> UncorrelationReport:
    """Check the first m moment correlations of f against delta f.

    With pairwise-distinct f values, all of them vanish only when delta f
    is constant; the first failing moment order is reported as a witness.
    """
    dv = _as_values(d, ev)
    f = ev.f
    fscale = max(1.0, float(np.max(np.abs(f))))
    if ev.model.m > 1:
        diffs = np.abs(f[:, None] - f[None, :])[
            ~np.eye(ev.model.m, dtype=bool)
        ]
        if float(diffs.min()) <= 1e-8 * fscale:
            raise DegeneratePointError(
                "two f values coincide at this point; canonicalize the model "
                "or move the point"
            )
    dscale = max(1.0, float(np.max(np.abs(dv.values))))
    m = ev.model.m
    corrs = np.array([moment_correlation(ev, dv, u) for u in range(1, m + 1)])
    tols = np.array([tol_factor * max(1.0, fscale**u) * dscale for u in range(1, m + 1)])
    bad = np.nonzero(np.abs(corrs) > tols)[0]
    witness = int(bad[0]) + 1 if bad.size else None
    return UncorrelationReport(
        uncorrelated=witness is None,
        witness_u=witness,
        correlations=corrs,
        tolerances=tols,
    )


def _adjugate(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    if n == 1:
        return np.ones((1, 1))
    adj = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(P, i, axis=0), j, axis=1)
            adj[j, i] = (-1.0) ** (i + j) * np.linalg.det(minor)
    return adj


@dataclass(frozen=True, eq=False)
class VariationReport:
    delta_f: np.ndarray  # (m,) values at the point
    delta_w: np.ndarray  # (m,)
    delta_S: float
    classification: str
    delta_g: np.ndarray  # (n, n)
    delta_det_g: float  # = trace(delta_g)
    delta_hess_F: np.ndarray  # (n, n)
    delta_omega: np.ndarray  # (n, n)
    delta_det_hess: float
    delta_K: float
    delta_riemann: np.ndarray  # (n, n, n, n)
    delta_scalar_curvature: float
    hessian_singular: bool
    as_printed: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "delta_f": self.delta_f.tolist(),
            "delta_w": self.delta_w.tolist(),
            "delta_S": self.delta_S,
            "classification": self.classification,
            "delta_g": self.delta_g.tolist(),
            "delta_det_g": self.delta_det_g,
            "delta_hess_F": self.delta_hess_F.tolist(),
            "delta_omega": self.delta_omega.tolist(),
            "delta_det_hess": self.delta_det_hess,
            "delta_K": self.delta_K,
            "delta_riemann": self.delta_riemann.tolist(),
            "delta_scalar_curvature": self.delta_scalar_curvature,
            "hessian_singular": self.hessian_singular,
            "as_printed": self.as_printed,
            "tol": self.tol,
        }


def delta_geometry(ev: Evaluation, d, as_printed: bool = False) -> VariationReport:
    """First-order variation of the induced geometry along a deformation.

    ``as_printed=True`` reproduces the uncorrected coefficient (n+2) in the
    Gauss-curvature variation instead of the exponent-rule (n+2)/2.
    """
    dv = _as_values(d, ev)
    n = ev.model.n
    w, f, grad, hess = ev.w, ev.f, ev.grad, ev.hess
    fb = ev.fbar_i
    dg_scalar = 1.0 + float(fb @ fb)

    dw = delta_weights(ev, dv)
    dS = delta_entropy(ev, dv)
    cls = classify(ev, dv)

    dfbar_i = dw @ grad + w @ dv.grad
    second = hess + np.einsum("ai,ak->aik", grad, grad)
    dsecond_w = np.einsum("a,aik->ik", dw, second)
    dsecond_f = (
        np.einsum("a,aik->ik", w, dv.hess)
        + np.einsum("a,ai,ak->ik", w, dv.grad, grad)
        + np.einsum("a,ai,ak->ik", w, grad, dv.grad)
    )
    dfbar_ik = dsecond_w + dsecond_f

    delta_g = np.outer(dfbar_i, fb) + np.outer(fb, dfbar_i)
    tr_dg = float(np.trace(delta_g))

    P = ev.fbar_ik - np.outer(fb, fb)
    dP = dfbar_ik - delta_g

    root = math.sqrt(dg_scalar)
    Om = P / root
    dOm = dP / root - 0.5 * P * tr_dg / dg_scalar**1.5

    det_P = float(np.linalg.det(P))
    adj = _adjugate(P)
    d_det_P = float(np.einsum("ij,ji->", adj, dP))
    p_scale = max(1.0, float(np.max(np.abs(P)))) ** n
    singular = abs(det_P) <= 1e-12 * p_scale
    if not singular:
        d_det_P_inv = det_P * float(np.trace(np.linalg.solve(P, dP)))
        gap = abs(d_det_P - d_det_P_inv)
        if gap > 1e-9 * max(1.0, abs(d_det_P)):
            raise InternalCheckError(
                f"determinant variation paths disagree by {gap}"
            )

    coef = (n + 2.0) if as_printed else (n + 2.0) / 2.0
    delta_K = (
        d_det_P / dg_scalar ** ((n + 2.0) / 2.0)
        - coef * det_P * tr_dg / dg_scalar ** ((n + 4.0) / 2.0)
    )

    pair = np.einsum("il,kj->iklj", P, P) - np.einsum("kl,ij->iklj", P, P)
    dpair = (
        np.einsum("il,kj->iklj", dP, P)
        + np.einsum("il,kj->iklj", P, dP)
        - np.einsum("kl,ij->iklj", dP, P)
        - np.einsum("kl,ij->iklj", P, dP)
    )
    delta_R = dpair / dg_scalar - pair * tr_dg / dg_scalar**2

    tr_om = float(np.trace(Om))
    tr_dom = float(np.trace(dOm))
    om2 = Om @ Om
    a1 = float(fb @ om2 @ fb)
    a2 = float(fb @ Om @ fb)
    da2 = float(dfbar_i @ Om @ fb + fb @ dOm @ fb + fb @ Om @ dfbar_i)
    da1 = float(
        dfbar_i @ om2 @ fb + fb @ (dOm @ Om + Om @ dOm) @ fb + fb @ om2 @ dfbar_i
    )
    delta_scalar = (
        2.0 * tr_om * tr_dom
        - 2.0 * float(np.trace(Om @ dOm))
        + 2.0 * (da1 - tr_dom * a2 - tr_om * da2) / dg_scalar
        - 2.0 * (a1 - tr_om * a2) * tr_dg / dg_scalar**2
    )

    return VariationReport(
        delta_f=dv.values,
        delta_w=dw,
        delta_S=dS.value,
        classification=cls.label,
        delta_g=delta_g,
        delta_det_g=tr_dg,
        delta_hess_F=dP,
        delta_omega=dOm,
        delta_det_hess=d_det_P,
        delta_K=delta_K,
        delta_riemann=delta_R,
        delta_scalar_curvature=delta_scalar,
        hessian_singular=singular,
        as_printed=as_printed,
        tol=cls.tol,
    )


def variation_report(
    model: StatisticalModel, x, d: Deformation, as_printed: bool = False
) -> VariationReport:
    return delta_geometry(evaluate(model, x), d, as_printed=as_printed)


def perturbed_model(model: StatisticalModel, d: Deformation, eps: float) -> StatisticalModel:
    """The model with bodies f_a + eps * delta f_a (used by finite differences)."""
    if d.values is not None:
        if len(d.values) != model.m:
            raise DeformationFormatError(
                f"delta_f needs {model.m} entries, got {len(d.values)}"
            )
        vals = np.asarray(d.values, dtype=float)
        if model.is_affine:
            return StatisticalModel(
                n=model.n, m=model.m, kind="affine", A=model.A, b=model.b + eps * vals
            )
        trees = tuple(
            ex._add(t, Num(eps * float(v))) for t, v in zip(model.exprs, vals)
        )
        return StatisticalModel(n=model.n, m=model.m, kind="expr", exprs=trees)
    if d.shift is not None:
        if model.is_affine:
            vals = d.shift.tau * (model.A @ np.asarray(d.shift.v))
            return StatisticalModel(
                n=model.n, m=model.m, kind="affine", A=model.A, b=model.b + eps * vals
            )
        dtrees = _shift_trees(model, d.shift)
    else:
        dtrees = d.exprs
    base = model.exprs if not model.is_affine else tuple(
        _affine_row_tree(model, a) for a in range(model.m)
    )
    trees = tuple(
        ex._add(t, ex._mul(Num(eps), dt)) for t, dt in zip(base, dtrees)
    )
    return StatisticalModel(n=model.n, m=model.m, kind="expr", exprs=trees)


def _affine_row_tree(model: StatisticalModel, a: int) -> Node:
    acc: Node = Num(float(model.b[a]))
    for i in range(model.n):
        acc = ex._add(acc, ex._mul(Num(float(model.A[a, i])), Var(i)))
    return acc


# Affine specializations of the coordinate-shift formulas.  These are the
# literal closed forms, kept separate from the general machinery so the two
# can be compared.


def shift_delta_f(model: StatisticalModel, v, tau: float) -> np.ndarray:
    if not model.is_affine:
        raise InputError("shift_delta_f applies to affine models")
    return tau * (model.A @ np.asarray(v, dtype=float))


def shift_delta_weights(model: StatisticalModel, x, v, tau: float) -> np.ndarray:
    if not model.is_affine:
        raise InputError("shift_delta_weights applies to affine models")
    ev = evaluate(model, x)
    Av = model.A @ np.asarray(v, dtype=float)
    return tau * ev.w * (Av - float(ev.w @ Av))


def shift_delta_entropy(model: StatisticalModel, x, v, tau: float) -> float:
    if not model.is_affine:
        raise InputError("shift_delta_entropy applies to affine models")
    ev = evaluate(model, x)
    x = np.asarray(x, dtype=float)
    Av = model.A @ np.asarray(v, dtype=float)
    Ax = model.A @ x
    mean_f = float(ev.w @ model.b) + float(ev.w @ Ax)
    return tau * mean_f * float(ev.w @ Av) - tau * float(
        ev.w @ (model.b * Av) + ev.w @ (Ax * Av)
    )


def superideal_delta_entropy(x, v, tau: float) -> float:
    """Shift variation for the identity body f_a = x_a."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise InputError("x and v must have the same length")
    e = np.exp(x - x.max())
    w = e / e.sum()
    return tau * float(w @ x) * float(w @ v) - tau * float(w @ (x * v))
