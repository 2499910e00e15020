"""Statistical models: finite families f_1..f_m over R^n.

A model is either affine (f = A x + b, rows of A are the exponents'
gradients) or a list of expression trees.  ``evaluate`` produces every
pointwise quantity downstream code needs: values, gradients, Hessians,
the aggregation F = ln sum exp f, Gibbs weights, entropy and the
weight-averaged first and second derivative tensors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainEvaluationError, InputError, InternalCheckError, ModelFormatError
from .expressions import Add, Node, Num, gradient, hessian, parse_expression


@dataclass(frozen=True, eq=False)
class StatisticalModel:
    n: int
    m: int
    kind: str  # "affine" | "expr"
    A: np.ndarray | None = None  # (m, n)
    b: np.ndarray | None = None  # (m,)
    exprs: tuple[Node, ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ModelFormatError("model needs n >= 1 and m >= 1")
        if self.kind == "affine":
            A = np.asarray(self.A, dtype=float)
            b = (
                np.zeros(self.m)
                if self.b is None
                else np.asarray(self.b, dtype=float)
            )
            if A.shape != (self.m, self.n):
                raise ModelFormatError(
                    f"A must have shape ({self.m}, {self.n}), got {A.shape}"
                )
            if b.shape != (self.m,):
                raise ModelFormatError(f"b must have shape ({self.m},), got {b.shape}")
            if not (np.isfinite(A).all() and np.isfinite(b).all()):
                raise ModelFormatError("A and b must be finite")
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)
        elif self.kind == "expr":
            if self.exprs is None or len(self.exprs) != self.m:
                raise ModelFormatError("expression model needs m expression trees")
            for t in self.exprs:
                if t.max_var() + 1 > self.n:
                    raise ModelFormatError(
                        f"expression references x{t.max_var() + 1} but n = {self.n}"
                    )
            grads = tuple(gradient(t, self.n) for t in self.exprs)
            hesses = tuple(hessian(t, self.n) for t in self.exprs)
            object.__setattr__(self, "_grad_trees", grads)
            object.__setattr__(self, "_hess_trees", hesses)
        else:
            raise ModelFormatError(f"unknown model kind {self.kind!r}")

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    @property
    def is_linear(self) -> bool:
        """Affine with zero constants; the graphs pass near the origin lift."""
        return self.is_affine and bool(np.all(self.b == 0.0))


def affine_model(A, b=None) -> StatisticalModel:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    return StatisticalModel(n=n, m=m, kind="affine", A=A, b=b)


def expr_model(sources: Sequence[str | Node], n: int | None = None) -> StatisticalModel:
    trees = tuple(
        parse_expression(s) if isinstance(s, str) else s for s in sources
    )
    if not trees:
        raise ModelFormatError("expression model needs at least one expression")
    inferred = max(t.max_var() for t in trees) + 1
    return StatisticalModel(
        n=n if n is not None else max(inferred, 1),
        m=len(trees),
        kind="expr",
        exprs=trees,
    )


def parse_model(doc) -> StatisticalModel:
    """Build a model from a JSON document (text or already-parsed dict)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"model document is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    kind = doc.get("kind")
    if kind == "affine":
        if "A" not in doc:
            raise ModelFormatError("affine model needs a matrix A")
        try:
            A = np.asarray(doc["A"], dtype=float)
        except (TypeError, ValueError) as e:
            raise ModelFormatError(f"A is not a numeric matrix: {e}") from e
        if A.ndim != 2:
            raise ModelFormatError("A must be a list of equally sized rows")
        m, n = A.shape
        if "n" in doc and doc["n"] != n:
            raise ModelFormatError(f"declared n = {doc['n']} but A has {n} columns")
        if "m" in doc and doc["m"] != m:
            raise ModelFormatError(f"declared m = {doc['m']} but A has {m} rows")
        b = doc.get("b")
        if b is not None:
            try:
                b = np.asarray(b, dtype=float)
            except (TypeError, ValueError) as e:
                raise ModelFormatError(f"b is not a numeric vector: {e}") from e
        return StatisticalModel(n=n, m=m, kind="affine", A=A, b=b)
    if kind == "expr":
        f = doc.get("f")
        if not isinstance(f, list) or not all(isinstance(s, str) for s in f):
            raise ModelFormatError("expression model needs f: list of strings")
        model = expr_model(f, n=doc.get("n"))
        if "m" in doc and doc["m"] != model.m:
            raise ModelFormatError(f"declared m = {doc['m']} but f has {model.m} entries")
        return model
    raise ModelFormatError("model kind must be 'affine' or 'expr'")


def model_to_doc(model: StatisticalModel) -> dict:
    if model.is_affine:
        return {
            "n": model.n,
            "m": model.m,
            "kind": "affine",
            "A": model.A.tolist(),
            "b": model.b.tolist(),
        }
    return {
        "n": model.n,
        "m": model.m,
        "kind": "expr",
        "f": [t.text() for t in model.exprs],
    }


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Everything measured at one point of one model."""

    model: StatisticalModel
    x: np.ndarray  # (n,)
    f: np.ndarray  # (m,)
    grad: np.ndarray  # (m, n) rows are gradients of f_alpha
    hess: np.ndarray  # (m, n, n)
    F: float
    w: np.ndarray  # (m,) Gibbs weights
    log_w: np.ndarray  # (m,)
    S: float  # -sum w ln w
    fbar: float  # sum w_a f_a
    fbar_i: np.ndarray  # (n,) = grad F
    fbar_ik: np.ndarray  # (n, n) weighted second moments of derivatives


def evaluate(model: StatisticalModel, x) -> Evaluation:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (model.n,):
        raise InputError(f"point must have {model.n} coordinates, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise InputError("point coordinates must be finite")
    if model.is_affine:
        f = model.A @ x + model.b
        grad = model.A.copy()
        hess = np.zeros((model.m, model.n, model.n))
    else:
        f = np.empty(model.m)
        grad = np.empty((model.m, model.n))
        hess = np.empty((model.m, model.n, model.n))
        with np.errstate(all="ignore"):
            for a, tree in enumerate(model.exprs):
                f[a] = tree.value(x)
                for i in range(model.n):
                    grad[a, i] = model._grad_trees[a][i].value(x)
                    for k in range(model.n):
                        hess[a, i, k] = model._hess_trees[a][i][k].value(x)
    bad = ~(
        np.isfinite(f)
        & np.isfinite(grad).all(axis=1)
        & np.isfinite(hess).all(axis=(1, 2))
    )
    if bad.any():
        which = ", ".join(str(a + 1) for a in np.nonzero(bad)[0])
        raise DomainEvaluationError(
            f"f_{{{which}}} or a derivative is non-finite at the requested point"
        )

    c = float(f.max())
    e = np.exp(f - c)
    Z = float(e.sum())
    w = e / Z
    F = c + math.log(Z)
    log_w = f - F
    S = float(-np.sum(np.where(w > 0.0, w * log_w, 0.0)))
    fbar = float(w @ f)
    fbar_i = w @ grad
    fbar_ik = np.einsum("a,aik->ik", w, hess) + np.einsum("a,ai,ak->ik", w, grad, grad)
    return Evaluation(
        model=model,
        x=x,
        f=f,
        grad=grad,
        hess=hess,
        F=F,
        w=w,
        log_w=log_w,
        S=S,
        fbar=fbar,
        fbar_i=fbar_i,
        fbar_ik=fbar_ik,
    )


def canonicalize(model: StatisticalModel, x0=None) -> StatisticalModel:
    """Merge identical body rows; k copies of f become f + ln k.

    The aggregation F is unchanged; this is checked at the probe point x0
    (origin by default).
    """
    merged: StatisticalModel
    if model.is_affine:
        groups: dict[tuple, int] = {}
        for a in range(model.m):
            key = (tuple(model.A[a]), float(model.b[a]))
            groups[key] = groups.get(key, 0) + 1
        rows = [list(key[0]) for key in groups]
        consts = [key[1] + math.log(k) for key, k in groups.items()]
        merged = StatisticalModel(
            n=model.n,
            m=len(rows),
            kind="affine",
            A=np.asarray(rows, dtype=float),
            b=np.asarray(consts, dtype=float),
        )
    else:
        tgroups: dict[Node, int] = {}
        for t in model.exprs:
            tgroups[t] = tgroups.get(t, 0) + 1
        trees = tuple(
            t if k == 1 else Add(t, Num(math.log(k))) for t, k in tgroups.items()
        )
        merged = StatisticalModel(n=model.n, m=len(trees), kind="expr", exprs=trees)

    probe = np.zeros(model.n) if x0 is None else np.asarray(x0, dtype=float)
    F_before = evaluate(model, probe).F
    F_after = evaluate(merged, probe).F
    if abs(F_before - F_after) > 1e-12 * max(1.0, abs(F_before)):
        raise InternalCheckError(
            f"canonicalize changed F at the probe point: {F_before} -> {F_after}"
        )
    return merged


def tropical_sum(x: float, y: float, eps: float) -> float:
    """Smoothed maximum eps * ln(e^(x/eps) + e^(y/eps)); tends to max(x, y)."""
    if not eps > 0.0:
        raise InputError("eps must be positive")
    c = max(x, y)
    return c + eps * math.log(math.exp((x - c) / eps) + math.exp((y - c) / eps))


def batch_f(model: StatisticalModel, X: np.ndarray) -> np.ndarray:
    """Values f_alpha on a batch of points; X is (B, n), result (m, B)."""
    X = np.asarray(X, dtype=float)
    B = X.shape[0]
    if model.is_affine:
        return model.A @ X.T + model.b[:, None]
    XT = X.T
    rows = np.empty((model.m, B))
    with np.errstate(all="ignore"):
        for a, tree in enumerate(model.exprs):
            rows[a] = np.broadcast_to(np.asarray(tree.value(XT), dtype=float), (B,))
    return rows


def batch_F_S(model: StatisticalModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Aggregation F and entropy S on a batch of points; both (B,)."""
    f = batch_f(model, X)
    if not np.isfinite(f).all():
        raise DomainEvaluationError("model is non-finite somewhere in the batch")
    c = f.max(axis=0)
    e = np.exp(f - c)
    Z = e.sum(axis=0)
    F = c + np.log(Z)
    w = e / Z
    S = F - np.sum(w * f, axis=0)
    return F, S
